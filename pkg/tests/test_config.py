import json
from pathlib import Path

import pytest

from core.errors import ConfigError
from uq.config import RunConfig, load_run_config

DEFAULTS_PATH = Path(__file__).resolve().parents[1] / "config" / "defaults.json"


def test_shipped_defaults_match_builtin_config():
    loaded = load_run_config(DEFAULTS_PATH)
    assert loaded.model_dump() == RunConfig().model_dump()
    assert set(json.loads(DEFAULTS_PATH.read_text(encoding="utf-8"))) == set(RunConfig.model_fields)


def test_omitted_fields_fall_back_to_defaults(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"threshold": 0.4, "cohort": {"n_cases": 5}}))
    config = load_run_config(path)
    assert config.threshold == 0.4
    assert config.cohort.n_cases == 5
    assert config.cohort.dims == RunConfig().cohort.dims
    assert config.liver.model_dump() == RunConfig().liver.model_dump()


def test_no_path_gives_builtin_defaults():
    assert load_run_config(None).model_dump() == RunConfig().model_dump()


@pytest.mark.parametrize("text", ["{", json.dumps({"threshold": 1.5}), json.dumps({"p_value_method": "exact"})])
def test_invalid_config_raises(tmp_path, text):
    path = tmp_path / "run.json"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_run_config(path)
