"""
Cohort manifest parser
Манифест когорты: JSON со списком случаев и путей к объёмам

Пример:
    {
      "version": 1,
      "cases": [
        {"case_id": "case_000",
         "samples": ["case_000/sample_00.nii.gz", "case_000/sample_01.nii.gz"],
         "ground_truth": "case_000/ground_truth.nii.gz",
         "split": "test"}
      ]
    }
Относительные пути разрешаются от каталога манифеста.
"""

import json
import logging
import os
from pathlib import Path
from typing import Iterable, List, Optional, Union

from pydantic import ValidationError

from core.errors import ManifestError
from core.models import CaseManifest

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1
PATH_FIELDS = ("ground_truth", "ct", "liver_mask")


def _resolve(base: Path, value: Optional[str]) -> Optional[Path]:
    if value is None:
        return None
    path = Path(value)
    return path if path.is_absolute() else base / path


def load_manifest(path: Union[str, Path]) -> List[CaseManifest]:
    """
    Загрузить и проверить манифест.

    Args:
        path: Путь к JSON манифесту

    Returns:
        Список CaseManifest; отсутствующие файлы перечислены в поле missing
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ManifestError(f"{path}: некорректный JSON ({e})")

    if not isinstance(raw, dict) or not isinstance(raw.get("cases"), list):
        raise ManifestError(f"{path}: ожидался объект с ключом 'cases' (список)")

    base = path.parent
    manifests = []
    seen = set()
    for idx, entry in enumerate(raw["cases"]):
        if not isinstance(entry, dict):
            raise ManifestError(f"{path}: запись {idx} не является объектом")
        entry = dict(entry)
        entry.pop("missing", None)
        if not isinstance(entry.get("samples"), list):
            raise ManifestError(f"{path}: запись {idx}: 'samples' должен быть списком путей")
        try:
            entry["samples"] = [_resolve(base, s) for s in entry.get("samples", [])]
            for field in PATH_FIELDS:
                entry[field] = _resolve(base, entry.get(field))
            case = CaseManifest.model_validate(entry)
        except (ValidationError, TypeError) as e:
            raise ManifestError(f"{path}: запись {idx} ({entry.get('case_id')}): {e}")

        if case.case_id in seen:
            raise ManifestError(f"{path}: повторяющийся case_id '{case.case_id}'")
        seen.add(case.case_id)

        missing = [str(p) for p in case.all_paths() if not p.exists()]
        if missing:
            logger.warning(f"Случай {case.case_id}: отсутствует файлов: {len(missing)}")
            case = case.model_copy(update={"missing": missing})
        manifests.append(case)

    logger.info(f"Манифест {path}: {len(manifests)} случаев")
    return manifests


def write_manifest(cases: Iterable[CaseManifest], path: Union[str, Path]) -> None:
    """Записать манифест; пути сохраняются относительно его каталога"""
    path = Path(path)
    base = path.parent.resolve()

    def rel(p: Optional[Path]) -> Optional[str]:
        if p is None:
            return None
        return Path(os.path.relpath(Path(p).resolve(), base)).as_posix()

    entries = []
    for case in cases:
        entry = {
            "case_id": case.case_id,
            "samples": [rel(s) for s in case.samples],
            "split": case.split,
            "group": case.group,
        }
        for field in PATH_FIELDS:
            entry[field] = rel(getattr(case, field))
        entries.append(entry)

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"version": MANIFEST_VERSION, "cases": entries}, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Манифест записан: {path} ({len(entries)} случаев)")
