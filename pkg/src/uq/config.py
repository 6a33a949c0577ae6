"""
Конфигурация модуля оценки неопределённости.
Значения по умолчанию совпадают с параметрами исходного протокола.
"""
import json
import logging
from pathlib import Path
from typing import Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, field_validator

from core.errors import ConfigError
from core.models import CVVariant, EntropyVariant, NormalizationStats, WindowSpec

logger = logging.getLogger(__name__)

# Агрегация сэмплов
DEFAULT_THRESHOLD = 0.5
EXPECTED_SAMPLES = 10

# Рецепт печени
LIVER_WINDOW = (-120.0, 240.0)          # мягкотканное окно, HU
LIVER_TARGET_DIMS = (256, 256, 256)

# Рецепт опухоли
TUMOR_OUTSIDE_FILL = -50.0
TUMOR_WINDOW = (-30.0, 200.0)
TUMOR_TARGET_DIMS = (284, 256, 133)

# Синтетическая когорта (размер тестовой выборки 63/13/55)
SPLIT_COUNTS = (63, 13, 55)
COHORT_CASES = 55
COHORT_DIMS = (64, 64, 64)
COHORT_NOISE_GRID = (0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0)
COHORT_PROB_SOFTNESS = 1.0
COHORT_FLIP_RATE = 0.0
COHORT_BASE_SEED = 20190601

# Статистики по умолчанию не нормализуют: их задаёт пользователь
IDENTITY_STATS = NormalizationStats(mean=0.0, std=1.0, provenance="identity (not fitted)")


class LiverRecipe(BaseModel):
    window: WindowSpec = Field(default_factory=lambda: WindowSpec(lo=LIVER_WINDOW[0], hi=LIVER_WINDOW[1]))
    target_dims: Tuple[int, int, int] = LIVER_TARGET_DIMS
    stats: NormalizationStats = IDENTITY_STATS


class TumorRecipe(BaseModel):
    window: WindowSpec = Field(default_factory=lambda: WindowSpec(lo=TUMOR_WINDOW[0], hi=TUMOR_WINDOW[1]))
    outside_fill: float = TUMOR_OUTSIDE_FILL
    target_dims: Tuple[int, int, int] = TUMOR_TARGET_DIMS
    stats: NormalizationStats = IDENTITY_STATS


class CohortConfig(BaseModel):
    n_cases: int = Field(default=COHORT_CASES, ge=3)
    dims: Tuple[int, int, int] = COHORT_DIMS
    n_samples: int = Field(default=EXPECTED_SAMPLES, ge=2)
    noise_grid: Tuple[float, ...] = COHORT_NOISE_GRID
    prob_softness: float = Field(default=COHORT_PROB_SOFTNESS, ge=0)
    flip_rate: float = Field(default=COHORT_FLIP_RATE, ge=0, lt=0.5)
    base_seed: int = Field(default=COHORT_BASE_SEED, ge=0)

    @field_validator('noise_grid')
    @classmethod
    def _non_empty_grid(cls, v):
        if not v or any(s < 0 for s in v):
            raise ValueError('noise_grid должен быть непустым и неотрицательным')
        return v


class RunConfig(BaseModel):
    """Параметры запуска пайплайна"""
    threshold: float = Field(default=DEFAULT_THRESHOLD, gt=0, lt=1)
    entropy: EntropyVariant = EntropyVariant.AS_PRINTED
    cv: CVVariant = CVVariant.AS_PRINTED
    expected_samples: int = Field(default=EXPECTED_SAMPLES, ge=2)
    p_value_method: str = Field(default="t", pattern="^(t|permutation)$")
    jobs: int = Field(default=1, ge=1)
    output_dir: Optional[Path] = None
    liver: LiverRecipe = Field(default_factory=LiverRecipe)
    tumor: TumorRecipe = Field(default_factory=TumorRecipe)
    cohort: CohortConfig = Field(default_factory=CohortConfig)


def load_run_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Загрузить RunConfig из JSON файла.

    Args:
        path: Путь к файлу; None - встроенные значения по умолчанию

    Returns:
        Проверенный RunConfig
    """
    if path is None:
        return RunConfig()

    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Конфигурация {path} не является корректным JSON: {e}")

    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"Ошибка в конфигурации {path}: {e}")

    logger.info(f"Конфигурация загружена: {path}")
    return config
