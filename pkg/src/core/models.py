"""
DropoutQC Data Models
Модели записей: заголовки объёмов, манифесты, отчёты, спецификации
"""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator


Triple = Tuple[float, float, float]
IntTriple = Tuple[int, int, int]


class Measure(str, Enum):
    """Скалярные меры неопределённости случая"""
    CV = "cv"
    D_PW = "d_pw"
    U_LABELLED = "u_labelled"


# Направление, в котором мера указывает на низкое качество
MEASURE_FLAG_DIRECTION = {
    Measure.CV: "above",
    Measure.D_PW: "below",
    Measure.U_LABELLED: "above",
}


class EntropyVariant(str, Enum):
    """Формула воксельной неопределённости U(x)"""
    AS_PRINTED = "as-printed"   # -(1/N) Σ p ln p
    BINARY = "binary"           # -(1/N) Σ [p ln p + (1-p) ln(1-p)]


class CVVariant(str, Enum):
    """Формула коэффициента вариации"""
    AS_PRINTED = "as-printed"         # Var / (E + 1)
    STD_OVER_MEAN = "std-over-mean"   # Std / E


class Datatype(str, Enum):
    UINT8 = "uint8"
    INT16 = "int16"
    FLOAT32 = "float32"


# Volume header
class VolumeHeader(BaseModel):
    """Метаданные файла объёма"""
    dims: IntTriple = Field(..., description='Размерности (nx, ny, nz)')
    spacing: Triple = Field(..., description='Миллиметры на воксель')
    datatype: Datatype = Field(default=Datatype.FLOAT32, description='Тип хранения')
    scl_slope: float = Field(default=1.0, description='Множитель значения')
    scl_inter: float = Field(default=0.0, description='Сдвиг значения')
    orientation: Optional[bytes] = Field(None, description='Блок qform/sform, не интерпретируется')

    @field_validator('dims')
    @classmethod
    def _positive_dims(cls, v):
        if any(n <= 0 for n in v):
            raise ValueError(f'dims должны быть положительными: {v}')
        return v

    @field_validator('spacing')
    @classmethod
    def _positive_spacing(cls, v):
        if any(not s > 0 for s in v):
            raise ValueError(f'spacing должен быть > 0: {v}')
        return v

    @field_validator('scl_slope')
    @classmethod
    def _nonzero_slope(cls, v):
        if v == 0:
            raise ValueError('scl_slope не может быть 0')
        return v


# Case manifest
class CaseManifest(BaseModel):
    """Описание одного случая: N объёмов-сэмплов и опциональные эталоны"""
    case_id: str = Field(..., min_length=1, description='Идентификатор случая')
    samples: List[Path] = Field(..., description='Пути к N вероятностным объёмам')
    ground_truth: Optional[Path] = Field(None, description='Эталонная маска')
    ct: Optional[Path] = Field(None, description='Исходная КТ')
    liver_mask: Optional[Path] = Field(None, description='Маска печени для опухолевого рецепта')
    split: Optional[str] = Field(None, description='train / validation / test')
    group: Optional[str] = Field(None, description='Метка модели или эксперимента')
    missing: List[str] = Field(default_factory=list, description='Отсутствующие файлы')

    @field_validator('samples')
    @classmethod
    def _enough_distinct_samples(cls, v):
        if len(v) < 2:
            raise ValueError(f'Нужно как минимум 2 сэмпла, получено {len(v)}')
        if len(set(v)) != len(v):
            raise ValueError('Пути сэмплов должны быть различными')
        return v

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    def all_paths(self) -> List[Path]:
        paths = list(self.samples)
        for extra in (self.ground_truth, self.ct, self.liver_mask):
            if extra is not None:
                paths.append(extra)
        return paths


# Case report
REPORT_COLUMNS = ['case_id', 'n_samples', 'cv', 'd_pw', 'u_labelled', 'consensus_voxels', 'dice']
OPTIONAL_REPORT_COLUMNS = ['split', 'group']


class CaseReport(BaseModel):
    """Скалярные результаты по случаю"""
    case_id: str
    n_samples: int = Field(..., ge=2)
    cv: float = Field(..., ge=0)
    d_pw: float = Field(..., ge=0, le=1)
    u_labelled: Optional[float] = Field(None, ge=0, description='None, если консенсус пуст')
    consensus_voxels: int = Field(..., ge=0)
    dice: Optional[float] = Field(None, ge=0, le=1, description='Dice консенсуса с эталоном')
    threshold: float = Field(default=0.5, gt=0, le=1)
    split: Optional[str] = None
    group: Optional[str] = None

    def measure(self, name: Measure) -> Optional[float]:
        return getattr(self, Measure(name).value)

    def to_row(self) -> Dict[str, Any]:
        """Строка CSV в документированном порядке колонок"""
        row = {column: getattr(self, column) for column in REPORT_COLUMNS}
        for column in OPTIONAL_REPORT_COLUMNS:
            row[column] = getattr(self, column)
        return row


# Correlation result
class CorrelationResult(BaseModel):
    """Корреляция Спирмена меры с качеством сегментации"""
    measure: str
    quality: str = 'dice'
    rho: float = Field(..., ge=-1, le=1)
    p_value: float = Field(..., ge=0, le=1)
    n: int = Field(..., ge=3)
    dropped: int = Field(default=0, ge=0)
    method: str = 't'
    group: Optional[str] = None
    mean_quality: Optional[float] = None


# Preprocessing
class WindowSpec(BaseModel):
    """Окно HU (клиппинг)"""
    lo: float
    hi: float

    @model_validator(mode='after')
    def _ordered(self):
        if not self.lo < self.hi:
            raise ValueError(f'Окно должно удовлетворять lo < hi: ({self.lo}, {self.hi})')
        return self


class NormalizationStats(BaseModel):
    """Статистики z-нормализации"""
    mean: float
    std: float = Field(..., gt=0)
    provenance: str = Field(default='unspecified', description='Какую когорту описывают')


# Synthetic phantoms
class ShapeKind(str, Enum):
    SPHERE = "sphere"
    ELLIPSOID = "ellipsoid"
    TWO_BLOB = "two-blob"


class PhantomSpec(BaseModel):
    """Аналитическая фигура в сетке"""
    dims: IntTriple
    kind: ShapeKind = ShapeKind.SPHERE
    centers: List[Triple] = Field(..., min_length=1, max_length=2)
    radii: List[Triple] = Field(..., min_length=1, max_length=2)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)

    @model_validator(mode='after')
    def _consistent_shape(self):
        expected = 2 if self.kind == ShapeKind.TWO_BLOB else 1
        if len(self.centers) != expected or len(self.radii) != expected:
            raise ValueError(f'{self.kind.value}: ожидалось {expected} центр(а) и радиус(а)')
        if any(r <= 0 for radii in self.radii for r in radii):
            raise ValueError('Радиусы должны быть положительными')
        if self.kind != ShapeKind.ELLIPSOID:
            if any(len(set(radii)) != 1 for radii in self.radii):
                raise ValueError(f'{self.kind.value}: радиусы по осям должны совпадать')
        return self


class NoiseSpec(BaseModel):
    """Модель расхождения MC-сэмплов"""
    boundary_sigma: float = Field(default=0.0, ge=0, description='Возмущение границы (воксели)')
    flip_rate: float = Field(default=0.0, ge=0, lt=0.5, description='Доля инвертированных вокселей')
    prob_softness: float = Field(default=0.0, ge=0, description='Ширина логистического перехода')
    systematic_scale: float = Field(default=1.0, ge=0, description='Общая ошибка случая в единицах sigma')
    softness_gain: float = Field(default=0.5, ge=0, description='Расширение перехода на единицу sigma')


# Flagging
class Comparator(str, Enum):
    ABOVE = "above"
    BELOW = "below"


class CombineMode(str, Enum):
    ANY = "any"
    ALL = "all"


class FlagRule(BaseModel):
    measure: Measure
    comparator: Comparator
    cutoff: float

    def triggered(self, value: float) -> bool:
        if self.comparator == Comparator.ABOVE:
            return value > self.cutoff
        return value < self.cutoff

    def describe(self) -> str:
        return f'{self.measure.value} {self.comparator.value} {self.cutoff:g}'


class FlagPolicy(BaseModel):
    """Правила отбора случаев на ручную проверку"""
    rules: List[FlagRule] = Field(..., min_length=1)
    mode: CombineMode = CombineMode.ANY


class FlaggedCase(BaseModel):
    case_id: str
    reasons: List[str]
