"""
Агрегация MC-dropout сэмплов: консенсусная маска, карта неопределённости
и скалярные меры CV, D_pw, U_labelled.
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import entr

from core.errors import VolumeError
from core.models import CaseReport, CVVariant, EntropyVariant
from core.volume import BinaryMask, VoxelGrid, binarize, check_same_dims, dice, same_geometry

from .config import DEFAULT_THRESHOLD

logger = logging.getLogger(__name__)

# Полуширина полосы у порога в единицах n·eps: с запасом покрывает ошибку последовательного суммирования
NEAR_THRESHOLD_ULPS = 4


@dataclass(frozen=True, eq=False)
class SampleSet:
    """N вероятностных объёмов одного случая с общей геометрией"""

    samples: Tuple[VoxelGrid, ...]
    case_id: str = ""

    def __post_init__(self):
        samples = tuple(self.samples)
        if len(samples) < 2:
            raise VolumeError(f"SampleSet требует N >= 2, получено {len(samples)}")
        first = samples[0]
        for i, sample in enumerate(samples):
            if not same_geometry(first, sample):
                raise VolumeError(
                    f"Сэмпл {i} случая '{self.case_id}': геометрия {sample.dims}/{sample.spacing} "
                    f"не совпадает с {first.dims}/{first.spacing}"
                )
            if sample.data.min() < 0.0 or sample.data.max() > 1.0:
                raise VolumeError(f"Сэмпл {i} случая '{self.case_id}': значения вне [0, 1]")
        object.__setattr__(self, "samples", samples)

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def dims(self):
        return self.samples[0].dims

    @property
    def spacing(self):
        return self.samples[0].spacing


@dataclass(frozen=True, eq=False)
class UncertaintyMap:
    """Воксельная неопределённость U(x) в натах"""

    grid: VoxelGrid
    n_samples: int

    def __post_init__(self):
        if self.grid.data.min() < 0.0:
            raise VolumeError("Воксельная неопределённость не может быть отрицательной")


def _voxel_entropy(p: np.ndarray, variant: EntropyVariant) -> np.ndarray:
    # entr(p) = -p ln p, entr(0) = 0
    if variant == EntropyVariant.BINARY:
        return entr(p) + entr(1.0 - p)
    return entr(p)


class SampleAggregator:
    """
    Один проход по сэмплам случая: сумма вероятностей, сумма энтропий,
    бинаризованные сэмплы и их объёмы. Все меры вычисляются из накопленного.
    """

    def __init__(self, samples: SampleSet, threshold: float = DEFAULT_THRESHOLD,
                 entropy: EntropyVariant = EntropyVariant.AS_PRINTED):
        self.samples = samples
        self.threshold = float(threshold)
        self.entropy = EntropyVariant(entropy)

        n = samples.n
        prob_sum = np.zeros(samples.dims, dtype=np.float64)
        entropy_sum = np.zeros(samples.dims, dtype=np.float64)
        self.binarized: List[BinaryMask] = []
        for sample in samples.samples:
            p = sample.data.astype(np.float64)
            prob_sum += p
            entropy_sum += _voxel_entropy(p, self.entropy)
            self.binarized.append(binarize(sample, self.threshold))

        mean = prob_sum / n
        self._canonicalize_near_threshold(mean)
        self._mean = np.clip(mean, 0.0, 1.0)
        self._uncertainty = entropy_sum / n
        self.volumes = np.array([m.count for m in self.binarized], dtype=np.float64)
        self._consensus: Optional[BinaryMask] = None

    def _canonicalize_near_threshold(self, mean: np.ndarray) -> None:
        """
        Пересчитать среднее у порога по отсортированным значениям сэмплов.

        В полосе ошибки округления сумма берётся в каноническом порядке:
        консенсус не зависит от порядка сэмплов.
        """
        n = self.samples.n
        band = NEAR_THRESHOLD_ULPS * n * np.finfo(np.float64).eps * np.maximum(mean, self.threshold)
        near = np.nonzero(np.abs(mean - self.threshold) <= band)
        if near[0].size == 0:
            return
        values = np.sort(np.stack([s.data[near].astype(np.float64) for s in self.samples.samples]), axis=0)
        total = np.zeros(near[0].size, dtype=np.float64)
        for row in values:
            total += row
        mean[near] = total / n
        logger.debug(f"Случай '{self.samples.case_id}': {near[0].size} вокселей у порога пересчитано")

    @property
    def mean_probability(self) -> VoxelGrid:
        return VoxelGrid(self._mean, self.samples.spacing)

    @property
    def consensus(self) -> BinaryMask:
        if self._consensus is None:
            self._consensus = binarize(self.mean_probability, self.threshold)
        return self._consensus

    @property
    def uncertainty_map(self) -> UncertaintyMap:
        return UncertaintyMap(VoxelGrid(self._uncertainty, self.samples.spacing), self.samples.n)

    def coefficient_of_variation(self, variant: CVVariant = CVVariant.AS_PRINTED) -> float:
        """Var(v) / (E[v] + 1) по объёмам бинаризованных сэмплов (популяционная дисперсия)"""
        mean = float(self.volumes.mean())
        if CVVariant(variant) == CVVariant.STD_OVER_MEAN:
            return float(self.volumes.std()) / mean if mean > 0 else 0.0
        return float(self.volumes.var()) / (mean + 1.0)

    def mean_pairwise_dice(self) -> float:
        """Среднее Dice по всем N·(N-1)/2 неупорядоченным парам"""
        scores = [dice(a, b) for a, b in combinations(self.binarized, 2)]
        return float(np.mean(scores))

    def mean_labelled_uncertainty(self) -> Optional[float]:
        """Среднее U(x) по вокселям консенсуса; None при пустом консенсусе"""
        consensus = self.consensus
        if consensus.count == 0:
            return None
        return float(self._uncertainty[consensus.data].mean())


@dataclass(frozen=True, eq=False)
class CaseAnalysis:
    """Отчёт случая вместе с картами для выгрузки"""

    report: CaseReport
    consensus: BinaryMask
    uncertainty: UncertaintyMap
    extra: dict = field(default_factory=dict)


def mean_probability(samples: SampleSet) -> VoxelGrid:
    return SampleAggregator(samples).mean_probability


def consensus_mask(samples: SampleSet, threshold: float = DEFAULT_THRESHOLD) -> BinaryMask:
    return SampleAggregator(samples, threshold).consensus


def uncertainty_map(samples: SampleSet, entropy: EntropyVariant = EntropyVariant.AS_PRINTED) -> UncertaintyMap:
    return SampleAggregator(samples, entropy=entropy).uncertainty_map


def coefficient_of_variation(samples: SampleSet, threshold: float = DEFAULT_THRESHOLD,
                             variant: CVVariant = CVVariant.AS_PRINTED) -> float:
    return SampleAggregator(samples, threshold).coefficient_of_variation(variant)


def mean_pairwise_dice(samples: SampleSet, threshold: float = DEFAULT_THRESHOLD) -> float:
    return SampleAggregator(samples, threshold).mean_pairwise_dice()


def mean_labelled_uncertainty(samples: SampleSet, threshold: float = DEFAULT_THRESHOLD,
                              entropy: EntropyVariant = EntropyVariant.AS_PRINTED) -> Optional[float]:
    return SampleAggregator(samples, threshold, entropy).mean_labelled_uncertainty()


def analyze_case_full(samples: SampleSet, ground_truth: Optional[BinaryMask] = None,
                      threshold: float = DEFAULT_THRESHOLD,
                      entropy: EntropyVariant = EntropyVariant.AS_PRINTED,
                      cv: CVVariant = CVVariant.AS_PRINTED,
                      split: Optional[str] = None, group: Optional[str] = None) -> CaseAnalysis:
    """
    Полный анализ случая.

    Args:
        samples: Сэмплы случая
        ground_truth: Эталонная маска (опционально)
        threshold: Порог бинаризации
        entropy: Вариант формулы U(x)
        cv: Вариант формулы CV
        split, group: Метки для группировки корреляций

    Returns:
        CaseAnalysis с отчётом, консенсусом и картой неопределённости
    """
    if ground_truth is not None:
        check_same_dims(samples.samples[0], ground_truth, f"сэмплов и эталона случая '{samples.case_id}'")

    aggregator = SampleAggregator(samples, threshold, entropy)
    consensus = aggregator.consensus
    report = CaseReport(
        case_id=samples.case_id,
        n_samples=samples.n,
        cv=aggregator.coefficient_of_variation(cv),
        d_pw=min(max(aggregator.mean_pairwise_dice(), 0.0), 1.0),
        u_labelled=aggregator.mean_labelled_uncertainty(),
        consensus_voxels=consensus.count,
        dice=dice(consensus, ground_truth) if ground_truth is not None else None,
        threshold=threshold,
        split=split,
        group=group,
    )
    return CaseAnalysis(report=report, consensus=consensus, uncertainty=aggregator.uncertainty_map)


def analyze_case(samples: SampleSet, ground_truth: Optional[BinaryMask] = None,
                 threshold: float = DEFAULT_THRESHOLD, **options) -> CaseReport:
    """Отчёт CaseReport по случаю (см. analyze_case_full)"""
    return analyze_case_full(samples, ground_truth, threshold, **options).report


def sample_set_from_arrays(arrays: Sequence[Union[np.ndarray, VoxelGrid]], case_id: str = "",
                           spacing=(1.0, 1.0, 1.0)) -> SampleSet:
    """Удобный конструктор из массивов (тесты, синтетика)"""
    grids = [a if isinstance(a, VoxelGrid) else VoxelGrid(np.asarray(a), spacing) for a in arrays]
    return SampleSet(tuple(grids), case_id)
