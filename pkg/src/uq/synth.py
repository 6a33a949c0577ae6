"""
Синтетические фантомы и имитация MC-dropout сэмплов.

Генератор: numpy PCG64 через default_rng(SeedSequence(seed, spawn_key=(k,))).
Поток k=0 - общая ошибка случая, поток k=i+1 - сэмпл i.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy.special import expit

from core.errors import PhantomError
from core.models import CaseManifest, NoiseSpec, PhantomSpec, ShapeKind
from core.volume import BinaryMask, VoxelGrid
from parsers.manifest import write_manifest
from parsers.volume_io import write_volume

from .config import (
    COHORT_BASE_SEED, COHORT_DIMS, COHORT_FLIP_RATE, COHORT_NOISE_GRID, COHORT_PROB_SOFTNESS,
    EXPECTED_SAMPLES, SPLIT_COUNTS,
)
from .uncertainty import SampleSet

logger = logging.getLogger(__name__)

SHARED_STREAM = 0
# Доля sigma для ошибки радиуса, общей для всех сэмплов случая
SHARED_RADIUS_BIAS = 0.4
# Доля sigma для сдвига центра в каждом сэмпле
SAMPLE_CENTER_JITTER = 0.5
MIN_RADIUS = 0.05

# Геометрия когорты
COHORT_RADIUS_FRACTION = (0.20, 0.28)
COHORT_CENTER_SHIFT = 2.0
COHORT_ELLIPSOID_SCALE = (0.8, 1.2)

SPLIT_LABELS = ("train", "validation", "test")


def derive_seed(base_seed: int, index: int) -> int:
    """64-битный сид случая из (base_seed, index)"""
    state = np.random.SeedSequence(base_seed, spawn_key=(index,)).generate_state(1, dtype=np.uint64)
    return int(state[0])


def _stream(seed: int, key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key,)))


def _normalized_radius(dims: Sequence[int], center, radii) -> np.ndarray:
    """rho = ||(x - c) / a||: 1 на границе фигуры"""
    axes = np.ogrid[tuple(slice(0, n) for n in dims)]
    total = 0.0
    for coord, c, a in zip(axes, center, radii):
        total = total + ((coord - c) / a) ** 2
    return np.sqrt(total)


def signed_distance(dims: Sequence[int], centers: Sequence, radii: Sequence) -> np.ndarray:
    """
    Приближённое знаковое расстояние до границы (в вокселях), положительное внутри.

    Для эллипсоида d = (1 - rho)·min(a); для двух фигур берётся максимум (объединение).
    """
    distance = None
    for center, axis_radii in zip(centers, radii):
        d = (1.0 - _normalized_radius(dims, center, axis_radii)) * min(axis_radii)
        distance = d if distance is None else np.maximum(distance, d)
    return distance


def _check_margins(spec: PhantomSpec) -> None:
    for center, radii in zip(spec.centers, spec.radii):
        for axis, (c, a, n) in enumerate(zip(center, radii, spec.dims)):
            if c - a < 1.0 or c + a > n - 2:
                raise PhantomError(
                    f"Фигура выходит за пределы сетки {spec.dims} с отступом 1 воксель "
                    f"(ось {axis}: центр {c}, радиус {a})"
                )


def make_phantom(spec: PhantomSpec) -> BinaryMask:
    """Воксель принадлежит фигуре, если его центр лежит внутри аналитической формы"""
    _check_margins(spec)
    return BinaryMask(signed_distance(spec.dims, spec.centers, spec.radii) >= 0.0)


def _shared_error(spec: PhantomSpec, noise: NoiseSpec) -> Tuple[np.ndarray, float]:
    """Смещение центра и ошибка радиуса, общие для всех сэмплов случая"""
    rng = _stream(spec.seed, SHARED_STREAM)
    direction = rng.normal(size=3)
    sign = 1.0 if rng.random() < 0.5 else -1.0
    magnitude = rng.uniform(0.5, 1.0)

    sigma = noise.boundary_sigma
    norm = np.linalg.norm(direction)
    offset = direction / norm * noise.systematic_scale * sigma if norm > 0 else np.zeros(3)
    bias = sign * SHARED_RADIUS_BIAS * sigma * magnitude
    return offset, bias


def _sample_probability(spec: PhantomSpec, noise: NoiseSpec, index: int,
                        offset: np.ndarray, bias: float) -> np.ndarray:
    rng = _stream(spec.seed, index + 1)
    sigma = noise.boundary_sigma
    radial = rng.normal(0.0, sigma)
    shift = rng.normal(0.0, SAMPLE_CENTER_JITTER * sigma, size=3)

    centers = [tuple(np.asarray(c) + offset + shift) for c in spec.centers]
    radii = [tuple(np.maximum(np.asarray(r) + bias + radial, MIN_RADIUS)) for r in spec.radii]
    distance = signed_distance(spec.dims, centers, radii)

    width = noise.prob_softness * (1.0 + noise.softness_gain * sigma)
    if width > 0:
        p = expit(distance / width)
    else:
        p = (distance >= 0.0).astype(np.float64)

    if noise.flip_rate > 0:
        flips = rng.random(spec.dims) < noise.flip_rate
        p = np.where(flips, 1.0 - p, p)
    return p.astype(np.float32)


def simulate_samples(spec: PhantomSpec, noise: NoiseSpec, n: int = EXPECTED_SAMPLES,
                     case_id: str = "") -> SampleSet:
    """
    Сгенерировать n вероятностных сэмплов вокруг фантома.

    Args:
        spec: Фантом (эталон)
        noise: Модель расхождения сэмплов
        n: Число сэмплов (>= 2)
        case_id: Идентификатор случая для SampleSet

    Returns:
        SampleSet, детерминированный по (spec.seed, noise, индекс сэмпла)
    """
    if n < 2:
        raise PhantomError(f"Нужно как минимум 2 сэмпла, получено {n}")
    _check_margins(spec)
    offset, bias = _shared_error(spec, noise)
    samples = tuple(
        VoxelGrid(_sample_probability(spec, noise, i, offset, bias)) for i in range(n)
    )
    return SampleSet(samples, case_id)


@dataclass(frozen=True, eq=False)
class SyntheticCase:
    case_id: str
    spec: PhantomSpec
    noise: NoiseSpec
    ground_truth: BinaryMask
    samples: SampleSet


def cohort_phantom(index: int, dims: Sequence[int], seed: int) -> PhantomSpec:
    """Геометрия случая: шар для чётных индексов, эллипсоид для нечётных"""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    dims = tuple(int(n) for n in dims)
    base = rng.uniform(*COHORT_RADIUS_FRACTION) * min(dims)
    scales = rng.uniform(*COHORT_ELLIPSOID_SCALE, size=3)
    shifts = rng.uniform(-1.0, 1.0, size=3)

    kind = ShapeKind.SPHERE if index % 2 == 0 else ShapeKind.ELLIPSOID
    radii = np.full(3, base) if kind == ShapeKind.SPHERE else base * scales
    # фигура должна помещаться с отступом в 1 воксель
    radii = np.minimum(radii, np.array(dims) / 2.0 - 1.5)
    if kind == ShapeKind.SPHERE:
        radii = np.full(3, radii.min())
    if radii.min() <= 0:
        raise PhantomError(f"Сетка {dims} слишком мала для фантома")

    center = np.array(dims) / 2.0 - 0.5
    slack = np.maximum(np.array(dims) / 2.0 - 1.5 - radii - 1e-9, 0.0)
    center = center + shifts * np.minimum(COHORT_CENTER_SHIFT, slack)
    return PhantomSpec(dims=dims, kind=kind, centers=[tuple(center)], radii=[tuple(radii)], seed=seed)


def _make_case(index: int, dims, base_seed: int, sigma: float, n_samples: int,
               prob_softness: float, flip_rate: float) -> SyntheticCase:
    case_id = f"case_{index:03d}"
    seed = derive_seed(base_seed, index)
    spec = cohort_phantom(index, dims, seed)
    noise = NoiseSpec(boundary_sigma=sigma, flip_rate=flip_rate, prob_softness=prob_softness)
    return SyntheticCase(
        case_id=case_id,
        spec=spec,
        noise=noise,
        ground_truth=make_phantom(spec),
        samples=simulate_samples(spec, noise, n_samples, case_id),
    )


def make_cohort(n_cases: int, noise_grid: Sequence[float] = COHORT_NOISE_GRID,
                dims: Sequence[int] = COHORT_DIMS, base_seed: int = COHORT_BASE_SEED,
                n_samples: int = EXPECTED_SAMPLES, prob_softness: float = COHORT_PROB_SOFTNESS,
                flip_rate: float = COHORT_FLIP_RATE, jobs: int = 1) -> List[SyntheticCase]:
    """
    Синтетическая когорта: уровень шума случая k равен noise_grid[k % len(noise_grid)].

    Args:
        n_cases: Число случаев (>= 3)
        noise_grid: Уровни boundary_sigma
        dims: Размерности объёмов
        base_seed: Базовый сид; сид случая выводится из (base_seed, k)
        n_samples: Сэмплов на случай
        prob_softness: Ширина логистического перехода
        flip_rate: Доля инвертированных вокселей
        jobs: Число процессов joblib

    Returns:
        Список SyntheticCase в порядке индексов
    """
    if n_cases < 3:
        raise PhantomError(f"Когорта должна содержать >= 3 случаев, получено {n_cases}")
    grid = list(noise_grid)
    if not grid:
        raise PhantomError("Пустая сетка уровней шума")

    logger.info(f"Генерация когорты: {n_cases} случаев, dims={tuple(dims)}, N={n_samples}, seed={base_seed}")
    cases = Parallel(n_jobs=jobs)(
        delayed(_make_case)(k, dims, base_seed, grid[k % len(grid)], n_samples, prob_softness, flip_rate)
        for k in range(n_cases)
    )
    return list(cases)


def assign_splits(case_ids: Sequence[str], counts: Sequence[int] = SPLIT_COUNTS,
                  seed: int = COHORT_BASE_SEED) -> Dict[str, str]:
    """
    Разбить случаи на train/validation/test в пропорциях counts.

    При числе случаев, отличном от sum(counts), доли сохраняются
    методом наибольшего остатка.
    """
    ids = sorted(case_ids)
    total = sum(counts)
    if total <= 0 or len(counts) != len(SPLIT_LABELS):
        raise ValueError(f"counts должен содержать {len(SPLIT_LABELS)} неотрицательных числа: {counts}")

    exact = [len(ids) * c / total for c in counts]
    sizes = [int(np.floor(e)) for e in exact]
    remainders = sorted(range(len(counts)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in remainders[: len(ids) - sum(sizes)]:
        sizes[i] += 1

    order = np.random.default_rng(np.random.SeedSequence(seed)).permutation(len(ids))
    splits: Dict[str, str] = {}
    start = 0
    for label, size in zip(SPLIT_LABELS, sizes):
        for position in order[start:start + size]:
            splits[ids[position]] = label
        start += size
    return splits


def write_cohort(cases: Sequence[SyntheticCase], out_dir: Union[str, Path],
                 splits: Optional[Dict[str, str]] = None) -> Path:
    """
    Записать когорту: case_XXX/sample_YY.nii.gz, case_XXX/ground_truth.nii.gz и manifest.json.

    Returns:
        Путь к манифесту
    """
    out_dir = Path(out_dir)
    manifests = []
    for case in cases:
        case_dir = out_dir / case.case_id
        case_dir.mkdir(parents=True, exist_ok=True)
        sample_paths = []
        for i, sample in enumerate(case.samples.samples):
            path = case_dir / f"sample_{i:02d}.nii.gz"
            write_volume(sample, path, datatype="float32")
            sample_paths.append(path)
        gt_path = case_dir / "ground_truth.nii.gz"
        write_volume(case.ground_truth, gt_path, datatype="uint8")
        manifests.append(CaseManifest(
            case_id=case.case_id,
            samples=sample_paths,
            ground_truth=gt_path,
            split=(splits or {}).get(case.case_id),
        ))

    manifest_path = out_dir / "manifest.json"
    write_manifest(manifests, manifest_path)
    logger.info(f"[SUCCESS] Когорта записана: {out_dir} ({len(manifests)} случаев)")
    return manifest_path
