"""
Предобработка КТ: рецепты печени и опухоли.

Порядок операций фиксирован:
    печень:  resample -> window -> zscore
    опухоль: crop -> fill/window -> resample -> zscore
"""
import logging
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy import ndimage
from sklearn.preprocessing import StandardScaler

from core.errors import EmptyMaskError, InsufficientDataError, VolumeError
from core.models import NormalizationStats, WindowSpec
from core.volume import BinaryMask, VoxelGrid, bounding_box, check_same_dims, crop

from .config import LiverRecipe, TumorRecipe

logger = logging.getLogger(__name__)


def window(grid: VoxelGrid, spec: WindowSpec) -> VoxelGrid:
    """Клиппинг значений в [lo, hi]; значения внутри окна не меняются"""
    return grid.with_data(np.clip(grid.data, spec.lo, spec.hi))


def zscore(grid: VoxelGrid, stats: NormalizationStats) -> VoxelGrid:
    """(v - mean) / std для каждого вокселя"""
    return grid.with_data((grid.data.astype(np.float64) - stats.mean) / stats.std)


def compute_stats(grids: Iterable[VoxelGrid], provenance: str = "pooled voxels") -> NormalizationStats:
    """
    Пуловые mean и популяционное std по всем вокселям всех сеток.

    Статистики накапливаются инкрементально через StandardScaler.partial_fit,
    сетки могут приходить из генератора и не держатся в памяти одновременно.

    Args:
        grids: Сетки обучающей когорты
        provenance: Описание когорты для NormalizationStats

    Returns:
        NormalizationStats
    """
    scaler = StandardScaler()
    count = 0
    total = 0
    for grid in grids:
        scaler.partial_fit(grid.data.reshape(-1, 1).astype(np.float64))
        count += 1
        total += grid.size

    if count == 0:
        raise InsufficientDataError("Для вычисления статистик нужна хотя бы одна сетка")
    if total < 2:
        raise InsufficientDataError(f"Для вычисления статистик нужно >= 2 вокселей, получено {total}")

    mean = float(scaler.mean_[0])
    var = float(scaler.var_[0])
    if not var > 0:
        raise InsufficientDataError("Нулевое стандартное отклонение: нормализация не определена")

    logger.info(f"Статистики нормализации: mean={mean:.4f}, std={np.sqrt(var):.4f} ({count} сеток, {total} вокселей)")
    return NormalizationStats(mean=mean, std=float(np.sqrt(var)), provenance=provenance)


def _axis_mapping(n_in: int, n_out: int):
    """Выходной центр i -> входная координата i·(n_in-1)/(n_out-1)"""
    if n_out == 1:
        return 0.0, (n_in - 1) / 2.0
    return (n_in - 1) / (n_out - 1), 0.0


def resample(volume: Union[VoxelGrid, BinaryMask], target_dims: Sequence[int]) -> Union[VoxelGrid, BinaryMask]:
    """
    Пересэмплировать объём до target_dims с выравниванием центров угловых вокселей.

    Сетки интенсивностей - трилинейная интерполяция, маски - ближайший сосед.
    Spacing масштабируется отношением размерностей.
    """
    target = tuple(int(n) for n in target_dims)
    if len(target) != 3 or any(n <= 0 for n in target):
        raise VolumeError(f"Целевые размерности должны быть положительными: {target_dims}")

    if target == volume.dims:
        return type(volume)(np.array(volume.data, copy=True), volume.spacing)

    scales, offsets = zip(*(_axis_mapping(n_in, n_out) for n_in, n_out in zip(volume.dims, target)))
    spacing = tuple(s * n_in / n_out for s, n_in, n_out in zip(volume.spacing, volume.dims, target))

    if isinstance(volume, BinaryMask):
        out = ndimage.affine_transform(volume.data.astype(np.uint8), np.array(scales), offset=offsets,
                                       output_shape=target, order=0, mode="nearest", prefilter=False)
        return BinaryMask(out.astype(bool), spacing)

    out = ndimage.affine_transform(volume.data.astype(np.float64), np.array(scales), offset=offsets,
                                   output_shape=target, order=1, mode="nearest", prefilter=False)
    # выпуклая комбинация не выходит за исходный диапазон, кроме шума округления
    out = np.clip(out, volume.data.min(), volume.data.max())
    return VoxelGrid(out, spacing)


def preprocess_liver(ct: VoxelGrid, recipe: Optional[LiverRecipe] = None) -> VoxelGrid:
    """Рецепт печени: resample до 256³ -> окно (-120, 240) -> z-score"""
    recipe = recipe or LiverRecipe()
    resampled = resample(ct, recipe.target_dims)
    windowed = window(resampled, recipe.window)
    return zscore(windowed, recipe.stats)


def fill_and_window_tumor(ct: VoxelGrid, liver_mask: BinaryMask,
                          recipe: Optional[TumorRecipe] = None) -> VoxelGrid:
    """
    Первые стадии рецепта опухоли: обрезка по боксу печени, заполнение
    вне маски значением outside_fill, окно внутри печени.
    """
    recipe = recipe or TumorRecipe()
    check_same_dims(ct, liver_mask, "КТ и маски печени")
    if liver_mask.count == 0:
        raise EmptyMaskError("Маска печени пуста")

    box = bounding_box(liver_mask)
    ct_crop = crop(ct, box)
    mask_crop = crop(liver_mask, box)

    inside = np.clip(ct_crop.data.astype(np.float64), recipe.window.lo, recipe.window.hi)
    data = np.where(mask_crop.data, inside, recipe.outside_fill)
    return VoxelGrid(data, ct_crop.spacing)


def preprocess_tumor(ct: VoxelGrid, liver_mask: BinaryMask,
                     recipe: Optional[TumorRecipe] = None) -> VoxelGrid:
    """Рецепт опухоли: crop -> fill/window -> resample (284, 256, 133) -> z-score"""
    recipe = recipe or TumorRecipe()
    filled = fill_and_window_tumor(ct, liver_mask, recipe)
    resampled = resample(filled, recipe.target_dims)
    return zscore(resampled, recipe.stats)


def fit_recipe_stats(recipe_name: str, cts: Iterable[VoxelGrid],
                     liver_masks: Optional[Iterable[BinaryMask]] = None,
                     config: Optional[Union[LiverRecipe, TumorRecipe]] = None) -> NormalizationStats:
    """
    Статистики нормализации обучающей когорты после ненормализующих стадий рецепта.

    Args:
        recipe_name: 'liver' или 'tumor'
        cts: КТ обучающей выборки
        liver_masks: Маски печени (только для 'tumor'), в том же порядке
        config: Параметры рецепта

    Returns:
        NormalizationStats с provenance, указывающим рецепт
    """
    if recipe_name == "liver":
        recipe = config or LiverRecipe()
        staged = (window(resample(ct, recipe.target_dims), recipe.window) for ct in cts)
    elif recipe_name == "tumor":
        if liver_masks is None:
            raise EmptyMaskError("Для рецепта опухоли нужны маски печени")
        recipe = config or TumorRecipe()
        staged = (resample(fill_and_window_tumor(ct, mask, recipe), recipe.target_dims)
                  for ct, mask in zip(cts, liver_masks, strict=True))
    else:
        raise VolumeError(f"Неизвестный рецепт: {recipe_name}")

    return compute_stats(staged, provenance=f"{recipe_name} recipe, pooled training voxels")
