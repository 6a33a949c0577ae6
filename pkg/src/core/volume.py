"""
Volume core
Геометрические 3D-сетки и элементарные операции над масками

Соглашения:
    - массив хранится с формой (nx, ny, nz); плоское представление
      x-fastest, то есть ``array.ravel(order="F")``;
    - индексы вокселей начинаются с нуля;
    - spacing задаётся в миллиметрах на воксель.
"""

from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np

from .errors import DimensionMismatchError, EmptyMaskError, VolumeError

Dims = Tuple[int, int, int]
Spacing = Tuple[float, float, float]
Index = Tuple[int, int, int]
IndexBox = Tuple[Index, Index]


def _check_spacing(spacing: Sequence[float]) -> Spacing:
    values = tuple(float(s) for s in spacing)
    if len(values) != 3:
        raise VolumeError(f"spacing должен содержать 3 компоненты, получено {len(values)}")
    if not all(np.isfinite(s) and s > 0 for s in values):
        raise VolumeError(f"Все компоненты spacing должны быть > 0: {values}")
    return values


def _check_shape(arr: np.ndarray) -> None:
    if arr.ndim != 3:
        raise VolumeError(f"Ожидался 3D массив, получено измерений: {arr.ndim}")
    if any(n <= 0 for n in arr.shape):
        raise VolumeError(f"Все размерности должны быть положительными: {arr.shape}")


def _readonly(arr: np.ndarray) -> np.ndarray:
    view = arr.view()
    view.flags.writeable = False
    return view


def _flat_to_array(values, dims: Sequence[int]) -> np.ndarray:
    flat = np.asarray(values).ravel()
    dims = tuple(int(n) for n in dims)
    expected = int(np.prod(dims)) if len(dims) == 3 else -1
    if flat.size != expected:
        raise VolumeError(f"Длина данных {flat.size} не равна nx·ny·nz = {expected} для {dims}")
    return flat.reshape(dims, order="F")


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """Плотное скалярное поле (вероятность, интенсивность или неопределённость)"""

    data: np.ndarray
    spacing: Spacing = (1.0, 1.0, 1.0)

    def __post_init__(self):
        arr = np.asarray(self.data)
        _check_shape(arr)
        if arr.dtype.kind not in "fiub":
            raise VolumeError(f"Неподдерживаемый тип данных сетки: {arr.dtype}")
        if arr.dtype.kind != "f":
            arr = arr.astype(np.float64)
        if not np.isfinite(arr).all():
            raise VolumeError("Сетка содержит NaN или Inf")
        object.__setattr__(self, "data", _readonly(arr))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))

    @classmethod
    def from_flat(cls, values, dims: Sequence[int], spacing: Sequence[float] = (1.0, 1.0, 1.0)) -> "VoxelGrid":
        """Построить сетку из плоского x-fastest вектора"""
        return cls(_flat_to_array(values, dims), tuple(spacing))

    @property
    def dims(self) -> Dims:
        return tuple(int(n) for n in self.data.shape)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def flat(self) -> np.ndarray:
        """Значения в порядке x-fastest"""
        return self.data.ravel(order="F")

    def with_data(self, data: np.ndarray) -> "VoxelGrid":
        return VoxelGrid(data, self.spacing)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Плотная булева маска; count всегда совпадает с пересчётом"""

    data: np.ndarray
    spacing: Spacing = (1.0, 1.0, 1.0)
    count: int = field(init=False)

    def __post_init__(self):
        arr = np.asarray(self.data)
        _check_shape(arr)
        if arr.dtype != np.bool_:
            if not np.isin(arr, (0, 1)).all():
                raise VolumeError("Маска может содержать только значения 0 и 1")
            arr = arr.astype(np.bool_)
        object.__setattr__(self, "data", _readonly(arr))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))
        object.__setattr__(self, "count", int(np.count_nonzero(arr)))

    @classmethod
    def from_flat(cls, values, dims: Sequence[int], spacing: Sequence[float] = (1.0, 1.0, 1.0)) -> "BinaryMask":
        return cls(_flat_to_array(values, dims), tuple(spacing))

    @property
    def dims(self) -> Dims:
        return tuple(int(n) for n in self.data.shape)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def flat(self) -> np.ndarray:
        return self.data.ravel(order="F")

    def as_grid(self) -> VoxelGrid:
        """Маска как 0/1 сетка вероятностей"""
        return VoxelGrid(self.data.astype(np.float64), self.spacing)


Volume = Union[VoxelGrid, BinaryMask]


def check_same_dims(a: Volume, b: Volume, what: str = "volumes") -> None:
    if a.dims != b.dims:
        raise DimensionMismatchError(f"Размерности {what} не совпадают: {a.dims} vs {b.dims}")


def same_geometry(a: Volume, b: Volume) -> bool:
    return a.dims == b.dims and np.allclose(a.spacing, b.spacing, rtol=0, atol=1e-9)


def binarize(grid: VoxelGrid, threshold: float = 0.5) -> BinaryMask:
    """
    Бинаризовать вероятностную сетку: воксель истинен, если p(x) >= threshold.

    Args:
        grid: Сетка вероятностей со значениями в [0, 1]
        threshold: Порог в (0, 1]

    Returns:
        BinaryMask с той же геометрией
    """
    if not 0.0 < threshold <= 1.0:
        raise VolumeError(f"Порог должен лежать в (0, 1]: {threshold}")
    data = grid.data
    if data.min() < 0.0 or data.max() > 1.0:
        raise VolumeError("Значения вероятностей должны лежать в [0, 1]")
    return BinaryMask(data >= threshold, grid.spacing)


def foreground_count(mask: BinaryMask) -> int:
    return mask.count


def dice(a: BinaryMask, b: BinaryMask) -> float:
    """
    Коэффициент Dice 2·|a∩b| / (|a|+|b|).

    Две пустые маски считаются полностью согласованными (1.0).
    """
    check_same_dims(a, b, "масок")
    total = a.count + b.count
    if total == 0:
        return 1.0
    intersection = int(np.count_nonzero(a.data & b.data))
    return 2.0 * intersection / total


def bounding_box(mask: BinaryMask) -> IndexBox:
    """
    Минимальный охватывающий бокс переднего плана (границы включительно).

    Raises:
        EmptyMaskError: маска пуста (например, нет метки печени)
    """
    if mask.count == 0:
        raise EmptyMaskError("Маска пуста: ограничивающий бокс не определён")
    lo, hi = [], []
    for axis in range(3):
        others = tuple(a for a in range(3) if a != axis)
        present = np.flatnonzero(mask.data.any(axis=others))
        lo.append(int(present[0]))
        hi.append(int(present[-1]))
    return tuple(lo), tuple(hi)


def crop(volume: Volume, box: IndexBox) -> Volume:
    """Вырезать бокс (включительно) из сетки или маски; spacing не меняется"""
    lo, hi = box
    if len(lo) != 3 or len(hi) != 3:
        raise VolumeError(f"Некорректный бокс: {box}")
    for axis, n in enumerate(volume.dims):
        if not 0 <= lo[axis] <= hi[axis] < n:
            raise VolumeError(f"Бокс {box} выходит за пределы размерностей {volume.dims}")
    slices = tuple(slice(int(l), int(h) + 1) for l, h in zip(lo, hi))
    data = np.array(volume.data[slices], copy=True)
    return type(volume)(data, volume.spacing)
