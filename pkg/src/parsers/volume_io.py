"""
Volume I/O
Единая точка чтения/записи объёмов: NIfTI-1 или raw + sidecar по расширению
"""

import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from core.errors import RangeOverflowError, UnsupportedFormatError, VolumeFormatError
from core.models import Datatype, VolumeHeader
from core.volume import BinaryMask, Volume, VoxelGrid

from .nifti import is_nifti_path, read_nifti, write_nifti
from .raw_sidecar import is_raw_path, read_raw, write_raw

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

INT16_RANGE = (-32768, 32767)
FLOAT32_MAX = float(np.finfo(np.float32).max)


def _backend(path: Path):
    if is_nifti_path(path):
        return read_nifti, write_nifti
    if is_raw_path(path):
        return read_raw, write_raw
    if path.suffix.lower() in (".hdr", ".img"):
        raise UnsupportedFormatError(f"{path}: пары .hdr/.img не поддерживаются, используйте .nii/.nii.gz")
    raise UnsupportedFormatError(f"{path}: неизвестный формат объёма (ожидается .nii, .nii.gz, .raw/.json)")


def read_volume_with_header(path: PathLike) -> Tuple[VoxelGrid, VolumeHeader]:
    """
    Прочитать объём вместе с заголовком.

    Returns:
        (VoxelGrid значений slope·stored + intercept, VolumeHeader)
    """
    path = Path(path)
    reader, _ = _backend(path)
    values, meta = reader(path)
    try:
        header = VolumeHeader(**meta)
    except ValidationError as e:
        raise VolumeFormatError(f"{path}: некорректный заголовок: {e}")
    return VoxelGrid(values, header.spacing), header


def read_volume(path: PathLike, as_mask: bool = False) -> Volume:
    """
    Прочитать объём.

    Args:
        path: Путь к файлу
        as_mask: Вернуть BinaryMask (значения обязаны быть только 0 и 1)

    Returns:
        VoxelGrid или BinaryMask
    """
    grid, _ = read_volume_with_header(path)
    if not as_mask:
        return grid
    if not np.isin(grid.data, (0.0, 1.0)).all():
        raise VolumeFormatError(f"{path}: файл не является бинарной меткой (значения вне {{0, 1}})")
    return BinaryMask(grid.data != 0, grid.spacing)


def _encode(values: np.ndarray, datatype: Datatype, slope: float, inter: float) -> np.ndarray:
    """Перевести значения в хранимое представление с проверкой диапазона"""
    if slope != 1.0 or inter != 0.0:
        values = (values.astype(np.float64) - inter) / slope

    if datatype == Datatype.FLOAT32:
        if np.abs(values).max(initial=0.0) > FLOAT32_MAX:
            raise RangeOverflowError("Значения выходят за диапазон float32")
        return values.astype(np.float32)

    if datatype == Datatype.UINT8:
        if not np.isin(values, (0, 1)).all():
            raise RangeOverflowError("uint8 допускается только для масок {0, 1}")
        return values.astype(np.uint8)

    if datatype == Datatype.INT16:
        lo, hi = INT16_RANGE
        if values.min() < lo or values.max() > hi:
            raise RangeOverflowError(f"Значения выходят за диапазон int16 [{lo}, {hi}]")
        if not np.array_equal(values, np.round(values)):
            raise RangeOverflowError("int16 допускается только для целых значений")
        return values.astype(np.int16)

    raise RangeOverflowError(f"Неизвестный тип хранения: {datatype}")


def write_volume(volume: Volume, path: PathLike, datatype: Optional[Union[Datatype, str]] = None,
                 header: Optional[VolumeHeader] = None) -> None:
    """
    Записать сетку или маску.

    Args:
        volume: VoxelGrid или BinaryMask
        path: Путь; формат определяется расширением
        datatype: float32 (по умолчанию для сеток), uint8 (по умолчанию для масок), int16
        header: Заголовок прочитанного файла: масштабирование и ориентация
    """
    path = Path(path)
    _, writer = _backend(path)
    if datatype is None:
        datatype = Datatype.UINT8 if isinstance(volume, BinaryMask) else Datatype.FLOAT32
    datatype = Datatype(datatype)

    slope = header.scl_slope if header is not None else 1.0
    inter = header.scl_inter if header is not None else 0.0
    orientation = header.orientation if header is not None else None

    values = volume.data.astype(np.uint8) if isinstance(volume, BinaryMask) else volume.data
    stored = _encode(values, datatype, slope, inter)
    writer(stored, path, datatype, volume.spacing,
           scl_slope=slope, scl_inter=inter, orientation=orientation)
