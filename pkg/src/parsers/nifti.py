"""
NIfTI-1 reader/writer
Однофайловый NIfTI-1 (.nii, .nii.gz) - формат поставки Medical Decathlon

Структура заголовка разбирается и собирается через nibabel.Nifti1Header;
кадрирование (vox_offset, байты расширений, gzip) выполняется явно, чтобы
запись была побайтово воспроизводимой (gzip mtime = 0).
"""

import gzip
import io
import logging
import zlib
from pathlib import Path
from typing import Optional, Sequence, Tuple

import nibabel as nib
import numpy as np

from core.errors import (
    BadMagicError, TruncatedPayloadError, UnsupportedDatatypeError, UnsupportedFormatError,
)
from core.models import Datatype

logger = logging.getLogger(__name__)

NIFTI1_HEADER_SIZE = 348
NIFTI2_HEADER_SIZE = 540
NIFTI1_MAGIC = b"n+1\x00"
NIFTI1_PAIR_MAGIC = b"ni1\x00"
SINGLE_FILE_OFFSET = 352
GZIP_LEVEL = 1
# qform_code .. srow_z: переносится как непрозрачные байты
ORIENTATION_BLOCK = slice(252, 328)

DATATYPE_CODES = {2: Datatype.UINT8, 4: Datatype.INT16, 16: Datatype.FLOAT32}
NUMPY_DTYPES = {Datatype.UINT8: np.uint8, Datatype.INT16: np.int16, Datatype.FLOAT32: np.float32}


def is_nifti_path(path: Path) -> bool:
    name = path.name.lower()
    return name.endswith(".nii") or name.endswith(".nii.gz")


def _read_bytes(path: Path) -> bytes:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except (EOFError, zlib.error, OSError) as e:
            raise TruncatedPayloadError(f"{path}: повреждённый gzip поток ({e})")
    return raw


def _check_preamble(buf: bytes, path: Path) -> None:
    if len(buf) < 4:
        raise BadMagicError(f"{path}: файл слишком короткий для NIfTI")
    sizes = {int.from_bytes(buf[:4], "little"), int.from_bytes(buf[:4], "big")}
    if NIFTI2_HEADER_SIZE in sizes:
        raise UnsupportedFormatError(f"{path}: NIfTI-2 не поддерживается")
    if NIFTI1_HEADER_SIZE not in sizes:
        raise BadMagicError(f"{path}: sizeof_hdr не равен 348")
    if len(buf) < NIFTI1_HEADER_SIZE:
        raise TruncatedPayloadError(f"{path}: заголовок обрезан ({len(buf)} байт)")
    magic = bytes(buf[344:348])
    if magic == NIFTI1_PAIR_MAGIC:
        raise UnsupportedFormatError(f"{path}: пары .hdr/.img не поддерживаются")
    if magic != NIFTI1_MAGIC:
        raise BadMagicError(f"{path}: неверная сигнатура {magic!r}")


def read_nifti(path: Path) -> Tuple[np.ndarray, dict]:
    """
    Прочитать NIfTI-1 файл.

    Args:
        path: Путь к .nii или .nii.gz

    Returns:
        (значения после slope·stored + intercept, метаданные заголовка)
    """
    path = Path(path)
    buf = _read_bytes(path)
    _check_preamble(buf, path)

    header = nib.Nifti1Header.from_fileobj(io.BytesIO(buf[:NIFTI1_HEADER_SIZE]), check=False)

    code = int(header["datatype"])
    if code not in DATATYPE_CODES:
        raise UnsupportedDatatypeError(f"{path}: datatype {code} не поддерживается (uint8/int16/float32)")
    datatype = DATATYPE_CODES[code]

    shape = tuple(int(n) for n in header.get_data_shape())
    while len(shape) > 3 and shape[-1] == 1:
        shape = shape[:-1]
    if len(shape) != 3:
        raise UnsupportedFormatError(f"{path}: ожидался 3D объём, форма {shape}")

    offset = int(header.get_data_offset())
    dtype = header.get_data_dtype()
    count = int(np.prod(shape))
    needed = count * dtype.itemsize
    available = len(buf) - offset
    if offset < NIFTI1_HEADER_SIZE or available < needed:
        raise TruncatedPayloadError(
            f"{path}: ожидалось {needed} байт данных с offset {offset}, доступно {max(available, 0)}"
        )

    stored = np.frombuffer(buf, dtype=dtype, count=count, offset=offset).reshape(shape, order="F")
    slope, inter = header.get_slope_inter()
    slope = 1.0 if slope is None else float(slope)
    inter = 0.0 if inter is None else float(inter)
    if slope == 1.0 and inter == 0.0:
        values = stored.astype(dtype.newbyteorder("="))
    else:
        values = stored.astype(np.float64) * slope + inter

    little = header if header.endianness == "<" else header.as_byteswapped("<")
    meta = {
        "dims": shape,
        "spacing": tuple(float(z) for z in header.get_zooms()[:3]),
        "datatype": datatype,
        "scl_slope": slope,
        "scl_inter": inter,
        "orientation": bytes(little.binaryblock[ORIENTATION_BLOCK]),
    }
    return values, meta


def write_nifti(stored: np.ndarray, path: Path, datatype: Datatype, spacing: Sequence[float],
                scl_slope: float = 1.0, scl_inter: float = 0.0,
                orientation: Optional[bytes] = None) -> None:
    """
    Записать уже закодированные значения в однофайловый NIfTI-1.

    Args:
        stored: 3D массив, приводимый к datatype без потерь
        path: .nii или .nii.gz (gzip определяется по расширению)
        datatype: Тип хранения
        spacing: Размер вокселя, мм
        scl_slope, scl_inter: Линейное масштабирование значений
        orientation: Блок qform/sform из прочитанного файла
    """
    path = Path(path)
    dtype = np.dtype(NUMPY_DTYPES[datatype]).newbyteorder("<")

    header = nib.Nifti1Header(endianness="<")
    header.set_data_shape(stored.shape)
    header.set_data_dtype(dtype)
    header.set_zooms(tuple(float(s) for s in spacing))
    header.set_data_offset(SINGLE_FILE_OFFSET)
    if scl_slope != 1.0 or scl_inter != 0.0:
        header.set_slope_inter(scl_slope, scl_inter)
    if orientation is None:
        header.set_sform(np.diag([*(float(s) for s in spacing), 1.0]), code="aligned")

    block = bytearray(header.binaryblock)
    if orientation is not None:
        block[ORIENTATION_BLOCK] = orientation
    # 4 байта extension flag (расширений нет)
    payload = bytes(block) + b"\x00\x00\x00\x00" + np.asarray(stored, dtype=dtype).tobytes(order="F")

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        if path.name.lower().endswith(".gz"):
            with gzip.GzipFile(filename="", mode="wb", fileobj=f, mtime=0, compresslevel=GZIP_LEVEL) as gz:
                gz.write(payload)
        else:
            f.write(payload)
    logger.debug(f"NIfTI записан: {path} ({datatype.value}, {stored.shape})")
