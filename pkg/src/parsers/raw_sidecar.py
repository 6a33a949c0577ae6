"""
Raw + sidecar volume format
Текстовый JSON с метаданными (<stem>.json) и little-endian блок данных (<stem>.raw)
"""

import json
import logging
from pathlib import Path
from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from core.errors import TruncatedPayloadError, UnsupportedDatatypeError, VolumeFormatError
from core.models import Datatype

logger = logging.getLogger(__name__)

SIDECAR_FORMAT = "dropoutqc-raw/1"
NUMPY_DTYPES = {Datatype.UINT8: "<u1", Datatype.INT16: "<i2", Datatype.FLOAT32: "<f4"}


class RawSidecar(BaseModel):
    """Схема файла метаданных"""
    format: Literal["dropoutqc-raw/1"] = SIDECAR_FORMAT
    dims: Tuple[int, int, int]
    spacing: Tuple[float, float, float]
    datatype: Datatype
    axis_order: Literal["x-fastest"] = "x-fastest"
    byte_order: Literal["little"] = "little"
    scl_slope: float = 1.0
    scl_inter: float = 0.0
    data_file: str = Field(..., description="Имя блока данных рядом с метаданными")


def is_raw_path(path: Path) -> bool:
    return path.suffix.lower() in (".raw", ".json")


def sidecar_paths(path: Path) -> Tuple[Path, Path]:
    """(метаданные, данные) для пути к любому из двух файлов"""
    path = Path(path)
    stem = path.with_suffix("")
    return stem.with_suffix(".json"), stem.with_suffix(".raw")


def read_raw(path: Path) -> Tuple[np.ndarray, dict]:
    meta_path, _ = sidecar_paths(path)
    with open(meta_path, "r", encoding="utf-8") as f:
        try:
            raw_meta = json.load(f)
        except json.JSONDecodeError as e:
            raise VolumeFormatError(f"{meta_path}: некорректный JSON ({e})")

    if raw_meta.get("datatype") not in {d.value for d in Datatype}:
        raise UnsupportedDatatypeError(f"{meta_path}: datatype {raw_meta.get('datatype')!r} не поддерживается")
    try:
        meta = RawSidecar.model_validate(raw_meta)
    except ValidationError as e:
        raise VolumeFormatError(f"{meta_path}: некорректные метаданные: {e}")

    data_path = meta_path.parent / meta.data_file
    blob = data_path.read_bytes()
    dtype = np.dtype(NUMPY_DTYPES[meta.datatype])
    count = int(np.prod(meta.dims))
    if len(blob) != count * dtype.itemsize:
        raise TruncatedPayloadError(
            f"{data_path}: длина {len(blob)} байт, ожидалось {count * dtype.itemsize}"
        )

    stored = np.frombuffer(blob, dtype=dtype).reshape(meta.dims, order="F")
    if meta.scl_slope == 1.0 and meta.scl_inter == 0.0:
        values = stored.astype(dtype.newbyteorder("="))
    else:
        values = stored.astype(np.float64) * meta.scl_slope + meta.scl_inter

    return values, {
        "dims": meta.dims,
        "spacing": meta.spacing,
        "datatype": meta.datatype,
        "scl_slope": meta.scl_slope,
        "scl_inter": meta.scl_inter,
        "orientation": None,
    }


def write_raw(stored: np.ndarray, path: Path, datatype: Datatype, spacing: Sequence[float],
              scl_slope: float = 1.0, scl_inter: float = 0.0,
              orientation: Optional[bytes] = None) -> None:
    """Записать пару <stem>.json + <stem>.raw; orientation в этом формате не хранится"""
    meta_path, data_path = sidecar_paths(path)
    meta = RawSidecar(
        dims=tuple(int(n) for n in stored.shape),
        spacing=tuple(float(s) for s in spacing),
        datatype=datatype,
        scl_slope=scl_slope,
        scl_inter=scl_inter,
        data_file=data_path.name,
    )
    meta_path.parent.mkdir(parents=True, exist_ok=True)
    data_path.write_bytes(np.asarray(stored, dtype=NUMPY_DTYPES[datatype]).tobytes(order="F"))
    with open(meta_path, "w", encoding="utf-8") as f:
        json.dump(meta.model_dump(mode="json"), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.debug(f"Raw объём записан: {data_path}")
