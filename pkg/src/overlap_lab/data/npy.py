"""
NPY ingestion for file-backed ground-truth datasets

Only format version 1.0, C-ordered arrays of uint8/float32/float64 are
accepted. Arrays are memory-mapped, so retrieval by index never loads the
whole file. NPZ archives are not read: extract the contained ``.npy`` first.
"""

import logging
import os
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.lib import format as npy_format

from ..errors import NpyFormatError, ShapeMismatchError

logger = logging.getLogger(__name__)

Layout = Literal["NHW", "NHWC", "NCHW"]
LAYOUTS: tuple[str, ...] = ("NHW", "NHWC", "NCHW")
SUPPORTED_DTYPES = (np.dtype(np.uint8), np.dtype(np.float32), np.dtype(np.float64))
SCAN_CHUNK = 4096


@dataclass(frozen=True)
class NpyArray:
    """A memory-mapped NPY array plus the metadata needed to read observations"""

    path: str
    raw: np.ndarray
    layout: str
    scale: float

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.raw.shape)

    @property
    def dtype(self) -> np.dtype:
        return self.raw.dtype

    def as_nchw(self) -> np.ndarray:
        """A view of the raw array in (N, C, H, W) order"""
        if self.layout == "NHW":
            return self.raw[:, None, :, :]
        if self.layout == "NHWC":
            return self.raw.transpose(0, 3, 1, 2)
        return self.raw

    def read(self, indices: np.ndarray) -> np.ndarray:
        """Scaled float32 observations for the given flat indices"""
        batch = np.asarray(self.as_nchw()[np.asarray(indices)], dtype=np.float32)
        if self.scale != 1.0:
            batch *= np.float32(self.scale)
        return batch


def _is_binary(array: np.ndarray) -> bool:
    for start in range(0, array.shape[0], SCAN_CHUNK):
        if np.asarray(array[start : start + SCAN_CHUNK]).max(initial=0) > 1:
            return False
    return True


def load_npy(path: str | os.PathLike[str], layout: str = "NCHW", binary: bool | None = None) -> NpyArray:
    """
    Parse an NPY v1.0 file and memory-map its payload.

    Args:
        path: Path to the ``.npy`` file
        layout: One of ``NHW``, ``NHWC`` or ``NCHW`` describing the stored axes
        binary: Whether uint8 data only holds {0, 1}; scanned when None

    Returns:
        NpyArray whose observations are scaled to [0, 1]

    Raises:
        NpyFormatError: Bad magic, unsupported version or dtype, Fortran order,
            truncated payload
        ShapeMismatchError: Array rank does not match the layout tag
    """
    if layout not in LAYOUTS:
        raise ShapeMismatchError(f"Unknown layout '{layout}', expected one of {LAYOUTS}")
    path = os.fspath(path)
    try:
        with open(path, "rb") as fp:
            try:
                version = npy_format.read_magic(fp)
            except ValueError as e:
                raise NpyFormatError(f"'{path}' is not an NPY file: {e}") from e
            if version != (1, 0):
                raise NpyFormatError(
                    f"'{path}' uses NPY format {version[0]}.{version[1]}, only 1.0 is supported"
                )
            try:
                shape, fortran_order, dtype = npy_format.read_array_header_1_0(fp)
            except ValueError as e:
                raise NpyFormatError(f"'{path}' has a malformed header: {e}") from e
            offset = fp.tell()
    except OSError as e:
        raise NpyFormatError(f"Cannot read '{path}': {e}") from e

    if fortran_order:
        raise NpyFormatError(f"'{path}' is Fortran-ordered; re-save it in C order")
    if dtype not in SUPPORTED_DTYPES:
        raise NpyFormatError(
            f"'{path}' has dtype {dtype}, expected one of "
            f"{[str(d) for d in SUPPORTED_DTYPES]}"
        )
    expected_rank = {"NHW": 3, "NHWC": 4, "NCHW": 4}[layout]
    if len(shape) != expected_rank:
        raise ShapeMismatchError(
            f"'{path}' has shape {shape}, which does not match layout {layout}"
        )
    payload = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    available = os.path.getsize(path) - offset
    if available < payload:
        raise NpyFormatError(
            f"'{path}' is truncated: header declares {payload} payload bytes, "
            f"found {available}"
        )

    raw = np.memmap(path, dtype=dtype, mode="r", shape=shape, offset=offset, order="C")
    scale = 1.0
    if dtype == np.uint8:
        if binary is None:
            binary = _is_binary(raw)
        scale = 1.0 if binary else 1.0 / 255.0
    logger.info(
        f"Loaded NPY '{path}': shape={shape} dtype={dtype} layout={layout} scale={scale:g}"
    )
    return NpyArray(path=path, raw=raw, layout=layout, scale=scale)


def save_npy(path: str | os.PathLike[str], array: np.ndarray) -> None:
    """Write a C-ordered array in NPY format 1.0"""
    array = np.ascontiguousarray(array)
    with open(path, "wb") as fp:
        npy_format.write_array(fp, array, version=(1, 0), allow_pickle=False)
