"""
Artifact writers: CSV tables, PGM/PPM images

Matrices are min-max normalised to 8-bit grey so distance panels can be
compared by eye; observations are written as-is, scaled from [0, 1].
"""

import logging
import os
import pathlib
import re

import numpy as np
import pandas as pd

from ..errors import InvalidParamsError, ShapeMismatchError

logger = logging.getLogger(__name__)


def write_csv(frame: pd.DataFrame, path: str | os.PathLike[str]) -> pathlib.Path:
    """Write a frame with a header row and no index; output is byte-stable"""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.info(f"Wrote {path}")
    return path


def matrix_frame(matrix: np.ndarray) -> pd.DataFrame:
    """A square matrix as a frame with a leading row-index column ``u``"""
    matrix = np.asarray(matrix)
    frame = pd.DataFrame(matrix, columns=[f"v{j}" for j in range(matrix.shape[1])])
    frame.insert(0, "u", np.arange(matrix.shape[0]))
    return frame


def normalise_to_bytes(matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if not np.all(np.isfinite(matrix)):
        raise InvalidParamsError("Cannot render a matrix with non-finite entries")
    lo, hi = matrix.min(), matrix.max()
    if hi == lo:
        return np.zeros(matrix.shape, dtype=np.uint8)
    return np.rint((matrix - lo) / (hi - lo) * 255.0).astype(np.uint8)


def _write_netpbm(path: pathlib.Path, magic: bytes, pixels: np.ndarray) -> pathlib.Path:
    height, width = pixels.shape[:2]
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fp:
        fp.write(magic + f"\n{width} {height}\n255\n".encode("ascii"))
        fp.write(np.ascontiguousarray(pixels, dtype=np.uint8).tobytes())
    logger.info(f"Wrote {path}")
    return path


def emit_pgm(matrix: np.ndarray, path: str | os.PathLike[str]) -> pathlib.Path:
    """Binary 8-bit PGM (P5) of a 2-D matrix, min-max normalised"""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise ShapeMismatchError(f"emit_pgm needs a 2-D matrix, got {matrix.shape}")
    return _write_netpbm(pathlib.Path(path), b"P5", normalise_to_bytes(matrix))


def emit_observation(obs: np.ndarray, path: str | os.PathLike[str]) -> pathlib.Path:
    """
    Write a raw (C, H, W) observation: P5 for one channel, P6 otherwise
    (a two-channel image gets an empty blue channel).
    """
    obs = np.asarray(obs, dtype=np.float64)
    if obs.ndim != 3 or obs.shape[0] not in (1, 2, 3):
        raise ShapeMismatchError(f"Expected a (C, H, W) observation with C <= 3, got {obs.shape}")
    pixels = np.rint(np.clip(obs, 0.0, 1.0) * 255.0).astype(np.uint8)
    if obs.shape[0] == 1:
        return _write_netpbm(pathlib.Path(path), b"P5", pixels[0])
    if obs.shape[0] == 2:
        pixels = np.concatenate([pixels, np.zeros_like(pixels[:1])])
    return _write_netpbm(pathlib.Path(path), b"P6", pixels.transpose(1, 2, 0))


_HEADER_TOKEN = re.compile(rb"(#[^\n]*\n)|(\S+)")


def read_pgm(path: str | os.PathLike[str]) -> np.ndarray:
    """Read a binary P5 (H, W) or P6 (H, W, 3) image with maxval 255"""
    data = pathlib.Path(path).read_bytes()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        match = _HEADER_TOKEN.search(data, pos)
        if match is None:
            raise ValueError(f"Truncated Netpbm header in '{path}'")
        pos = match.end()
        if match.group(2):
            tokens.append(match.group(2))
    magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic not in (b"P5", b"P6") or maxval != 255:
        raise ValueError(f"Unsupported Netpbm image '{path}': {magic!r} maxval {maxval}")
    # exactly one whitespace byte separates the header from the payload
    payload = data[pos + 1 :]
    channels = 1 if magic == b"P5" else 3
    expected = width * height * channels
    if len(payload) < expected:
        raise ValueError(f"Truncated Netpbm payload in '{path}'")
    pixels = np.frombuffer(payload[:expected], dtype=np.uint8)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return pixels.reshape(shape)
