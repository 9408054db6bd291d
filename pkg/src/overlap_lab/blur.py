"""
FFT box blur and the blur-augmented reconstruction loss

The blur is a channel-wise convolution with a normalised (2r+1) x (2r+1) box
kernel over the last two axes. Two boundary modes are supported:

``zero``
    Linear convolution cropped to the input size. The FFT runs on a canvas
    padded by the kernel reach, so nothing wraps around.
``circular``
    Periodic convolution on the input grid. Preserves each channel's mean.

Both modes use a symmetric kernel, so the blur operator is self-adjoint and
the gradient of the augmented loss needs no transpose.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import fft as sp_fft

from .errors import InvalidParamsError, ShapeMismatchError

logger = logging.getLogger(__name__)

Padding = Literal["zero", "circular"]
PADDINGS: tuple[str, ...] = ("zero", "circular")

DEFAULT_RADIUS = 31
DEFAULT_ALPHA = float((2 * DEFAULT_RADIUS + 1) ** 2)


@dataclass(frozen=True)
class BoxKernel:
    radius: int

    def __post_init__(self) -> None:
        if self.radius < 1:
            raise InvalidParamsError(f"Box blur radius must be >= 1, got {self.radius}")

    @property
    def side(self) -> int:
        return 2 * self.radius + 1

    def values(self) -> np.ndarray:
        """The dense (side, side) kernel; entries sum to 1"""
        return np.full((self.side, self.side), 1.0 / self.side**2)


class OverlapLossParams(BaseModel):
    """Weight and kernel of the blurred reconstruction term"""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(default=DEFAULT_ALPHA, gt=0)
    radius: int = Field(default=DEFAULT_RADIUS, ge=1)
    padding: Padding = "zero"


def fft2_real(matrix: np.ndarray) -> np.ndarray:
    """Half-plane 2D spectrum of a real array over its last two axes"""
    return sp_fft.rfft2(np.asarray(matrix, dtype=np.float64), axes=(-2, -1))


def ifft2_real(spectrum: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Inverse of ``fft2_real``; ``shape`` is the (H, W) of the real array"""
    return sp_fft.irfft2(spectrum, s=shape, axes=(-2, -1))


def _kernel_1d(length: int, radius: int, extent: int, padding: str) -> np.ndarray:
    side = 2 * radius + 1
    kernel = np.zeros(length)
    if padding == "circular":
        offsets = np.arange(-radius, radius + 1)
        np.add.at(kernel, offsets % length, 1.0 / side)
    else:
        # offsets past the image extent only ever meet zero padding
        reach = min(radius, extent - 1)
        offsets = np.arange(-reach, reach + 1)
        kernel[offsets % length] = 1.0 / side
    return kernel


@lru_cache(maxsize=32)
def _kernel_spectrum(
    height: int, width: int, radius: int, padding: str
) -> tuple[np.ndarray, tuple[int, int]]:
    if padding == "circular":
        canvas = (height, width)
    else:
        canvas = (
            sp_fft.next_fast_len(height + min(radius, height - 1), real=True),
            sp_fft.next_fast_len(width + min(radius, width - 1), real=True),
        )
    kh = _kernel_1d(canvas[0], radius, height, padding)
    kw = _kernel_1d(canvas[1], radius, width, padding)
    spectrum = fft2_real(np.outer(kh, kw))
    spectrum.setflags(write=False)
    logger.debug(
        f"Built box kernel spectrum r={radius} padding={padding} "
        f"image={height}x{width} canvas={canvas[0]}x{canvas[1]}"
    )
    return spectrum, canvas


def box_blur(obs: np.ndarray, radius: int = DEFAULT_RADIUS, padding: Padding = "zero") -> np.ndarray:
    """
    Blur each channel with a normalised box kernel via the FFT.

    Args:
        obs: Array of shape (..., H, W)
        radius: Kernel radius r, side 2r+1
        padding: ``zero`` or ``circular``

    Returns:
        float64 array of the same shape
    """
    BoxKernel(radius)
    if padding not in PADDINGS:
        raise InvalidParamsError(f"Unknown padding '{padding}', expected one of {PADDINGS}")
    obs = np.asarray(obs, dtype=np.float64)
    if obs.ndim < 2:
        raise ShapeMismatchError(f"box_blur needs at least 2 dimensions, got {obs.shape}")
    height, width = obs.shape[-2:]
    spectrum, canvas = _kernel_spectrum(height, width, radius, padding)
    if canvas == (height, width):
        return ifft2_real(fft2_real(obs) * spectrum, canvas)
    padded = sp_fft.rfft2(obs, s=canvas, axes=(-2, -1))
    return ifft2_real(padded * spectrum, canvas)[..., :height, :width]


def _mse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean((a - b) ** 2))


def overlap_loss(
    x: np.ndarray, r: np.ndarray, params: OverlapLossParams | None = None
) -> tuple[float, np.ndarray]:
    """
    ``MSE(x, r) + alpha * MSE(blur(x), blur(r))`` and its gradient w.r.t. ``r``.

    Both means run over every element, so the gradient of the blurred term is
    ``alpha * 2/n * blur(blur(r) - blur(x))``.
    """
    params = params or OverlapLossParams()
    x = np.asarray(x, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if x.shape != r.shape:
        raise ShapeMismatchError(f"overlap_loss shapes differ: {x.shape} vs {r.shape}")
    diff = r - x
    blurred = box_blur(diff, params.radius, params.padding)
    value = float(np.mean(diff**2) + params.alpha * np.mean(blurred**2))
    n = diff.size
    grad = (2.0 / n) * (diff + params.alpha * box_blur(blurred, params.radius, params.padding))
    return value, grad


def blurred_mse(
    a: np.ndarray, b: np.ndarray, radius: int = DEFAULT_RADIUS, padding: Padding = "zero"
) -> float:
    """MSE between the blurred versions of two arrays"""
    return _mse(box_blur(a, radius, padding), box_blur(b, radius, padding))
