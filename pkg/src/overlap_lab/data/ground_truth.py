"""
Ground-truth datasets: observations addressable by factor coordinates

Observations are ``(C, H, W)`` arrays with raw values in [0, 1]. Batched
retrieval takes an ``(N, K)`` array of coordinates and returns ``(N, C, H, W)``.
"""

import logging
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateStatsError, InvalidParamsError, ShapeMismatchError
from ..factor_space import FactorSpace

logger = logging.getLogger(__name__)

# A single C x H x W image
Observation = np.ndarray


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel normalisation constants for raw [0, 1] pixel values"""

    mean: tuple[float, ...]
    std: tuple[float, ...]

    def __post_init__(self) -> None:
        mean = tuple(float(m) for m in self.mean)
        std = tuple(float(s) for s in self.std)
        if len(mean) != len(std) or not mean:
            raise ShapeMismatchError(
                f"Channel stats need matching mean/std lengths, got {len(mean)}/{len(std)}"
            )
        if any(not s > 0 for s in std):
            raise DegenerateStatsError(f"Channel std must be positive, got {std}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @property
    def channels(self) -> int:
        return len(self.mean)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Mean and std shaped ``(C, 1, 1)`` for broadcasting against images"""
        mean = np.asarray(self.mean, dtype=np.float64)[:, None, None]
        std = np.asarray(self.std, dtype=np.float64)[:, None, None]
        return mean, std


class GroundTruthDataset(ABC):
    """A dataset generated from a complete grid of ground-truth factors"""

    def __init__(
        self,
        name: str,
        space: FactorSpace,
        obs_shape: tuple[int, int, int],
        stats: ChannelStats | None = None,
    ) -> None:
        channels, height, width = obs_shape
        if channels < 1 or height < 1 or width < 1:
            raise InvalidParamsError(f"Invalid observation shape {obs_shape}")
        if stats is not None and stats.channels != channels:
            raise ShapeMismatchError(
                f"Stats have {stats.channels} channels, observations have {channels}"
            )
        self.name = name
        self.space = space
        self.obs_shape = (int(channels), int(height), int(width))
        self.stats = stats

    @property
    def channels(self) -> int:
        return self.obs_shape[0]

    @property
    def height(self) -> int:
        return self.obs_shape[1]

    @property
    def width(self) -> int:
        return self.obs_shape[2]

    @property
    def is_procedural(self) -> bool:
        return False

    def __len__(self) -> int:
        return self.space.total

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}(name={self.name!r}, sizes={self.space.sizes}, "
            f"obs_shape={self.obs_shape})"
        )

    @abstractmethod
    def _render(self, positions: np.ndarray) -> np.ndarray:
        """Return raw observations for validated ``(N, K)`` positions"""

    def observations(self, positions: np.ndarray) -> np.ndarray:
        positions = np.asarray(positions, dtype=np.int64)
        if positions.ndim == 1:
            positions = positions[None, :]
        # raises on out-of-range coordinates
        self.space.positions_to_indices(positions)
        return self._render(positions)

    def observation(self, pos: Sequence[int]) -> Observation:
        self.space.check_pos(pos)
        return self._render(np.asarray([pos], dtype=np.int64))[0]

    def observations_at_indices(self, indices: np.ndarray) -> np.ndarray:
        return self._render(self.space.indices_to_positions(indices))

    def analytic_stats(self) -> ChannelStats | None:
        """Exact channel statistics when they follow from the generator"""
        return None


class ArrayDataset(GroundTruthDataset):
    """A file-backed dataset holding one observation per flat factor index"""

    def __init__(
        self,
        name: str,
        space: FactorSpace,
        array: np.ndarray,
        scale: float = 1.0,
        stats: ChannelStats | None = None,
    ) -> None:
        if array.ndim != 4:
            raise ShapeMismatchError(
                f"Expected an (N, C, H, W) array, got shape {array.shape}"
            )
        if array.shape[0] != space.total:
            raise ShapeMismatchError(
                f"Array holds {array.shape[0]} observations but the factor space "
                f"has {space.total} positions"
            )
        super().__init__(name, space, tuple(array.shape[1:]), stats)  # type: ignore[arg-type]
        self.array = array
        self.scale = float(scale)

    def _render(self, positions: np.ndarray) -> np.ndarray:
        idx = self.space.positions_to_indices(positions)
        batch = np.asarray(self.array[idx], dtype=np.float32)
        if self.scale != 1.0:
            batch *= np.float32(self.scale)
        return batch


class TransformedDataset(GroundTruthDataset):
    """Applies an observation transform on top of another dataset"""

    def __init__(
        self,
        base: GroundTruthDataset,
        obs_shape: tuple[int, int, int],
        name: str | None = None,
    ) -> None:
        super().__init__(name or base.name, base.space, obs_shape, None)
        self.base = base

    @property
    def is_procedural(self) -> bool:
        return self.base.is_procedural

    @abstractmethod
    def transform(self, batch: np.ndarray) -> np.ndarray: ...

    def _render(self, positions: np.ndarray) -> np.ndarray:
        return self.transform(self.base._render(positions))


class ResizedDataset(TransformedDataset):
    """Bilinearly resized view of another dataset"""

    def __init__(self, base: GroundTruthDataset, height: int, width: int) -> None:
        super().__init__(base, (base.channels, height, width))

    def transform(self, batch: np.ndarray) -> np.ndarray:
        from .transforms import resize_bilinear

        return resize_bilinear(batch, self.height, self.width).astype(np.float32)


class StandardisedDataset(TransformedDataset):
    """Channel-standardised view; no longer bounded to [0, 1]"""

    def __init__(self, base: GroundTruthDataset, stats: ChannelStats) -> None:
        super().__init__(base, base.obs_shape, name=f"{base.name}-standardised")
        if stats.channels != base.channels:
            raise ShapeMismatchError(
                f"Stats have {stats.channels} channels, observations have {base.channels}"
            )
        self.source_stats = stats

    def transform(self, batch: np.ndarray) -> np.ndarray:
        from .transforms import standardise

        return standardise(batch, self.source_stats)
