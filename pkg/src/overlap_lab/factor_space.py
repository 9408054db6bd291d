"""
Ground-truth factor grids and factor traversals

Coordinates are 0-indexed and flattened in row-major order (last factor
fastest), which is how dSprites-style arrays are stored on disk.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidPositionError

logger = logging.getLogger(__name__)

FactorPos = tuple[int, ...]


@dataclass(frozen=True)
class FactorSpace:
    """The complete Cartesian grid of factor coordinates of a dataset"""

    sizes: tuple[int, ...]
    names: tuple[str, ...] = ()
    _strides: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.sizes)
        if len(sizes) < 1:
            raise InvalidPositionError("A factor space needs at least one factor")
        if any(s < 1 for s in sizes):
            raise InvalidPositionError(f"Factor sizes must be positive: {sizes}")
        names = tuple(self.names) or tuple(f"factor_{i}" for i in range(len(sizes)))
        if len(names) != len(sizes):
            raise InvalidPositionError(
                f"Got {len(names)} factor names for {len(sizes)} factors"
            )
        strides = [1] * len(sizes)
        for i in range(len(sizes) - 2, -1, -1):
            strides[i] = strides[i + 1] * sizes[i + 1]
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "_strides", tuple(strides))

    @property
    def num_factors(self) -> int:
        return len(self.sizes)

    @property
    def total(self) -> int:
        return math.prod(self.sizes)

    def check_factor(self, factor: int) -> None:
        if not 0 <= factor < self.num_factors:
            raise InvalidPositionError(
                f"Factor {factor} out of range for {self.num_factors} factors"
            )

    def check_pos(self, pos: Sequence[int]) -> None:
        if len(pos) != self.num_factors:
            raise InvalidPositionError(
                f"Position {tuple(pos)} has {len(pos)} coordinates, "
                f"expected {self.num_factors}"
            )
        for i, (c, s) in enumerate(zip(pos, self.sizes, strict=True)):
            if not 0 <= c < s:
                raise InvalidPositionError(
                    f"Coordinate {c} of factor {i} ({self.names[i]}) "
                    f"outside [0, {s})"
                )

    def pos_to_index(self, pos: Sequence[int]) -> int:
        self.check_pos(pos)
        return sum(int(c) * st for c, st in zip(pos, self._strides, strict=True))

    def index_to_pos(self, idx: int) -> FactorPos:
        if not 0 <= idx < self.total:
            raise InvalidPositionError(f"Index {idx} outside [0, {self.total})")
        coords = []
        for st, s in zip(self._strides, self.sizes, strict=True):
            coords.append((idx // st) % s)
        return tuple(coords)

    def positions_to_indices(self, positions: np.ndarray) -> np.ndarray:
        """Vectorised pos_to_index over an (N, K) integer array"""
        positions = np.asarray(positions, dtype=np.int64)
        if positions.ndim != 2 or positions.shape[1] != self.num_factors:
            raise InvalidPositionError(
                f"Expected positions of shape (N, {self.num_factors}), "
                f"got {positions.shape}"
            )
        if np.any(positions < 0) or np.any(positions >= np.asarray(self.sizes)):
            raise InvalidPositionError("Positions contain out-of-range coordinates")
        return positions @ np.asarray(self._strides, dtype=np.int64)

    def indices_to_positions(self, indices: np.ndarray) -> np.ndarray:
        """Vectorised index_to_pos returning an (N, K) integer array"""
        indices = np.asarray(indices, dtype=np.int64)
        if np.any(indices < 0) or np.any(indices >= self.total):
            raise InvalidPositionError("Indices out of range")
        strides = np.asarray(self._strides, dtype=np.int64)
        sizes = np.asarray(self.sizes, dtype=np.int64)
        return (indices[:, None] // strides[None, :]) % sizes[None, :]

    def traversal(self, anchor: Sequence[int], factor: int) -> list[FactorPos]:
        """All positions that agree with ``anchor`` except along ``factor``"""
        self.check_factor(factor)
        self.check_pos(anchor)
        base = list(anchor)
        out = []
        for j in range(self.sizes[factor]):
            base[factor] = j
            out.append(tuple(base))
        return out

    def sample_pos(self, rng: np.random.Generator) -> FactorPos:
        return tuple(int(rng.integers(0, s)) for s in self.sizes)

    def sample_positions(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw ``count`` positions uniformly over the grid as an (N, K) array"""
        cols = [rng.integers(0, s, size=count) for s in self.sizes]
        return np.stack(cols, axis=1).astype(np.int64)

    def all_positions(self) -> np.ndarray:
        return self.indices_to_positions(np.arange(self.total, dtype=np.int64))


def pos_to_index(space: FactorSpace, pos: Sequence[int]) -> int:
    return space.pos_to_index(pos)


def index_to_pos(space: FactorSpace, idx: int) -> FactorPos:
    return space.index_to_pos(idx)


def traversal(space: FactorSpace, anchor: Sequence[int], factor: int) -> list[FactorPos]:
    return space.traversal(anchor, factor)


def sample_pos(space: FactorSpace, rng: np.random.Generator) -> FactorPos:
    return space.sample_pos(rng)
