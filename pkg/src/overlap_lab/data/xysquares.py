"""
XYSquares: coloured squares on a grid with constant pixel overlap

Each square moves over ``grid_points`` positions along x and y. With
``spacing == square_size`` two positions of a square never share a pixel, so
every pair of distinct observations along a factor traversal is equally far
apart under any pixel-wise distance.
"""

import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..factor_space import FactorSpace
from .ground_truth import ChannelStats, GroundTruthDataset, Observation

logger = logging.getLogger(__name__)

SQUARE_COLOURS = ("R", "G", "B")
# geometry fields that show up in a dataset name when they differ from the default
NAME_TAGS = (("g", "grid_points"), ("n", "num_squares"), ("i", "image_size"), ("q", "square_size"))


class XYSquaresParams(BaseModel):
    """Geometry of an XYSquares dataset, all lengths in pixels"""

    model_config = ConfigDict(frozen=True)

    image_size: int = Field(default=64, ge=1)
    square_size: int = Field(default=8, ge=1)
    grid_points: int = Field(default=8, ge=1)
    spacing: int = Field(default=8, ge=1)
    num_squares: int = Field(default=3, ge=1, le=3)

    @model_validator(mode="after")
    def _fits_in_image(self) -> "XYSquaresParams":
        extent = (self.grid_points - 1) * self.spacing + self.square_size
        if extent > self.image_size:
            raise ValueError(
                f"Squares do not fit: (grid_points - 1) * spacing + square_size = "
                f"{extent} > image_size = {self.image_size}"
            )
        return self

    @property
    def overlap_per_step(self) -> int:
        """Pixels shared by a square and itself moved one grid step along an axis"""
        return max(self.square_size - self.spacing, 0) * self.square_size

    @classmethod
    def reduced(cls, spacing: int = 4) -> "XYSquaresParams":
        """Small two-square variant used for desk-scale training studies"""
        return cls(image_size=16, square_size=4, grid_points=4, spacing=spacing, num_squares=2)

    @property
    def dataset_name(self) -> str:
        """
        ``xysquares`` for the default geometry, otherwise the spacing plus
        every other field that differs, e.g. ``xysquares-s4-g4-n2-i16-q4``
        """
        default = XYSquaresParams()
        if self == default:
            return "xysquares"
        tags = "".join(
            f"-{tag}{getattr(self, field)}"
            for tag, field in NAME_TAGS
            if getattr(self, field) != getattr(default, field)
        )
        return f"xysquares-s{self.spacing}{tags}"


def xysquares_factor_names(num_squares: int) -> tuple[str, ...]:
    names = []
    for colour in SQUARE_COLOURS[:num_squares]:
        names.extend([f"x_{colour}", f"y_{colour}"])
    return tuple(names)


class XYSquaresDataset(GroundTruthDataset):
    """Procedural XYSquares; observations are rendered on demand"""

    def __init__(self, params: XYSquaresParams | None = None) -> None:
        self.params = params or XYSquaresParams()
        p = self.params
        space = FactorSpace(
            sizes=(p.grid_points,) * (2 * p.num_squares),
            names=xysquares_factor_names(p.num_squares),
        )
        super().__init__(p.dataset_name, space, (p.num_squares, p.image_size, p.image_size))
        logger.debug(f"Created {self!r} with {self.params}")

    @property
    def is_procedural(self) -> bool:
        return True

    def _render(self, positions: np.ndarray) -> np.ndarray:
        p = self.params
        n = positions.shape[0]
        pixels = np.arange(p.image_size)
        out = np.zeros((n, p.num_squares, p.image_size, p.image_size), dtype=np.float32)
        for k in range(p.num_squares):
            x0 = positions[:, 2 * k] * p.spacing
            y0 = positions[:, 2 * k + 1] * p.spacing
            rows = (pixels[None, :] >= y0[:, None]) & (pixels[None, :] < y0[:, None] + p.square_size)
            cols = (pixels[None, :] >= x0[:, None]) & (pixels[None, :] < x0[:, None] + p.square_size)
            out[:, k] = rows[:, :, None] & cols[:, None, :]
        return out

    def analytic_stats(self) -> ChannelStats:
        # every channel of every observation holds exactly square_size**2 ones
        p = self.params
        pixels = p.image_size * p.image_size
        active = p.square_size * p.square_size
        mean = active / pixels
        if pixels > 1:
            std = math.sqrt(pixels * mean * (1.0 - mean) / (pixels - 1))
        else:
            std = 0.0
        return ChannelStats(mean=(mean,) * p.num_squares, std=(std,) * p.num_squares)


def xysquares_generate(params: XYSquaresParams, pos: tuple[int, ...]) -> Observation:
    """Render a single XYSquares observation"""
    return XYSquaresDataset(params).observation(pos)
