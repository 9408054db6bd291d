"""
Two single-pixel dots on a small grey canvas

Dot A slides along a fixed row, dot B along a fixed column. Used as a tiny
training fixture.
"""

import numpy as np

from ..factor_space import FactorSpace
from .ground_truth import GroundTruthDataset

DOTS_SIZE = 8
DOT_A_ROW = 2
DOT_B_COL = 5


class DotsDataset(GroundTruthDataset):
    def __init__(self, size: int = DOTS_SIZE) -> None:
        space = FactorSpace(sizes=(size, size), names=("dot_a_x", "dot_b_y"))
        super().__init__("dots", space, (1, size, size))
        self.size = size

    @property
    def is_procedural(self) -> bool:
        return True

    def _render(self, positions: np.ndarray) -> np.ndarray:
        n = positions.shape[0]
        out = np.zeros((n, 1, self.size, self.size), dtype=np.float32)
        idx = np.arange(n)
        out[idx, 0, min(DOT_A_ROW, self.size - 1), positions[:, 0]] = 1.0
        out[idx, 0, positions[:, 1], min(DOT_B_COL, self.size - 1)] = 1.0
        return out
