"""
Mutual Information Gap

Latent means are discretised into equal-width bins; ground-truth coordinates
are used as categorical labels. For each factor the gap between the two most
informative latents is divided by the factor's entropy.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import stats as sp_stats
from sklearn.metrics import mutual_info_score

from ..errors import InvalidParamsError, ShapeMismatchError

logger = logging.getLogger(__name__)

DEFAULT_BINS = 20


@dataclass(frozen=True)
class RepresentationTable:
    """Row-aligned latent codes (N, Z) and ground-truth coordinates (N, K)"""

    latents: np.ndarray
    factors: np.ndarray
    factor_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.latents.ndim != 2 or self.factors.ndim != 2:
            raise ShapeMismatchError(
                f"Expected 2-D latents and factors, got {self.latents.shape} and {self.factors.shape}"
            )
        if self.latents.shape[0] != self.factors.shape[0]:
            raise ShapeMismatchError(
                f"{self.latents.shape[0]} latent rows vs {self.factors.shape[0]} factor rows"
            )
        if self.latents.shape[0] < 2:
            raise InvalidParamsError("A representation table needs at least 2 rows")
        if not self.factor_names:
            names = tuple(f"factor_{j}" for j in range(self.factors.shape[1]))
            object.__setattr__(self, "factor_names", names)

    @property
    def num_samples(self) -> int:
        return self.latents.shape[0]

    @property
    def num_latents(self) -> int:
        return self.latents.shape[1]

    @property
    def num_factors(self) -> int:
        return self.factors.shape[1]


def discretize(values: np.ndarray, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Equal-width bin labels in [0, bins) over the range of ``values``"""
    if bins < 2:
        raise InvalidParamsError(f"bins must be >= 2, got {bins}")
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0 or values.min() == values.max():
        return np.zeros(values.shape, dtype=np.int64)
    edges = np.histogram_bin_edges(values, bins=bins)
    return (np.digitize(values, edges[:-1]) - 1).astype(np.int64)


def mutual_information(labels_a: np.ndarray, labels_b: np.ndarray) -> float:
    """Plug-in mutual information of two label vectors, in nats"""
    labels_a = np.asarray(labels_a)
    labels_b = np.asarray(labels_b)
    if labels_a.shape != labels_b.shape:
        raise ShapeMismatchError(f"Label vectors differ: {labels_a.shape} vs {labels_b.shape}")
    return float(max(mutual_info_score(labels_a, labels_b), 0.0))


def discrete_entropy(labels: np.ndarray) -> float:
    _, counts = np.unique(np.asarray(labels), return_counts=True)
    return float(sp_stats.entropy(counts))


@dataclass(frozen=True)
class MigResult:
    score: float
    gaps: np.ndarray
    mutual_info: np.ndarray


def mig_score(table: RepresentationTable, bins: int = DEFAULT_BINS) -> MigResult:
    """
    Mean normalised gap over factors with non-zero entropy.

    Returns:
        MigResult with the score, per-factor gaps (NaN for constant factors)
        and the (Z, K) mutual information matrix
    """
    if table.num_latents < 2:
        raise InvalidParamsError(f"MIG needs at least 2 latents, got {table.num_latents}")
    codes = [discretize(table.latents[:, i], bins) for i in range(table.num_latents)]
    mi = np.zeros((table.num_latents, table.num_factors))
    gaps = np.full(table.num_factors, np.nan)
    for j in range(table.num_factors):
        y = table.factors[:, j]
        h = discrete_entropy(y)
        for i, code in enumerate(codes):
            mi[i, j] = mutual_information(code, y)
        if h <= 0:
            logger.warning(f"Factor '{table.factor_names[j]}' is constant; left out of MIG")
            continue
        top = np.sort(mi[:, j])[::-1]
        gaps[j] = (top[0] - top[1]) / h
    valid = ~np.isnan(gaps)
    score = float(gaps[valid].mean()) if valid.any() else 0.0
    return MigResult(score=float(np.clip(score, 0.0, 1.0)), gaps=gaps, mutual_info=mi)
