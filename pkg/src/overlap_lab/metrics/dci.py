"""
DCI Disentanglement

Per factor, a small random forest predicts the factor coordinate from all
latents; its impurity-based feature importances form one column of the
latent x factor importance matrix.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import stats as sp_stats
from sklearn.ensemble import RandomForestRegressor
from sklearn.metrics import r2_score

from ..errors import InvalidParamsError
from .mig import RepresentationTable

logger = logging.getLogger(__name__)

N_ESTIMATORS = 10
MAX_DEPTH = 8
TEST_FRACTION = 0.2
LOW_R2 = 0.1
MIN_SAMPLES = 50


@dataclass(frozen=True)
class ImportanceMatrix:
    """(Z, K) importances, columns normalised to 1 unless flagged"""

    values: np.ndarray
    r2: np.ndarray
    flagged: np.ndarray
    factor_names: tuple[str, ...] = ()

    @property
    def any_flagged(self) -> bool:
        return bool(self.flagged.any())


def dci_importance(table: RepresentationTable, seed: int = 0) -> ImportanceMatrix:
    """
    Fit one forest per factor and collect normalised importances.

    A factor is flagged when it is constant or its held-out R^2 is below
    ``LOW_R2``. Constant factors get an all-zero column.
    """
    n = table.num_samples
    if n < MIN_SAMPLES:
        raise InvalidParamsError(f"DCI needs at least {MIN_SAMPLES} samples, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    n_test = max(1, int(round(TEST_FRACTION * n)))
    test, train = order[:n_test], order[n_test:]
    z = np.asarray(table.latents, dtype=np.float64)

    values = np.zeros((table.num_latents, table.num_factors))
    r2 = np.zeros(table.num_factors)
    flagged = np.zeros(table.num_factors, dtype=bool)
    for j in range(table.num_factors):
        y = np.asarray(table.factors[:, j], dtype=np.float64)
        name = table.factor_names[j]
        if y.min() == y.max():
            logger.warning(f"Factor '{name}' is constant; importance column left at zero")
            flagged[j] = True
            continue
        forest = RandomForestRegressor(
            n_estimators=N_ESTIMATORS,
            max_depth=MAX_DEPTH,
            max_features="sqrt",
            random_state=seed + j,
        )
        forest.fit(z[train], y[train])
        importances = forest.feature_importances_
        total = importances.sum()
        if total > 0:
            values[:, j] = importances / total
        else:
            flagged[j] = True
        r2[j] = r2_score(y[test], forest.predict(z[test])) if np.ptp(y[test]) > 0 else 0.0
        if r2[j] < LOW_R2:
            flagged[j] = True
        logger.debug(f"DCI factor '{name}': r2={r2[j]:.3f}")
    return ImportanceMatrix(values, r2, flagged, table.factor_names)


def dci_disentanglement(importance: ImportanceMatrix | np.ndarray) -> float:
    """
    Importance-weighted mean over latents of 1 - H_K(row), with H_K the
    entropy in base K of the normalised row.
    """
    matrix = importance.values if isinstance(importance, ImportanceMatrix) else np.asarray(importance)
    matrix = np.abs(np.asarray(matrix, dtype=np.float64))
    if matrix.ndim != 2:
        raise InvalidParamsError(f"Importance matrix must be 2-D, got {matrix.shape}")
    total = matrix.sum()
    if total <= 0:
        raise InvalidParamsError("Importance matrix is all zero")
    num_factors = matrix.shape[1]
    row_mass = matrix.sum(axis=1)
    score = 0.0
    for row, mass in zip(matrix, row_mass, strict=True):
        if mass <= 0:
            continue
        if num_factors == 1:
            d = 1.0
        else:
            d = 1.0 - float(sp_stats.entropy(row / mass, base=num_factors))
        score += (mass / total) * d
    return float(np.clip(score, 0.0, 1.0))
