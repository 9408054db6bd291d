"""
Scoring trained models and comparing their distances with the data's
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..data.transforms import unstandardise
from ..distances import DistanceKind, pairwise_matrix
from ..models.adagvae import symmetric_kl
from ..models.train import TrainingData
from ..models.vae import LatentDistribution, MlpVae
from .dci import ImportanceMatrix, dci_disentanglement, dci_importance
from .mig import DEFAULT_BINS, MigResult, RepresentationTable, mig_score

logger = logging.getLogger(__name__)

ENCODE_BATCH = 512
MATRIX_LEVELS: tuple[str, ...] = ("gt", "visual", "latent_l2", "latent_kl", "recon")


def representation_table(
    model: MlpVae, data: TrainingData, samples: int, rng: np.random.Generator
) -> RepresentationTable:
    """Latent means of ``samples`` uniformly drawn positions"""
    positions = data.space.sample_positions(rng, samples)
    latents = np.concatenate(
        [
            model.encode(data.batch(positions[start : start + ENCODE_BATCH])).mu
            for start in range(0, samples, ENCODE_BATCH)
        ]
    )
    return RepresentationTable(latents, positions, data.space.names)


@dataclass(frozen=True)
class EvaluationScores:
    mig: float
    dci: float
    mig_result: MigResult
    importance: ImportanceMatrix
    bins: int
    samples: int


def evaluate_representation(
    table: RepresentationTable, bins: int = DEFAULT_BINS, seed: int = 0
) -> EvaluationScores:
    mig = mig_score(table, bins)
    importance = dci_importance(table, seed)
    try:
        dci = dci_disentanglement(importance)
    except ValueError:
        logger.warning("All DCI importances are zero; scoring DCI as 0")
        dci = 0.0
    logger.info(f"MIG={mig.score:.4f} DCI={dci:.4f} over {table.num_samples} samples")
    return EvaluationScores(mig.score, dci, mig, importance, bins, table.num_samples)


def _level_matrices(model: MlpVae, data: TrainingData, positions: np.ndarray) -> dict[str, np.ndarray]:
    mse = DistanceKind.mse()
    x = data.batch(positions)
    dist = model.encode(x)
    mu = dist.mu
    out = {
        "gt": pairwise_matrix(data.dataset, positions, DistanceKind.gt_l1()),
        "visual": pairwise_matrix(data.dataset, positions, mse),
        "latent_l2": np.sqrt(((mu[:, None, :] - mu[None, :, :]) ** 2).sum(axis=-1)),
    }
    n = mu.shape[0]
    kl = np.zeros((n, n))
    for u in range(n):
        row = LatentDistribution(dist.mu[u][None].repeat(n, 0), dist.logvar[u][None].repeat(n, 0))
        kl[u] = symmetric_kl(row, dist).sum(axis=1)
    out["latent_kl"] = kl
    recon = unstandardise(model.decode(mu).reshape(n, *data.image_shape), data.stats)
    out["recon"] = ((recon[:, None] - recon[None, :]) ** 2).mean(axis=(2, 3, 4))
    return out


def model_traversal_matrices(
    model: MlpVae,
    data: TrainingData,
    factor: int,
    anchor_samples: int,
    rng: np.random.Generator,
) -> dict[str, np.ndarray]:
    """
    Average traversal distance matrices at each level of a model: ground
    truth, input pixels, latent means (L2), posteriors (symmetric KL) and
    reconstructions of the means (MSE on raw scale).
    """
    space = data.space
    space.check_factor(factor)
    size = space.sizes[factor]
    sums = {level: np.zeros((size, size)) for level in MATRIX_LEVELS}
    for anchor in space.sample_positions(rng, anchor_samples):
        positions = np.repeat(anchor[None, :], size, axis=0)
        positions[:, factor] = np.arange(size)
        for level, m in _level_matrices(model, data, positions).items():
            sums[level] += m
    return {level: s / anchor_samples for level, s in sums.items()}
