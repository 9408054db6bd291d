"""
Weakly-supervised Ada-GVAE

A training example is a pair of observations that differ in an unknown
number k of factors. Latent units whose posteriors barely move between the
two observations are judged shared and averaged across the pair before the
usual Beta-VAE objective is applied to both sides.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..blur import OverlapLossParams
from ..errors import InvalidParamsError, ShapeMismatchError, TrainingDivergedError
from ..factor_space import FactorPos, FactorSpace
from .vae import LatentDistribution, LossBreakdown, MlpVae, Params, latent_objective

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObservationPair:
    pos_a: FactorPos
    pos_b: FactorPos
    k: int

    def __post_init__(self) -> None:
        differing = sum(a != b for a, b in zip(self.pos_a, self.pos_b, strict=True))
        if differing != self.k or self.k < 1:
            raise InvalidParamsError(
                f"Pair {self.pos_a} / {self.pos_b} differs in {differing} factors, k={self.k}"
            )


def _eligible_factors(space: FactorSpace) -> np.ndarray:
    eligible = np.flatnonzero(np.asarray(space.sizes) >= 2)
    if eligible.size == 0:
        raise InvalidParamsError(f"No factor of size >= 2 in {space.sizes}; pairs cannot differ")
    return eligible


def sample_pairs(
    space: FactorSpace, rng: np.random.Generator, count: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Draw ``count`` pairs as (pos_a, pos_b, k) arrays.

    k is uniform over 1..(number of factors of size >= 2); the k factors are
    chosen uniformly without replacement and each is moved to a different
    value.
    """
    eligible = _eligible_factors(space)
    sizes = np.asarray(space.sizes, dtype=np.int64)
    pos_a = space.sample_positions(rng, count)
    pos_b = pos_a.copy()
    ks = rng.integers(1, eligible.size + 1, size=count)
    for row in range(count):
        chosen = rng.choice(eligible, size=ks[row], replace=False)
        shift = rng.integers(1, sizes[chosen])
        pos_b[row, chosen] = (pos_a[row, chosen] + shift) % sizes[chosen]
    return pos_a, pos_b, ks


def sample_pair(space: FactorSpace, rng: np.random.Generator) -> ObservationPair:
    pos_a, pos_b, ks = sample_pairs(space, rng, 1)
    return ObservationPair(
        tuple(int(c) for c in pos_a[0]), tuple(int(c) for c in pos_b[0]), int(ks[0])
    )


def symmetric_kl(p: LatentDistribution, q: LatentDistribution) -> np.ndarray:
    """Per-unit 0.5 KL(p||q) + 0.5 KL(q||p) between diagonal Gaussians"""
    mu_p, lv_p = np.asarray(p.mu, dtype=np.float64), np.asarray(p.logvar, dtype=np.float64)
    mu_q, lv_q = np.asarray(q.mu, dtype=np.float64), np.asarray(q.logvar, dtype=np.float64)
    if mu_p.shape != mu_q.shape:
        raise ShapeMismatchError(f"Posteriors differ in shape: {mu_p.shape} vs {mu_q.shape}")
    var_p, var_q = np.exp(lv_p), np.exp(lv_q)
    sq = (mu_p - mu_q) ** 2
    # the log-variance terms cancel between the two directions
    return 0.25 * ((var_p + sq) / var_q + (var_q + sq) / var_p - 2.0)


def estimate_shared_mask(divergences: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Mark units whose divergence lies below the midpoint of min and max.

    Works on a (Z,) vector or row-wise on a (B, Z) batch. Rows whose
    divergences are all equal are fully shared.

    Returns:
        Boolean mask (same shape) and the threshold(s)
    """
    d = np.asarray(divergences, dtype=np.float64)
    if d.shape[-1] < 1:
        raise InvalidParamsError("estimate_shared_mask needs at least one unit")
    if not np.all(np.isfinite(d)):
        raise TrainingDivergedError("Non-finite latent divergences")
    lo = d.min(axis=-1, keepdims=True)
    hi = d.max(axis=-1, keepdims=True)
    tau = 0.5 * (lo + hi)
    mask = (d < tau) | (lo == hi)
    return mask, tau[..., 0]


@dataclass(frozen=True)
class AveragedPosteriors:
    a: LatentDistribution
    b: LatentDistribution
    mask: np.ndarray


def average_posteriors(
    p: LatentDistribution, q: LatentDistribution, mask: np.ndarray
) -> AveragedPosteriors:
    """Replace shared units of both posteriors by their mean (in mu and variance)"""
    if np.shape(p.mu) != np.shape(q.mu):
        raise ShapeMismatchError(f"Posteriors differ in shape: {np.shape(p.mu)} vs {np.shape(q.mu)}")
    mask = np.asarray(mask, dtype=bool)
    mu = 0.5 * (p.mu + q.mu)
    lv = np.log(0.5 * (np.exp(p.logvar) + np.exp(q.logvar)))
    return AveragedPosteriors(
        a=LatentDistribution(np.where(mask, mu, p.mu), np.where(mask, lv, p.logvar)),
        b=LatentDistribution(np.where(mask, mu, q.mu), np.where(mask, lv, q.logvar)),
        mask=mask,
    )


def adagvae_loss(
    x_a: np.ndarray,
    x_b: np.ndarray,
    model: MlpVae,
    eps: np.ndarray,
    beta: float,
    overlap: OverlapLossParams | None = None,
    image_shape: tuple[int, int, int] | None = None,
) -> tuple[LossBreakdown, Params]:
    """
    Ada-GVAE loss for a batch of pairs and its gradient for every parameter.

    The loss is the mean of both sides' Beta-VAE losses computed on the
    averaged posteriors. The shared mask is held fixed when differentiating.

    Args:
        x_a, x_b: (B, D) flattened, standardised observations
        eps: (2B, Z) noise, rows for side a first
    """
    x_a = model._as_batch(x_a)
    x_b = model._as_batch(x_b)
    if x_a.shape != x_b.shape:
        raise ShapeMismatchError(f"Pair batches differ: {x_a.shape} vs {x_b.shape}")
    batch = x_a.shape[0]
    x = np.concatenate([x_a, x_b], axis=0)
    grads = model.zero_grads()
    dist, enc_cache = model.encode_forward(x)
    p = LatentDistribution(dist.mu[:batch], dist.logvar[:batch])
    q = LatentDistribution(dist.mu[batch:], dist.logvar[batch:])

    mask, _ = estimate_shared_mask(symmetric_kl(p, q))
    avg = average_posteriors(p, q, mask)
    stacked = LatentDistribution(
        np.concatenate([avg.a.mu, avg.b.mu]), np.concatenate([avg.a.logvar, avg.b.logvar])
    )
    eps = np.asarray(eps, dtype=np.float64).reshape(stacked.mu.shape)
    loss, dmu_avg, dlv_avg = latent_objective(model, x, stacked, eps, beta, grads, overlap, image_shape)

    m = mask.astype(np.float64)
    keep = 1.0 - m
    dmu_a, dmu_b = dmu_avg[:batch], dmu_avg[batch:]
    dlv_a, dlv_b = dlv_avg[:batch], dlv_avg[batch:]
    shared_mu = 0.5 * m * (dmu_a + dmu_b)
    var_a, var_b = np.exp(p.logvar), np.exp(q.logvar)
    w_a = var_a / (var_a + var_b)
    shared_lv = m * (dlv_a + dlv_b)
    dmu = np.concatenate([keep * dmu_a + shared_mu, keep * dmu_b + shared_mu])
    dlv = np.concatenate([keep * dlv_a + w_a * shared_lv, keep * dlv_b + (1.0 - w_a) * shared_lv])
    model.encoder_backward(enc_cache, dmu, dlv, grads)

    shared = float(mask.sum(axis=1).mean())
    return LossBreakdown(recon=loss.recon, kl=loss.kl, total=loss.total, shared=shared), grads
