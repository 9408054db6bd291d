"""
Fully-connected VAE with hand-derived gradients

Encoder: input -> 256 -> 256 -> 2Z (means, then log-variances).
Decoder: Z -> 256 -> 256 -> input, linear output. ReLU between layers.
Weights are stored as (fan_in, fan_out) so a layer computes ``h @ W + b``.

Both loss terms are element means (recon over B*D values, KL over B*Z
values), so beta is comparable across image sizes and latent counts.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..blur import OverlapLossParams, overlap_loss
from ..errors import ShapeMismatchError, TrainingDivergedError

logger = logging.getLogger(__name__)

HIDDEN_SIZES: tuple[int, ...] = (256, 256)
LOGVAR_CLIP = 10.0

Params = dict[str, np.ndarray]


@dataclass(frozen=True)
class LatentDistribution:
    """Diagonal Gaussian posterior(s); arrays of shape (Z,) or (B, Z)"""

    mu: np.ndarray
    logvar: np.ndarray

    def __post_init__(self) -> None:
        if np.shape(self.mu) != np.shape(self.logvar):
            raise ShapeMismatchError(
                f"mu and logvar differ in shape: {np.shape(self.mu)} vs {np.shape(self.logvar)}"
            )

    @property
    def latents(self) -> int:
        return int(np.shape(self.mu)[-1])

    @property
    def var(self) -> np.ndarray:
        return np.exp(self.logvar)

    @property
    def sigma(self) -> np.ndarray:
        return np.exp(0.5 * self.logvar)


@dataclass
class MlpCache:
    """Per-layer inputs and pre-activations of one forward pass"""

    inputs: list[np.ndarray] = field(default_factory=list)
    pre: list[np.ndarray] = field(default_factory=list)
    raw_logvar: np.ndarray | None = None


@dataclass(frozen=True)
class LossBreakdown:
    recon: float
    kl: float
    total: float
    shared: float | None = None


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _check_finite(name: str, value: np.ndarray) -> None:
    if not np.all(np.isfinite(value)):
        raise TrainingDivergedError(f"Non-finite values in {name}")


class MlpVae:
    """Encoder/decoder MLP pair with named parameters ``encoder.{i}.weight`` etc."""

    def __init__(
        self,
        input_dim: int,
        latents: int,
        hidden: tuple[int, ...] = HIDDEN_SIZES,
        rng: np.random.Generator | None = None,
    ) -> None:
        if input_dim < 1 or latents < 1:
            raise ValueError(f"input_dim and latents must be >= 1, got {input_dim}, {latents}")
        self.input_dim = int(input_dim)
        self.latents = int(latents)
        self.hidden = tuple(int(h) for h in hidden)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.params: Params = {}
        for prefix, sizes in self.layer_sizes().items():
            for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:], strict=True)):
                self.params[f"{prefix}.{i}.weight"] = _glorot(rng, fan_in, fan_out)
                self.params[f"{prefix}.{i}.bias"] = np.zeros(fan_out)

    def layer_sizes(self) -> dict[str, tuple[int, ...]]:
        return {
            "encoder": (self.input_dim, *self.hidden, 2 * self.latents),
            "decoder": (self.latents, *reversed(self.hidden), self.input_dim),
        }

    def num_layers(self, prefix: str) -> int:
        return len(self.layer_sizes()[prefix]) - 1

    def zero_grads(self) -> Params:
        return {name: np.zeros_like(p) for name, p in self.params.items()}

    # Forward / backward through one MLP

    def _forward(self, prefix: str, x: np.ndarray) -> tuple[np.ndarray, MlpCache]:
        cache = MlpCache()
        h = x
        n = self.num_layers(prefix)
        for i in range(n):
            cache.inputs.append(h)
            a = h @ self.params[f"{prefix}.{i}.weight"] + self.params[f"{prefix}.{i}.bias"]
            cache.pre.append(a)
            h = np.maximum(a, 0.0) if i < n - 1 else a
        _check_finite(f"{prefix} output", h)
        return h, cache

    def _backward(self, prefix: str, cache: MlpCache, grad_out: np.ndarray, grads: Params) -> np.ndarray:
        g = grad_out
        for i in reversed(range(self.num_layers(prefix))):
            if i < self.num_layers(prefix) - 1:
                g = g * (cache.pre[i] > 0)
            grads[f"{prefix}.{i}.weight"] += cache.inputs[i].T @ g
            grads[f"{prefix}.{i}.bias"] += g.sum(axis=0)
            g = g @ self.params[f"{prefix}.{i}.weight"].T
        return g

    def _as_batch(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        x = x.reshape(x.shape[0], -1) if x.ndim > 1 else x.reshape(1, -1)
        if x.shape[1] != self.input_dim:
            raise ShapeMismatchError(f"Input has {x.shape[1]} features, model expects {self.input_dim}")
        return x

    def encode_forward(self, x: np.ndarray) -> tuple[LatentDistribution, MlpCache]:
        out, cache = self._forward("encoder", self._as_batch(x))
        raw = out[:, self.latents :]
        cache.raw_logvar = raw
        return LatentDistribution(out[:, : self.latents], np.clip(raw, -LOGVAR_CLIP, LOGVAR_CLIP)), cache

    def encoder_backward(self, cache: MlpCache, dmu: np.ndarray, dlogvar: np.ndarray, grads: Params) -> None:
        assert cache.raw_logvar is not None
        inside = np.abs(cache.raw_logvar) < LOGVAR_CLIP
        self._backward("encoder", cache, np.concatenate([dmu, dlogvar * inside], axis=1), grads)

    def decode_forward(self, z: np.ndarray) -> tuple[np.ndarray, MlpCache]:
        return self._forward("decoder", np.atleast_2d(np.asarray(z, dtype=np.float64)))

    def decoder_backward(self, cache: MlpCache, dr: np.ndarray, grads: Params) -> np.ndarray:
        return self._backward("decoder", cache, dr, grads)

    def encode(self, x: np.ndarray) -> LatentDistribution:
        """Posterior parameters for a batch of flattened observations"""
        return self.encode_forward(x)[0]

    def decode(self, z: np.ndarray) -> np.ndarray:
        return self.decode_forward(z)[0]


def reparameterize(dist: LatentDistribution, eps: np.ndarray) -> np.ndarray:
    """z = mu + exp(logvar / 2) * eps"""
    return np.asarray(dist.mu) + dist.sigma * np.asarray(eps)


def recon_loss(x: np.ndarray, r: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if x.shape != r.shape:
        raise ShapeMismatchError(f"recon_loss shapes differ: {x.shape} vs {r.shape}")
    return float(np.mean((x - r) ** 2))


def kl_loss(dist: LatentDistribution) -> float:
    """KL(q || N(0, I)) averaged over latent units (and batch rows)"""
    mu = np.asarray(dist.mu, dtype=np.float64)
    lv = np.asarray(dist.logvar, dtype=np.float64)
    return float(np.mean(0.5 * (np.exp(lv) + mu**2 - 1.0 - lv)))


def latent_objective(
    model: MlpVae,
    x: np.ndarray,
    dist: LatentDistribution,
    eps: np.ndarray,
    beta: float,
    grads: Params,
    overlap: OverlapLossParams | None = None,
    image_shape: tuple[int, int, int] | None = None,
) -> tuple[LossBreakdown, np.ndarray, np.ndarray]:
    """
    Sample, decode and score a batch given its posterior parameters.

    Decoder gradients are added to ``grads``; the gradients with respect to
    ``dist.mu`` and ``dist.logvar`` are returned.
    """
    mu, lv = dist.mu, dist.logvar
    batch, latents = mu.shape
    z = reparameterize(dist, eps)
    r, dec_cache = model.decode_forward(z)

    if overlap is None:
        recon = recon_loss(x, r)
        dr = 2.0 * (r - x) / r.size
    else:
        if image_shape is None:
            raise ValueError("The blur-augmented loss needs the observation shape")
        recon, grad = overlap_loss(x.reshape(batch, *image_shape), r.reshape(batch, *image_shape), overlap)
        dr = grad.reshape(batch, -1)
    kl = kl_loss(dist)
    total = recon + beta * kl
    if not np.isfinite(total):
        raise TrainingDivergedError(f"Non-finite loss (recon={recon}, kl={kl})")

    n_lat = batch * latents
    dz = model.decoder_backward(dec_cache, dr, grads)
    dmu = beta * mu / n_lat + dz
    dlv = beta * 0.5 * (np.exp(lv) - 1.0) / n_lat + dz * eps * 0.5 * np.exp(0.5 * lv)
    return LossBreakdown(recon=recon, kl=kl, total=total), dmu, dlv


def beta_vae_loss(
    x: np.ndarray,
    model: MlpVae,
    eps: np.ndarray,
    beta: float,
    overlap: OverlapLossParams | None = None,
    image_shape: tuple[int, int, int] | None = None,
) -> tuple[LossBreakdown, Params]:
    """
    Beta-VAE loss of a batch and its gradient for every parameter.

    Args:
        x: (B, D) standardised, flattened observations
        model: The VAE
        eps: (B, Z) standard normal noise for the reparameterisation
        beta: Weight of the KL term
        overlap: Use the blur-augmented reconstruction loss when given
        image_shape: (C, H, W) of an observation, needed for the blur

    Returns:
        Loss breakdown and a dict of gradients keyed like ``model.params``
    """
    x = model._as_batch(x)
    grads = model.zero_grads()
    dist, enc_cache = model.encode_forward(x)
    eps = np.asarray(eps, dtype=np.float64).reshape(dist.mu.shape)
    loss, dmu, dlv = latent_objective(model, x, dist, eps, beta, grads, overlap, image_shape)
    model.encoder_backward(enc_cache, dmu, dlv, grads)
    return loss, grads
