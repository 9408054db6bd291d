"""
Training loops for Beta-VAE and Ada-GVAE

Model inputs are standardised, flattened observations. Datasets larger than
32x32 are bilinearly downscaled to 24x24 first; channel statistics are taken
after the resize.
"""

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from ..blur import DEFAULT_ALPHA, DEFAULT_RADIUS, OverlapLossParams, Padding
from ..data.ground_truth import ChannelStats, GroundTruthDataset, ResizedDataset
from ..data.transforms import channel_stats, standardise
from ..errors import TrainingDivergedError
from .adagvae import adagvae_loss, sample_pairs
from .optim import Adam
from .vae import LossBreakdown, MlpVae, beta_vae_loss

logger = logging.getLogger(__name__)

MAX_NATIVE_SIZE = 32
RESIZED_SIZE = 24
STATS_EXHAUSTIVE_LIMIT = 20_000
STATS_SAMPLES = 10_000
CACHE_BYTES = 256 * 1024 * 1024

Framework = Literal["beta-vae", "ada-gvae"]


class TrainConfig(BaseModel):
    """Hyper-parameters of one training run"""

    model_config = ConfigDict(frozen=True)

    framework: Framework = "beta-vae"
    beta: float = Field(default=0.001, gt=0)
    latents: int = Field(default=9, ge=1)
    lr: float = Field(default=1e-3, gt=0)
    batch: int = Field(default=64, ge=1)
    steps: int = Field(default=5000, ge=1)
    seed: int = Field(default=0, ge=0)
    loss: Literal["mse", "blur-mse"] = "mse"
    radius: int = Field(default=DEFAULT_RADIUS, ge=1)
    alpha: float = Field(default=DEFAULT_ALPHA, gt=0)
    padding: Padding = "zero"
    log_every: int = Field(default=100, ge=1)

    def overlap_params(self) -> OverlapLossParams | None:
        if self.loss == "mse":
            return None
        return OverlapLossParams(alpha=self.alpha, radius=self.radius, padding=self.padding)


@dataclass(frozen=True)
class LossRecord:
    step: int
    recon: float
    kl: float
    total: float
    shared: float | None = None


class TrainingData:
    """Standardised, flattened model inputs drawn from a ground-truth dataset"""

    def __init__(
        self,
        dataset: GroundTruthDataset,
        stats: ChannelStats | None = None,
        rng: np.random.Generator | None = None,
    ) -> None:
        if dataset.height > MAX_NATIVE_SIZE or dataset.width > MAX_NATIVE_SIZE:
            logger.info(
                f"Resizing {dataset.name} from {dataset.height}x{dataset.width} "
                f"to {RESIZED_SIZE}x{RESIZED_SIZE} for training"
            )
            dataset = ResizedDataset(dataset, RESIZED_SIZE, RESIZED_SIZE)
        self.dataset = dataset
        self.space = dataset.space
        if stats is None:
            if dataset.space.total <= STATS_EXHAUSTIVE_LIMIT or dataset.analytic_stats() is not None:
                stats = channel_stats(dataset, exhaustive=True)
            else:
                stats = channel_stats(
                    dataset, sample_count=STATS_SAMPLES, rng=rng or np.random.default_rng(0)
                )
        self.stats = stats
        self.image_shape = dataset.obs_shape
        self.input_dim = int(np.prod(self.image_shape))

        self._cache: np.ndarray | None = None
        if dataset.space.total * self.input_dim * 8 <= CACHE_BYTES:
            self._cache = self._prepare(dataset.observations_at_indices(np.arange(dataset.space.total)))
            logger.debug(f"Cached {dataset.space.total} training observations in memory")

    def _prepare(self, batch: np.ndarray) -> np.ndarray:
        return standardise(batch, self.stats).reshape(batch.shape[0], -1)

    def batch(self, positions: np.ndarray) -> np.ndarray:
        if self._cache is not None:
            return self._cache[self.space.positions_to_indices(positions)]
        return self._prepare(self.dataset.observations(positions))


@dataclass
class TrainResult:
    model: MlpVae
    config: TrainConfig
    stats: ChannelStats
    image_shape: tuple[int, int, int]
    dataset: str
    trace: list[LossRecord] = field(default_factory=list)
    data: TrainingData | None = field(default=None, repr=False)

    @property
    def final(self) -> LossRecord:
        return self.trace[-1]

    def trace_frame(self) -> pd.DataFrame:
        columns = ["step", "recon", "kl", "total"]
        if self.config.framework == "ada-gvae":
            columns.append("shared")
        return pd.DataFrame(
            [{c: getattr(r, c) for c in columns} for r in self.trace], columns=columns
        )


class _Window:
    def __init__(self) -> None:
        self.reset()

    def reset(self) -> None:
        self.count = 0
        self.sums = np.zeros(4)

    def add(self, loss: LossBreakdown) -> None:
        self.count += 1
        self.sums += (loss.recon, loss.kl, loss.total, loss.shared or 0.0)

    def record(self, step: int, with_shared: bool) -> LossRecord:
        recon, kl, total, shared = (self.sums / self.count).tolist()
        return LossRecord(step, recon, kl, total, shared if with_shared else None)


def _train(dataset: GroundTruthDataset, config: TrainConfig, framework: Framework) -> TrainResult:
    config = config.model_copy(update={"framework": framework})
    data_seq, init_seq, noise_seq, stats_seq = np.random.SeedSequence(config.seed).spawn(4)
    data = TrainingData(dataset, rng=np.random.default_rng(stats_seq))
    data_rng = np.random.default_rng(data_seq)
    noise_rng = np.random.default_rng(noise_seq)
    model = MlpVae(data.input_dim, config.latents, rng=np.random.default_rng(init_seq))
    optimizer = Adam(lr=config.lr)
    overlap = config.overlap_params()
    result = TrainResult(model, config, data.stats, data.image_shape, dataset.name, data=data)
    with_shared = framework == "ada-gvae"

    logger.info(
        f"Training {framework} on {dataset.name}: beta={config.beta} Z={config.latents} "
        f"loss={config.loss} steps={config.steps} batch={config.batch} seed={config.seed}"
    )
    window = _Window()
    for step in range(1, config.steps + 1):
        try:
            if framework == "ada-gvae":
                pos_a, pos_b, _ = sample_pairs(data.space, data_rng, config.batch)
                eps = noise_rng.standard_normal((2 * config.batch, config.latents))
                loss, grads = adagvae_loss(
                    data.batch(pos_a), data.batch(pos_b), model, eps, config.beta, overlap, data.image_shape
                )
            else:
                pos = data.space.sample_positions(data_rng, config.batch)
                eps = noise_rng.standard_normal((config.batch, config.latents))
                loss, grads = beta_vae_loss(
                    data.batch(pos), model, eps, config.beta, overlap, data.image_shape
                )
        except TrainingDivergedError as e:
            logger.error(f"Training diverged at step {step}: {e}")
            raise TrainingDivergedError(f"Diverged at step {step}: {e}", step=step) from e
        optimizer.step(model.params, grads)
        window.add(loss)
        if step % config.log_every == 0 or step == config.steps:
            record = window.record(step, with_shared)
            result.trace.append(record)
            window.reset()
            logger.info(
                f"step {step}/{config.steps} recon={record.recon:.6f} kl={record.kl:.6f} "
                f"total={record.total:.6f}"
                + (f" shared={record.shared:.2f}" if record.shared is not None else "")
            )
    return result


def train_beta_vae(dataset: GroundTruthDataset, config: TrainConfig) -> TrainResult:
    return _train(dataset, config, "beta-vae")


def train_adagvae(dataset: GroundTruthDataset, config: TrainConfig) -> TrainResult:
    return _train(dataset, config, "ada-gvae")


def train_model(dataset: GroundTruthDataset, config: TrainConfig) -> TrainResult:
    """Train with the framework named in ``config``"""
    if config.framework == "ada-gvae":
        return train_adagvae(dataset, config)
    return train_beta_vae(dataset, config)
