"""
Tests for the training loops and the training-data pipeline
"""

from unittest.mock import patch

import numpy as np
import pytest

from overlap_lab.data import ArrayDataset
from overlap_lab.errors import TrainingDivergedError
from overlap_lab.factor_space import FactorSpace
from overlap_lab.models import (
    TrainConfig,
    TrainingData,
    estimate_shared_mask,
    sample_pairs,
    symmetric_kl,
    train_adagvae,
    train_beta_vae,
    train_model,
)


def _config(**overrides) -> TrainConfig:
    values = {"steps": 20, "batch": 8, "latents": 2, "log_every": 10}
    values.update(overrides)
    return TrainConfig(**values)


def test_training_data_is_standardised(dots):
    data = TrainingData(dots)
    assert data.image_shape == (1, 8, 8)
    assert data.input_dim == 64
    batch = data.batch(dots.space.all_positions())
    assert batch.shape == (64, 64)
    assert batch.mean() == pytest.approx(0.0, abs=1e-6)


def test_training_data_resizes_large_images():
    space = FactorSpace((2, 2))
    array = np.random.default_rng(0).random((4, 1, 40, 40)).astype(np.float32)
    data = TrainingData(ArrayDataset("big", space, array))
    assert data.image_shape == (1, 24, 24)
    assert data.batch(np.array([[0, 1], [1, 1]])).shape == (2, 576)


def test_beta_vae_smoke(dots):
    result = train_beta_vae(dots, _config())
    assert result.config.framework == "beta-vae"
    assert [r.step for r in result.trace] == [10, 20]
    assert np.isfinite(result.final.total)
    assert result.final.shared is None
    assert list(result.trace_frame().columns) == ["step", "recon", "kl", "total"]
    assert result.dataset == "dots"


def test_adagvae_smoke(reduced_squares):
    result = train_adagvae(reduced_squares, _config(steps=15, log_every=5))
    assert result.config.framework == "ada-gvae"
    assert len(result.trace) == 3
    assert all(1.0 <= r.shared <= 2.0 for r in result.trace)
    assert "shared" in result.trace_frame().columns


def test_blur_loss_training(dots):
    result = train_model(dots, _config(loss="blur-mse", radius=2, alpha=25.0))
    assert np.isfinite(result.final.total)


def test_training_is_deterministic(dots):
    """Same seed, same parameters; different seed, different parameters"""
    first = train_model(dots, _config(framework="ada-gvae"))
    second = train_model(dots, _config(framework="ada-gvae"))
    other = train_model(dots, _config(framework="ada-gvae", seed=1))
    for name, p in first.model.params.items():
        assert np.array_equal(p, second.model.params[name])
    assert not np.array_equal(first.model.params["encoder.0.weight"], other.model.params["encoder.0.weight"])
    assert first.trace == second.trace


def _blocks_dataset() -> ArrayDataset:
    """16 observations, a 2x2 block on a 4x4 grid of an 8x8 image"""
    space = FactorSpace((4, 4), names=("row", "col"))
    array = np.zeros((16, 1, 8, 8), dtype=np.float32)
    for idx in range(16):
        i, j = space.index_to_pos(idx)
        array[idx, 0, 2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = 1.0
    return ArrayDataset("blocks", space, array)


def test_recon_loss_falls_over_200_steps():
    result = train_beta_vae(_blocks_dataset(), _config(steps=200, batch=16, latents=4, log_every=20))
    assert result.trace[-1].recon < result.trace[0].recon


@pytest.mark.slow
def test_recon_loss_halves_on_dots(dots):
    result = train_beta_vae(dots, _config(steps=2000, batch=32, latents=4, log_every=10))
    assert result.trace[-1].recon <= 0.5 * result.trace[0].recon


@pytest.mark.slow
def test_large_beta_trades_reconstruction_for_kl(dots):
    """beta = 1 reconstructs worse and keeps the posterior closer to the prior"""
    low = train_beta_vae(dots, _config(steps=1000, batch=32, latents=4, log_every=100, beta=0.001))
    high = train_beta_vae(dots, _config(steps=1000, batch=32, latents=4, log_every=100, beta=1.0))
    assert high.final.recon > low.final.recon
    assert high.final.kl < low.final.kl


@pytest.mark.slow
def test_single_factor_pairs_share_most_units(dots):
    """After training, pairs differing in one factor leave at least Z - 2 units shared"""
    latents = 6
    result = train_adagvae(dots, _config(steps=2000, batch=32, latents=latents, log_every=500))
    data = result.data
    pos_a, pos_b, ks = sample_pairs(data.space, np.random.default_rng(9), 2000)
    single = ks == 1
    p = result.model.encode(data.batch(pos_a[single]))
    q = result.model.encode(data.batch(pos_b[single]))
    mask, _ = estimate_shared_mask(symmetric_kl(p, q))
    assert mask.sum(axis=1).mean() >= latents - 2


def test_divergence_reports_step(dots):
    with patch("overlap_lab.models.train.beta_vae_loss", side_effect=TrainingDivergedError("nan")):
        with pytest.raises(TrainingDivergedError) as exc_info:
            train_beta_vae(dots, _config())
    assert exc_info.value.step == 1


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(beta=0)
    with pytest.raises(ValueError):
        TrainConfig(loss="l1")
    assert TrainConfig().overlap_params() is None
    params = TrainConfig(loss="blur-mse", radius=3, alpha=49).overlap_params()
    assert params.radius == 3 and params.alpha == 49
