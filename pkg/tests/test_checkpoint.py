"""
Tests for checkpoint save/load
"""

import numpy as np
import pytest

from overlap_lab.errors import ConfigError
from overlap_lab.models import TrainConfig, load_checkpoint, save_checkpoint, train_model


@pytest.fixture
def trained(dots):
    return train_model(dots, TrainConfig(steps=5, batch=4, latents=3, log_every=5))


def test_round_trip(trained, tmp_path):
    """Parameters come back bit-exact with the config and normalisation"""
    path = tmp_path / "model.npz"
    save_checkpoint(path, trained)
    loaded = load_checkpoint(path)

    assert loaded.config == trained.config
    assert loaded.stats == trained.stats
    assert loaded.image_shape == (1, 8, 8)
    assert loaded.dataset == "dots"
    assert loaded.model.latents == 3
    for name, p in trained.model.params.items():
        assert np.array_equal(loaded.model.params[name], p)
    x = np.random.default_rng(0).standard_normal((2, 64))
    assert np.array_equal(loaded.model.encode(x).mu, trained.model.encode(x).mu)


def test_missing_checkpoint(tmp_path):
    with pytest.raises(ConfigError):
        load_checkpoint(tmp_path / "nope.npz")


def test_unknown_version(trained, tmp_path):
    path = tmp_path / "model.npz"
    save_checkpoint(path, trained)
    with np.load(path) as archive:
        arrays = {k: archive[k] for k in archive.files}
    arrays["format_version"] = np.asarray(99)
    np.savez(path, **arrays)
    with pytest.raises(ConfigError, match="version 99"):
        load_checkpoint(path)


def test_missing_parameter(trained, tmp_path):
    path = tmp_path / "model.npz"
    save_checkpoint(path, trained)
    with np.load(path) as archive:
        arrays = {k: archive[k] for k in archive.files if k != "param/decoder.0.bias"}
    np.savez(path, **arrays)
    with pytest.raises(ConfigError, match="decoder.0.bias"):
        load_checkpoint(path)
