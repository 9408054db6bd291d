"""
Tests for channel statistics, standardisation and resizing
"""

import numpy as np
import pytest

from overlap_lab.data import (
    ArrayDataset,
    ChannelStats,
    XYSquaresDataset,
    channel_stats,
    known_channel_stats,
    resize_bilinear,
    standardise,
    unstandardise,
)
from overlap_lab.errors import DegenerateStatsError, EmptyDatasetError, ShapeMismatchError


def test_standardise_round_trip():
    """unstandardise inverts standardise"""
    stats = ChannelStats(mean=(0.2, 0.5), std=(0.1, 0.3))
    obs = np.random.default_rng(0).random((5, 2, 4, 4))
    z = standardise(obs, stats)
    assert z[:, 0].mean() == pytest.approx((obs[:, 0].mean() - 0.2) / 0.1)
    assert np.allclose(unstandardise(z, stats), obs, atol=1e-12)


def test_standardise_checks_channels():
    stats = ChannelStats(mean=(0.0,), std=(1.0,))
    with pytest.raises(ShapeMismatchError):
        standardise(np.zeros((3, 4, 4)), stats)


def test_channel_stats_validation():
    """Mismatched lengths and zero std are rejected"""
    with pytest.raises(ShapeMismatchError):
        ChannelStats(mean=(0.0, 0.0), std=(1.0,))
    with pytest.raises(DegenerateStatsError):
        ChannelStats(mean=(0.0,), std=(0.0,))


def test_sampled_stats_match_analytic(reduced_squares):
    """Every XYSquares observation has the same moments, so sampling is exact"""
    array = reduced_squares.observations_at_indices(np.arange(reduced_squares.space.total))
    plain = ArrayDataset("plain", reduced_squares.space, array)
    sampled = channel_stats(plain, sample_count=300, rng=np.random.default_rng(0))
    expected = reduced_squares.analytic_stats()
    assert sampled.mean == pytest.approx(expected.mean, abs=1e-12)
    assert sampled.std == pytest.approx(expected.std, abs=1e-12)
    assert sampled.channels == 2


def test_channel_stats_needs_samples_or_exhaustive(reduced_squares):
    with pytest.raises(EmptyDatasetError):
        channel_stats(reduced_squares)
    with pytest.raises(ValueError):
        channel_stats(reduced_squares, sample_count=10)


def test_prefer_known_stats():
    """Published constants are used for known dataset names"""
    ds = XYSquaresDataset()
    stats = channel_stats(ds, prefer_known=True)
    assert stats == known_channel_stats("xysquares")
    assert known_channel_stats("dsprites").mean[0] == pytest.approx(0.042494423521890)
    assert known_channel_stats("unknown") is None


def test_resize_block_average():
    """Halving an image averages 2x2 blocks (align-corners-false)"""
    obs = np.random.default_rng(3).random((1, 4, 4))
    out = resize_bilinear(obs, 2, 2)
    expected = obs.reshape(1, 2, 2, 2, 2).mean(axis=(2, 4))
    assert out.shape == (1, 2, 2)
    assert np.allclose(out, expected, atol=1e-9)


def test_resize_constant_image():
    obs = np.full((3, 64, 64), 0.25)
    out = resize_bilinear(obs, 24, 24)
    assert out.shape == (3, 24, 24)
    assert np.allclose(out, 0.25)


def test_resize_same_size_copies():
    obs = np.ones((1, 5, 5))
    out = resize_bilinear(obs, 5, 5)
    assert out is not obs
    assert np.array_equal(out, obs)


def test_resize_rejects_empty_output():
    with pytest.raises(ValueError):
        resize_bilinear(np.ones((1, 4, 4)), 0, 2)
