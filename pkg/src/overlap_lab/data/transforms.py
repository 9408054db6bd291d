"""
Channel statistics, standardisation and bilinear resizing
"""

import logging

import numpy as np
from scipy import ndimage

from ..errors import DegenerateStatsError, EmptyDatasetError, ShapeMismatchError
from .ground_truth import ChannelStats, GroundTruthDataset

logger = logging.getLogger(__name__)

STATS_BATCH = 512


def _accumulate(batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel sums of observation means and unbiased observation stds"""
    flat = batch.reshape(batch.shape[0], batch.shape[1], -1).astype(np.float64)
    ddof = 1 if flat.shape[2] > 1 else 0
    return flat.mean(axis=2).sum(axis=0), flat.std(axis=2, ddof=ddof).sum(axis=0)


def channel_stats(
    dataset: GroundTruthDataset,
    sample_count: int | None = None,
    rng: np.random.Generator | None = None,
    exhaustive: bool = False,
    prefer_known: bool = False,
) -> ChannelStats:
    """
    Per-channel mean and standard deviation of raw pixel values.

    The mean is the mean over all pixels. The standard deviation is the mean
    over observations of the unbiased per-observation channel std, which is the
    convention the published normalisation constants follow (for XYSquares it
    gives exactly sqrt(1/65)).

    Args:
        dataset: Dataset to measure
        sample_count: Number of uniformly sampled observations
        rng: Generator used when sampling
        exhaustive: Visit every observation (analytic shortcut when available)
        prefer_known: Return published constants for known dataset names

    Raises:
        EmptyDatasetError: If nothing would be measured
        DegenerateStatsError: If any channel has zero spread
    """
    if prefer_known:
        from .registry import known_channel_stats

        known = known_channel_stats(dataset.name)
        if known is not None and known.channels == dataset.channels:
            logger.debug(f"Using published channel stats for '{dataset.name}'")
            return known

    if exhaustive:
        analytic = dataset.analytic_stats()
        if analytic is not None:
            return analytic
        count = dataset.space.total
    else:
        if sample_count is None or sample_count < 1:
            raise EmptyDatasetError("channel_stats needs sample_count >= 1 or exhaustive")
        if rng is None:
            raise ValueError("channel_stats needs an rng when sampling")
        count = sample_count
    if count < 1:
        raise EmptyDatasetError(f"Dataset '{dataset.name}' is empty")

    mean_sum = np.zeros(dataset.channels)
    std_sum = np.zeros(dataset.channels)
    for start in range(0, count, STATS_BATCH):
        stop = min(start + STATS_BATCH, count)
        if exhaustive:
            batch = dataset.observations_at_indices(np.arange(start, stop))
        else:
            assert rng is not None
            batch = dataset.observations(dataset.space.sample_positions(rng, stop - start))
        m, s = _accumulate(batch)
        mean_sum += m
        std_sum += s

    mean = mean_sum / count
    std = std_sum / count
    if np.any(std <= 0):
        raise DegenerateStatsError(
            f"Dataset '{dataset.name}' has a constant channel (std={std.tolist()})"
        )
    logger.info(
        f"Channel stats for '{dataset.name}' over {count} observations: "
        f"mean={mean.tolist()} std={std.tolist()}"
    )
    return ChannelStats(mean=tuple(mean.tolist()), std=tuple(std.tolist()))


def _check_channels(obs: np.ndarray, stats: ChannelStats) -> None:
    if obs.ndim < 3 or obs.shape[-3] != stats.channels:
        raise ShapeMismatchError(
            f"Observation shape {obs.shape} does not match {stats.channels} channels"
        )


def standardise(obs: np.ndarray, stats: ChannelStats) -> np.ndarray:
    """(x - mean[c]) / std[c] for a single observation or a batch"""
    _check_channels(obs, stats)
    mean, std = stats.as_arrays()
    return (np.asarray(obs, dtype=np.float64) - mean) / std


def unstandardise(obs: np.ndarray, stats: ChannelStats) -> np.ndarray:
    _check_channels(obs, stats)
    mean, std = stats.as_arrays()
    return np.asarray(obs, dtype=np.float64) * std + mean


def resize_bilinear(obs: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """
    Bilinear resize of the last two axes using the align-corners-false
    convention (pixel centres at half-integer coordinates, edges clamped).
    """
    if out_h < 1 or out_w < 1:
        raise ValueError(f"Output size must be positive, got {out_h}x{out_w}")
    obs = np.asarray(obs)
    in_h, in_w = obs.shape[-2:]
    if (in_h, in_w) == (out_h, out_w):
        return obs.copy()
    zoom = (1.0,) * (obs.ndim - 2) + (out_h / in_h, out_w / in_w)
    out = ndimage.zoom(
        obs.astype(np.float64), zoom, order=1, mode="nearest", grid_mode=True
    )
    if out.shape[-2:] != (out_h, out_w):
        raise ShapeMismatchError(
            f"Resize produced {out.shape[-2:]} instead of {(out_h, out_w)}"
        )
    return out
