"""
Distance-structure tools: dataset summaries, factor importance, the
constant-overlap check and single traversal matrices.

Errors come back as tool results through the ``@tool`` wrapper.
"""

import asyncio
import logging
from typing import Any

import numpy as np

from ..blur import DEFAULT_ALPHA, DEFAULT_RADIUS
from ..data.ground_truth import GroundTruthDataset
from ..data.registry import DatasetSpec, build_dataset
from ..data.transforms import channel_stats
from ..distances import DistanceKind, constant_overlap_check, factor_importance, traversal_distance_matrix
from .decorators import tool

logger = logging.getLogger(__name__)

SUMMARY_STATS_LIMIT = 20_000
SUMMARY_STATS_SAMPLES = 10_000


def _dataset(dataset: str, spacing: int, manifest: str | None = None) -> GroundTruthDataset:
    return build_dataset(DatasetSpec(name=dataset, spacing=spacing, manifest=manifest))


def _kind(kind: str, radius: int, alpha: float) -> DistanceKind:
    if kind == "blur-mse":
        return DistanceKind.blur_mse(radius=radius, alpha=alpha)
    return DistanceKind(kind)


@tool(
    description="Factor sizes, factor names, observation shape and channel statistics of a dataset",
    examples=[
        {
            "input": {"dataset": "xysquares", "spacing": 8},
            "output": {
                "name": "xysquares",
                "factor_sizes": [8, 8, 8, 8, 8, 8],
                "channel_mean": [0.015625, 0.015625, 0.015625],
            },
        }
    ],
)
def dataset_summary(
    dataset: str = "xysquares", spacing: int = 8, manifest: str | None = None
) -> dict[str, Any]:
    """Describe a ground-truth dataset"""
    ds = _dataset(dataset, spacing, manifest)
    exhaustive = ds.space.total <= SUMMARY_STATS_LIMIT or ds.analytic_stats() is not None
    stats = channel_stats(
        ds,
        sample_count=None if exhaustive else SUMMARY_STATS_SAMPLES,
        rng=np.random.default_rng(0),
        exhaustive=exhaustive,
        prefer_known=True,
    )
    return {
        "name": ds.name,
        "factor_sizes": list(ds.space.sizes),
        "factor_names": list(ds.space.names),
        "total": ds.space.total,
        "obs_shape": list(ds.obs_shape),
        "channel_mean": list(stats.mean),
        "channel_std": list(stats.std),
    }


@tool(
    description=(
        "Mean and std of the visual distance between distinct pairs along each factor, "
        "largest first, plus the random-pair baseline"
    ),
)
async def factor_importance_table(
    dataset: str = "xysquares",
    spacing: int = 8,
    pairs_per_factor: int = 50_000,
    seed: int = 0,
    kind: str = "mse",
    radius: int = DEFAULT_RADIUS,
    alpha: float = DEFAULT_ALPHA,
) -> dict[str, Any]:
    """Factor importance report as table rows"""
    ds = _dataset(dataset, spacing)
    logger.debug(f"Factor importance on {ds.name}: {pairs_per_factor} pairs per factor, kind={kind}")
    report = await asyncio.to_thread(
        factor_importance, ds, _kind(kind, radius, alpha), pairs_per_factor, np.random.default_rng(seed)
    )
    return {
        "dataset": report.dataset,
        "kind": report.kind,
        "ordering": report.ordering(),
        "skipped": report.skipped,
        "rows": report.to_frame().to_dict(orient="records"),
    }


@tool(description="Check whether every factor traversal keeps a constant visual distance between distinct members")
def check_constant_overlap(
    dataset: str = "xysquares",
    spacing: int = 8,
    samples: int = 2000,
    tolerance: float = 1e-9,
    seed: int = 0,
    kind: str = "mse",
) -> dict[str, Any]:
    ds = _dataset(dataset, spacing)
    check = constant_overlap_check(
        ds, _kind(kind, DEFAULT_RADIUS, DEFAULT_ALPHA), tolerance, samples, np.random.default_rng(seed)
    )
    return {
        "dataset": ds.name,
        "passed": check.passed,
        "max_deviation": check.max_deviation,
        "constants": check.constants,
        "samples": check.samples,
    }


@tool(description="Pairwise distance matrix along one factor traversal from an anchor position")
def traversal_distances(
    dataset: str = "xysquares",
    spacing: int = 8,
    factor: int = 0,
    kind: str = "mse",
    anchor: list[int] | None = None,
    radius: int = DEFAULT_RADIUS,
    alpha: float = DEFAULT_ALPHA,
) -> dict[str, Any]:
    """
    Args:
        factor: Index of the factor to traverse
        kind: gt-l1, mse, bce or blur-mse
        anchor: Factor position to traverse from, all zeros by default
    """
    ds = _dataset(dataset, spacing)
    anchor = anchor if anchor is not None else [0] * ds.space.num_factors
    matrix = traversal_distance_matrix(ds, anchor, factor, _kind(kind, radius, alpha))
    return {
        "dataset": ds.name,
        "factor": ds.space.names[factor],
        "kind": kind,
        "anchor": list(anchor),
        "matrix": matrix.values.tolist(),
    }
