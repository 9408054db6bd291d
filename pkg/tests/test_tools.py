"""
Tests for the distance-analysis MCP tools
"""

import pytest

from overlap_lab.tools.analysis_tools import (
    check_constant_overlap,
    dataset_summary,
    factor_importance_table,
    traversal_distances,
)


def test_dataset_summary_dots():
    summary = dataset_summary(dataset="dots")
    assert summary["name"] == "dots"
    assert summary["factor_sizes"] == [8, 8]
    assert summary["factor_names"] == ["dot_a_x", "dot_b_y"]
    assert summary["total"] == 64
    assert summary["obs_shape"] == [1, 8, 8]
    assert summary["channel_mean"][0] == pytest.approx(127 / 4096)
    assert summary["channel_std"][0] > 0


def test_dataset_summary_uses_known_stats():
    summary = dataset_summary(dataset="xysquares", spacing=8)
    assert summary["factor_sizes"] == [8] * 6
    assert summary["channel_mean"] == pytest.approx([0.015625] * 3)


def test_dataset_summary_error():
    assert "error" in dataset_summary(dataset="teapots")
    assert "error" in dataset_summary(dataset="npy")


@pytest.mark.asyncio
async def test_factor_importance_table():
    result = await factor_importance_table(dataset="dots", pairs_per_factor=200, seed=1)
    assert result["dataset"] == "dots"
    assert result["kind"] == "mse"
    assert sorted(result["ordering"]) == ["dot_a_x", "dot_b_y"]
    assert result["rows"][-1]["factor"] == "random"
    assert {"mean", "std", "samples"} <= set(result["rows"][0])


@pytest.mark.asyncio
async def test_factor_importance_table_bad_kind():
    result = await factor_importance_table(dataset="dots", kind="l2")
    assert "Unknown distance kind" in result["error"]
    assert result["error_type"] == "InvalidParamsError"


def test_check_constant_overlap():
    """Spacing equal to the square size gives a constant per-factor distance"""
    result = check_constant_overlap(dataset="xysquares", spacing=8, samples=100)
    assert result["passed"] is True
    assert result["max_deviation"] == pytest.approx(0.0, abs=1e-9)
    assert len(result["constants"]) == 6


def test_check_constant_overlap_fails_with_overlap():
    result = check_constant_overlap(dataset="xysquares", spacing=2, samples=100)
    assert result["passed"] is False


def test_traversal_distances():
    result = traversal_distances(dataset="dots", factor=0, kind="gt-l1")
    assert result["factor"] == "dot_a_x"
    assert result["anchor"] == [0, 0]
    assert result["matrix"][0] == [float(j) for j in range(8)]


def test_traversal_distances_bad_factor():
    result = traversal_distances(dataset="dots", factor=5)
    assert result["error_type"] == "InvalidPositionError"
    assert "Factor 5" in result["error"]
