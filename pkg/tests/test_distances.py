"""
Tests for ground-truth and visual distances, traversal matrices, factor
importance, CDFs and the constant-overlap check
"""

import numpy as np
import pytest

from overlap_lab.data import ArrayDataset, XYSquaresDataset, XYSquaresParams
from overlap_lab.distances import (
    DistanceKind,
    constant_overlap_check,
    distance_cdf,
    empirical_cdf,
    factor_importance,
    gt_distance,
    mean_factor_distance_matrix,
    pair_distances,
    pairwise_matrix,
    sample_distances,
    traversal_distance_matrix,
    visual_distance,
)
from overlap_lab.errors import EmptyDatasetError, InvalidParamsError, InvalidPositionError, ShapeMismatchError
from overlap_lab.factor_space import FactorSpace

CONSTANT_MSE = 128 / 12288


def _graded_dataset() -> ArrayDataset:
    """Factor 0 changes a whole row, factor 1 a single pixel"""
    space = FactorSpace(sizes=(3, 3), names=("row", "pixel"))
    array = np.zeros((9, 1, 4, 4), dtype=np.float32)
    for idx in range(9):
        i, j = space.index_to_pos(idx)
        array[idx, 0, 0, :] = i / 2
        array[idx, 0, 1, 0] = j / 2
    return ArrayDataset("graded", space, array)


def test_gt_distance():
    assert gt_distance((0, 3, 1), (2, 3, 0)) == 3.0
    with pytest.raises(ShapeMismatchError):
        gt_distance((0, 1), (0,))


def test_distance_kinds():
    assert DistanceKind.gt_l1().is_visual is False
    assert DistanceKind.bce().is_symmetric is False
    assert DistanceKind.blur_mse().label == "blur-mse(r=31,alpha=3969,zero)"
    with pytest.raises(InvalidParamsError):
        DistanceKind("l2")
    with pytest.raises(InvalidParamsError):
        DistanceKind.blur_mse(radius=0)
    with pytest.raises(InvalidParamsError):
        DistanceKind.blur_mse(alpha=-1.0)


def test_visual_distance_mse_and_bce():
    """MSE is the mean squared difference; BCE of identical binary images is ~0"""
    a = np.zeros((1, 2, 2))
    b = np.zeros((1, 2, 2))
    b[0, 0, 0] = 1.0
    assert visual_distance(a, b, DistanceKind.mse()) == pytest.approx(0.25)
    assert visual_distance(a, a, DistanceKind.bce()) < 1e-6
    assert visual_distance(a, b, DistanceKind.bce()) > 1.0
    with pytest.raises(InvalidParamsError):
        pair_distances(a[None], b[None], DistanceKind.gt_l1())
    with pytest.raises(ShapeMismatchError):
        visual_distance(a, b[:, :1], DistanceKind.mse())


def test_pairwise_matrix_properties(reduced_squares):
    """Zero diagonal; symmetric for symmetric kinds; gt-l1 is |u - v| along a traversal"""
    positions = np.asarray(reduced_squares.space.traversal((0, 1, 2, 3), 0))
    for kind in (DistanceKind.mse(), DistanceKind.bce(), DistanceKind.blur_mse(radius=3, alpha=49.0)):
        m = pairwise_matrix(reduced_squares, positions, kind)
        assert np.allclose(np.diag(m), 0.0)
        if kind.is_symmetric:
            assert np.allclose(m, m.T)
    gt = pairwise_matrix(reduced_squares, positions, DistanceKind.gt_l1())
    u = np.arange(4)
    assert np.array_equal(gt, np.abs(u[:, None] - u[None, :]).astype(float))


def test_traversal_matrix_constant_off_diagonal(xysquares):
    """Spacing 8 gives the same MSE between all distinct traversal members"""
    m = traversal_distance_matrix(xysquares, (3, 1, 4, 1, 5, 2), 2, DistanceKind.mse())
    assert m.size == 8
    assert np.allclose(m.off_diagonal(), CONSTANT_MSE, atol=1e-12)


def test_traversal_matrix_graded_with_overlap():
    """Spacing 1 distances grow with |u - v| until squares stop overlapping"""
    ds = XYSquaresDataset(XYSquaresParams(spacing=1))
    m = traversal_distance_matrix(ds, (0,) * 6, 0, DistanceKind.mse()).values
    first_row = m[0]
    assert all(b > a for a, b in zip(first_row[:8], first_row[1:8], strict=False))


def test_mean_matrix_exhaustive(reduced_squares):
    """Small grids visit every traversal; constant overlap has zero spread"""
    result = mean_factor_distance_matrix(reduced_squares, 1, DistanceKind.mse(), anchor_samples=1000)
    assert result.samples == 64
    off = result.off_diagonal()
    assert np.allclose(off, 32 / 512, atol=1e-12)
    assert np.allclose(result.std, 0.0, atol=1e-8)
    assert np.allclose(result.standard_error(), 0.0, atol=1e-8)


def test_mean_matrix_sampled_needs_rng(reduced_squares):
    with pytest.raises(ValueError):
        mean_factor_distance_matrix(reduced_squares, 0, DistanceKind.mse(), anchor_samples=10)
    result = mean_factor_distance_matrix(
        reduced_squares, 0, DistanceKind.gt_l1(), anchor_samples=10, rng=np.random.default_rng(0)
    )
    assert result.samples == 10
    assert result.values[0, 3] == 3.0


def test_exhaustive_pairs_when_few(reduced_squares, rng):
    """Every ordered distinct traversal pair is returned once when they fit the budget"""
    d = sample_distances(reduced_squares, DistanceKind.gt_l1(), 0, 1000, rng)
    assert d.size == 256 * 3
    # mean |i - j| over distinct pairs of a size-f factor is (f + 1) / 3
    assert d.mean() == pytest.approx(5 / 3, abs=1e-12)


def test_sampled_distances_deterministic_across_workers(reduced_squares):
    """Chunked sampling gives identical results for any worker count"""
    kind = DistanceKind.mse()
    serial = sample_distances(reduced_squares, kind, None, 3000, np.random.default_rng(9), workers=1)
    threaded = sample_distances(reduced_squares, kind, None, 3000, np.random.default_rng(9), workers=4)
    assert serial.size == 3000
    assert np.array_equal(serial, threaded)


def test_random_pairs_are_distinct():
    """Random pairs never compare an observation with itself"""
    space = FactorSpace(sizes=(2, 2))
    ds = ArrayDataset("grid", space, np.arange(4, dtype=np.float32).reshape(4, 1, 1, 1))
    d = sample_distances(ds, DistanceKind.gt_l1(), None, 500, np.random.default_rng(0))
    assert d.size == 12
    assert np.all(d > 0)


def test_empty_pair_set():
    ds = ArrayDataset("one", FactorSpace(sizes=(1,)), np.zeros((1, 1, 2, 2), dtype=np.float32))
    with pytest.raises(EmptyDatasetError):
        sample_distances(ds, DistanceKind.mse(), None, 10, np.random.default_rng(0))
    with pytest.raises(InvalidParamsError):
        sample_distances(ds, DistanceKind.mse(), None, 0, np.random.default_rng(0))


def test_factor_importance_ordering():
    """Factors are sorted by mean distance, largest first"""
    report = factor_importance(_graded_dataset(), DistanceKind.mse(), 1000, np.random.default_rng(0))
    assert report.ordering() == ["row", "pixel"]
    assert report.random is not None
    frame = report.to_frame()
    assert list(frame.columns) == ["dataset", "factor", "kind", "mean", "std", "samples"]
    assert frame["factor"].tolist() == ["row", "pixel", "random"]
    assert report.entry("pixel").factor_index == 1


def test_factor_importance_skips_size_one_factor():
    space = FactorSpace(sizes=(1, 3), names=("fixed", "moving"))
    ds = ArrayDataset("skip", space, np.arange(3, dtype=np.float32).reshape(3, 1, 1, 1))
    report = factor_importance(ds, DistanceKind.mse(), 100, np.random.default_rng(0))
    assert report.skipped == ["fixed"]
    assert report.ordering() == ["moving"]


def test_xysquares_importance_small(xysquares):
    """Every factor sits at 128/12288 with zero spread"""
    report = factor_importance(xysquares, DistanceKind.mse(), 1000, np.random.default_rng(0))
    for entry in report.entries:
        assert entry.mean == pytest.approx(CONSTANT_MSE, abs=1e-12)
        assert entry.std == pytest.approx(0.0, abs=1e-12)


@pytest.mark.slow
def test_xysquares_importance_published_values(xysquares):
    """Six factors at 0.0104 +- 0.0000, random pairs at 0.0308 +- 0.001 (50 000 pairs)"""
    report = factor_importance(xysquares, DistanceKind.mse(), 50_000, np.random.default_rng(0), workers=4)
    assert len(report.entries) == 6
    for entry in report.entries:
        assert round(entry.mean, 4) == 0.0104
        assert round(entry.std, 4) == 0.0
        assert entry.samples == 50_000
    assert report.random is not None
    assert abs(report.random.mean - 0.0308) <= 0.001


def test_gt_importance_closed_form(reduced_squares):
    """Ground-truth importance of a size-f factor is (f + 1) / 3"""
    report = factor_importance(reduced_squares, DistanceKind.gt_l1(), 1000, np.random.default_rng(0))
    for entry in report.entries:
        assert entry.mean == pytest.approx(5 / 3, abs=1e-12)


def test_distance_cdf():
    """Sorted distances and proportions ending at one; a constant dataset sits at zero"""
    flat = ArrayDataset("flat", FactorSpace(sizes=(2, 2)), np.zeros((4, 1, 3, 3), dtype=np.float32))
    values = distance_cdf(flat, DistanceKind.mse(), 0, 100, np.random.default_rng(0))
    assert values.size == 4
    assert np.all(values == 0.0)
    xs, ps = empirical_cdf(np.array([3.0, 1.0, 2.0]))
    assert xs.tolist() == [1.0, 2.0, 3.0]
    assert ps.tolist() == pytest.approx([1 / 3, 2 / 3, 1.0])


def test_distance_cdf_size_one_factor_is_empty():
    ds = ArrayDataset("one", FactorSpace(sizes=(1, 2)), np.zeros((2, 1, 1, 1), dtype=np.float32))
    assert distance_cdf(ds, DistanceKind.mse(), 0, 10, np.random.default_rng(0)).size == 0


@pytest.mark.parametrize("factor", [4, -1])
def test_distance_cdf_rejects_unknown_factor(reduced_squares, factor):
    with pytest.raises(InvalidPositionError):
        distance_cdf(reduced_squares, DistanceKind.mse(), factor, 10, np.random.default_rng(0))


def test_sqrt_mse_triangle_inequality():
    """sqrt of the MSE is a metric on observations"""
    ds = XYSquaresDataset(XYSquaresParams.reduced(spacing=1))
    positions = ds.space.sample_positions(np.random.default_rng(5), 40)
    d = np.sqrt(pairwise_matrix(ds, positions, DistanceKind.mse()))
    via = d[:, :, None] + d[None, :, :]
    assert np.all(d[:, None, :] <= via + 1e-12)


def test_factor_distances_below_random_pairs(xysquares):
    """Moving one square is always cheaper than moving several"""
    report = factor_importance(xysquares, DistanceKind.mse(), 2000, np.random.default_rng(3))
    assert report.random is not None
    for entry in report.entries:
        assert entry.mean < report.random.mean, entry.factor


def test_standard_error_halves_with_four_times_the_samples(reduced_squares):
    """The spread of Monte-Carlo means over a seed family scales as 1/sqrt(n)"""
    def spread(samples: int) -> float:
        means = [
            sample_distances(reduced_squares, DistanceKind.mse(), None, samples, np.random.default_rng(seed)).mean()
            for seed in range(60)
        ]
        return float(np.std(means, ddof=1))

    ratio = spread(250) / spread(1000)
    assert 1.35 < ratio < 3.0


def test_constant_overlap_check_on_reduced_variants():
    """Spacing equal to the square size passes, any overlap fails"""
    passing = constant_overlap_check(
        XYSquaresDataset(XYSquaresParams.reduced(spacing=4)), DistanceKind.mse(), 1e-9, 500,
        np.random.default_rng(0),
    )
    assert passing.passed
    assert passing.max_deviation < 1e-12
    failing = constant_overlap_check(
        XYSquaresDataset(XYSquaresParams.reduced(spacing=2)), DistanceKind.mse(), 1e-9, 500,
        np.random.default_rng(0),
    )
    assert not failing.passed


@pytest.mark.slow
def test_constant_overlap_only_at_full_spacing():
    """Spacing 8 passes at tolerance 1e-9; spacings 1 to 7 fail"""
    for spacing in range(1, 9):
        ds = XYSquaresDataset(XYSquaresParams(spacing=spacing))
        check = constant_overlap_check(ds, DistanceKind.mse(), 1e-9, 500, np.random.default_rng(spacing))
        assert check.passed == (spacing == 8), spacing
        if spacing == 8:
            assert check.constants["x_R"] == pytest.approx(CONSTANT_MSE, abs=1e-12)


def test_dsprites_importance(dsprites_path, tmp_path):
    """Published dSprites means and ordering (needs the dataset file)"""
    from overlap_lab.data import DatasetSpec, build_dataset

    manifest = tmp_path / "dsprites.manifest"
    manifest.write_text(f"preset=dsprites\npath={dsprites_path}\nlayout=NHW\n")
    ds = build_dataset(DatasetSpec(name="npy", manifest=str(manifest)))
    report = factor_importance(ds, DistanceKind.mse(), 50_000, np.random.default_rng(0), workers=4)
    expected = {
        "position_y": 0.0584,
        "position_x": 0.0559,
        "scale": 0.0250,
        "shape": 0.0214,
        "orientation": 0.0172,
    }
    for name, mean in expected.items():
        assert abs(report.entry(name).mean - mean) <= 0.003
    assert report.ordering()[2:] == ["scale", "shape", "orientation"]
    assert set(report.ordering()[:2]) == {"position_x", "position_y"}
    assert abs(report.random.mean - 0.0754) <= 0.003
