"""
Ground-truth and visual distances over factor traversals

Visual distances are reconstruction losses evaluated between two dataset
observations. They are computed on raw [0, 1] data unless a caller explicitly
passes a standardised dataset. Expectations are seeded Monte-Carlo estimates
that switch to exact enumeration when the set of distinct pairs is small.

Sampling is split into fixed-size chunks, each with its own generator seeded
from ``(master seed, stream tag, chunk index)``. Results are reduced in chunk
order, so the worker count never changes a result.
"""

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .blur import DEFAULT_ALPHA, DEFAULT_RADIUS, PADDINGS, box_blur
from .data.ground_truth import GroundTruthDataset
from .errors import EmptyDatasetError, InvalidParamsError, ShapeMismatchError
from .factor_space import FactorSpace

logger = logging.getLogger(__name__)

BCE_EPS = 1e-7
EXHAUSTIVE_LIMIT = 1_000_000
CHUNK_SIZE = 256
DEFAULT_ANCHOR_SAMPLES = 1000
DEFAULT_PAIRS_PER_FACTOR = 50_000
RANDOM_STREAM = 0

KIND_NAMES: tuple[str, ...] = ("gt-l1", "mse", "bce", "blur-mse")


@dataclass(frozen=True)
class DistanceKind:
    """Which distance to evaluate between two factor positions"""

    name: str = "mse"
    radius: int = DEFAULT_RADIUS
    alpha: float = DEFAULT_ALPHA
    padding: str = "zero"

    def __post_init__(self) -> None:
        if self.name not in KIND_NAMES:
            raise InvalidParamsError(f"Unknown distance kind '{self.name}', expected one of {KIND_NAMES}")
        if self.name == "blur-mse":
            if self.radius < 1 or not self.alpha > 0:
                raise InvalidParamsError(
                    f"blur-mse needs radius >= 1 and alpha > 0, got r={self.radius} alpha={self.alpha}"
                )
            if self.padding not in PADDINGS:
                raise InvalidParamsError(f"Unknown padding '{self.padding}'")

    @classmethod
    def gt_l1(cls) -> "DistanceKind":
        return cls("gt-l1")

    @classmethod
    def mse(cls) -> "DistanceKind":
        return cls("mse")

    @classmethod
    def bce(cls) -> "DistanceKind":
        return cls("bce")

    @classmethod
    def blur_mse(
        cls, radius: int = DEFAULT_RADIUS, alpha: float = DEFAULT_ALPHA, padding: str = "zero"
    ) -> "DistanceKind":
        return cls("blur-mse", radius=radius, alpha=alpha, padding=padding)

    @property
    def is_visual(self) -> bool:
        return self.name != "gt-l1"

    @property
    def is_symmetric(self) -> bool:
        return self.name != "bce"

    @property
    def label(self) -> str:
        if self.name == "blur-mse":
            return f"blur-mse(r={self.radius},alpha={self.alpha:g},{self.padding})"
        return self.name


# Distances


def gt_distance(a: Sequence[int], b: Sequence[int]) -> float:
    """L1 distance between two factor positions"""
    if len(a) != len(b):
        raise ShapeMismatchError(f"Positions differ in length: {len(a)} vs {len(b)}")
    return float(sum(abs(int(x) - int(y)) for x, y in zip(a, b, strict=True)))


def gt_distances(pos_a: np.ndarray, pos_b: np.ndarray) -> np.ndarray:
    pos_a = np.asarray(pos_a, dtype=np.int64)
    pos_b = np.asarray(pos_b, dtype=np.int64)
    if pos_a.shape != pos_b.shape:
        raise ShapeMismatchError(f"Position arrays differ: {pos_a.shape} vs {pos_b.shape}")
    return np.abs(pos_a - pos_b).sum(axis=-1).astype(np.float64)


def _bce(target: np.ndarray, pred: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    p = np.clip(pred, BCE_EPS, 1.0 - BCE_EPS)
    return -np.mean(target * np.log(p) + (1.0 - target) * np.log(1.0 - p), axis=axes)


def pair_distances(a: np.ndarray, b: np.ndarray, kind: DistanceKind) -> np.ndarray:
    """
    Visual distances between row-aligned observation batches.

    Args:
        a, b: Arrays of shape (N, C, H, W)
        kind: A visual DistanceKind

    Returns:
        (N,) float64 distances
    """
    if not kind.is_visual:
        raise InvalidParamsError("pair_distances needs a visual distance kind")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"Observation batches differ: {a.shape} vs {b.shape}")
    axes = tuple(range(1, a.ndim))
    if kind.name == "bce":
        return _bce(a, b, axes)
    dist = np.mean((a - b) ** 2, axis=axes)
    if kind.name == "blur-mse":
        blurred = box_blur(a - b, kind.radius, kind.padding)  # type: ignore[arg-type]
        dist = dist + kind.alpha * np.mean(blurred**2, axis=axes)
    return dist


def visual_distance(a: np.ndarray, b: np.ndarray, kind: DistanceKind) -> float:
    """Reconstruction loss of ``b`` against target ``a`` used as a distance"""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"Observations differ in shape: {a.shape} vs {b.shape}")
    return float(pair_distances(a[None], b[None], kind)[0])


def _distances_between(
    ds: GroundTruthDataset, pos_a: np.ndarray, pos_b: np.ndarray, kind: DistanceKind
) -> np.ndarray:
    if not kind.is_visual:
        return gt_distances(pos_a, pos_b)
    return pair_distances(ds.observations(pos_a), ds.observations(pos_b), kind)


def pairwise_matrix(
    ds: GroundTruthDataset, positions: np.ndarray, kind: DistanceKind
) -> np.ndarray:
    """Full (n, n) distance matrix between the given positions"""
    positions = np.asarray(positions, dtype=np.int64)
    if not kind.is_visual:
        return np.abs(positions[:, None, :] - positions[None, :, :]).sum(axis=-1).astype(np.float64)
    obs = np.asarray(ds.observations(positions), dtype=np.float64)
    n = obs.shape[0]
    out = np.zeros((n, n))
    blurred = box_blur(obs, kind.radius, kind.padding) if kind.name == "blur-mse" else None  # type: ignore[arg-type]
    axes = tuple(range(1, obs.ndim))
    for u in range(n):
        if kind.name == "bce":
            out[u] = _bce(obs[u][None], obs, axes)
            continue
        row = np.mean((obs[u][None] - obs) ** 2, axis=axes)
        if blurred is not None:
            row = row + kind.alpha * np.mean((blurred[u][None] - blurred) ** 2, axis=axes)
        out[u] = row
    if kind.name == "bce":
        # clamping leaves a small self-distance; the diagonal is zero by definition
        np.fill_diagonal(out, 0.0)
    return out


# Traversal distance matrices


@dataclass(frozen=True)
class DistanceMatrix:
    """Pairwise distances along one factor traversal, or their average"""

    factor: int
    values: np.ndarray
    std: np.ndarray | None = None
    samples: int = 1

    def __post_init__(self) -> None:
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ShapeMismatchError(f"Distance matrix must be square, got {self.values.shape}")

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def standard_error(self) -> np.ndarray:
        if self.std is None:
            return np.zeros_like(self.values)
        return self.std / math.sqrt(self.samples)

    def off_diagonal(self) -> np.ndarray:
        mask = ~np.eye(self.size, dtype=bool)
        return self.values[mask]


def traversal_distance_matrix(
    ds: GroundTruthDataset, anchor: Sequence[int], factor: int, kind: DistanceKind
) -> DistanceMatrix:
    positions = np.asarray(ds.space.traversal(anchor, factor), dtype=np.int64)
    return DistanceMatrix(factor=factor, values=pairwise_matrix(ds, positions, kind))


def _chunk_rng(master: int, stream: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master, stream, chunk]))


def _run_chunks(
    work: Callable[[int], np.ndarray], num_chunks: int, workers: int | None
) -> list[np.ndarray]:
    if workers is None or workers <= 1 or num_chunks <= 1:
        return [work(c) for c in range(num_chunks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(work, range(num_chunks)))


def _other_factors_space(space: FactorSpace, factor: int) -> FactorSpace:
    sizes = tuple(s for i, s in enumerate(space.sizes) if i != factor) or (1,)
    return FactorSpace(sizes=sizes)


def mean_factor_distance_matrix(
    ds: GroundTruthDataset,
    factor: int,
    kind: DistanceKind,
    anchor_samples: int = DEFAULT_ANCHOR_SAMPLES,
    rng: np.random.Generator | None = None,
    workers: int | None = None,
) -> DistanceMatrix:
    """
    Average traversal distance matrix along ``factor`` over anchors.

    Every distinct traversal is visited when there are at most
    ``anchor_samples`` of them, otherwise anchors are drawn uniformly.
    ``std`` holds the per-entry population std over anchors.
    """
    space = ds.space
    space.check_factor(factor)
    if anchor_samples < 1:
        raise InvalidParamsError(f"anchor_samples must be >= 1, got {anchor_samples}")
    size = space.sizes[factor]
    distinct = space.total // size

    if distinct <= anchor_samples:
        others = _other_factors_space(space, factor).all_positions()
        anchors = np.zeros((distinct, space.num_factors), dtype=np.int64)
        if space.num_factors > 1:
            anchors[:, [i for i in range(space.num_factors) if i != factor]] = others
        logger.debug(f"Factor {factor}: exhaustive over {distinct} traversals")
    else:
        if rng is None:
            raise ValueError("mean_factor_distance_matrix needs an rng when sampling anchors")
        anchors = space.sample_positions(rng, anchor_samples)
        logger.debug(f"Factor {factor}: sampling {anchor_samples} of {distinct} traversals")

    count = anchors.shape[0]
    num_chunks = math.ceil(count / CHUNK_SIZE)

    def work(chunk: int) -> np.ndarray:
        sums = np.zeros((2, size, size))
        for anchor in anchors[chunk * CHUNK_SIZE : (chunk + 1) * CHUNK_SIZE]:
            positions = np.repeat(anchor[None, :], size, axis=0)
            positions[:, factor] = np.arange(size)
            m = pairwise_matrix(ds, positions, kind)
            sums[0] += m
            sums[1] += m**2
        return sums

    total = np.zeros((2, size, size))
    for part in _run_chunks(work, num_chunks, workers):
        total += part
    mean = total[0] / count
    var = np.maximum(total[1] / count - mean**2, 0.0)
    return DistanceMatrix(factor=factor, values=mean, std=np.sqrt(var), samples=count)


# Pair sampling


def _traversal_pairs(
    space: FactorSpace, factor: int, rng: np.random.Generator, count: int
) -> tuple[np.ndarray, np.ndarray]:
    size = space.sizes[factor]
    pos_a = space.sample_positions(rng, count)
    pos_b = pos_a.copy()
    pos_b[:, factor] = (pos_a[:, factor] + rng.integers(1, size, size=count)) % size
    return pos_a, pos_b


def _random_pairs(
    space: FactorSpace, rng: np.random.Generator, count: int
) -> tuple[np.ndarray, np.ndarray]:
    pos_a = space.sample_positions(rng, count)
    pos_b = space.sample_positions(rng, count)
    same = np.all(pos_a == pos_b, axis=1)
    while np.any(same):
        pos_b[same] = space.sample_positions(rng, int(same.sum()))
        same = np.all(pos_a == pos_b, axis=1)
    return pos_a, pos_b


def _all_traversal_pairs(space: FactorSpace, factor: int) -> tuple[np.ndarray, np.ndarray]:
    size = space.sizes[factor]
    anchors = space.all_positions()
    a_list, b_list = [], []
    for step in range(1, size):
        b = anchors.copy()
        b[:, factor] = (anchors[:, factor] + step) % size
        a_list.append(anchors)
        b_list.append(b)
    return np.concatenate(a_list), np.concatenate(b_list)


def _all_random_pairs(space: FactorSpace) -> tuple[np.ndarray, np.ndarray]:
    idx_a, idx_b = np.meshgrid(np.arange(space.total), np.arange(space.total), indexing="ij")
    keep = idx_a != idx_b
    return (
        space.indices_to_positions(idx_a[keep]),
        space.indices_to_positions(idx_b[keep]),
    )


def sample_distances(
    ds: GroundTruthDataset,
    kind: DistanceKind,
    factor: int | None,
    samples: int,
    rng: np.random.Generator,
    workers: int | None = None,
) -> np.ndarray:
    """
    Distances between distinct pairs along ``factor`` (``None`` for random pairs).

    Returns every ordered distinct pair exactly once when there are no more
    of them than ``samples``, otherwise ``samples`` seeded draws in a fixed
    order.
    """
    if samples < 1:
        raise InvalidParamsError(f"samples must be >= 1, got {samples}")
    space = ds.space
    if factor is None:
        distinct = space.total * (space.total - 1)
        stream = RANDOM_STREAM
    else:
        space.check_factor(factor)
        distinct = space.total * (space.sizes[factor] - 1)
        stream = factor + 1
    if distinct == 0:
        raise EmptyDatasetError("No distinct pairs exist")

    if distinct <= min(samples, EXHAUSTIVE_LIMIT):
        logger.debug(f"Enumerating all {distinct} distinct pairs (factor={factor})")
        if factor is None:
            pos_a, pos_b = _all_random_pairs(space)
        else:
            pos_a, pos_b = _all_traversal_pairs(space, factor)
        num_chunks = math.ceil(distinct / CHUNK_SIZE)

        def work(chunk: int) -> np.ndarray:
            sl = slice(chunk * CHUNK_SIZE, (chunk + 1) * CHUNK_SIZE)
            return _distances_between(ds, pos_a[sl], pos_b[sl], kind)

        return np.concatenate(_run_chunks(work, num_chunks, workers))

    master = int(rng.integers(2**63 - 1))
    num_chunks = math.ceil(samples / CHUNK_SIZE)

    def sampled(chunk: int) -> np.ndarray:
        crng = _chunk_rng(master, stream, chunk)
        count = min(CHUNK_SIZE, samples - chunk * CHUNK_SIZE)
        if factor is None:
            pos_a, pos_b = _random_pairs(space, crng, count)
        else:
            pos_a, pos_b = _traversal_pairs(space, factor, crng, count)
        return _distances_between(ds, pos_a, pos_b, kind)

    return np.concatenate(_run_chunks(sampled, num_chunks, workers))


# Factor importance


@dataclass(frozen=True)
class ImportanceEntry:
    factor: str
    factor_index: int | None
    mean: float
    std: float
    samples: int


@dataclass
class FactorImportanceReport:
    """Expected distance along each factor and between random pairs"""

    dataset: str
    kind: str
    entries: list[ImportanceEntry]
    random: ImportanceEntry | None = None
    skipped: list[str] = field(default_factory=list)

    def entry(self, factor: str) -> ImportanceEntry:
        for e in self.entries:
            if e.factor == factor:
                return e
        raise KeyError(factor)

    def ordering(self) -> list[str]:
        return [e.factor for e in self.entries]

    def to_frame(self) -> pd.DataFrame:
        rows = list(self.entries)
        if self.random is not None:
            rows.append(self.random)
        return pd.DataFrame(
            [
                {
                    "dataset": self.dataset,
                    "factor": e.factor,
                    "kind": self.kind,
                    "mean": e.mean,
                    "std": e.std,
                    "samples": e.samples,
                }
                for e in rows
            ],
            columns=["dataset", "factor", "kind", "mean", "std", "samples"],
        )


def factor_importance(
    ds: GroundTruthDataset,
    kind: DistanceKind,
    pairs_per_factor: int = DEFAULT_PAIRS_PER_FACTOR,
    rng: np.random.Generator | None = None,
    workers: int | None = None,
    include_random: bool = True,
) -> FactorImportanceReport:
    """
    Mean and population std of distances between distinct pairs along each
    factor, plus the random-pair baseline. Entries are sorted by mean,
    largest first; factors of size 1 are skipped.
    """
    if pairs_per_factor < 1:
        raise InvalidParamsError(f"pairs_per_factor must be >= 1, got {pairs_per_factor}")
    rng = rng if rng is not None else np.random.default_rng()
    space = ds.space
    entries: list[ImportanceEntry] = []
    skipped: list[str] = []
    for i, name in enumerate(space.names):
        if space.sizes[i] < 2:
            logger.warning(f"Skipping factor '{name}' of size 1: no distinct traversal pairs")
            skipped.append(name)
            continue
        d = sample_distances(ds, kind, i, pairs_per_factor, rng, workers)
        entries.append(ImportanceEntry(name, i, float(d.mean()), float(d.std()), int(d.size)))
        logger.info(f"{ds.name} {kind.label} {name}: mean={d.mean():.6f} std={d.std():.6f} n={d.size}")
    entries.sort(key=lambda e: e.mean, reverse=True)

    random_entry = None
    if include_random and space.total > 1:
        d = sample_distances(ds, kind, None, pairs_per_factor, rng, workers)
        random_entry = ImportanceEntry("random", None, float(d.mean()), float(d.std()), int(d.size))
        logger.info(f"{ds.name} {kind.label} random: mean={d.mean():.6f} std={d.std():.6f}")
    return FactorImportanceReport(ds.name, kind.label, entries, random_entry, skipped)


# CDFs and constant overlap


def distance_cdf(
    ds: GroundTruthDataset,
    kind: DistanceKind,
    factor: int | None,
    samples: int,
    rng: np.random.Generator,
    workers: int | None = None,
) -> np.ndarray:
    """Sorted distances along ``factor`` (``None``: random pairs)"""
    space = ds.space
    if factor is not None:
        space.check_factor(factor)
    if space.total < 2 or (factor is not None and space.sizes[factor] < 2):
        return np.zeros(0)
    return np.sort(sample_distances(ds, kind, factor, samples, rng, workers), kind="stable")


def empirical_cdf(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sorted values and their cumulative proportions rank/n"""
    values = np.sort(np.asarray(values, dtype=np.float64), kind="stable")
    n = values.size
    return values, np.arange(1, n + 1) / max(n, 1)


@dataclass(frozen=True)
class OverlapCheck:
    passed: bool
    max_deviation: float
    constants: dict[str, float]
    samples: int


def constant_overlap_check(
    ds: GroundTruthDataset,
    kind: DistanceKind,
    tolerance: float = 1e-9,
    samples: int = 2000,
    rng: np.random.Generator | None = None,
    workers: int | None = None,
) -> OverlapCheck:
    """
    Check that distinct pairs along every factor traversal are equally far
    apart. Each factor's constant is the midpoint of its observed range, so
    the reported deviation is half the spread.
    """
    if tolerance < 0:
        raise InvalidParamsError(f"tolerance must be >= 0, got {tolerance}")
    rng = rng if rng is not None else np.random.default_rng()
    constants: dict[str, float] = {}
    max_dev = 0.0
    total_samples = 0
    for i, name in enumerate(ds.space.names):
        if ds.space.sizes[i] < 2:
            continue
        d = sample_distances(ds, kind, i, samples, rng, workers)
        lo, hi = float(d.min()), float(d.max())
        constants[name] = 0.5 * (lo + hi)
        max_dev = max(max_dev, 0.5 * (hi - lo))
        total_samples += d.size
    passed = max_dev <= tolerance
    logger.info(
        f"Constant-overlap check on {ds.name} ({kind.label}): "
        f"{'passed' if passed else 'failed'}, max deviation {max_dev:.3g}"
    )
    return OverlapCheck(passed, max_dev, constants, total_samples)
