"""
Command-line front end for overlap-lab

Every artifact goes below the output root (``--output-root`` or
``OVERLAP_LAB_OUTPUT_ROOT``, default ``./runs``). Exit codes: 0 success,
1 run failure, 2 usage or configuration error.
"""

import argparse
import logging
import os
import pathlib
import sys
from collections.abc import Callable
from typing import Any

import numpy as np
import pandas as pd
from dotenv import load_dotenv
from numpy.lib.format import open_memmap
from pydantic import ValidationError

from . import __version__
from .blur import DEFAULT_ALPHA, DEFAULT_RADIUS, PADDINGS
from .data.ground_truth import GroundTruthDataset, StandardisedDataset
from .data.registry import DatasetManifest, DatasetSpec, build_dataset, get_registered_datasets, write_manifest
from .data.transforms import channel_stats
from .distances import (
    DEFAULT_ANCHOR_SAMPLES,
    DEFAULT_PAIRS_PER_FACTOR,
    DistanceKind,
    distance_cdf,
    empirical_cdf,
    factor_importance,
    mean_factor_distance_matrix,
)
from .errors import (
    ConfigError,
    DegenerateStatsError,
    EmptyDatasetError,
    InvalidParamsError,
    InvalidPositionError,
    NpyFormatError,
    OverlapLabError,
    ShapeMismatchError,
    TrainingDivergedError,
)
from .experiments.artifacts import emit_observation, emit_pgm, matrix_frame, write_csv
from .experiments.config import ExperimentConfig, config_hash, dump_config, full_scale, load_config, load_grid
from .experiments.runner import EVAL_STREAM, FAILURE_COLUMNS, records_frame, run_experiment, run_sweep
from .metrics.evaluate import (
    MATRIX_LEVELS,
    evaluate_representation,
    model_traversal_matrices,
    representation_table,
)
from .models.checkpoint import load_checkpoint
from .models.train import TrainingData
from .utils.logging import setup_logging
from .utils.validation import ensure_output_dir, get_output_root, set_output_root, validate_path

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUN_FAILURE = 1
EXIT_USAGE = 2

USAGE_ERRORS = (
    ConfigError,
    InvalidParamsError,
    InvalidPositionError,
    ShapeMismatchError,
    NpyFormatError,
    EmptyDatasetError,
    DegenerateStatsError,
    ValidationError,
)

STANDARDISE_STATS_LIMIT = 20_000
STANDARDISE_STATS_SAMPLES = 10_000
GEN_CHUNK = 512
DEFAULT_EVAL_ANCHORS = 100

DATASET_ARGS = ("spacing", "grid_points", "square_size", "image_size", "num_squares", "manifest")

# train flag -> flat config key
TRAIN_OVERRIDES = {
    "framework": "framework",
    "beta": "beta",
    "latents": "latents",
    "steps": "steps",
    "batch": "batch",
    "lr": "lr",
    "seed": "seed",
    "loss": "loss",
    "radius": "radius",
    "alpha": "alpha",
    "padding": "padding",
    "log_every": "log_every",
    "eval_bins": "eval_bins",
    "eval_samples": "eval_samples",
}


# Argument helpers


def _env_int(name: str) -> int | None:
    value = os.getenv(name)
    if value is None or not value.strip():
        return None
    try:
        return int(value)
    except ValueError:
        logger.warning(f"Ignoring non-integer {name}={value!r}")
        return None


def _add_dataset_args(parser: argparse.ArgumentParser, required: bool = False) -> None:
    group = parser.add_argument_group("dataset")
    group.add_argument(
        "--dataset",
        default=None if required else "xysquares",
        required=required,
        help=f"Dataset name, one of {sorted(get_registered_datasets())} (default: xysquares)",
    )
    group.add_argument("--spacing", type=int, help="XYSquares grid spacing in pixels (default: 8)")
    group.add_argument("--grid-points", type=int, help="XYSquares positions per axis (default: 8)")
    group.add_argument("--square-size", type=int, help="XYSquares square side (default: 8)")
    group.add_argument("--image-size", type=int, help="XYSquares image side (default: 64)")
    group.add_argument("--num-squares", type=int, help="XYSquares square count, 1-3 (default: 3)")
    group.add_argument(
        "--manifest",
        help="Manifest of an NPY-backed dataset (use with --dataset npy). "
        "NPZ archives are not read: extract the contained .npy first.",
    )


def _add_kind_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("distance")
    group.add_argument(
        "--kind",
        choices=["mse", "bce", "blur-mse"],
        default="mse",
        help="Visual distance (default: mse)",
    )
    group.add_argument("--radius", type=int, default=DEFAULT_RADIUS, help="Box blur radius (default: 31)")
    group.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="Blur term weight (default: 3969)")
    group.add_argument("--padding", choices=PADDINGS, default="zero", help="Blur padding (default: zero)")
    group.add_argument(
        "--standardised",
        action="store_true",
        help="Compute visual distances on standardised data (non-canonical)",
    )


def _add_run_args(parser: argparse.ArgumentParser, default_out: str) -> None:
    parser.add_argument("--seed", type=int, default=0, help="Master seed (default: 0)")
    parser.add_argument(
        "--workers",
        type=int,
        default=_env_int("OVERLAP_LAB_WORKERS"),
        help="Worker count (env: OVERLAP_LAB_WORKERS)",
    )
    parser.add_argument(
        "--out",
        default=default_out,
        help=f"Output directory relative to the output root (default: {default_out})",
    )


def dataset_spec_from_args(args: argparse.Namespace) -> DatasetSpec:
    fields: dict[str, Any] = {"name": args.dataset}
    for key in DATASET_ARGS:
        value = getattr(args, key, None)
        if value is not None:
            fields[key] = value
    return DatasetSpec(**fields)


def kind_from_args(args: argparse.Namespace) -> DistanceKind:
    if args.kind == "blur-mse":
        return DistanceKind.blur_mse(radius=args.radius, alpha=args.alpha, padding=args.padding)
    return DistanceKind(args.kind)


def resolve_out_dir(out: str) -> pathlib.Path:
    """The output directory inside the output root, created"""
    resolved = ensure_output_dir(out)
    if resolved is None:
        raise ConfigError(f"Output path '{out}' is outside the output root '{get_output_root()}'")
    return resolved


def _visual_dataset(
    ds: GroundTruthDataset, kind: DistanceKind, standardised: bool, rng: np.random.Generator
) -> GroundTruthDataset:
    if not standardised:
        return ds
    if kind.name == "bce":
        raise InvalidParamsError("bce needs targets in [0, 1]; it cannot run on standardised data")
    exhaustive = ds.space.total <= STANDARDISE_STATS_LIMIT or ds.analytic_stats() is not None
    stats = channel_stats(
        ds,
        sample_count=None if exhaustive else STANDARDISE_STATS_SAMPLES,
        rng=rng,
        exhaustive=exhaustive,
    )
    logger.warning("Computing distances on standardised data; results are non-canonical")
    return StandardisedDataset(ds, stats)


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in name)


# Subcommands


def cmd_gen(args: argparse.Namespace) -> int:
    ds = build_dataset(dataset_spec_from_args(args))
    out_dir = resolve_out_dir(args.out)
    stem = _safe_name(args.name or ds.name)
    npy_path = out_dir / f"{stem}.npy"
    total = ds.space.total
    dtype = np.dtype(args.dtype)
    array = open_memmap(npy_path, mode="w+", dtype=dtype, shape=(total, *ds.obs_shape))
    for start in range(0, total, GEN_CHUNK):
        stop = min(start + GEN_CHUNK, total)
        batch = ds.observations_at_indices(np.arange(start, stop))
        if dtype == np.uint8:
            array[start:stop] = np.rint(np.clip(batch, 0.0, 1.0) * 255.0).astype(np.uint8)
        else:
            array[start:stop] = batch
    array.flush()
    del array
    logger.info(f"Wrote {total} observations to {npy_path}")

    manifest = DatasetManifest(
        name=ds.name,
        path=npy_path.name,
        layout="NCHW",
        factor_sizes=ds.space.sizes,
        factor_names=ds.space.names,
        binary=False if dtype == np.uint8 else None,
    )
    manifest_path = out_dir / f"{stem}.manifest"
    write_manifest(manifest_path, manifest)
    logger.info(f"Wrote {manifest_path}")

    if args.preview is not None:
        ds.space.check_factor(args.preview)
        anchor = [0] * ds.space.num_factors
        suffix = "pgm" if ds.channels == 1 else "ppm"
        for u, pos in enumerate(ds.space.traversal(anchor, args.preview)):
            emit_observation(
                ds.observation(pos),
                out_dir / "preview" / f"{_safe_name(ds.space.names[args.preview])}_{u:03d}.{suffix}",
            )
    print(manifest_path)
    return EXIT_OK


def cmd_dist(args: argparse.Namespace) -> int:
    ds = build_dataset(dataset_spec_from_args(args))
    kind = kind_from_args(args)
    rng = np.random.default_rng(args.seed)
    visual_ds = _visual_dataset(ds, kind, args.standardised, rng)
    factors = args.factors if args.factors is not None else list(range(ds.space.num_factors))
    for f in factors:
        ds.space.check_factor(f)
    out_dir = resolve_out_dir(args.out)

    index_rows = []
    for f in factors:
        name = ds.space.names[f]
        for current_kind, source in ((DistanceKind.gt_l1(), ds), (kind, visual_ds)):
            matrix = mean_factor_distance_matrix(
                source, f, current_kind, args.anchors, rng=rng, workers=args.workers
            )
            stem = f"dist_{_safe_name(name)}_{current_kind.name}"
            write_csv(matrix_frame(matrix.values), out_dir / f"{stem}.csv")
            emit_pgm(matrix.values, out_dir / f"{stem}.pgm")
            index_rows.append(
                {
                    "dataset": ds.name,
                    "factor": name,
                    "kind": current_kind.label,
                    "canonical": not (args.standardised and current_kind.is_visual),
                    "anchors": matrix.samples,
                    "file": f"{stem}.csv",
                }
            )
    write_csv(pd.DataFrame(index_rows), out_dir / "dist_index.csv")
    return EXIT_OK


def cmd_importance(args: argparse.Namespace) -> int:
    ds = build_dataset(dataset_spec_from_args(args))
    kind = kind_from_args(args)
    rng = np.random.default_rng(args.seed)
    visual_ds = _visual_dataset(ds, kind, args.standardised, rng)
    out_dir = resolve_out_dir(args.out)

    frames = []
    for current_kind, source in ((kind, visual_ds), (DistanceKind.gt_l1(), ds)):
        report = factor_importance(source, current_kind, args.pairs, rng=rng, workers=args.workers)
        frame = report.to_frame()
        frame["dataset"] = ds.name
        frame["canonical"] = not (args.standardised and current_kind.is_visual)
        frames.append(frame)
    table = pd.concat(frames, ignore_index=True)
    write_csv(table, out_dir / "importance.csv")
    print(table.to_string(index=False))
    return EXIT_OK


def cmd_cdf(args: argparse.Namespace) -> int:
    ds = build_dataset(dataset_spec_from_args(args))
    kind = kind_from_args(args)
    rng = np.random.default_rng(args.seed)
    visual_ds = _visual_dataset(ds, kind, args.standardised, rng)
    out_dir = resolve_out_dir(args.out)

    frames = []
    targets: list[tuple[str, int | None]] = [(n, i) for i, n in enumerate(ds.space.names)]
    targets.append(("random", None))
    for name, factor in targets:
        values, proportions = empirical_cdf(
            distance_cdf(visual_ds, kind, factor, args.samples, rng, workers=args.workers)
        )
        frames.append(
            pd.DataFrame(
                {
                    "dataset": ds.name,
                    "factor": name,
                    "kind": kind.label,
                    "distance": values,
                    "proportion": proportions,
                },
                columns=["dataset", "factor", "kind", "distance", "proportion"],
            )
        )
    write_csv(pd.concat(frames, ignore_index=True), out_dir / "cdf.csv")
    return EXIT_OK


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    flat = load_config(args.config).to_flat() if args.config else {}
    if args.dataset is not None:
        for key in ("dataset", *DATASET_ARGS):
            flat.pop(key, None)
        flat["dataset"] = args.dataset
    for key in DATASET_ARGS:
        value = getattr(args, key, None)
        if value is not None:
            flat[key] = str(value)
    for attr, key in TRAIN_OVERRIDES.items():
        value = getattr(args, attr, None)
        if value is not None:
            flat[key] = str(value)
    config = ExperimentConfig.from_flat(flat)
    if args.full_scale:
        config = full_scale(config)
    return config


def cmd_train(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    # fail on a bad dataset before anything is written
    ds = build_dataset(config.dataset)
    digest = config_hash(config)
    out_dir = resolve_out_dir(args.out)
    run_dir = out_dir / f"run-{digest[:8]}"
    try:
        record = run_experiment(config, run_dir)
    except TrainingDivergedError as e:
        logger.error(f"Run {digest[:12]} failed: {e}")
        failure = {
            "job": 0,
            "dataset": ds.name,
            "framework": config.framework,
            "beta": config.beta,
            "seed": config.seed,
            "error": f"{type(e).__name__}: {e}",
        }
        write_csv(pd.DataFrame([failure], columns=FAILURE_COLUMNS), out_dir / "failures.csv")
        run_dir.mkdir(parents=True, exist_ok=True)
        dump_config(config, run_dir / "config.cfg")
        return EXIT_RUN_FAILURE
    write_csv(records_frame([record]), run_dir / "runs.csv")
    print(f"{record.run_id} mig={record.mig:.4f} dci={record.dci:.4f} -> {run_dir}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    grid = load_grid(args.grid)
    out_dir = resolve_out_dir(args.out)
    result = run_sweep(grid, out_dir, workers=args.workers)
    print(f"{len(result.records)} runs succeeded, {len(result.failures)} failed -> {out_dir}")
    return EXIT_OK if result.ok else EXIT_RUN_FAILURE


def cmd_eval(args: argparse.Namespace) -> int:
    run_dir = validate_path(args.run_dir)
    if run_dir is None or not run_dir.is_dir():
        raise ConfigError(f"Run directory '{args.run_dir}' not found below '{get_output_root()}'")
    checkpoint = load_checkpoint(run_dir / "checkpoint.npz")
    config = load_config(run_dir / "config.cfg")
    ds = build_dataset(config.dataset)
    data = TrainingData(ds, stats=checkpoint.stats)
    if data.image_shape != checkpoint.image_shape:
        raise ShapeMismatchError(
            f"Checkpoint expects images of shape {checkpoint.image_shape}, "
            f"dataset gives {data.image_shape}"
        )
    samples = args.samples if args.samples is not None else config.eval.samples
    bins = args.bins if args.bins is not None else config.eval.bins

    eval_rng = np.random.default_rng(np.random.SeedSequence([config.seed, EVAL_STREAM]))
    table = representation_table(checkpoint.model, data, samples, eval_rng)
    scores = evaluate_representation(table, bins=bins, seed=config.seed)
    run_id = config_hash(config)[:12]
    write_csv(
        pd.DataFrame(
            [
                {"run_id": run_id, "metric": "mig", "value": scores.mig, "bins": bins, "samples": samples},
                {"run_id": run_id, "metric": "dci", "value": scores.dci, "bins": bins, "samples": samples},
            ]
        ),
        run_dir / "eval_scores.csv",
    )

    if args.anchors > 0:
        rng = np.random.default_rng(args.seed)
        factors = args.factors if args.factors is not None else list(range(ds.space.num_factors))
        matrices_dir = run_dir / "matrices"
        for f in factors:
            name = _safe_name(ds.space.names[f])
            levels = model_traversal_matrices(checkpoint.model, data, f, args.anchors, rng)
            for level in MATRIX_LEVELS:
                write_csv(matrix_frame(levels[level]), matrices_dir / f"{name}_{level}.csv")
                emit_pgm(levels[level], matrices_dir / f"{name}_{level}.pgm")
    print(f"{run_id} mig={scores.mig:.4f} dci={scores.dci:.4f}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from .server import run_stdio_server

    try:
        run_stdio_server(server_name=args.server_name, log_level=args.log_level)
    except KeyboardInterrupt:
        print("Server stopped by user", file=sys.stderr)
    return EXIT_OK


# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="overlap-lab",
        description="Distance structure, adversarial datasets and small VAEs for disentanglement studies",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Environment Variables:
  OVERLAP_LAB_LOG_LEVEL     Logging level (DEBUG, INFO, WARNING, ERROR)
  OVERLAP_LAB_OUTPUT_ROOT   Root directory for all artifacts (default: ./runs)
  OVERLAP_LAB_WORKERS       Default worker count
  OVERLAP_LAB_SERVER_NAME   MCP server name for 'serve'

Examples:
  overlap-lab importance --dataset xysquares --spacing 8
  overlap-lab dist --spacing 1 --kind blur-mse --radius 31 --alpha 3969
  overlap-lab train --framework ada-gvae --beta 0.001 --loss blur-mse
  overlap-lab sweep --grid grids/beta.cfg --workers 4
""",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=os.getenv("OVERLAP_LAB_LOG_LEVEL", "INFO").upper(),
        help="Logging level (default: INFO, env: OVERLAP_LAB_LOG_LEVEL)",
    )
    parser.add_argument(
        "--output-root",
        default=None,
        help="Root directory for artifacts (env: OVERLAP_LAB_OUTPUT_ROOT, default: ./runs)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Render a dataset to NPY plus a manifest")
    _add_dataset_args(gen)
    gen.add_argument("--name", help="File stem (default: dataset name)")
    gen.add_argument("--dtype", choices=["uint8", "float32"], default="uint8", help="Stored dtype")
    gen.add_argument("--preview", type=int, metavar="FACTOR", help="Write images of one traversal")
    gen.add_argument("--out", default="datasets", help="Output directory (default: datasets)")
    gen.set_defaults(handler=cmd_gen)

    dist = sub.add_parser("dist", help="Average traversal distance matrices per factor")
    _add_dataset_args(dist)
    _add_kind_args(dist)
    _add_run_args(dist, "dist")
    dist.add_argument(
        "--anchors",
        type=int,
        default=DEFAULT_ANCHOR_SAMPLES,
        help=f"Anchors per factor when sampling (default: {DEFAULT_ANCHOR_SAMPLES})",
    )
    dist.add_argument("--factors", type=int, nargs="+", help="Factor indices (default: all)")
    dist.set_defaults(handler=cmd_dist)

    importance = sub.add_parser("importance", help="Factor importance table")
    _add_dataset_args(importance)
    _add_kind_args(importance)
    _add_run_args(importance, "importance")
    importance.add_argument(
        "--pairs",
        type=int,
        default=DEFAULT_PAIRS_PER_FACTOR,
        help=f"Pairs per factor (default: {DEFAULT_PAIRS_PER_FACTOR})",
    )
    importance.set_defaults(handler=cmd_importance)

    cdf = sub.add_parser("cdf", help="Cumulative distance distributions per factor")
    _add_dataset_args(cdf)
    _add_kind_args(cdf)
    _add_run_args(cdf, "cdf")
    cdf.add_argument(
        "--samples",
        type=int,
        default=DEFAULT_PAIRS_PER_FACTOR,
        help=f"Pairs per factor (default: {DEFAULT_PAIRS_PER_FACTOR})",
    )
    cdf.set_defaults(handler=cmd_cdf)

    train = sub.add_parser("train", help="Train and score one model")
    train.add_argument("--config", help="key=value experiment config; flags override it")
    train.add_argument("--dataset", default=None, help="Dataset name (default: xysquares)")
    for key in DATASET_ARGS:
        train.add_argument(f"--{key.replace('_', '-')}", type=str if key == "manifest" else int)
    train.add_argument("--framework", choices=["beta-vae", "ada-gvae"])
    train.add_argument("--beta", type=float)
    train.add_argument("--latents", type=int)
    train.add_argument("--steps", type=int)
    train.add_argument("--batch", type=int)
    train.add_argument("--lr", type=float)
    train.add_argument("--seed", type=int)
    train.add_argument("--loss", choices=["mse", "blur-mse"])
    train.add_argument("--radius", type=int)
    train.add_argument("--alpha", type=float)
    train.add_argument("--padding", choices=PADDINGS)
    train.add_argument("--log-every", type=int)
    train.add_argument("--eval-bins", type=int)
    train.add_argument("--eval-samples", type=int)
    train.add_argument(
        "--full-scale",
        "--paper-scale",
        dest="full_scale",
        action="store_true",
        help="Batch 256, 57600 steps, 10000 evaluation samples",
    )
    train.add_argument("--out", default="train", help="Output directory (default: train)")
    train.set_defaults(handler=cmd_train)

    sweep = sub.add_parser("sweep", help="Run a grid of experiments")
    sweep.add_argument("--grid", required=True, help="key=value grid; values may be comma lists")
    sweep.add_argument(
        "--workers",
        type=int,
        default=_env_int("OVERLAP_LAB_WORKERS"),
        help="Concurrent runs (env: OVERLAP_LAB_WORKERS)",
    )
    sweep.add_argument("--out", default="sweep", help="Output directory (default: sweep)")
    sweep.set_defaults(handler=cmd_sweep)

    evaluate = sub.add_parser("eval", help="Re-score a trained run and write model-level matrices")
    evaluate.add_argument("--run-dir", required=True, help="Run directory holding checkpoint.npz and config.cfg")
    evaluate.add_argument("--samples", type=int, help="Evaluation samples (default: from config)")
    evaluate.add_argument("--bins", type=int, help="MIG bins (default: from config)")
    evaluate.add_argument(
        "--anchors",
        type=int,
        default=DEFAULT_EVAL_ANCHORS,
        help=f"Anchors per factor for model matrices, 0 to skip (default: {DEFAULT_EVAL_ANCHORS})",
    )
    evaluate.add_argument("--factors", type=int, nargs="+", help="Factor indices (default: all)")
    evaluate.add_argument("--seed", type=int, default=0, help="Seed for anchor sampling")
    evaluate.set_defaults(handler=cmd_eval)

    serve = sub.add_parser("serve", help="Run the MCP tool server over stdio")
    serve.add_argument(
        "--server-name",
        default=os.getenv("OVERLAP_LAB_SERVER_NAME"),
        help="Server name identifier (env: OVERLAP_LAB_SERVER_NAME)",
    )
    serve.set_defaults(handler=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "serve":
        setup_logging(level=args.log_level)

    if args.output_root is not None and not set_output_root(args.output_root):
        print(f"Error: output root '{args.output_root}' is not a directory", file=sys.stderr)
        return EXIT_USAGE

    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except USAGE_ERRORS as e:
        logger.error(f"{args.command}: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OverlapLabError, OSError) as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_RUN_FAILURE
    finally:
        if args.output_root is not None:
            set_output_root(None)


def cli_main() -> None:
    """Console-script entry point"""
    sys.exit(main())


if __name__ == "__main__":
    cli_main()
