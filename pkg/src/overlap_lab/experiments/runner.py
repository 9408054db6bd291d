"""
Single runs and concurrent sweeps

Each run trains a model, scores it and writes its artifacts into its own
directory. ``runs.csv`` only holds deterministic columns; wall times go to
``timings.csv`` so repeated sweeps produce byte-identical run tables.
"""

import logging
import os
import pathlib
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from .. import __version__
from ..data.registry import build_dataset
from ..metrics.evaluate import evaluate_representation, representation_table
from ..models.checkpoint import save_checkpoint
from ..models.train import TrainResult, train_model
from .artifacts import write_csv
from .config import ExperimentConfig, SweepGrid, SweepJob, config_hash, dump_config

logger = logging.getLogger(__name__)

EVAL_STREAM = 7
RUN_COLUMNS = [
    "run_id",
    "config_hash",
    "dataset",
    "framework",
    "loss",
    "beta",
    "latents",
    "steps",
    "batch",
    "seed",
    "recon",
    "kl",
    "total",
    "mig",
    "dci",
    "provenance",
]
FAILURE_COLUMNS = ["job", "dataset", "framework", "beta", "seed", "error"]


@dataclass(frozen=True)
class RunRecord:
    run_id: str
    config_hash: str
    dataset: str
    framework: str
    loss: str
    beta: float
    latents: int
    steps: int
    batch: int
    seed: int
    recon: float
    kl: float
    total: float
    mig: float
    dci: float
    provenance: str
    wall_time: float = field(default=0.0, compare=False)

    def to_row(self) -> dict[str, object]:
        row = asdict(self)
        row.pop("wall_time")
        return row


def provenance(digest: str) -> str:
    return f"overlap-lab@{__version__}+cfg.{digest[:8]}"


def _write_run_artifacts(
    out_dir: pathlib.Path, config: ExperimentConfig, result: TrainResult, scores_frame: pd.DataFrame
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    dump_config(config, out_dir / "config.cfg")
    save_checkpoint(out_dir / "checkpoint.npz", result)
    write_csv(result.trace_frame(), out_dir / "trace.csv")
    write_csv(scores_frame, out_dir / "scores.csv")


def run_experiment(config: ExperimentConfig, out_dir: str | os.PathLike[str] | None = None) -> RunRecord:
    """
    Train, evaluate and (optionally) write one run's artifacts.

    Raises:
        TrainingDivergedError: The loss became non-finite
        ConfigError: The dataset spec cannot be built
    """
    start = time.perf_counter()
    digest = config_hash(config)
    run_id = digest[:12]
    dataset = build_dataset(config.dataset)
    result = train_model(dataset, config.train_config())
    assert result.data is not None

    eval_rng = np.random.default_rng(np.random.SeedSequence([config.seed, EVAL_STREAM]))
    table = representation_table(result.model, result.data, config.eval.samples, eval_rng)
    scores = evaluate_representation(table, bins=config.eval.bins, seed=config.seed)

    final = result.final
    record = RunRecord(
        run_id=run_id,
        config_hash=digest,
        dataset=dataset.name,
        framework=config.framework,
        loss=config.loss.kind,
        beta=config.beta,
        latents=config.latents,
        steps=config.steps,
        batch=config.batch,
        seed=config.seed,
        recon=final.recon,
        kl=final.kl,
        total=final.total,
        mig=scores.mig,
        dci=scores.dci,
        provenance=provenance(digest),
        wall_time=time.perf_counter() - start,
    )
    if out_dir is not None:
        scores_frame = pd.DataFrame(
            [
                {"run_id": run_id, "metric": "mig", "value": scores.mig, "bins": scores.bins, "samples": scores.samples},
                {"run_id": run_id, "metric": "dci", "value": scores.dci, "bins": scores.bins, "samples": scores.samples},
            ]
        )
        _write_run_artifacts(pathlib.Path(out_dir), config, result, scores_frame)
    logger.info(
        f"Run {run_id} finished: mig={record.mig:.4f} dci={record.dci:.4f} "
        f"recon={record.recon:.6f} in {record.wall_time:.1f}s"
    )
    return record


def records_frame(records: list[RunRecord]) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in records], columns=RUN_COLUMNS)


@dataclass(frozen=True)
class JobFailure:
    job: int
    dataset: str
    framework: str
    beta: float
    seed: int
    error: str


@dataclass
class SweepResult:
    records: list[RunRecord]
    failures: list[JobFailure]

    @property
    def ok(self) -> bool:
        return not self.failures


def _job_dir(root: pathlib.Path, job: SweepJob) -> pathlib.Path:
    return root / f"run-{job.index:04d}-{config_hash(job.config)[:8]}"


def _dataset_label(config: ExperimentConfig) -> str:
    """Name of the built dataset, as it appears in runs.csv"""
    try:
        return build_dataset(config.dataset).name
    except Exception:
        return config.dataset.name


def _run_job(job: SweepJob, root: str) -> tuple[int, RunRecord | None, JobFailure | None]:
    try:
        record = run_experiment(job.config, _job_dir(pathlib.Path(root), job))
        return job.index, record, None
    except Exception as e:
        logger.error(f"Sweep job {job.index} failed: {e}", exc_info=True)
        failure = JobFailure(
            job=job.index,
            dataset=_dataset_label(job.config),
            framework=job.config.framework,
            beta=job.config.beta,
            seed=job.config.seed,
            error=f"{type(e).__name__}: {e}",
        )
        return job.index, None, failure


def run_sweep(
    grid: SweepGrid,
    out_dir: str | os.PathLike[str],
    workers: int | None = None,
    jobs: list[SweepJob] | None = None,
) -> SweepResult:
    """
    Run every job of a grid, up to ``workers`` at a time in separate processes.

    Failed jobs are recorded and the sweep carries on. Writes ``runs.csv``
    (sorted by dataset, framework, beta, then job order), ``failures.csv``
    and ``timings.csv`` into ``out_dir``.
    """
    root = pathlib.Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    jobs = jobs if jobs is not None else grid.expand()
    logger.info(f"Starting sweep of {len(jobs)} runs with {workers or 1} worker(s) into {root}")

    if workers is None or workers <= 1:
        outcomes = [_run_job(job, str(root)) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_job, jobs, [str(root)] * len(jobs)))

    done = sorted(
        ((index, record) for index, record, _ in outcomes if record is not None),
        key=lambda item: (item[1].dataset, item[1].framework, item[1].beta, item[0]),
    )
    records = [record for _, record in done]
    failures = sorted((f for _, _, f in outcomes if f is not None), key=lambda f: f.job)

    write_csv(records_frame(records), root / "runs.csv")
    write_csv(pd.DataFrame([asdict(f) for f in failures], columns=FAILURE_COLUMNS), root / "failures.csv")
    write_csv(
        pd.DataFrame(
            [{"run_id": r.run_id, "wall_time": r.wall_time} for r in records],
            columns=["run_id", "wall_time"],
        ),
        root / "timings.csv",
    )
    logger.info(f"Sweep finished: {len(records)} succeeded, {len(failures)} failed")
    return SweepResult(records, failures)
