"""
Experiment configs, run/sweep orchestration and artifact writers
"""

from .artifacts import emit_observation, emit_pgm, matrix_frame, read_pgm, write_csv
from .config import (
    EvalSpec,
    ExperimentConfig,
    LossSpec,
    SweepGrid,
    SweepJob,
    config_hash,
    derive_seed,
    dump_config,
    full_scale,
    load_config,
    load_grid,
)
from .runner import JobFailure, RunRecord, SweepResult, run_experiment, run_sweep

__all__ = [
    "EvalSpec",
    "ExperimentConfig",
    "JobFailure",
    "LossSpec",
    "RunRecord",
    "SweepGrid",
    "SweepJob",
    "SweepResult",
    "config_hash",
    "derive_seed",
    "dump_config",
    "emit_observation",
    "emit_pgm",
    "full_scale",
    "load_config",
    "load_grid",
    "matrix_frame",
    "read_pgm",
    "run_experiment",
    "run_sweep",
    "write_csv",
]
