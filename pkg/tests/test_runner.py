"""
Tests for single runs and sweeps
"""

from unittest.mock import patch

import pandas as pd
import pytest

from overlap_lab import __version__
from overlap_lab.errors import TrainingDivergedError
from overlap_lab.experiments import ExperimentConfig, SweepGrid, load_config, run_experiment, run_sweep
from overlap_lab.experiments.runner import RUN_COLUMNS, provenance
from overlap_lab.models import load_checkpoint, train_model

TINY = {"dataset": "dots", "latents": "2", "steps": "6", "batch": "8", "log_every": "3", "eval_samples": "200"}


@pytest.fixture
def tiny_config() -> ExperimentConfig:
    return ExperimentConfig.from_flat(TINY)


def test_run_experiment_writes_artifacts(tiny_config, tmp_path):
    record = run_experiment(tiny_config, tmp_path / "run")
    assert record.dataset == "dots"
    assert record.run_id == record.config_hash[:12]
    assert record.provenance == f"overlap-lab@{__version__}+cfg.{record.config_hash[:8]}"
    assert 0.0 <= record.mig <= 1.0 and 0.0 <= record.dci <= 1.0

    run_dir = tmp_path / "run"
    assert load_config(run_dir / "config.cfg") == tiny_config
    assert load_checkpoint(run_dir / "checkpoint.npz").model.latents == 2
    trace = pd.read_csv(run_dir / "trace.csv")
    assert trace["step"].tolist() == [3, 6]
    scores = pd.read_csv(run_dir / "scores.csv")
    assert scores["metric"].tolist() == ["mig", "dci"]
    assert scores["value"].tolist() == pytest.approx([record.mig, record.dci])


def test_run_experiment_is_deterministic(tiny_config):
    """Records compare equal apart from the wall time"""
    first = run_experiment(tiny_config)
    second = run_experiment(tiny_config)
    assert first == second
    assert set(first.to_row()) == set(RUN_COLUMNS)


def test_provenance_format():
    assert provenance("abcdef0123456789") == f"overlap-lab@{__version__}+cfg.abcdef01"


def _grid() -> SweepGrid:
    axes = {key: (value,) for key, value in TINY.items()}
    axes["framework"] = ("beta-vae", "ada-gvae")
    return SweepGrid(axes=axes, repeats=2, seed=3)


@pytest.mark.slow
def test_sweep_tables_do_not_depend_on_workers(tmp_path):
    serial = run_sweep(_grid(), tmp_path / "serial", workers=1)
    parallel = run_sweep(_grid(), tmp_path / "parallel", workers=2)
    assert serial.ok and parallel.ok
    assert len(serial.records) == 4
    assert (tmp_path / "serial" / "runs.csv").read_bytes() == (tmp_path / "parallel" / "runs.csv").read_bytes()
    runs = pd.read_csv(tmp_path / "serial" / "runs.csv")
    assert list(runs.columns) == RUN_COLUMNS
    assert runs["framework"].tolist() == ["ada-gvae", "ada-gvae", "beta-vae", "beta-vae"]
    assert len(list((tmp_path / "serial").glob("run-*"))) == 4


def test_sweep_records_failures(tmp_path):
    """A diverging job is recorded and the others still finish"""
    def flaky_train(dataset, config):
        if config.framework == "ada-gvae":
            raise TrainingDivergedError("loss became nan", step=2)
        return train_model(dataset, config)

    grid = SweepGrid(axes={**{k: (v,) for k, v in TINY.items()}, "framework": ("beta-vae", "ada-gvae")})
    with patch("overlap_lab.experiments.runner.train_model", side_effect=flaky_train):
        result = run_sweep(grid, tmp_path, workers=1)

    assert not result.ok
    assert len(result.records) == 1
    assert result.failures[0].framework == "ada-gvae"
    assert "TrainingDivergedError" in result.failures[0].error
    failures = pd.read_csv(tmp_path / "failures.csv")
    assert failures["job"].tolist() == [1]
    assert pd.read_csv(tmp_path / "runs.csv").shape[0] == 1
    assert pd.read_csv(tmp_path / "timings.csv").columns.tolist() == ["run_id", "wall_time"]


def test_sweep_survives_unexpected_errors(tmp_path):
    """Errors outside the package hierarchy are recorded like any other failure"""
    grid = SweepGrid(axes={"beta": ("0.001", "0.1")}, repeats=1, seed=5)
    with patch("overlap_lab.experiments.runner.run_experiment", side_effect=ValueError("Input contains NaN")):
        result = run_sweep(grid, tmp_path)

    assert [f.job for f in result.failures] == [0, 1]
    assert all(f.error == "ValueError: Input contains NaN" for f in result.failures)
    assert {f.dataset for f in result.failures} == {"xysquares"}
    assert (tmp_path / "runs.csv").is_file()
    assert pd.read_csv(tmp_path / "failures.csv")["job"].tolist() == [0, 1]
