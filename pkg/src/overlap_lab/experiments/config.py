"""
Experiment configs and sweep grids

Both are flat ``key=value`` files::

    dataset=xysquares
    spacing=8
    framework=ada-gvae
    beta=0.001

In a sweep grid any value may be a comma list; the grid is the Cartesian
product of all listed values, run ``repeats`` times with derived seeds.
"""

import hashlib
import itertools
import json
import logging
import os
import pathlib
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..blur import DEFAULT_ALPHA, DEFAULT_RADIUS, Padding
from ..data.registry import DatasetSpec
from ..errors import ConfigError
from ..models.train import Framework, TrainConfig

logger = logging.getLogger(__name__)

FULL_BATCH = 256
FULL_STEPS = 57_600
FULL_EVAL_SAMPLES = 10_000

DATASET_KEYS = ("dataset", "spacing", "grid_points", "square_size", "image_size", "num_squares", "manifest")
LOSS_KEYS = ("loss", "radius", "alpha", "padding")
EVAL_KEYS = {"eval_bins": "bins", "eval_samples": "samples"}
RUN_KEYS = ("framework", "beta", "latents", "steps", "batch", "lr", "seed", "log_every")


class LossSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["mse", "blur-mse"] = "mse"
    radius: int = Field(default=DEFAULT_RADIUS, ge=1)
    alpha: float = Field(default=DEFAULT_ALPHA, gt=0)
    padding: Padding = "zero"


class EvalSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    bins: int = Field(default=20, ge=2)
    samples: int = Field(default=5000, ge=50)


class ExperimentConfig(BaseModel):
    """One training run: dataset, framework, loss and hyper-parameters"""

    model_config = ConfigDict(frozen=True)

    dataset: DatasetSpec = DatasetSpec()
    framework: Framework = "beta-vae"
    loss: LossSpec = LossSpec()
    beta: float = Field(default=0.001, gt=0)
    latents: int = Field(default=9, ge=1)
    steps: int = Field(default=5000, ge=1)
    batch: int = Field(default=64, ge=1)
    lr: float = Field(default=1e-3, gt=0)
    seed: int = Field(default=0, ge=0)
    log_every: int = Field(default=100, ge=1)
    eval: EvalSpec = EvalSpec()

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            framework=self.framework,
            beta=self.beta,
            latents=self.latents,
            lr=self.lr,
            batch=self.batch,
            steps=self.steps,
            seed=self.seed,
            loss=self.loss.kind,
            radius=self.loss.radius,
            alpha=self.loss.alpha,
            padding=self.loss.padding,
            log_every=self.log_every,
        )

    def to_flat(self) -> dict[str, str]:
        flat: dict[str, str] = {"dataset": self.dataset.name}
        dataset = self.dataset.model_dump(exclude={"name"})
        for key, value in dataset.items():
            if value is not None:
                flat[key] = str(value)
        flat["loss"] = self.loss.kind
        flat.update(radius=str(self.loss.radius), alpha=repr(self.loss.alpha), padding=self.loss.padding)
        for key in RUN_KEYS:
            value = getattr(self, key)
            flat[key] = repr(value) if isinstance(value, float) else str(value)
        flat["eval_bins"] = str(self.eval.bins)
        flat["eval_samples"] = str(self.eval.samples)
        return dict(sorted(flat.items()))

    @classmethod
    def from_flat(cls, flat: dict[str, str]) -> "ExperimentConfig":
        """
        Build a config from string key/values.

        Raises:
            ConfigError: Unknown keys or invalid values
        """
        unknown = set(flat) - set(DATASET_KEYS) - set(LOSS_KEYS) - set(EVAL_KEYS) - set(RUN_KEYS)
        if unknown:
            raise ConfigError(f"Unknown config keys: {sorted(unknown)}")
        dataset: dict[str, Any] = {}
        for key in DATASET_KEYS:
            if key in flat:
                dataset["name" if key == "dataset" else key] = flat[key]
        loss = {("kind" if k == "loss" else k): flat[k] for k in LOSS_KEYS if k in flat}
        evals = {field: flat[key] for key, field in EVAL_KEYS.items() if key in flat}
        run = {k: flat[k] for k in RUN_KEYS if k in flat}
        try:
            return cls(
                dataset=DatasetSpec(**dataset),
                loss=LossSpec(**loss),
                eval=EvalSpec(**evals),
                **run,
            )
        except ValidationError as e:
            raise ConfigError(f"Invalid experiment config: {e}") from e


def _read_flat(path: str | os.PathLike[str]) -> dict[str, str]:
    config_path = pathlib.Path(path)
    if not config_path.is_file():
        raise ConfigError(f"Config file not found: '{config_path}'")
    return {k: v.strip() for k, v in dotenv_values(config_path).items() if v is not None}


def load_config(path: str | os.PathLike[str]) -> ExperimentConfig:
    return ExperimentConfig.from_flat(_read_flat(path))


def dump_config(config: ExperimentConfig, path: str | os.PathLike[str]) -> None:
    lines = [f"{key}={value}" for key, value in config.to_flat().items()]
    pathlib.Path(path).write_text("\n".join(lines) + "\n")


def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON form; equal for equal configs"""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def full_scale(config: ExperimentConfig) -> ExperimentConfig:
    """Switch to the full batch size, step count and evaluation size"""
    return config.model_copy(
        update={
            "batch": FULL_BATCH,
            "steps": FULL_STEPS,
            "eval": config.eval.model_copy(update={"samples": FULL_EVAL_SAMPLES}),
        }
    )


def derive_seed(master: int, repeat: int, point: dict[str, str]) -> int:
    """
    Seed of one sweep run, from the master seed, the repeat index and the
    grid point's own values. Adding grid values never changes other runs.
    """
    digest = hashlib.sha256(json.dumps(point, sort_keys=True).encode()).digest()
    point_key = int.from_bytes(digest[:8], "big")
    state = np.random.SeedSequence([master, repeat, point_key]).generate_state(1, dtype=np.uint32)
    return int(state[0])


@dataclass(frozen=True)
class SweepJob:
    index: int
    repeat: int
    point: dict[str, str]
    config: ExperimentConfig


class SweepGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    axes: dict[str, tuple[str, ...]]
    repeats: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)

    @property
    def size(self) -> int:
        size = 1
        for values in self.axes.values():
            size *= len(values)
        return size

    def expand(self) -> list[SweepJob]:
        """All (grid point, repeat) jobs in a fixed order"""
        keys = sorted(self.axes)
        jobs: list[SweepJob] = []
        for values in itertools.product(*(self.axes[k] for k in keys)):
            point = dict(zip(keys, values, strict=True))
            for repeat in range(self.repeats):
                seed = derive_seed(self.seed, repeat, point)
                config = ExperimentConfig.from_flat({**point, "seed": str(seed)})
                jobs.append(SweepJob(len(jobs), repeat, point, config))
        return jobs


def load_grid(path: str | os.PathLike[str]) -> SweepGrid:
    """Parse a sweep grid; comma lists become axes, ``repeats``/``seed`` are sweep-level"""
    flat = _read_flat(path)
    repeats = flat.pop("repeats", "1")
    seed = flat.pop("seed", "0")
    axes = {k: tuple(v.strip() for v in value.split(",") if v.strip()) for k, value in flat.items()}
    empty = [k for k, v in axes.items() if not v]
    if empty:
        raise ConfigError(f"Grid keys without values: {empty}")
    try:
        grid = SweepGrid(axes=axes, repeats=int(repeats), seed=int(seed))
    except (ValidationError, ValueError) as e:
        raise ConfigError(f"Invalid sweep grid '{path}': {e}") from e
    # validates every point before anything runs
    grid.expand()
    logger.info(f"Loaded sweep grid '{path}': {grid.size} points x {grid.repeats} repeats")
    return grid
