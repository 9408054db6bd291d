"""
Model checkpoints

A checkpoint is an uncompressed ``.npz`` archive holding a format version, the
architecture, the training config as JSON, the input normalisation constants
and every parameter array under ``param/<name>``. Arrays round-trip bit-exact.
"""

import logging
import os
from dataclasses import dataclass

import numpy as np

from ..data.ground_truth import ChannelStats
from ..errors import ConfigError
from .train import TrainConfig, TrainResult
from .vae import MlpVae

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
PARAM_PREFIX = "param/"


@dataclass
class Checkpoint:
    model: MlpVae
    config: TrainConfig
    stats: ChannelStats
    image_shape: tuple[int, int, int]
    dataset: str


def save_checkpoint(path: str | os.PathLike[str], result: TrainResult) -> None:
    model = result.model
    arrays: dict[str, np.ndarray] = {
        "format_version": np.asarray(CHECKPOINT_VERSION),
        "input_dim": np.asarray(model.input_dim),
        "latents": np.asarray(model.latents),
        "hidden": np.asarray(model.hidden, dtype=np.int64),
        "image_shape": np.asarray(result.image_shape, dtype=np.int64),
        "stats_mean": np.asarray(result.stats.mean),
        "stats_std": np.asarray(result.stats.std),
        "config_json": np.asarray(result.config.model_dump_json()),
        "dataset": np.asarray(result.dataset),
    }
    for name, p in model.params.items():
        arrays[PARAM_PREFIX + name] = p
    with open(path, "wb") as fp:
        np.savez(fp, **arrays)
    logger.info(f"Saved checkpoint to {path}")


def load_checkpoint(path: str | os.PathLike[str]) -> Checkpoint:
    """
    Raises:
        ConfigError: Missing file, unknown format version or inconsistent shapes
    """
    if not os.path.isfile(path):
        raise ConfigError(f"Checkpoint not found: '{path}'")
    with np.load(path, allow_pickle=False) as archive:
        version = int(archive["format_version"])
        if version != CHECKPOINT_VERSION:
            raise ConfigError(f"Unsupported checkpoint version {version} in '{path}'")
        model = MlpVae(
            int(archive["input_dim"]),
            int(archive["latents"]),
            hidden=tuple(int(h) for h in archive["hidden"]),
        )
        for name, current in model.params.items():
            key = PARAM_PREFIX + name
            if key not in archive.files or archive[key].shape != current.shape:
                raise ConfigError(f"Checkpoint '{path}' lacks a matching array for '{name}'")
            model.params[name] = archive[key].copy()
        config = TrainConfig.model_validate_json(str(archive["config_json"]))
        stats = ChannelStats(
            mean=tuple(archive["stats_mean"].tolist()), std=tuple(archive["stats_std"].tolist())
        )
        shape = tuple(int(s) for s in archive["image_shape"])
        dataset = str(archive["dataset"])
    logger.info(f"Loaded checkpoint '{path}' (Z={model.latents}, input={model.input_dim})")
    return Checkpoint(model, config, stats, shape, dataset)  # type: ignore[arg-type]
