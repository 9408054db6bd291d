"""
Dataset registry, presets and manifests

Builders are registered with ``@register_dataset`` and looked up by name from a
``DatasetSpec``. File-backed datasets are described by a small key=value
manifest::

    preset=dsprites
    path=dsprites_imgs.npy
    layout=NHW
"""

import logging
import os
import pathlib
from collections.abc import Callable
from typing import Any, TypeVar

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import ConfigError, InvalidParamsError, ShapeMismatchError
from ..factor_space import FactorSpace
from .dots import DotsDataset
from .ground_truth import ArrayDataset, ChannelStats, GroundTruthDataset
from .npy import LAYOUTS, load_npy
from .xysquares import XYSquaresDataset, XYSquaresParams

logger = logging.getLogger(__name__)

# Published per-channel constants for raw [0, 1] data at 64x64
KNOWN_CHANNEL_STATS: dict[str, ChannelStats] = {
    "cars3d": ChannelStats(
        mean=(0.897667614997663, 0.889165802006751, 0.885147515814868),
        std=(0.225031955315030, 0.239946127898126, 0.247921063196844),
    ),
    "shapes3d": ChannelStats(
        mean=(0.502584966788819, 0.578759756608967, 0.603449973185958),
        std=(0.294081404355556, 0.344397908751721, 0.366168598152475),
    ),
    "smallnorb": ChannelStats(mean=(0.752091840108860,), std=(0.095638790168273,)),
    "dsprites": ChannelStats(mean=(0.042494423521890,), std=(0.195166458806261,)),
    "xysquares": ChannelStats(
        mean=(0.015625,) * 3,
        std=(0.124034734589209,) * 3,
    ),
}


class DatasetPreset(BaseModel):
    model_config = ConfigDict(frozen=True)

    factor_sizes: tuple[int, ...]
    factor_names: tuple[str, ...]
    layout: str
    channels: int


PRESETS: dict[str, DatasetPreset] = {
    "dsprites": DatasetPreset(
        factor_sizes=(3, 6, 40, 32, 32),
        factor_names=("shape", "scale", "orientation", "position_x", "position_y"),
        layout="NHW",
        channels=1,
    ),
    "smallnorb": DatasetPreset(
        factor_sizes=(5, 5, 9, 18, 6),
        factor_names=("category", "instance", "elevation", "rotation", "lighting"),
        layout="NHW",
        channels=1,
    ),
    "cars3d": DatasetPreset(
        factor_sizes=(4, 24, 183),
        factor_names=("elevation", "azimuth", "object_type"),
        layout="NHWC",
        channels=3,
    ),
    "shapes3d": DatasetPreset(
        factor_sizes=(10, 10, 10, 8, 4, 15),
        factor_names=("floor_hue", "wall_hue", "object_hue", "scale", "shape", "orientation"),
        layout="NHWC",
        channels=3,
    ),
}


def known_channel_stats(name: str) -> ChannelStats | None:
    return KNOWN_CHANNEL_STATS.get(name)


class DatasetManifest(BaseModel):
    """Describes an NPY-backed ground-truth dataset"""

    model_config = ConfigDict(frozen=True)

    name: str = "npy"
    path: str
    layout: str = "NCHW"
    factor_sizes: tuple[int, ...]
    factor_names: tuple[str, ...] = ()
    binary: bool | None = None

    @model_validator(mode="after")
    def _check(self) -> "DatasetManifest":
        if self.layout not in LAYOUTS:
            raise ValueError(f"layout must be one of {LAYOUTS}, got '{self.layout}'")
        if not self.factor_sizes or any(s < 1 for s in self.factor_sizes):
            raise ValueError(f"factor_sizes must be positive, got {self.factor_sizes}")
        if self.factor_names and len(self.factor_names) != len(self.factor_sizes):
            raise ValueError("factor_names and factor_sizes differ in length")
        return self


def _split_list(value: str | None) -> list[str]:
    if not value:
        return []
    return [v.strip() for v in value.split(",") if v.strip()]


def load_manifest(path: str | os.PathLike[str]) -> DatasetManifest:
    """
    Read a key=value dataset manifest.

    Keys: ``path`` (relative to the manifest), ``layout``, ``factor_sizes``,
    ``factor_names``, ``name``, ``binary`` and ``preset``; explicit keys
    override the preset.
    """
    manifest_path = pathlib.Path(path)
    if not manifest_path.is_file():
        raise ConfigError(f"Manifest not found: '{manifest_path}'")
    values = {k: v for k, v in dotenv_values(manifest_path).items() if v is not None}

    fields: dict[str, Any] = {}
    preset_name = values.pop("preset", None)
    if preset_name is not None:
        preset = PRESETS.get(preset_name)
        if preset is None:
            raise ConfigError(f"Unknown preset '{preset_name}', expected one of {sorted(PRESETS)}")
        fields.update(
            name=preset_name,
            layout=preset.layout,
            factor_sizes=preset.factor_sizes,
            factor_names=preset.factor_names,
        )
    if "path" in values:
        npy_path = pathlib.Path(values.pop("path"))
        if not npy_path.is_absolute():
            npy_path = manifest_path.parent / npy_path
        fields["path"] = str(npy_path)
    if "factor_sizes" in values:
        fields["factor_sizes"] = tuple(int(s) for s in _split_list(values.pop("factor_sizes")))
    if "factor_names" in values:
        fields["factor_names"] = tuple(_split_list(values.pop("factor_names")))
    if "binary" in values:
        fields["binary"] = values.pop("binary").lower() in ("1", "true", "yes")
    for key in ("name", "layout"):
        if key in values:
            fields[key] = values.pop(key)
    if values:
        logger.warning(f"Ignoring unknown manifest keys: {sorted(values)}")

    try:
        return DatasetManifest(**fields)
    except (ValidationError, ValueError) as e:
        raise ConfigError(f"Invalid manifest '{manifest_path}': {e}") from e


def write_manifest(path: str | os.PathLike[str], manifest: DatasetManifest) -> None:
    lines = [
        f"name={manifest.name}",
        f"path={manifest.path}",
        f"layout={manifest.layout}",
        f"factor_sizes={','.join(str(s) for s in manifest.factor_sizes)}",
    ]
    if manifest.factor_names:
        lines.append(f"factor_names={','.join(manifest.factor_names)}")
    if manifest.binary is not None:
        lines.append(f"binary={'true' if manifest.binary else 'false'}")
    pathlib.Path(path).write_text("\n".join(lines) + "\n")


def open_manifest(manifest: DatasetManifest) -> ArrayDataset:
    """Memory-map the NPY named by a manifest as a ground-truth dataset"""
    if not os.path.isfile(manifest.path):
        raise ConfigError(f"Dataset file not found: '{manifest.path}'")
    npy = load_npy(manifest.path, layout=manifest.layout, binary=manifest.binary)
    space = FactorSpace(sizes=manifest.factor_sizes, names=manifest.factor_names)
    if npy.shape[0] != space.total:
        raise ShapeMismatchError(
            f"'{manifest.path}' holds {npy.shape[0]} observations, "
            f"factor sizes {manifest.factor_sizes} need {space.total}"
        )
    return ArrayDataset(manifest.name, space, npy.as_nchw(), scale=npy.scale)


class DatasetSpec(BaseModel):
    """Names a dataset and its generator parameters"""

    model_config = ConfigDict(frozen=True)

    name: str = "xysquares"
    spacing: int = Field(default=8, ge=1)
    grid_points: int = Field(default=8, ge=1)
    square_size: int = Field(default=8, ge=1)
    image_size: int = Field(default=64, ge=1)
    num_squares: int = Field(default=3, ge=1, le=3)
    manifest: str | None = None

    @model_validator(mode="after")
    def _check(self) -> "DatasetSpec":
        if self.name == "npy" and not self.manifest:
            raise ValueError("dataset 'npy' needs a manifest path")
        return self

    def xysquares_params(self) -> XYSquaresParams:
        return XYSquaresParams(
            image_size=self.image_size,
            square_size=self.square_size,
            grid_points=self.grid_points,
            spacing=self.spacing,
            num_squares=self.num_squares,
        )


DatasetBuilder = Callable[[DatasetSpec], GroundTruthDataset]
B = TypeVar("B", bound=DatasetBuilder)

_dataset_registry: dict[str, dict[str, Any]] = {}


def register_dataset(name: str, description: str | None = None) -> Callable[[B], B]:
    """Register a builder turning a DatasetSpec into a dataset"""

    def decorator(func: B) -> B:
        _dataset_registry[name] = {
            "builder": func,
            "description": description or (func.__doc__ or "").strip(),
        }
        logger.debug(f"Dataset builder registered: {name}")
        return func

    return decorator


def get_registered_datasets() -> dict[str, str]:
    return {name: info["description"] for name, info in _dataset_registry.items()}


def build_dataset(spec: DatasetSpec) -> GroundTruthDataset:
    """
    Build the dataset a spec names.

    Raises:
        ConfigError: Unknown dataset name, missing manifest
        InvalidParamsError: Generator parameters violate their constraints
    """
    info = _dataset_registry.get(spec.name)
    if info is None:
        raise ConfigError(
            f"Unknown dataset '{spec.name}', expected one of {sorted(_dataset_registry)}"
        )
    dataset: GroundTruthDataset = info["builder"](spec)
    logger.info(f"Built dataset {dataset!r}")
    return dataset


@register_dataset("xysquares", description="Procedural coloured squares on a grid")
def _build_xysquares(spec: DatasetSpec) -> GroundTruthDataset:
    try:
        params = spec.xysquares_params()
    except ValidationError as e:
        raise InvalidParamsError(f"Invalid XYSquares parameters: {e}") from e
    return XYSquaresDataset(params)


@register_dataset("dots", description="Two single-pixel dots on an 8x8 canvas")
def _build_dots(spec: DatasetSpec) -> GroundTruthDataset:
    return DotsDataset()


@register_dataset("npy", description="NPY-backed dataset described by a manifest")
def _build_npy(spec: DatasetSpec) -> GroundTruthDataset:
    assert spec.manifest is not None
    return open_manifest(load_manifest(spec.manifest))
