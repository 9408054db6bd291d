"""
Ground-truth datasets: procedural generators, NPY ingestion and transforms
"""

from .dots import DotsDataset
from .ground_truth import (
    ArrayDataset,
    ChannelStats,
    GroundTruthDataset,
    Observation,
    ResizedDataset,
    StandardisedDataset,
)
from .npy import NpyArray, load_npy, save_npy
from .registry import (
    KNOWN_CHANNEL_STATS,
    PRESETS,
    DatasetManifest,
    DatasetSpec,
    build_dataset,
    get_registered_datasets,
    known_channel_stats,
    load_manifest,
    open_manifest,
    register_dataset,
    write_manifest,
)
from .transforms import channel_stats, resize_bilinear, standardise, unstandardise
from .xysquares import XYSquaresDataset, XYSquaresParams, xysquares_generate

__all__ = [
    "KNOWN_CHANNEL_STATS",
    "PRESETS",
    "ArrayDataset",
    "ChannelStats",
    "DatasetManifest",
    "DatasetSpec",
    "DotsDataset",
    "GroundTruthDataset",
    "NpyArray",
    "Observation",
    "ResizedDataset",
    "StandardisedDataset",
    "XYSquaresDataset",
    "XYSquaresParams",
    "build_dataset",
    "channel_stats",
    "get_registered_datasets",
    "known_channel_stats",
    "load_manifest",
    "load_npy",
    "open_manifest",
    "register_dataset",
    "resize_bilinear",
    "save_npy",
    "standardise",
    "unstandardise",
    "write_manifest",
    "xysquares_generate",
]
