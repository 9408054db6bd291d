"""
Shared fixtures: small datasets, seeded generators and an isolated output root
"""

import os
import pathlib

import numpy as np
import pytest

from overlap_lab.data import DotsDataset, XYSquaresDataset, XYSquaresParams
from overlap_lab.utils.validation import set_output_root


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def xysquares() -> XYSquaresDataset:
    """The standard 64x64, three-square, spacing-8 dataset"""
    return XYSquaresDataset()


@pytest.fixture
def reduced_squares() -> XYSquaresDataset:
    """Two squares on 16x16 images, four grid points, spacing 4"""
    return XYSquaresDataset(XYSquaresParams.reduced(spacing=4))


@pytest.fixture
def overlapping_squares() -> XYSquaresDataset:
    return XYSquaresDataset(XYSquaresParams.reduced(spacing=1))


@pytest.fixture
def dots() -> DotsDataset:
    return DotsDataset()


@pytest.fixture
def output_root(tmp_path):
    """Point the output root at a temporary directory for one test"""
    set_output_root(str(tmp_path))
    yield tmp_path
    set_output_root(None)


@pytest.fixture
def dsprites_path() -> pathlib.Path:
    path = os.getenv("OVERLAP_LAB_DSPRITES_NPY")
    if not path or not pathlib.Path(path).is_file():
        pytest.skip("OVERLAP_LAB_DSPRITES_NPY is not set to an existing file")
    return pathlib.Path(path)
