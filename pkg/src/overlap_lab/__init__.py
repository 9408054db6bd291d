"""
overlap-lab - how a VAE's reconstruction loss shapes disentanglement

Ground-truth datasets, distance-structure analysis over factor traversals,
small Beta-VAE / Ada-GVAE models with an optional box-blur reconstruction
term, MIG/DCI scoring and an MCP tool server over the analysis layer.
"""

__version__ = "0.1.0"
__author__ = "Richard Chukwu"
__email__ = "richinex@gmail.com"

from .distances import DistanceKind, factor_importance, mean_factor_distance_matrix
from .errors import OverlapLabError
from .factor_space import FactorSpace

__all__ = [
    "DistanceKind",
    "FactorSpace",
    "OverlapLabError",
    "factor_importance",
    "mean_factor_distance_matrix",
]
