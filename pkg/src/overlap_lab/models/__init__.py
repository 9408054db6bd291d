"""
VAE models, optimiser and training loops
"""

from .adagvae import (
    AveragedPosteriors,
    ObservationPair,
    adagvae_loss,
    average_posteriors,
    estimate_shared_mask,
    sample_pair,
    sample_pairs,
    symmetric_kl,
)
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .optim import Adam, AdamState, adam_step
from .train import LossRecord, TrainConfig, TrainingData, TrainResult, train_adagvae, train_beta_vae, train_model
from .vae import LatentDistribution, LossBreakdown, MlpVae, beta_vae_loss, kl_loss, recon_loss, reparameterize

__all__ = [
    "Adam",
    "AdamState",
    "AveragedPosteriors",
    "Checkpoint",
    "LatentDistribution",
    "LossBreakdown",
    "LossRecord",
    "MlpVae",
    "ObservationPair",
    "TrainConfig",
    "TrainResult",
    "TrainingData",
    "adagvae_loss",
    "adam_step",
    "average_posteriors",
    "beta_vae_loss",
    "estimate_shared_mask",
    "kl_loss",
    "load_checkpoint",
    "recon_loss",
    "reparameterize",
    "sample_pair",
    "sample_pairs",
    "save_checkpoint",
    "symmetric_kl",
    "train_adagvae",
    "train_beta_vae",
    "train_model",
]
