from .config import ModelConfig, TrainConfig
from .masks import AttentionMasks, build_masks
from .network import (
    Denoiser,
    boundary_tensors,
    build_model,
    condition_tensors,
    sinusoidal_embedding,
)
from .training import compute_loss, fine_tune, prepare_records, train
from .checkpoint import checkpoint_digest, load_checkpoint, save_checkpoint

__all__ = [
    "AttentionMasks",
    "Denoiser",
    "ModelConfig",
    "TrainConfig",
    "boundary_tensors",
    "build_masks",
    "build_model",
    "checkpoint_digest",
    "compute_loss",
    "condition_tensors",
    "fine_tune",
    "load_checkpoint",
    "prepare_records",
    "save_checkpoint",
    "sinusoidal_embedding",
    "train",
]
