from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .core import (
    AdamWConfig,
    GraphError,
    OptimState,
    adamw_step,
    backward,
    embedding_init_,
    glorot_,
    grad_check,
)

__all__ = [
    "AdamWConfig",
    "CheckpointError",
    "GraphError",
    "OptimState",
    "adamw_step",
    "backward",
    "embedding_init_",
    "glorot_",
    "grad_check",
    "load_checkpoint",
    "save_checkpoint",
]
