"""Instructable policy: encoders, memory attention, guidance, BC training."""

from .actor import AgentPolicy, AgentSimClient
from .cfg import PolicyLogits, cfg_combine, decode_chunk, softmax
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import TINY, AgentConfig
from .loss import action_nll, bc_loss, encode_targets
from .model import (
    ACTION_FACTOR_DIM,
    InstructionEncoder,
    ObservationEncoder,
    PolicyNet,
    frames_to_tensors,
    hash_token,
    split_factors,
    tokenize,
)
from .params import flatten_params, layout_map, load_flat_params, param_hash
from .train import (
    StepMetrics,
    TrainingError,
    TrainResult,
    prepare_batch,
    train,
    train_step,
)

__all__ = [
    "ACTION_FACTOR_DIM", "AgentConfig", "AgentPolicy", "AgentSimClient",
    "CheckpointError", "InstructionEncoder", "ObservationEncoder", "PolicyLogits",
    "PolicyNet", "StepMetrics", "TINY", "TrainResult", "TrainingError",
    "action_nll", "bc_loss", "cfg_combine", "decode_chunk", "encode_targets",
    "flatten_params", "frames_to_tensors", "hash_token", "layout_map",
    "load_checkpoint", "load_flat_params", "param_hash", "prepare_batch",
    "save_checkpoint", "softmax", "split_factors", "tokenize", "train",
    "train_step",
]
