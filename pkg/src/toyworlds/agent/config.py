"""Agent hyperparameters."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path


@dataclass(frozen=True)
class AgentConfig:
    embed_dim: int = 64
    cell_dim: int = 16
    conv_channels: int = 24
    memory_window: int = 16
    chunk_len: int = 8
    key_count: int = 16
    mouse_buckets: int = 7
    attn_heads: int = 4
    head_hidden: int = 128
    vocab_size: int = 512
    cfg_scale: float = 1.0          # logit extrapolation strength at inference
    instruction_dropout: float = 0.1
    learning_rate: float = 0.05
    momentum: float = 0.9
    aux_goal_weight: float = 0.1
    seed: int = 0
    dtype: str = "float32"

    def validate(self) -> None:
        for name in ("embed_dim", "cell_dim", "memory_window", "attn_heads",
                     "head_hidden", "vocab_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.chunk_len != 8 or self.key_count != 16 or self.mouse_buckets != 7:
            raise ValueError("action head shape is fixed: 8 steps, 16 keys, 7 buckets")
        if not 0 <= self.instruction_dropout < 1:
            raise ValueError("instruction_dropout must be in [0, 1)")
        if self.cfg_scale < 0:
            raise ValueError("cfg_scale must be non-negative")
        if self.embed_dim % self.attn_heads != 0:
            raise ValueError("embed_dim must be divisible by attn_heads")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "AgentConfig":
        cfg = AgentConfig(**json.loads(text))
        cfg.validate()
        return cfg

    @staticmethod
    def from_file(path: str | Path) -> "AgentConfig":
        return AgentConfig.from_json(Path(path).read_text())


TINY = AgentConfig(embed_dim=8, cell_dim=2, conv_channels=3, memory_window=2,
                   attn_heads=2, head_hidden=8, vocab_size=32, dtype="float64")
