"""Flat parameter vector with a named layout map."""

from __future__ import annotations

import hashlib

import numpy as np
import torch

from .model import PolicyNet


def layout_map(net: PolicyNet) -> list[dict]:
    """Name, shape, and flat-vector offset of every trainable tensor; the
    entries partition the vector exactly."""
    entries = []
    offset = 0
    for name, p in sorted(net.named_parameters()):
        size = p.numel()
        entries.append({"name": name, "shape": list(p.shape), "offset": offset,
                        "size": size})
        offset += size
    return entries


def flatten_params(net: PolicyNet) -> np.ndarray:
    chunks = [p.detach().cpu().numpy().ravel() for _, p in sorted(net.named_parameters())]
    return np.concatenate(chunks) if chunks else np.zeros(0)


def load_flat_params(net: PolicyNet, vector: np.ndarray) -> None:
    offset = 0
    with torch.no_grad():
        for _, p in sorted(net.named_parameters()):
            size = p.numel()
            block = vector[offset : offset + size].reshape(tuple(p.shape))
            p.copy_(torch.as_tensor(block, dtype=p.dtype))
            offset += size
    if offset != vector.size:
        raise ValueError(f"vector has {vector.size} values, model needs {offset}")


def param_hash(net: PolicyNet) -> str:
    return hashlib.sha256(flatten_params(net).astype(np.float64).tobytes()).hexdigest()
