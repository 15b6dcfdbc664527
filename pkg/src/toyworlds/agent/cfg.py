"""Classifier-free guidance over factored policy logits.

Inference computes the policy twice, with and without the instruction,
and shifts every logit in the conditioned direction:

    guided = cond + scale * (cond - uncond)

scale 0 returns the conditioned logits unchanged; equal inputs are a
fixed point for any scale. The shift is applied elementwise to each
factor (per-key Bernoulli logits, the two mouse-bucket vectors, button
logits) at every chunk step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..worldcore.rng import Rng
from ..worldcore.types import KEY_ORDER, ActionEvent


@dataclass(frozen=True)
class PolicyLogits:
    """Factored logits for one 8-step action chunk."""

    keys: np.ndarray       # [8, 16] independent Bernoulli logits
    mouse_dx: np.ndarray   # [8, 7] categorical over buckets -3..3
    mouse_dy: np.ndarray   # [8, 7]
    buttons: np.ndarray    # [8, 2] Bernoulli (left, right)

    def validate(self) -> None:
        shapes = {"keys": (8, 16), "mouse_dx": (8, 7), "mouse_dy": (8, 7),
                  "buttons": (8, 2)}
        for name, shape in shapes.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")

    @staticmethod
    def from_flat(flat: np.ndarray) -> "PolicyLogits":
        """[8, 32] factor block -> structured logits."""
        return PolicyLogits(
            keys=flat[:, :16].copy(),
            mouse_dx=flat[:, 16:23].copy(),
            mouse_dy=flat[:, 23:30].copy(),
            buttons=flat[:, 30:32].copy(),
        )


def cfg_combine(cond: PolicyLogits, uncond: PolicyLogits, scale: float) -> PolicyLogits:
    if scale < 0:
        raise ValueError("guidance scale must be non-negative")
    out = {}
    for name in ("keys", "mouse_dx", "mouse_dy", "buttons"):
        c = getattr(cond, name)
        u = getattr(uncond, name)
        if c.shape != u.shape:
            raise ValueError(f"{name}: shape mismatch {c.shape} vs {u.shape}")
        out[name] = c + scale * (c - u)
    return PolicyLogits(**out)


def decode_chunk(logits: PolicyLogits, base_tick: int, *, sample: bool = False,
                 temperature: float = 1.0, rng: Rng | None = None) -> list[ActionEvent]:
    """Logits -> 8 concrete actions. Argmax by default (reproducible);
    temperature sampling behind the flag."""
    actions = []
    for s in range(8):
        if sample:
            assert rng is not None, "sampling needs an rng"
            keys = frozenset(
                k for i, k in enumerate(KEY_ORDER)
                if rng.random() < _sigmoid(logits.keys[s, i] / temperature))
            dx = _sample_categorical(logits.mouse_dx[s] / temperature, rng) - 3
            dy = _sample_categorical(logits.mouse_dy[s] / temperature, rng) - 3
            left = rng.random() < _sigmoid(logits.buttons[s, 0] / temperature)
            right = rng.random() < _sigmoid(logits.buttons[s, 1] / temperature)
        else:
            keys = frozenset(k for i, k in enumerate(KEY_ORDER) if logits.keys[s, i] > 0)
            dx = int(np.argmax(logits.mouse_dx[s])) - 3
            dy = int(np.argmax(logits.mouse_dy[s])) - 3
            left = bool(logits.buttons[s, 0] > 0)
            right = bool(logits.buttons[s, 1] > 0)
        actions.append(ActionEvent(tick=base_tick + s, keys=keys, mouse_dx=dx,
                                   mouse_dy=dy, left_button=left, right_button=right))
    return actions


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + np.exp(-x))


def _sample_categorical(logits: np.ndarray, rng: Rng) -> int:
    probs = softmax(logits)
    u = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return len(probs) - 1
