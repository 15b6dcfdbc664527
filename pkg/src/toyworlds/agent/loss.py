"""Behavioral-cloning loss and per-step action log-likelihoods.

Per unmasked chunk step: binary cross-entropy over the 16 key logits and
2 button logits, categorical cross-entropy over each mouse-bucket vector,
plus an auxiliary binary cross-entropy tying goal-completion probability
to the per-step labels (weighted 0.1 by default). Steps are summed within
a chunk, then averaged over the batch; a fully masked chunk contributes
exactly zero.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from ..worldcore.types import KEY_INDEX, ActionEvent
from .cfg import PolicyLogits, softmax
from .model import split_factors


def encode_targets(chunks: list[tuple[ActionEvent, ...]], dtype=torch.float32):
    """Batch of 8-action chunks -> target tensors."""
    B = len(chunks)
    keys = torch.zeros(B, 8, 16, dtype=dtype)
    dx = torch.zeros(B, 8, dtype=torch.long)
    dy = torch.zeros(B, 8, dtype=torch.long)
    buttons = torch.zeros(B, 8, 2, dtype=dtype)
    for b, chunk in enumerate(chunks):
        for s, action in enumerate(chunk):
            for k in action.keys:
                keys[b, s, KEY_INDEX[k]] = 1.0
            dx[b, s] = action.mouse_dx + 3
            dy[b, s] = action.mouse_dy + 3
            buttons[b, s, 0] = 1.0 if action.left_button else 0.0
            buttons[b, s, 1] = 1.0 if action.right_button else 0.0
    return keys, dx, dy, buttons


def bc_loss(
    logits: torch.Tensor,        # [B, 8, 32]
    goal_logits: torch.Tensor,   # [B, 8]
    target_chunks: list[tuple[ActionEvent, ...]],
    pad_mask: torch.Tensor,      # [B, 8] True = real step
    goal_labels: torch.Tensor,   # [B, 8] float
    aux_goal_weight: float = 0.1,
) -> torch.Tensor:
    dtype = logits.dtype
    keys_t, dx_t, dy_t, buttons_t = encode_targets(target_chunks, dtype=dtype)
    keys_l, dx_l, dy_l, buttons_l = split_factors(logits)
    mask = pad_mask.to(dtype)

    key_term = F.binary_cross_entropy_with_logits(
        keys_l, keys_t, reduction="none").sum(-1)
    button_term = F.binary_cross_entropy_with_logits(
        buttons_l, buttons_t, reduction="none").sum(-1)
    dx_term = F.cross_entropy(dx_l.reshape(-1, 7), dx_t.reshape(-1),
                              reduction="none").view_as(mask)
    dy_term = F.cross_entropy(dy_l.reshape(-1, 7), dy_t.reshape(-1),
                              reduction="none").view_as(mask)
    aux_term = F.binary_cross_entropy_with_logits(
        goal_logits, goal_labels.to(dtype), reduction="none")

    per_step = key_term + button_term + dx_term + dy_term + aux_goal_weight * aux_term
    return (per_step * mask).sum(dim=1).mean()


def action_nll(logits: PolicyLogits, chunk: list[ActionEvent],
               pad_mask: list[bool]) -> tuple[float, int]:
    """Total negative log-likelihood over unmasked steps (no auxiliary
    term) plus the step count; numpy path used for held-out evaluation."""
    total = 0.0
    steps = 0
    for s, (action, real) in enumerate(zip(chunk, pad_mask)):
        if not real:
            continue
        steps += 1
        for i in range(16):
            target = 1.0 if _key_at(action, i) else 0.0
            total += _bce_logit(logits.keys[s, i], target)
        probs_dx = softmax(logits.mouse_dx[s])
        probs_dy = softmax(logits.mouse_dy[s])
        total += -np.log(max(probs_dx[action.mouse_dx + 3], 1e-300))
        total += -np.log(max(probs_dy[action.mouse_dy + 3], 1e-300))
        total += _bce_logit(logits.buttons[s, 0], 1.0 if action.left_button else 0.0)
        total += _bce_logit(logits.buttons[s, 1], 1.0 if action.right_button else 0.0)
    return total, steps


def _key_at(action: ActionEvent, index: int) -> bool:
    from ..worldcore.types import KEY_ORDER
    return KEY_ORDER[index] in action.keys


def _bce_logit(logit: float, target: float) -> float:
    # numerically stable -log sigmoid style
    z = max(logit, 0.0)
    return z - logit * target + np.log1p(np.exp(-abs(logit)))
