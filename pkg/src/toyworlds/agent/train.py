"""Behavioral-cloning training: SGD with momentum, instruction dropout.

Each example's instruction is replaced by the empty string with
probability `instruction_dropout`, which is what trains the
unconditioned policy that guidance extrapolates away from at inference.
Everything is seeded; two runs with the same seed produce bit-identical
parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import torch

from ..datapipe.examples import TrainingExample
from ..worldcore.rng import Rng, derive_seed
from .config import AgentConfig
from .loss import bc_loss
from .model import PolicyNet


class TrainingError(Exception):
    pass


@dataclass
class StepMetrics:
    step: int
    loss: float
    grad_norm: float
    rejected: bool = False


@dataclass
class TrainResult:
    net: PolicyNet
    metrics: list[StepMetrics] = field(default_factory=list)
    fast_eval: list[tuple[int, float]] = field(default_factory=list)
    rejected_steps: int = 0


def prepare_batch(net: PolicyNet, examples: Sequence[TrainingExample],
                  drop_instruction: Sequence[bool]):
    """Encode frames/instructions and pack memory for a batch."""
    dtype = net.torch_dtype()
    keep = net.cfg.memory_window + 1  # stored context may exceed the model's window
    all_cells: list[bytes] = []
    spans: list[tuple[int, int]] = []
    for ex in examples:
        start = len(all_cells)
        all_cells.extend(ex.context_cells[-keep:])
        spans.append((start, len(all_cells)))
    pooled, grids = net.encode_frames(all_cells)

    current = torch.stack([pooled[e - 1] for _, e in spans])
    current_grid = torch.stack([grids[e - 1] for _, e in spans])
    memory_stacks = [pooled[s : e - 1].detach() for s, e in spans]
    memory, mem_mask = net.pack_memory(memory_stacks)

    texts = ["" if drop else ex.instruction
             for ex, drop in zip(examples, drop_instruction)]
    instr = net.instr_encoder(texts)

    pad_mask = torch.tensor([ex.pad_mask for ex in examples], dtype=torch.bool)
    goal_labels = torch.tensor([[1.0 if g else 0.0 for g in ex.goal_labels]
                                for ex in examples], dtype=dtype)
    chunks = [ex.target for ex in examples]
    return current, current_grid, instr, memory, mem_mask, chunks, pad_mask, goal_labels


def train_step(net: PolicyNet, optimizer: torch.optim.Optimizer,
               examples: Sequence[TrainingExample],
               drop_instruction: Sequence[bool], step: int,
               clip_norm: float = 5.0) -> StepMetrics:
    """One gradient step; a non-finite gradient rejects the step."""
    (current, current_grid, instr, memory, mem_mask, chunks, pad_mask,
     goal_labels) = prepare_batch(net, examples, drop_instruction)
    logits, goal_logits = net.forward_policy(current, current_grid, instr,
                                             memory, mem_mask)
    loss = bc_loss(logits, goal_logits, chunks, pad_mask, goal_labels,
                   aux_goal_weight=net.cfg.aux_goal_weight)
    loss_value = float(loss.detach())
    if not math.isfinite(loss_value):
        raise TrainingError(f"non-finite loss at step {step}")
    optimizer.zero_grad()
    loss.backward()
    grad_sq = 0.0
    finite = True
    for p in net.parameters():
        if p.grad is not None:
            g = p.grad
            if not torch.all(torch.isfinite(g)):
                finite = False
                break
            grad_sq += float((g * g).sum())
    grad_norm = math.sqrt(grad_sq)
    if not finite:
        optimizer.zero_grad()
        return StepMetrics(step=step, loss=loss_value, grad_norm=float("nan"),
                           rejected=True)
    if clip_norm and grad_norm > clip_norm:
        scale = clip_norm / grad_norm
        for p in net.parameters():
            if p.grad is not None:
                p.grad.mul_(scale)
    optimizer.step()
    return StepMetrics(step=step, loss=loss_value, grad_norm=grad_norm)


def train(
    cfg: AgentConfig,
    sample_batch: Callable[[Rng, int], list[TrainingExample]],
    steps: int,
    batch_size: int = 64,
    *,
    no_language: bool = False,
    lr_decay_at: float = 0.75,
    lr_decay_factor: float = 0.3,
    fast_eval: Callable[[PolicyNet], float] | None = None,
    fast_eval_every: int = 0,
    on_metrics: Callable[[StepMetrics], None] | None = None,
) -> TrainResult:
    torch.set_num_threads(1)  # bit-reproducible runs
    net = PolicyNet(cfg)
    optimizer = torch.optim.SGD(net.parameters(), lr=cfg.learning_rate,
                                momentum=cfg.momentum)
    drop_rng = Rng(derive_seed(cfg.seed, "instruction_dropout"))
    batch_rng = Rng(derive_seed(cfg.seed, "batches"))
    result = TrainResult(net=net)
    decay_step = int(steps * lr_decay_at) if lr_decay_at else None
    for step in range(steps):
        if decay_step is not None and step == decay_step:
            for group in optimizer.param_groups:
                group["lr"] *= lr_decay_factor
        batch = sample_batch(batch_rng, batch_size)
        if no_language:
            drops = [True] * len(batch)
        else:
            drops = [drop_rng.random() < cfg.instruction_dropout for _ in batch]
        metrics = train_step(net, optimizer, batch, drops, step)
        result.metrics.append(metrics)
        if metrics.rejected:
            result.rejected_steps += 1
        if on_metrics:
            on_metrics(metrics)
        if fast_eval and fast_eval_every and (step + 1) % fast_eval_every == 0:
            result.fast_eval.append((step + 1, fast_eval(net)))
    return result
