"""Online episode evaluation: scored sessions, goal switching, static probes.

An agent is referenced by a factory that builds a session client for a
task, so scripted experts, stub agents, and trained policies all run
through the same harness.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from ..agent.actor import AgentPolicy, AgentSimClient
from ..agent.cfg import PolicyLogits
from ..agent.loss import action_nll
from ..agent.model import PolicyNet
from ..datapipe.examples import TrainingExample
from ..netproto.simsession import SimClient, session_for_task, simulate_session
from ..netproto.trajio import trajectory_id, write_trajectory
from ..netproto.wire import InstructionMsg, InterruptMsg
from ..worldcore.types import (
    ActionEvent,
    EpisodeOutcome,
    Observation,
    STATUS_FAILURE,
    STATUS_SUCCESS,
    STATUS_TIMEOUT,
    TaskSpec,
)
from .evaluators import EpisodeTracker

AgentRef = Callable[[TaskSpec], SimClient]


def policy_agent_ref(net: PolicyNet, *, cfg_scale: float | None = None,
                     no_language: bool = False, offset_k: int = 0,
                     compute_ms: int = 0) -> AgentRef:
    """AgentRef for a trained network; a fresh policy per episode."""

    def factory(task: TaskSpec) -> SimClient:
        policy = AgentPolicy(net, cfg_scale=cfg_scale, no_language=no_language)
        return AgentSimClient(policy, "" if no_language else task.instruction,
                              offset_k=offset_k, compute_ms=compute_ms)

    return factory


def expert_agent_ref() -> AgentRef:
    from ..datapipe.expert import ExpertClient, ExpertPolicy
    from ..worldcore.registry import get_world

    def factory(task: TaskSpec) -> SimClient:
        return ExpertClient(ExpertPolicy(get_world(task.world_id), task))

    return factory


def run_episode(agent_ref: AgentRef, task: TaskSpec, seed: int, *,
                record_dir: str | Path | None = None,
                tick_hz: int = 10, offset_k: int = 0,
                obs_delay_ms: int = 0, action_delay_ms: int = 0,
                jitter_ms: int = 0) -> EpisodeOutcome:
    """Drive one scored session; the evaluator is checked every tick.

    A distractor touch fails the episode immediately; exhausting the
    budget without success is a timeout; an agent exception is a plain
    failure with the diagnostic in the trace reference.
    """
    world, state, config = session_for_task(
        task, seed, record=record_dir is not None or True, tick_hz=tick_hz,
        offset_k=offset_k, obs_delay_ms=obs_delay_ms,
        action_delay_ms=action_delay_ms, jitter_ms=jitter_ms)
    tracker = EpisodeTracker(task)

    def stop(state, obs, engine):
        action = engine.trajectory.actions[-1] if engine.trajectory else None
        status = tracker.update(state, obs, action)
        return status if status != "ongoing" else None

    try:
        client = agent_ref(task)
        result = simulate_session(
            world, state, config, client, role="agent", stop_condition=stop,
            injections=[(0, InstructionMsg(task.instruction))])
    except Exception as e:  # agent crash -> failure with diagnostic
        return EpisodeOutcome(status=STATUS_FAILURE, ticks_used=0,
                              trace_ref=f"error:{type(e).__name__}:{e}")

    status = result.status if result.status is not None else tracker.final_status()
    trace_ref = ""
    if record_dir is not None and result.trajectory is not None:
        tid = trajectory_id(result.trajectory)
        path = Path(record_dir) / f"{task.task_id.replace(':', '_')}-{seed}-{tid}.mwtj"
        write_trajectory(result.trajectory, path)
        trace_ref = str(path)
    return EpisodeOutcome(status=status, ticks_used=result.ticks, trace_ref=trace_ref)


def switch_test(agent_ref: AgentRef, task_a: TaskSpec, task_b: TaskSpec,
                switch_tick: int, seed: int) -> EpisodeOutcome:
    """Issue task A's instruction, interrupt with B's at `switch_tick`.

    Success means B's evaluator fires within budget using only
    post-switch evidence, and A's goal is not completed after the switch.
    A switch at or past the budget degenerates to plain task-A evaluation.
    """
    if task_a.save_state_ref != task_b.save_state_ref:
        raise ValueError("switch test tasks must share an initial state")
    if switch_tick >= task_a.budget_ticks:
        outcome = run_episode(agent_ref, task_a, seed)
        return EpisodeOutcome(status=outcome.status, ticks_used=outcome.ticks_used,
                              trace_ref="degenerate:switch_after_budget")

    world, state, config = session_for_task(task_a, seed, record=True, offset_k=0)
    tracker_b = EpisodeTracker(task_b)
    a_tracker = EpisodeTracker(task_a)
    verdict: dict[str, str | None] = {"status": None}
    ilog_at_switch = {"n": None}

    def stop(state, obs, engine):
        action = engine.trajectory.actions[-1] if engine.trajectory else None
        tick = state.tick
        if tick <= switch_tick:
            a_tracker.update(state, obs, action)
            return None
        if ilog_at_switch["n"] is None:
            ilog_at_switch["n"] = len(state.entities.get("ilog", []))
        a_before = a_tracker._latched == STATUS_SUCCESS
        a_now = a_tracker.update(state, obs, action)
        if a_now == STATUS_SUCCESS and not a_before:
            verdict["status"] = STATUS_FAILURE  # finished A after being told B
            return STATUS_FAILURE
        status_b = tracker_b.update(state, obs, action)
        if status_b != "ongoing":
            verdict["status"] = status_b
            return status_b
        return None

    client = agent_ref(task_a)
    result = simulate_session(
        world, state, config, client, role="agent", stop_condition=stop,
        injections=[(0, InstructionMsg(task_a.instruction)),
                    (switch_tick, InterruptMsg(task_b.instruction))])
    status = verdict["status"] if verdict["status"] is not None else STATUS_TIMEOUT
    return EpisodeOutcome(status=status, ticks_used=result.ticks)


def static_probe(policy: AgentPolicy, obs: Observation, instruction: str,
                 predicate: Callable[[ActionEvent], bool]) -> bool:
    """One forward pass on a frozen observation: does the argmax chunk's
    first action satisfy the predicate?"""
    policy.reset()
    policy.set_instruction(instruction)
    chunk = policy.act(obs)
    return bool(predicate(chunk[0]))


def logprob_eval(net: PolicyNet, heldout: Sequence[TrainingExample]) -> float:
    """Mean per-step negative log-likelihood of held-out actions under the
    conditioned policy (no guidance). A sanity signal only: online success
    is the measure that counts."""
    if not heldout:
        raise ValueError("held-out split is empty")
    total = 0.0
    steps = 0
    with torch.no_grad():
        for ex in heldout:
            keep = net.cfg.memory_window + 1
            pooled, grids = net.encode_frames(list(ex.context_cells[-keep:]))
            current = pooled[-1:].clone()
            current_grid = grids[-1:].clone()
            memory, mask = net.pack_memory([pooled[:-1]])
            instr = net.instr_encoder([ex.instruction])
            logits, _ = net.forward_policy(current, current_grid, instr, memory, mask)
            pl = PolicyLogits.from_flat(logits[0].double().numpy().astype(np.float64))
            nll, n = action_nll(pl, list(ex.target), list(ex.pad_mask))
            total += nll
            steps += n
    if steps == 0:
        raise ValueError("held-out split has no unmasked steps")
    return total / steps
