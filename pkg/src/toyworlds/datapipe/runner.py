"""Demonstration synthesis: run scripted experts through recorded sessions."""

from __future__ import annotations

from ..netproto.engine import Trajectory
from ..netproto.simsession import session_for_task, simulate_session
from ..worldcore.types import STATUS_SUCCESS, TaskSpec
from .expert import ExpertClient, ExpertError, ExpertPolicy


def scripted_expert(task: TaskSpec, seed: int, *, tick_hz: int = 10) -> Trajectory:
    """One successful demonstration of `task`, instruction segment included.

    Raises ExpertError if the demonstrator does not reach success within
    the task budget: registry tasks must all be expert-solvable, so a
    failure here is a content bug, not a data point.
    """
    from ..evalharness.evaluators import EpisodeTracker  # avoids an import cycle

    world, state, config = session_for_task(task, seed, record=True,
                                            tick_hz=tick_hz, offset_k=0)
    policy = ExpertPolicy(world, task)
    tracker = EpisodeTracker(task)

    def stop(state, obs, engine):
        action = engine.trajectory.actions[-1] if engine.trajectory else None
        status = tracker.update(state, obs, action)
        return status if status != "ongoing" else None

    result = simulate_session(world, state, config, ExpertClient(policy),
                              role="scripted", stop_condition=stop)
    if result.status != STATUS_SUCCESS:
        raise ExpertError(
            f"expert did not solve {task.task_id} (seed {seed}): "
            f"{result.status or 'timeout'} after {result.ticks} ticks")

    traj = result.trajectory
    assert traj is not None
    traj.instruction_segments.append(
        _segment(0, result.ticks, task.instruction, "scripted"))
    traj.header["task_id"] = task.task_id
    traj.header["skill_category"] = task.skill_category
    return traj


def _segment(t0: int, t1: int, text: str, source: str):
    from ..netproto.engine import InstructionSegment
    return InstructionSegment(t0=t0, t1=t1, text=text, source=source)
