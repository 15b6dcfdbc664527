"""Tick engine: applies buffered actions on the environment clock.

The engine owns the world state and steps it once per tick regardless of
whether clients keep up. Actions are buffered by target tick; a newer
arrival for the same tick wins, which is what lets a fresh action chunk
preempt the unexecuted tail of an older one. If no action is buffered for
a tick, the previously held keys persist with zero mouse delta. Stale
arrivals (target tick already stepped) are re-stamped onto the next free
tick and counted as late rather than dropped, so a slow human connection
degrades instead of freezing.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

from ..worldcore.base import GridWorld
from ..worldcore.saveio import save
from ..worldcore.types import ActionEvent, Observation, WorldState
from .wire import SessionConfigMsg

CHUNK_LEN = 8


def schedule_offset_action(
    chunk: list[ActionEvent], computed_at_tick: int, offset_k: int
) -> list[tuple[int, ActionEvent]]:
    """Assign execution ticks to a chunk: action i runs at
    computed_at_tick + offset_k + i."""
    if len(chunk) != CHUNK_LEN:
        raise ValueError(f"chunk must have {CHUNK_LEN} actions, got {len(chunk)}")
    out = []
    for i, action in enumerate(chunk):
        tick = computed_at_tick + offset_k + i
        out.append((tick, replace(action, tick=tick)))
    return out


@dataclass
class InstructionSegment:
    t0: int
    t1: int
    text: str
    source: str


@dataclass
class Trajectory:
    """One recorded session: per-tick streams plus instruction segments."""

    header: dict[str, Any]
    observations: list[Observation] = field(default_factory=list)
    actions: list[ActionEvent] = field(default_factory=list)
    text_events: list[tuple[int, str]] = field(default_factory=list)
    instruction_segments: list[InstructionSegment] = field(default_factory=list)


@dataclass
class EngineStats:
    ticks: int = 0
    applied_total: int = 0      # buffered actions applied (not key-hold fills)
    on_schedule: int = 0        # applied at their originally requested tick
    late: int = 0               # re-stamped stale arrivals
    lag_ticks_sum: int = 0      # exec tick minus source observation tick
    lag_samples: int = 0
    overruns: int = 0

    def on_schedule_frac(self) -> float:
        return self.on_schedule / self.applied_total if self.applied_total else 1.0

    def mean_lag(self) -> float:
        return self.lag_ticks_sum / self.lag_samples if self.lag_samples else 0.0


class TickEngine:
    def __init__(self, world: GridWorld, state: WorldState,
                 config: SessionConfigMsg, role: str = "player"):
        self.world = world
        self.state = state
        self.config = config
        self.budget = config.budget_ticks
        self.stats = EngineStats()
        # target tick -> (action, source observation tick, original target)
        self._buffer: dict[int, tuple[ActionEvent, int | None, int]] = {}
        self._held_keys: frozenset[str] = frozenset()
        self._held_left = False
        self._held_right = False
        self._open_segment: InstructionSegment | None = None
        self.trajectory: Trajectory | None = None
        if config.record:
            self.trajectory = Trajectory(header={
                "world_id": world.world_id,
                "seed": config.seed,
                "task_id": config.task_id,
                "role": role,
                "config": {
                    "tick_hz": config.tick_hz,
                    "obs_delay_ms": config.obs_delay_ms,
                    "action_delay_ms": config.action_delay_ms,
                    "jitter_ms": config.jitter_ms,
                    "offset_k": config.offset_k,
                    "budget_ticks": config.budget_ticks,
                },
                "initial_state": save(state).hex(),
            })

    def initial_observation(self) -> Observation:
        return self.world.observe(self.state)

    @property
    def tick_index(self) -> int:
        return self.state.tick

    def done(self) -> bool:
        return self.state.tick >= self.budget

    def submit(self, action: ActionEvent, source_tick: int | None = None) -> None:
        action.validate()
        target = action.tick
        original = target
        if target < self.state.tick:
            target = self.state.tick
            while target in self._buffer:
                target += 1
            action = replace(action, tick=target)
        self._buffer[target] = (action, source_tick, original)

    def set_instruction(self, text: str, source: str = "live") -> None:
        tick = self.state.tick
        self._close_segment(tick)
        self._open_segment = InstructionSegment(t0=tick, t1=tick, text=text, source=source)

    def _close_segment(self, t1: int) -> None:
        seg = self._open_segment
        if seg is not None and t1 > seg.t0:
            seg.t1 = t1
            if self.trajectory is not None:
                self.trajectory.instruction_segments.append(seg)
        self._open_segment = None

    def tick(self) -> Observation:
        t = self.state.tick
        entry = self._buffer.pop(t, None)
        if entry is not None:
            action, source_tick, original = entry
            self.stats.applied_total += 1
            if original == t:
                self.stats.on_schedule += 1
            else:
                self.stats.late += 1
            if source_tick is not None:
                self.stats.lag_ticks_sum += t - source_tick
                self.stats.lag_samples += 1
        else:
            action = ActionEvent(tick=t, keys=self._held_keys,
                                 left_button=self._held_left,
                                 right_button=self._held_right)
        self.state, obs = self.world.step(self.state, action)
        self._held_keys = action.keys
        self._held_left = action.left_button
        self._held_right = action.right_button
        self.stats.ticks += 1
        if self.trajectory is not None:
            self.trajectory.actions.append(action)
            self.trajectory.observations.append(obs)
            self.trajectory.text_events.extend(obs.text_events)
        return obs

    def finish(self) -> Trajectory | None:
        self._close_segment(self.state.tick)
        return self.trajectory
