"""Discrete-event session simulation.

Drives a TickEngine against a client under a configurable latency model
(observation delay, action delay, seeded jitter) without touching the
wall clock, so sessions with thousands of ticks run in milliseconds and
are bit-reproducible. The schedule mirrors the realtime server: tick T is
stepped at time (T+1)*period using whatever action for T arrived by then;
observations are emitted right after the step and reach the client after
the observation delay; client replies take `compute_ms` and reach the
server after the action delay.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable

from ..worldcore.base import GridWorld
from ..worldcore.registry import get_world, instantiate_task
from ..worldcore.rng import Rng, derive_seed
from ..worldcore.types import ActionEvent, Observation, TaskSpec, WorldState
from .engine import EngineStats, TickEngine, Trajectory
from .wire import (
    ActionMsg,
    InstructionMsg,
    InterruptMsg,
    Message,
    SessionConfigMsg,
)


@dataclass
class ClientOutput:
    """What a client does in response to an event: messages to send after
    `compute_ms` of local work."""

    messages: list[Message] = field(default_factory=list)
    compute_ms: int = 0


class SimClient:
    """Base client: subclasses override the handlers they care about."""

    def bind_engine(self, engine: "TickEngine") -> None:
        """Called once before the session loop; privileged clients (scripted
        demonstrators) grab a live state handle here."""

    def on_observation(self, obs: Observation) -> ClientOutput:
        return ClientOutput()

    def on_message(self, msg: Message) -> ClientOutput:
        return ClientOutput()


class IdleClient(SimClient):
    """Never sends anything; the world must still advance without it."""


class ScriptClient(SimClient):
    """Plays a fixed per-tick action script (tick-stamped on the fly)."""

    def __init__(self, actions: list[ActionEvent]):
        self.actions = list(actions)
        self._next = 0

    def on_observation(self, obs: Observation) -> ClientOutput:
        if self._next >= len(self.actions):
            return ClientOutput()
        action = self.actions[self._next]
        self._next += 1
        from dataclasses import replace
        return ClientOutput(messages=[ActionMsg(replace(action, tick=obs.tick))])


class ChunkPolicyClient(SimClient):
    """Emits an 8-action chunk per observation, scheduled `offset_k` ticks
    ahead of the observation it was computed from. Each new chunk preempts
    the unexecuted tail of the previous one by overwriting its ticks."""

    def __init__(self, policy_fn: Callable[[Observation], list[ActionEvent]],
                 offset_k: int = 2, compute_ms: int = 0):
        self.policy_fn = policy_fn
        self.offset_k = offset_k
        self.compute_ms = compute_ms

    def on_observation(self, obs: Observation) -> ClientOutput:
        from .engine import schedule_offset_action
        chunk = self.policy_fn(obs)
        scheduled = schedule_offset_action(chunk, obs.tick, self.offset_k)
        return ClientOutput(
            messages=[ActionMsg(action) for _, action in scheduled],
            compute_ms=self.compute_ms,
        )


class RandomClient(SimClient):
    """Fuzz client: random keys/mouse every observation."""

    def __init__(self, seed: int):
        self.rng = Rng(seed)

    def on_observation(self, obs: Observation) -> ClientOutput:
        from ..worldcore.types import KEY_ORDER
        keys = frozenset(k for k in KEY_ORDER if self.rng.random() < 0.15)
        action = ActionEvent(
            tick=obs.tick, keys=keys,
            mouse_dx=self.rng.randint(-3, 3), mouse_dy=self.rng.randint(-3, 3),
            left_button=self.rng.random() < 0.1, right_button=self.rng.random() < 0.1,
        )
        return ClientOutput(messages=[ActionMsg(action)])


@dataclass
class SessionResult:
    trajectory: Trajectory | None
    final_state: WorldState
    stats: EngineStats
    status: str | None
    ticks: int
    observations: list[Observation]


_OBS = 0
_ARRIVE = 1
_INJECT = 2


def simulate_session(
    world: GridWorld,
    state: WorldState,
    config: SessionConfigMsg,
    client: SimClient,
    *,
    role: str = "player",
    stop_condition: Callable[[WorldState, Observation, TickEngine], str | None] | None = None,
    injections: list[tuple[int, Message]] | None = None,
    keep_observations: bool = False,
) -> SessionResult:
    """Run one session to budget exhaustion or early stop.

    `injections` delivers messages to the client at given ticks (boundary
    times), e.g. an instruction interrupt mid-episode.
    """
    engine = TickEngine(world, state, config, role=role)
    client.bind_engine(engine)
    period_us = 1_000_000 // config.tick_hz
    jitter_rng = Rng(derive_seed(config.seed, "jitter"))

    def jitter_us() -> int:
        return jitter_rng.randrange(config.jitter_ms * 1000 + 1) if config.jitter_ms else 0

    heap: list[tuple[int, int, int, object]] = []
    seq = 0

    def push(time_us: int, kind: int, payload) -> None:
        nonlocal seq
        heapq.heappush(heap, (time_us, seq, kind, payload))
        seq += 1

    def emit_obs(obs: Observation, now_us: int) -> None:
        push(now_us + config.obs_delay_ms * 1000 + jitter_us(), _OBS, obs)

    def handle_client_output(out: ClientOutput, recv_us: int, source_tick: int | None) -> None:
        send_us = recv_us + out.compute_ms * 1000
        for msg in out.messages:
            push(send_us + config.action_delay_ms * 1000 + jitter_us(), _ARRIVE,
                 (msg, source_tick))

    for tick, msg in injections or []:
        push(tick * period_us, _INJECT, msg)

    emit_obs(engine.initial_observation(), 0)

    observations: list[Observation] = []
    status: str | None = None
    while not engine.done():
        boundary = (engine.tick_index + 1) * period_us
        while heap and heap[0][0] <= boundary:
            time_us, _, kind, payload = heapq.heappop(heap)
            if kind == _OBS:
                handle_client_output(client.on_observation(payload), time_us, payload.tick)
            elif kind == _INJECT:
                if isinstance(payload, (InstructionMsg, InterruptMsg)):
                    engine.set_instruction(payload.text, getattr(payload, "source", "live"))
                handle_client_output(client.on_message(payload), time_us, None)
            else:
                msg, source_tick = payload
                if isinstance(msg, ActionMsg):
                    engine.submit(msg.action, source_tick=source_tick)
                elif isinstance(msg, InstructionMsg):
                    engine.set_instruction(msg.text, msg.source)
        obs = engine.tick()
        if keep_observations:
            observations.append(obs)
        emit_obs(obs, boundary)
        if stop_condition is not None:
            status = stop_condition(engine.state, obs, engine)
            if status is not None:
                break

    trajectory = engine.finish()
    return SessionResult(
        trajectory=trajectory,
        final_state=engine.state,
        stats=engine.stats,
        status=status,
        ticks=engine.tick_index,
        observations=observations,
    )


def session_for_task(task: TaskSpec, seed: int, *, record: bool = True,
                     tick_hz: int = 10, offset_k: int = 2,
                     obs_delay_ms: int = 0, action_delay_ms: int = 0,
                     jitter_ms: int = 0) -> tuple[GridWorld, WorldState, SessionConfigMsg]:
    world = get_world(task.world_id)
    state = instantiate_task(task, seed)
    config = SessionConfigMsg(
        tick_hz=tick_hz, obs_delay_ms=obs_delay_ms, action_delay_ms=action_delay_ms,
        jitter_ms=jitter_ms, offset_k=offset_k, record=record,
        world_id=task.world_id, task_id=task.task_id, seed=seed,
        budget_ticks=task.budget_ticks,
    )
    return world, state, config
