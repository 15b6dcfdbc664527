"""Live session management for the service.

Each session owns one realtime world loop. Clients join over a websocket
speaking the binary protocol 1:1 (each websocket binary frame is exactly
one encoded message, so golden wire bytes validate the browser too).
Roles: a player/solver drives actions; a setter or instructor shares the
view and sends instructions; `agent` mode runs a checkpointed policy
inside the server and lets instructor clients steer it live.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

from ..agent.actor import AgentPolicy
from ..agent.checkpoint import load_checkpoint
from ..netproto.engine import schedule_offset_action
from ..netproto.realtime import RealtimeSession
from ..netproto.trajio import trajectory_id, write_trajectory
from ..netproto.wire import ActionMsg, ObservationMsg, SessionConfigMsg, decode
from ..worldcore.registry import get_world, instantiate_task
from ..worldcore.rng import Rng
from ..worlds.taskfiles import find_task

_ids = itertools.count(1)


@dataclass
class LiveSession:
    session_id: str
    mode: str
    task_id: str
    world_id: str
    rt: RealtimeSession
    trajectory_path: Path | None = None
    agent_policy: AgentPolicy | None = None
    clients: list[str] = field(default_factory=list)


class SessionManager:
    def __init__(self, data_dir: Path, checkpoint_path: Path | None = None):
        self.data_dir = data_dir
        self.checkpoint_path = checkpoint_path
        self.sessions: dict[str, LiveSession] = {}
        self._net = None
        (self.data_dir / "trajectories").mkdir(parents=True, exist_ok=True)

    def _agent_net(self):
        if self._net is None:
            if self.checkpoint_path is None or not Path(self.checkpoint_path).exists():
                raise RuntimeError("no agent checkpoint configured")
            self._net, _ = load_checkpoint(self.checkpoint_path)
        return self._net

    def create(self, *, world_id: str = "", task_id: str = "", seed: int = 0,
               tick_hz: int = 10, budget_ticks: int = 100, record: bool = True,
               obs_delay_ms: int = 0, action_delay_ms: int = 0, jitter_ms: int = 0,
               offset_k: int = 2, mode: str = "play", instruction: str = "",
               cfg_scale: float | None = None) -> LiveSession:
        if task_id:
            task = find_task(task_id)
            world = get_world(task.world_id)
            state = instantiate_task(task, seed)
            world_id = task.world_id
            budget_ticks = max(budget_ticks, task.budget_ticks)
        else:
            world = get_world(world_id)
            scenario = world.scenario_names()[0]
            state = world.build_scenario(scenario, Rng(seed).next_u64())
            av = state.entities["avatar"]
            state.entities["anchor"] = {"x": av["x"], "y": av["y"],
                                        "facing": av["facing"]}
        config = SessionConfigMsg(
            tick_hz=tick_hz, obs_delay_ms=obs_delay_ms,
            action_delay_ms=action_delay_ms, jitter_ms=jitter_ms,
            offset_k=offset_k, record=record, world_id=world_id,
            task_id=task_id, seed=seed, budget_ticks=budget_ticks)
        rt = RealtimeSession(world, state, config,
                             role="agent" if mode == "agent" else "player")
        session = LiveSession(session_id=f"s{next(_ids):06d}", mode=mode,
                              task_id=task_id, world_id=world_id, rt=rt)
        rt.on_finish = lambda traj: self._flush(session, traj)
        if mode == "agent":
            policy = AgentPolicy(self._agent_net(), cfg_scale=cfg_scale)
            policy.set_instruction(instruction)
            session.agent_policy = policy
            self._attach_server_agent(session, offset_k)
        self.sessions[session.session_id] = session
        return session

    def _attach_server_agent(self, session: LiveSession, offset_k: int) -> None:
        policy = session.agent_policy
        rt = session.rt

        async def agent_sender(data: bytes) -> None:
            msg = decode(data)
            if isinstance(msg, ObservationMsg):
                chunk = policy.act(msg.observation)
                for _, action in schedule_offset_action(
                        chunk, msg.observation.tick, offset_k):
                    rt.inbox.put_nowait((ActionMsg(action), None))

        rt.attach("server-agent", agent_sender)
        hooks = getattr(rt, "instruction_hooks", [])
        hooks.append(policy.set_instruction)
        rt.instruction_hooks = hooks

    def _flush(self, session: LiveSession, traj) -> None:
        """Write the recording; runs inside the session loop's finalizer."""
        if traj is None or session.trajectory_path is not None:
            return
        tid = trajectory_id(traj)
        path = self.data_dir / "trajectories" / f"{session.session_id}-{tid}.mwtj"
        write_trajectory(traj, path)
        session.trajectory_path = path

    async def finish(self, session: LiveSession) -> None:
        await session.rt.done.wait()

    async def shutdown(self) -> None:
        """Stop every live session; each loop flushes its own recording."""
        for session in list(self.sessions.values()):
            if session.rt._task is not None and not session.rt.done.is_set():
                await session.rt.stop("shutdown")
