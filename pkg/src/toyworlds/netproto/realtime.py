"""Wall-clock session driver for live clients.

The world advances on its own clock whether or not anyone sends input;
tick T is stepped at (T+1)/tick_hz seconds after start, using whatever
action for T arrived in time. Multiple subscribers (a solver and a
setter sharing the view, for instance) receive every observation.
Injected latency delays message delivery on both directions through the
event loop; stepping slower than the tick period increments an overrun
counter instead of warping time.
"""

from __future__ import annotations

import asyncio
from typing import Awaitable, Callable

from ..worldcore.base import GridWorld
from ..worldcore.types import Observation, WorldState
from .engine import TickEngine, Trajectory
from .wire import (
    ActionMsg,
    EndEpisodeMsg,
    InstructionMsg,
    InterruptMsg,
    LoadStateMsg,
    Message,
    ObservationMsg,
    ResetMsg,
    SessionConfigMsg,
    encode,
)

Sender = Callable[[bytes], Awaitable[None]]


class RealtimeSession:
    def __init__(self, world: GridWorld, state: WorldState,
                 config: SessionConfigMsg, *, role: str = "player"):
        self.world = world
        self.config = config
        self.engine = TickEngine(world, state, config, role=role)
        self.inbox: asyncio.Queue[tuple[Message, int | None]] = asyncio.Queue()
        self.subscribers: dict[str, Sender] = {}
        self.done = asyncio.Event()
        self.end_message: EndEpisodeMsg | None = None
        self.trajectory: Trajectory | None = None
        self._task: asyncio.Task | None = None
        self._stop_status: str | None = None
        self.stop_condition = None  # optional callable(state, obs, engine) -> str|None
        self.on_finish = None       # optional sync callback(trajectory)

    # -- wiring ---------------------------------------------------------------

    def attach(self, name: str, sender: Sender) -> None:
        self.subscribers[name] = sender

    def detach(self, name: str) -> None:
        self.subscribers.pop(name, None)

    def submit_message(self, msg: Message) -> None:
        """Called by transports; applies the configured inbound delay."""
        delay = self.config.action_delay_ms / 1000.0
        loop = asyncio.get_running_loop()
        if delay > 0:
            loop.call_later(delay, self.inbox.put_nowait, (msg, None))
        else:
            self.inbox.put_nowait((msg, None))

    def start(self) -> asyncio.Task:
        self._task = asyncio.create_task(self.run())
        return self._task

    def request_stop(self, reason: str = "shutdown") -> None:
        """Ask the loop to finish at the next tick boundary (non-blocking)."""
        self._stop_status = reason

    async def stop(self, reason: str = "shutdown") -> None:
        self.request_stop(reason)
        await self.done.wait()

    # -- the loop ---------------------------------------------------------------

    async def run(self) -> Trajectory | None:
        """One session to completion.

        Finalization (trajectory flush, end bookkeeping) happens even if
        the surrounding transport cancels this task mid-episode, so a
        dropped connection never loses its recording.
        """
        loop = asyncio.get_running_loop()
        period = 1.0 / self.config.tick_hz
        start = loop.time()
        status = "budget_exhausted"
        outcome = "timeout"
        cancelled = False
        try:
            await self._broadcast(self.engine.initial_observation())
            while not self.engine.done():
                if self._stop_status is not None:
                    status = self._stop_status
                    outcome = "ongoing"
                    break
                deadline = start + (self.engine.tick_index + 1) * period
                while True:
                    timeout = deadline - loop.time()
                    if timeout <= 0:
                        break
                    try:
                        msg, _ = await asyncio.wait_for(self.inbox.get(), timeout)
                    except asyncio.TimeoutError:
                        break
                    self._handle(msg)
                if loop.time() - deadline > period:
                    self.engine.stats.overruns += 1
                obs = self.engine.tick()
                await self._broadcast(obs)
                if self.stop_condition is not None:
                    hit = self.stop_condition(self.engine.state, obs, self.engine)
                    if hit is not None:
                        status = "completed"
                        outcome = hit
                        break
        except asyncio.CancelledError:
            status = self._stop_status or "disconnect"
            outcome = "ongoing"
            cancelled = True
        finally:
            self.end_message = EndEpisodeMsg(reason=status, status=outcome,
                                             ticks_used=self.engine.tick_index)
            self.trajectory = self.engine.finish()
            if self.on_finish is not None:
                self.on_finish(self.trajectory)
            self.done.set()
        if not cancelled:
            await self._send_all(encode(self.end_message))
        return self.trajectory

    def _handle(self, msg: Message) -> None:
        if isinstance(msg, ActionMsg):
            self.engine.submit(msg.action)
        elif isinstance(msg, (InstructionMsg, InterruptMsg)):
            source = msg.source if isinstance(msg, InstructionMsg) else "live"
            self.engine.set_instruction(msg.text, source)
            for hook in getattr(self, "instruction_hooks", []):
                hook(msg.text)
        elif isinstance(msg, (ResetMsg, LoadStateMsg)):
            # a reset mid-run is a new session's job; record the request only
            pass

    async def _broadcast(self, obs: Observation) -> None:
        data = encode(ObservationMsg(obs))
        if self.config.obs_delay_ms:
            await asyncio.sleep(self.config.obs_delay_ms / 1000.0)
        await self._send_all(data)

    async def _send_all(self, data: bytes) -> None:
        for name, sender in list(self.subscribers.items()):
            try:
                await sender(data)
            except Exception:
                self.detach(name)
