"""The live act loop: memory across ticks, guidance, interrupt handling.

On every observation the policy runs the network with and without its
current instruction, combines the two logit sets, decodes an 8-action
chunk, and schedules it `offset_k` ticks ahead of the observation it was
computed from. Interrupts swap the instruction immediately: the very next
forward pass uses the new text. Memory persists across the episode and is
capped at the configured window.
"""

from __future__ import annotations

import numpy as np
import torch

from ..netproto.engine import schedule_offset_action
from ..netproto.simsession import ClientOutput, SimClient
from ..netproto.wire import ActionMsg, InstructionMsg, InterruptMsg, Message
from ..worldcore.rng import Rng
from ..worldcore.types import ActionEvent, Observation
from .cfg import PolicyLogits, cfg_combine, decode_chunk
from .model import PolicyNet


class AgentPolicy:
    """Stateful per-episode policy wrapper around a trained network."""

    def __init__(self, net: PolicyNet, *, cfg_scale: float | None = None,
                 no_language: bool = False, sample: bool = False,
                 temperature: float = 1.0, seed: int = 0):
        self.net = net
        self.scale = net.cfg.cfg_scale if cfg_scale is None else cfg_scale
        self.no_language = no_language
        self.sample = sample
        self.temperature = temperature
        self.rng = Rng(seed)
        self.instruction = ""
        self._memory: list[torch.Tensor] = []
        self._memory_ticks: list[int] = []

    def reset(self) -> None:
        self._memory = []
        self._memory_ticks = []

    def set_instruction(self, text: str) -> None:
        self.instruction = "" if self.no_language else text

    @property
    def memory_len(self) -> int:
        return len(self._memory)

    def policy_logits(self, obs: Observation) -> PolicyLogits:
        """Guided logits for the chunk starting at this observation."""
        cond, uncond, state_vec = self._forward_pair(obs)
        if self.scale == 0.0 or self.no_language or not self.instruction:
            guided = cond
        else:
            guided = cfg_combine(cond, uncond, self.scale)
        self._append_memory(state_vec, obs.tick)
        return guided

    def act(self, obs: Observation) -> list[ActionEvent]:
        logits = self.policy_logits(obs)
        return decode_chunk(logits, obs.tick, sample=self.sample,
                            temperature=self.temperature, rng=self.rng)

    # -- internals -----------------------------------------------------------

    def _forward_pair(self, obs: Observation):
        net = self.net
        with torch.no_grad():
            state_vec, state_grid = net.encode_frames([obs.frame.cells])
            memory, mask = net.pack_memory(
                [torch.stack(self._memory)] if self._memory
                else [torch.zeros(0, net.cfg.embed_dim, dtype=net.torch_dtype())])
            instruction = "" if self.no_language else self.instruction
            cond_vec = net.instr_encoder([instruction])
            cond_logits, _ = net.forward_policy(state_vec, state_grid, cond_vec,
                                                memory, mask)
            cond = PolicyLogits.from_flat(
                cond_logits[0].double().numpy().astype(np.float64))
            if instruction and not self.no_language and self.scale != 0.0:
                null_vec = net.instr_encoder([""])
                un_logits, _ = net.forward_policy(state_vec, state_grid, null_vec,
                                                  memory, mask)
                uncond = PolicyLogits.from_flat(
                    un_logits[0].double().numpy().astype(np.float64))
            else:
                uncond = cond
        return cond, uncond, state_vec[0]

    def _append_memory(self, state_vec: torch.Tensor, tick: int) -> None:
        self._memory.append(state_vec.detach())
        self._memory_ticks.append(tick)
        M = self.net.cfg.memory_window
        if len(self._memory) > M:
            self._memory = self._memory[-M:]
            self._memory_ticks = self._memory_ticks[-M:]


class AgentSimClient(SimClient):
    """Session client running the act loop with offset scheduling."""

    def __init__(self, policy: AgentPolicy, instruction: str, *,
                 offset_k: int = 2, compute_ms: int = 0):
        self.policy = policy
        self.offset_k = offset_k
        self.compute_ms = compute_ms
        policy.reset()
        policy.set_instruction(instruction)

    def on_observation(self, obs: Observation) -> ClientOutput:
        chunk = self.policy.act(obs)
        scheduled = schedule_offset_action(chunk, obs.tick, self.offset_k)
        return ClientOutput(messages=[ActionMsg(a) for _, a in scheduled],
                            compute_ms=self.compute_ms)

    def on_message(self, msg: Message) -> ClientOutput:
        if isinstance(msg, (InstructionMsg, InterruptMsg)):
            self.policy.set_instruction(msg.text)
        return ClientOutput()
