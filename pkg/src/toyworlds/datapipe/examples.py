"""Training examples: 8-action chunks tiled over annotated segments.

An example pairs the frame at the chunk start (plus up to `memory_window`
preceding frames for the agent's memory) with the next 8 recorded actions
and per-step goal-completion labels. The final partial chunk is padded
with no-op actions under a mask so padding never reaches the loss.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

from ..netproto.engine import CHUNK_LEN, Trajectory
from ..worldcore.registry import get_world
from ..worldcore.saveio import load as load_state
from ..worldcore.types import ActionEvent, TaskSpec
from .annotations import AnnotationSegment

EXAMPLE_SHARD_MAGIC = b"MWEX"
EXAMPLE_SHARD_VERSION = 1


@dataclass(frozen=True)
class TrainingExample:
    world_id: str
    collection_id: str
    segment_id: str
    instruction: str
    t0: int
    context_cells: tuple[bytes, ...]  # oldest..current frame cell bytes
    target: tuple[ActionEvent, ...]   # exactly CHUNK_LEN actions
    pad_mask: tuple[bool, ...]        # True = real step
    goal_labels: tuple[bool, ...]


def frame_sequence(traj: Trajectory) -> list[bytes]:
    """Cell bytes of the frame at every tick, including tick 0."""
    world = get_world(traj.header["world_id"])
    initial = load_state(bytes.fromhex(traj.header["initial_state"]))
    frames = [world.observe(initial).frame.cells]
    frames.extend(obs.frame.cells for obs in traj.observations)
    return frames


def goal_success_tick(traj: Trajectory, task: TaskSpec) -> int | None:
    """First tick whose post-step state satisfies the task evaluator."""
    from ..evalharness.evaluators import EpisodeTracker  # avoids an import cycle

    world = get_world(traj.header["world_id"])
    state = load_state(bytes.fromhex(traj.header["initial_state"]))
    tracker = EpisodeTracker(task)
    for obs, action in zip(traj.observations, traj.actions):
        state, replayed = world.step(state, action)
        if tracker.update(state, replayed, action) == "success":
            return state.tick
    return None


def make_examples(
    traj: Trajectory,
    segment: AnnotationSegment,
    *,
    chunk_len: int = CHUNK_LEN,
    memory_window: int = 16,
    collection_id: str = "",
    segment_id: str = "",
    success_tick: int | None = None,
    offset: int = 0,
    stride: int | None = None,
) -> list[TrainingExample]:
    """Tile chunks over [t0, t1); the default stride of one chunk length
    gives non-overlapping tiling.

    A smaller stride overlaps chunks so that more ticks appear as chunk
    starts, which matters when the policy replans every observation and
    therefore only ever executes step 0. `offset` shifts the action
    targets forward relative to the input frame (latency-offset training);
    0 pairs the frame at t with actions t..t+7.
    """
    t0, t1 = segment.t0, segment.t1
    if t1 - t0 < 1:
        return []
    frames = frame_sequence(traj)
    actions = traj.actions
    out: list[TrainingExample] = []
    for start in range(t0, t1, stride or chunk_len):
        target: list[ActionEvent] = []
        mask: list[bool] = []
        labels: list[bool] = []
        for i in range(chunk_len):
            t = start + i + offset
            if start + i < t1 and t < len(actions):
                target.append(actions[t])
                mask.append(True)
            else:
                target.append(ActionEvent.noop(t))
                mask.append(False)
            labels.append(success_tick is not None and t + 1 >= success_tick)
        lo = max(0, start - memory_window)
        context = tuple(frames[lo : start + 1])
        out.append(TrainingExample(
            world_id=traj.header["world_id"],
            collection_id=collection_id,
            segment_id=segment_id or f"{segment.trajectory_id}:{t0}:{t1}",
            instruction=segment.instruction,
            t0=start,
            context_cells=context,
            target=tuple(target),
            pad_mask=tuple(mask),
            goal_labels=tuple(labels),
        ))
    return out


# -- shard io --------------------------------------------------------------


def _pack_action(a: ActionEvent) -> bytes:
    buttons = (1 if a.left_button else 0) | (2 if a.right_button else 0)
    return struct.pack("<IHbbB", a.tick, a.key_mask(), a.mouse_dx, a.mouse_dy, buttons)


def _unpack_action(data: bytes) -> ActionEvent:
    tick, mask, dx, dy, buttons = struct.unpack("<IHbbB", data)
    return ActionEvent.from_mask(tick, mask, dx, dy, bool(buttons & 1), bool(buttons & 2))


def _pack_str(s: str) -> bytes:
    raw = s.encode()
    return struct.pack("<H", len(raw)) + raw


def write_example_shard(examples: list[TrainingExample], path: str | Path) -> None:
    cell_len = 2 * 16 * 16
    with open(path, "wb") as f:
        f.write(EXAMPLE_SHARD_MAGIC + struct.pack("<H", EXAMPLE_SHARD_VERSION))
        for ex in examples:
            body = bytearray()
            body += _pack_str(ex.world_id)
            body += _pack_str(ex.collection_id)
            body += _pack_str(ex.segment_id)
            body += _pack_str(ex.instruction)
            body += struct.pack("<I", ex.t0)
            body += struct.pack("<B", len(ex.context_cells))
            for cells in ex.context_cells:
                assert len(cells) == cell_len
                body += cells
            for a in ex.target:
                body += _pack_action(a)
            body += struct.pack("<B", _bits(ex.pad_mask))
            body += struct.pack("<B", _bits(ex.goal_labels))
            f.write(struct.pack("<I", len(body)))
            f.write(bytes(body))


def read_example_shard(path: str | Path) -> list[TrainingExample]:
    data = Path(path).read_bytes()
    if data[:4] != EXAMPLE_SHARD_MAGIC:
        raise ValueError(f"bad example shard magic {data[:4]!r}")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != EXAMPLE_SHARD_VERSION:
        raise ValueError(f"unsupported example shard version {version}")
    cell_len = 2 * 16 * 16
    out = []
    pos = 6
    while pos < len(data):
        (length,) = struct.unpack_from("<I", data, pos)
        pos += 4
        body = data[pos : pos + length]
        pos += length
        cur = 0

        def take_str() -> str:
            nonlocal cur
            (n,) = struct.unpack_from("<H", body, cur)
            cur += 2
            s = body[cur : cur + n].decode()
            cur += n
            return s

        world_id = take_str()
        collection_id = take_str()
        segment_id = take_str()
        instruction = take_str()
        (t0,) = struct.unpack_from("<I", body, cur)
        cur += 4
        (n_ctx,) = struct.unpack_from("<B", body, cur)
        cur += 1
        context = tuple(bytes(body[cur + i * cell_len : cur + (i + 1) * cell_len])
                        for i in range(n_ctx))
        cur += n_ctx * cell_len
        target = []
        for _ in range(CHUNK_LEN):
            target.append(_unpack_action(body[cur : cur + 9]))
            cur += 9
        (pad_bits,) = struct.unpack_from("<B", body, cur)
        cur += 1
        (goal_bits,) = struct.unpack_from("<B", body, cur)
        cur += 1
        out.append(TrainingExample(
            world_id=world_id, collection_id=collection_id,
            segment_id=segment_id, instruction=instruction, t0=t0,
            context_cells=context,
            target=tuple(target),
            pad_mask=tuple(bool(pad_bits >> i & 1) for i in range(CHUNK_LEN)),
            goal_labels=tuple(bool(goal_bits >> i & 1) for i in range(CHUNK_LEN)),
        ))
    return out


def _bits(flags: tuple[bool, ...]) -> int:
    value = 0
    for i, flag in enumerate(flags):
        if flag:
            value |= 1 << i
    return value
