"""Trajectory container files and deterministic replay.

File layout: magic "MWTJ", u16 version, then append-only length-prefixed
records. Record = u32 length, u8 record type, payload. Types: 0 header
(JSON), 1 observation / 2 action / 3 text event (each an encoded protocol
message, so readers on any end of the wire reuse one decoder), 4
instruction segment (JSON). A sidecar ".idx" file stores u64 offsets of
every record for scrub-style random access.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

from ..worldcore.hashing import fnv1a64
from ..worldcore.registry import get_world
from ..worldcore.saveio import load as load_state
from .engine import InstructionSegment, Trajectory
from .wire import ActionMsg, ObservationMsg, TextEventMsg, decode, encode

MAGIC = b"MWTJ"
VERSION = 1

REC_HEADER = 0
REC_OBSERVATION = 1
REC_ACTION = 2
REC_TEXT_EVENT = 3
REC_SEGMENT = 4


class TrajectoryFormatError(Exception):
    pass


class ReplayDivergence(Exception):
    """Replayed frames stopped matching the recording."""

    def __init__(self, first_divergent_tick: int):
        self.first_divergent_tick = first_divergent_tick
        super().__init__(f"replay diverged at tick {first_divergent_tick}")


def trajectory_id(traj: Trajectory) -> str:
    """Deterministic content id: hash of the header plus frame hashes."""
    h = fnv1a64(json.dumps(traj.header, sort_keys=True).encode())
    for obs in traj.observations:
        h = (h * 0x100000001B3 ^ obs.frame.hash()) & ((1 << 64) - 1)
    return f"{h:016x}"


def write_trajectory(traj: Trajectory, path: str | Path) -> None:
    path = Path(path)
    offsets: list[int] = []
    with open(path, "wb") as f:
        f.write(MAGIC + struct.pack("<H", VERSION))

        def record(rtype: int, payload: bytes) -> None:
            offsets.append(f.tell())
            f.write(struct.pack("<IB", len(payload), rtype))
            f.write(payload)

        record(REC_HEADER, json.dumps(traj.header, sort_keys=True).encode())
        for obs in traj.observations:
            record(REC_OBSERVATION, encode(ObservationMsg(obs)))
        for action in traj.actions:
            record(REC_ACTION, encode(ActionMsg(action)))
        for tick, text in traj.text_events:
            record(REC_TEXT_EVENT, encode(TextEventMsg(tick, text)))
        for seg in traj.instruction_segments:
            record(REC_SEGMENT, json.dumps(
                {"t0": seg.t0, "t1": seg.t1, "text": seg.text, "source": seg.source},
                sort_keys=True).encode())
    with open(path.with_suffix(path.suffix + ".idx"), "wb") as f:
        f.write(struct.pack("<Q", len(offsets)))
        for off in offsets:
            f.write(struct.pack("<Q", off))


def read_trajectory(path: str | Path) -> Trajectory:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise TrajectoryFormatError(f"bad magic {data[:4]!r}")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise TrajectoryFormatError(f"unsupported trajectory version {version}")
    pos = 6
    header = None
    observations = []
    actions = []
    text_events = []
    segments = []
    while pos < len(data):
        if pos + 5 > len(data):
            raise TrajectoryFormatError(f"truncated record header at {pos}")
        length, rtype = struct.unpack_from("<IB", data, pos)
        pos += 5
        if pos + length > len(data):
            raise TrajectoryFormatError(f"truncated record payload at {pos}")
        payload = data[pos : pos + length]
        pos += length
        if rtype == REC_HEADER:
            header = json.loads(payload.decode())
        elif rtype == REC_OBSERVATION:
            observations.append(decode(payload).observation)
        elif rtype == REC_ACTION:
            actions.append(decode(payload).action)
        elif rtype == REC_TEXT_EVENT:
            msg = decode(payload)
            text_events.append((msg.tick, msg.text))
        elif rtype == REC_SEGMENT:
            doc = json.loads(payload.decode())
            segments.append(InstructionSegment(**doc))
        else:
            raise TrajectoryFormatError(f"unknown record type {rtype}")
    if header is None:
        raise TrajectoryFormatError("missing header record")
    return Trajectory(header=header, observations=observations, actions=actions,
                      text_events=text_events, instruction_segments=segments)


def replay(traj: Trajectory) -> list[int]:
    """Re-execute the recorded actions and return the frame-hash sequence.

    Raises ReplayDivergence at the first tick whose replayed frame hash
    differs from the recorded one.
    """
    world = get_world(traj.header["world_id"])
    state = load_state(bytes.fromhex(traj.header["initial_state"]))
    hashes: list[int] = []
    for i, action in enumerate(traj.actions):
        state, obs = world.step(state, action)
        h = obs.frame.hash()
        if i < len(traj.observations) and traj.observations[i].frame.hash() != h:
            raise ReplayDivergence(obs.tick)
        hashes.append(h)
    if len(traj.observations) != len(traj.actions):
        raise ReplayDivergence(min(len(traj.observations), len(traj.actions)))
    return hashes


def replay_file(path: str | Path) -> list[int]:
    return replay(read_trajectory(path))
