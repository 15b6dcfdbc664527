"""Binary session protocol: length-prefixed, versioned, canonical.

Every message is encoded as

    u32  body length (little-endian, excludes this field)
    2B   magic "TW"
    u8   protocol version
    u8   variant tag
    ...  variant payload

Integers are little-endian; strings are u16 length + UTF-8; byte blobs
are u32 length + raw. Field order is fixed per variant, so encoding is
canonical: equal messages produce identical bytes, which golden-file
tests on both ends of the wire rely on.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from ..worldcore.types import ActionEvent, Frame, Observation

MAGIC = b"TW"
VERSION = 1

ROLES = ("player", "agent", "setter", "solver", "instructor", "annotator",
         "judge", "scripted", "observer")
INSTRUCTION_SOURCES = ("live", "posthoc", "setter", "scripted")
END_REASONS = ("completed", "disconnect", "budget_exhausted", "error", "shutdown")
END_STATUSES = ("ongoing", "success", "failure", "timeout", "distractor_failure")


class DecodeError(Exception):
    """Base class for protocol decode failures."""


class TruncatedMessage(DecodeError):
    pass


class BadMagic(DecodeError):
    pass


class BadVersion(DecodeError):
    pass


class UnknownVariant(DecodeError):
    pass


class TrailingBytes(DecodeError):
    pass


@dataclass(frozen=True)
class Hello:
    role: str = "player"
    client_name: str = ""


@dataclass(frozen=True)
class SessionConfigMsg:
    tick_hz: int = 10
    obs_delay_ms: int = 0
    action_delay_ms: int = 0
    jitter_ms: int = 0
    offset_k: int = 2
    record: bool = True
    world_id: str = ""
    task_id: str = ""
    seed: int = 0
    budget_ticks: int = 100


@dataclass(frozen=True)
class ObservationMsg:
    observation: Observation


@dataclass(frozen=True)
class ActionMsg:
    action: ActionEvent


@dataclass(frozen=True)
class InstructionMsg:
    text: str
    source: str = "live"


@dataclass(frozen=True)
class ResetMsg:
    seed: int = 0
    task_id: str = ""


@dataclass(frozen=True)
class LoadStateMsg:
    blob: bytes = b""


@dataclass(frozen=True)
class TextEventMsg:
    tick: int
    text: str


@dataclass(frozen=True)
class InterruptMsg:
    text: str


@dataclass(frozen=True)
class EndEpisodeMsg:
    reason: str = "completed"
    status: str = "ongoing"
    ticks_used: int = 0


@dataclass(frozen=True)
class JudgeRequestMsg:
    episode_id: str
    rubric: str = ""
    trajectory_ref: str = ""


Message = (Hello | SessionConfigMsg | ObservationMsg | ActionMsg | InstructionMsg
           | ResetMsg | LoadStateMsg | TextEventMsg | InterruptMsg | EndEpisodeMsg
           | JudgeRequestMsg)

_TAGS: dict[type, int] = {
    Hello: 1, SessionConfigMsg: 2, ObservationMsg: 3, ActionMsg: 4,
    InstructionMsg: 5, ResetMsg: 6, LoadStateMsg: 7, TextEventMsg: 8,
    InterruptMsg: 9, EndEpisodeMsg: 10, JudgeRequestMsg: 11,
}
_BY_TAG = {v: k for k, v in _TAGS.items()}


class _Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def u8(self, v): self.parts.append(struct.pack("<B", v))
    def u16(self, v): self.parts.append(struct.pack("<H", v))
    def u32(self, v): self.parts.append(struct.pack("<I", v))
    def u64(self, v): self.parts.append(struct.pack("<Q", v))
    def i8(self, v): self.parts.append(struct.pack("<b", v))

    def string(self, s: str):
        data = s.encode("utf-8")
        self.u16(len(data))
        self.parts.append(data)

    def blob(self, b: bytes):
        self.u32(len(b))
        self.parts.append(b)

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedMessage(
                f"need {n} bytes at offset {self.pos}, only {len(self.data) - self.pos} left")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self): return struct.unpack("<B", self._take(1))[0]
    def u16(self): return struct.unpack("<H", self._take(2))[0]
    def u32(self): return struct.unpack("<I", self._take(4))[0]
    def u64(self): return struct.unpack("<Q", self._take(8))[0]
    def i8(self): return struct.unpack("<b", self._take(1))[0]

    def string(self) -> str:
        return self._take(self.u16()).decode("utf-8")

    def blob(self) -> bytes:
        return bytes(self._take(self.u32()))


def _enum_index(options: tuple[str, ...], value: str, what: str) -> int:
    try:
        return options.index(value)
    except ValueError:
        raise ValueError(f"unknown {what}: {value!r}") from None


def _write_action(w: _Writer, a: ActionEvent) -> None:
    w.u32(a.tick)
    w.u16(a.key_mask())
    w.i8(a.mouse_dx)
    w.i8(a.mouse_dy)
    w.u8((1 if a.left_button else 0) | (2 if a.right_button else 0))


def _read_action(r: _Reader) -> ActionEvent:
    tick = r.u32()
    mask = r.u16()
    dx = r.i8()
    dy = r.i8()
    buttons = r.u8()
    return ActionEvent.from_mask(tick, mask, dx, dy, bool(buttons & 1), bool(buttons & 2))


def _write_payload(w: _Writer, msg: Message) -> None:
    if isinstance(msg, Hello):
        w.u8(_enum_index(ROLES, msg.role, "role"))
        w.string(msg.client_name)
    elif isinstance(msg, SessionConfigMsg):
        w.u16(msg.tick_hz)
        w.u32(msg.obs_delay_ms)
        w.u32(msg.action_delay_ms)
        w.u32(msg.jitter_ms)
        w.u8(msg.offset_k)
        w.u8(1 if msg.record else 0)
        w.string(msg.world_id)
        w.string(msg.task_id)
        w.u64(msg.seed)
        w.u32(msg.budget_ticks)
    elif isinstance(msg, ObservationMsg):
        obs = msg.observation
        w.u32(obs.tick)
        w.u8(obs.frame.width)
        w.u8(obs.frame.height)
        w.blob(obs.frame.cells)
        w.u8(len(obs.frame.overlay_text))
        for line in obs.frame.overlay_text:
            w.string(line)
        w.u16(len(obs.text_events))
        for tick, text in obs.text_events:
            w.u32(tick)
            w.string(text)
    elif isinstance(msg, ActionMsg):
        _write_action(w, msg.action)
    elif isinstance(msg, InstructionMsg):
        w.string(msg.text)
        w.u8(_enum_index(INSTRUCTION_SOURCES, msg.source, "instruction source"))
    elif isinstance(msg, ResetMsg):
        w.u64(msg.seed)
        w.string(msg.task_id)
    elif isinstance(msg, LoadStateMsg):
        w.blob(msg.blob)
    elif isinstance(msg, TextEventMsg):
        w.u32(msg.tick)
        w.string(msg.text)
    elif isinstance(msg, InterruptMsg):
        w.string(msg.text)
    elif isinstance(msg, EndEpisodeMsg):
        w.u8(_enum_index(END_REASONS, msg.reason, "end reason"))
        w.u8(_enum_index(END_STATUSES, msg.status, "end status"))
        w.u32(msg.ticks_used)
    elif isinstance(msg, JudgeRequestMsg):
        w.string(msg.episode_id)
        w.string(msg.rubric)
        w.string(msg.trajectory_ref)
    else:
        raise TypeError(f"not a protocol message: {type(msg).__name__}")


def _read_payload(tag: int, r: _Reader) -> Message:
    cls = _BY_TAG[tag]
    if cls is Hello:
        return Hello(ROLES[r.u8()], r.string())
    if cls is SessionConfigMsg:
        return SessionConfigMsg(
            tick_hz=r.u16(), obs_delay_ms=r.u32(), action_delay_ms=r.u32(),
            jitter_ms=r.u32(), offset_k=r.u8(), record=bool(r.u8()),
            world_id=r.string(), task_id=r.string(), seed=r.u64(),
            budget_ticks=r.u32())
    if cls is ObservationMsg:
        tick = r.u32()
        width = r.u8()
        height = r.u8()
        cells = r.blob()
        overlay = tuple(r.string() for _ in range(r.u8()))
        events = tuple((r.u32(), r.string()) for _ in range(r.u16()))
        frame = Frame(cells=cells, overlay_text=overlay, width=width, height=height)
        return ObservationMsg(Observation(tick=tick, frame=frame, text_events=events))
    if cls is ActionMsg:
        return ActionMsg(_read_action(r))
    if cls is InstructionMsg:
        return InstructionMsg(r.string(), INSTRUCTION_SOURCES[r.u8()])
    if cls is ResetMsg:
        return ResetMsg(r.u64(), r.string())
    if cls is LoadStateMsg:
        return LoadStateMsg(r.blob())
    if cls is TextEventMsg:
        return TextEventMsg(r.u32(), r.string())
    if cls is InterruptMsg:
        return InterruptMsg(r.string())
    if cls is EndEpisodeMsg:
        return EndEpisodeMsg(END_REASONS[r.u8()], END_STATUSES[r.u8()], r.u32())
    if cls is JudgeRequestMsg:
        return JudgeRequestMsg(r.string(), r.string(), r.string())
    raise AssertionError(tag)


def encode(msg: Message) -> bytes:
    w = _Writer()
    w.parts.append(MAGIC)
    w.u8(VERSION)
    w.u8(_TAGS[type(msg)])
    _write_payload(w, msg)
    body = w.getvalue()
    return struct.pack("<I", len(body)) + body


def decode(data: bytes) -> Message:
    """Decode exactly one message; the buffer must contain it and nothing else."""
    msg, consumed = decode_prefix(data)
    if consumed != len(data):
        raise TrailingBytes(f"{len(data) - consumed} unexpected bytes after message")
    return msg


def decode_prefix(data: bytes) -> tuple[Message, int]:
    """Decode the first message of a buffer, returning (message, bytes used)."""
    if len(data) < 4:
        raise TruncatedMessage("buffer shorter than length prefix")
    (length,) = struct.unpack_from("<I", data, 0)
    if len(data) < 4 + length:
        raise TruncatedMessage(f"body needs {length} bytes, have {len(data) - 4}")
    body = data[4 : 4 + length]
    if len(body) < 4:
        raise TruncatedMessage("body shorter than header")
    if body[:2] != MAGIC:
        raise BadMagic(f"bad magic {body[:2]!r}")
    if body[2] != VERSION:
        raise BadVersion(f"unsupported protocol version {body[2]} (speaking {VERSION})")
    tag = body[3]
    if tag not in _BY_TAG:
        raise UnknownVariant(f"unknown variant tag {tag} at protocol version {VERSION}")
    r = _Reader(body)
    r.pos = 4
    msg = _read_payload(tag, r)
    if r.pos != len(body):
        raise TrailingBytes(f"{len(body) - r.pos} unexpected bytes inside body")
    return msg, 4 + length


def split_stream(data: bytes) -> list[Message]:
    """Decode a concatenation of messages (e.g. a recorded message log)."""
    out = []
    pos = 0
    while pos < len(data):
        msg, used = decode_prefix(data[pos:])
        out.append(msg)
        pos += used
    return out
