"""Asynchronous session layer: wire protocol, tick engine, recording, replay."""

from .engine import (
    CHUNK_LEN,
    EngineStats,
    InstructionSegment,
    TickEngine,
    Trajectory,
    schedule_offset_action,
)
from .simsession import (
    ChunkPolicyClient,
    ClientOutput,
    IdleClient,
    RandomClient,
    ScriptClient,
    SessionResult,
    SimClient,
    session_for_task,
    simulate_session,
)
from .trajio import (
    ReplayDivergence,
    TrajectoryFormatError,
    read_trajectory,
    replay,
    replay_file,
    trajectory_id,
    write_trajectory,
)
from .wire import (
    ActionMsg,
    BadMagic,
    BadVersion,
    DecodeError,
    EndEpisodeMsg,
    Hello,
    InstructionMsg,
    InterruptMsg,
    JudgeRequestMsg,
    LoadStateMsg,
    Message,
    ObservationMsg,
    ResetMsg,
    SessionConfigMsg,
    TextEventMsg,
    TrailingBytes,
    TruncatedMessage,
    UnknownVariant,
    decode,
    decode_prefix,
    encode,
    split_stream,
)

__all__ = [
    "ActionMsg", "BadMagic", "BadVersion", "CHUNK_LEN", "ChunkPolicyClient", "ClientOutput",
    "DecodeError", "EndEpisodeMsg", "EngineStats", "Hello", "IdleClient",
    "InstructionMsg", "InstructionSegment", "InterruptMsg", "JudgeRequestMsg",
    "LoadStateMsg", "Message", "ObservationMsg", "RandomClient", "ReplayDivergence",
    "ResetMsg", "ScriptClient", "SessionConfigMsg", "SessionResult", "SimClient",
    "TextEventMsg", "TickEngine", "TrailingBytes", "Trajectory",
    "TrajectoryFormatError", "TruncatedMessage", "UnknownVariant", "decode",
    "decode_prefix", "encode", "read_trajectory", "replay", "replay_file",
    "schedule_offset_action", "session_for_task", "simulate_session",
    "split_stream", "trajectory_id", "write_trajectory",
]
