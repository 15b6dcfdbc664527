"""Versioned binary save-state format.

Layout: magic "MWSV", u16 version (little-endian), u32 payload length,
then the payload: canonical JSON (sorted keys, no whitespace) of the world
state. Canonical serialization makes save() injective on distinct states
and byte-identical on equal ones, which the save/load round-trip and
replay machinery rely on.
"""

from __future__ import annotations

import json
import struct

from .types import WorldState

MAGIC = b"MWSV"
VERSION = 1


class SaveDecodeError(Exception):
    """Decode failure with the byte offset where parsing stopped."""

    def __init__(self, offset: int, reason: str):
        self.offset = offset
        self.reason = reason
        super().__init__(f"save decode error at byte {offset}: {reason}")


def save(state: WorldState) -> bytes:
    payload = json.dumps(
        {
            "entities": state.entities,
            "rng": state.rng_state,
            "tick": state.tick,
            "world_id": state.world_id,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    return MAGIC + struct.pack("<H", VERSION) + struct.pack("<I", len(payload)) + payload


def load(data: bytes) -> WorldState:
    if len(data) < 4:
        raise SaveDecodeError(0, "buffer shorter than magic")
    if data[:4] != MAGIC:
        raise SaveDecodeError(0, f"bad magic {data[:4]!r}")
    if len(data) < 6:
        raise SaveDecodeError(4, "missing version")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise SaveDecodeError(4, f"unsupported version {version}")
    if len(data) < 10:
        raise SaveDecodeError(6, "missing payload length")
    (length,) = struct.unpack_from("<I", data, 6)
    if len(data) < 10 + length:
        raise SaveDecodeError(10, f"truncated payload: need {length} bytes, have {len(data) - 10}")
    if len(data) > 10 + length:
        raise SaveDecodeError(10 + length, "trailing bytes after payload")
    try:
        doc = json.loads(data[10 : 10 + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise SaveDecodeError(10, f"payload not valid canonical JSON: {e}") from e
    try:
        return WorldState(
            world_id=doc["world_id"],
            rng_state=int(doc["rng"]),
            tick=int(doc["tick"]),
            entities=doc["entities"],
        )
    except (KeyError, TypeError, ValueError) as e:
        raise SaveDecodeError(10, f"payload missing fields: {e}") from e
