"""Checkpoint files: "MWCK" magic, u16 version, config JSON, layout JSON,
then the raw flat parameter vector (float64)."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .config import AgentConfig
from .model import PolicyNet
from .params import flatten_params, layout_map, load_flat_params

MAGIC = b"MWCK"
VERSION = 1


class CheckpointError(Exception):
    pass


def save_checkpoint(net: PolicyNet, path: str | Path, extra: dict | None = None) -> None:
    config_blob = json.dumps(
        {"config": json.loads(net.cfg.to_json()), "extra": extra or {}},
        sort_keys=True).encode()
    layout_blob = json.dumps(layout_map(net), sort_keys=True).encode()
    vector = flatten_params(net).astype(np.float64)
    with open(path, "wb") as f:
        f.write(MAGIC + struct.pack("<H", VERSION))
        f.write(struct.pack("<I", len(config_blob)))
        f.write(config_blob)
        f.write(struct.pack("<I", len(layout_blob)))
        f.write(layout_blob)
        f.write(struct.pack("<Q", vector.size))
        f.write(vector.tobytes())


def load_checkpoint(path: str | Path) -> tuple[PolicyNet, dict]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise CheckpointError(f"bad checkpoint magic {data[:4]!r}")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    pos = 6
    (n,) = struct.unpack_from("<I", data, pos)
    pos += 4
    doc = json.loads(data[pos : pos + n].decode())
    pos += n
    (n,) = struct.unpack_from("<I", data, pos)
    pos += 4
    layout = json.loads(data[pos : pos + n].decode())
    pos += n
    (count,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    vector = np.frombuffer(data, dtype=np.float64, count=count, offset=pos).copy()

    cfg = AgentConfig(**doc["config"])
    net = PolicyNet(cfg)
    expected = sum(e["size"] for e in layout)
    if expected != vector.size:
        raise CheckpointError("layout map does not match parameter vector")
    load_flat_params(net, vector)
    return net, doc.get("extra", {})
