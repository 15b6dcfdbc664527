"""Annotation segments (live, post-hoc, or scripted) and their shard files.

Segment shards are length-prefixed JSON records under an "MWSG" header.
Post-hoc annotation uploads from the browser arrive as JSON lines with
the same fields and pass through the same validation.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

SHARD_MAGIC = b"MWSG"
SHARD_VERSION = 1

MAX_SEGMENT_TICKS = 100  # 10 s at 10 Hz

SOURCES = ("posthoc", "setter", "scripted", "live")


class AnnotationError(Exception):
    pass


@dataclass(frozen=True)
class AnnotationSegment:
    trajectory_id: str
    trajectory_path: str
    t0: int
    t1: int
    instruction: str
    source: str
    annotator_id: str = ""

    def validate(self) -> None:
        if not 0 <= self.t0 < self.t1:
            raise AnnotationError(f"bad segment range [{self.t0}, {self.t1})")
        if self.t1 - self.t0 > MAX_SEGMENT_TICKS:
            raise AnnotationError(
                f"segment spans {self.t1 - self.t0} ticks, max {MAX_SEGMENT_TICKS}")
        if self.source not in SOURCES:
            raise AnnotationError(f"unknown source {self.source!r}")

    def as_dict(self) -> dict:
        return {
            "trajectory_id": self.trajectory_id,
            "trajectory_path": self.trajectory_path,
            "t0": self.t0,
            "t1": self.t1,
            "instruction": self.instruction,
            "source": self.source,
            "annotator_id": self.annotator_id,
        }


def segment_from_dict(doc: dict) -> AnnotationSegment:
    seg = AnnotationSegment(
        trajectory_id=doc["trajectory_id"],
        trajectory_path=doc.get("trajectory_path", ""),
        t0=int(doc["t0"]),
        t1=int(doc["t1"]),
        instruction=doc["instruction"],
        source=doc.get("source", "posthoc"),
        annotator_id=doc.get("annotator_id", ""),
    )
    seg.validate()
    return seg


def check_no_overlap(segments: list[AnnotationSegment]) -> None:
    """Segments from the same annotator on the same trajectory must not overlap."""
    by_key: dict[tuple[str, str], list[AnnotationSegment]] = {}
    for seg in segments:
        by_key.setdefault((seg.trajectory_id, seg.annotator_id), []).append(seg)
    for (tid, annot), group in by_key.items():
        group = sorted(group, key=lambda s: s.t0)
        for a, b in zip(group, group[1:]):
            if b.t0 < a.t1:
                raise AnnotationError(
                    f"overlapping segments from {annot or 'anonymous'} on {tid}")


def write_segment_shard(segments: list[AnnotationSegment], path: str | Path) -> None:
    with open(path, "wb") as f:
        f.write(SHARD_MAGIC + struct.pack("<H", SHARD_VERSION))
        for seg in segments:
            payload = json.dumps(seg.as_dict(), sort_keys=True).encode()
            f.write(struct.pack("<I", len(payload)))
            f.write(payload)


def read_segment_shard(path: str | Path) -> list[AnnotationSegment]:
    data = Path(path).read_bytes()
    if data[:4] != SHARD_MAGIC:
        raise AnnotationError(f"bad shard magic {data[:4]!r}")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != SHARD_VERSION:
        raise AnnotationError(f"unsupported shard version {version}")
    segments = []
    pos = 6
    while pos < len(data):
        (length,) = struct.unpack_from("<I", data, pos)
        pos += 4
        segments.append(segment_from_dict(json.loads(data[pos : pos + length].decode())))
        pos += length
    return segments


def parse_annotation_upload(text: str) -> list[AnnotationSegment]:
    """One JSON object per line, as emitted by the browser annotation view."""
    segments = []
    for i, line in enumerate(text.splitlines()):
        line = line.strip()
        if not line:
            continue
        try:
            segments.append(segment_from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError) as e:
            raise AnnotationError(f"line {i + 1}: {e}") from e
    check_no_overlap(segments)
    return segments
