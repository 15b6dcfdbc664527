"""Dataset manifests, weighted mixture sampling, and splits.

A manifest lists segment collections with positive weights; sampling
draws a collection proportionally to weight, then a segment uniformly
within it. Everything is seeded and reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, TypeVar

from ..worldcore.hashing import fnv1a64
from ..worldcore.rng import Rng

MANIFEST_VERSION = 1

T = TypeVar("T")


class ManifestError(Exception):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    world_id: str
    collection_id: str
    path: str
    weight: float


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    preprocessing_version: int = MANIFEST_VERSION

    def validate(self) -> None:
        if not self.entries:
            raise ManifestError("manifest has no entries")
        for e in self.entries:
            if e.weight <= 0:
                raise ManifestError(f"{e.collection_id}: weight must be positive")
        ids = [e.collection_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ManifestError("duplicate collection ids")

    def normalized_weights(self) -> list[float]:
        total = sum(e.weight for e in self.entries)
        return [e.weight / total for e in self.entries]


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    doc = {
        "version": manifest.preprocessing_version,
        "entries": [
            {"world_id": e.world_id, "collection_id": e.collection_id,
             "path": e.path, "weight": e.weight}
            for e in manifest.entries
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_manifest(path: str | Path) -> DatasetManifest:
    doc = json.loads(Path(path).read_text())
    entries = [ManifestEntry(e["world_id"], e["collection_id"], e["path"], e["weight"])
               for e in doc["entries"]]
    manifest = DatasetManifest(entries=entries,
                               preprocessing_version=doc.get("version", MANIFEST_VERSION))
    manifest.validate()
    return manifest


class MixtureSampler:
    """Weighted-by-collection, uniform-within-collection segment sampler."""

    def __init__(self, manifest: DatasetManifest,
                 collections: dict[str, Sequence[T]], seed: int):
        manifest.validate()
        self.entries = manifest.entries
        self.collections = collections
        for entry in self.entries:
            items = collections.get(entry.collection_id)
            if not items:
                raise ManifestError(
                    f"collection {entry.collection_id!r} is empty but has weight "
                    f"{entry.weight}")
        weights = manifest.normalized_weights()
        self.cumulative: list[float] = []
        acc = 0.0
        for w in weights:
            acc += w
            self.cumulative.append(acc)
        self.cumulative[-1] = 1.0
        self.rng = Rng(seed)

    def sample(self) -> tuple[str, T]:
        u = self.rng.random()
        for entry, edge in zip(self.entries, self.cumulative):
            if u < edge:
                items = self.collections[entry.collection_id]
                return entry.collection_id, items[self.rng.randrange(len(items))]
        entry = self.entries[-1]
        items = self.collections[entry.collection_id]
        return entry.collection_id, items[self.rng.randrange(len(items))]


def split_key(*parts: str | int) -> int:
    # finalizer mix: raw fnv of short strings is biased in the high bits
    z = fnv1a64("|".join(str(p) for p in parts).encode())
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & ((1 << 64) - 1)
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & ((1 << 64) - 1)
    return (z ^ (z >> 31)) & ((1 << 64) - 1)


def heldout_split(items: list[T], keys: list[int],
                  heldout_frac: float = 0.1) -> tuple[list[T], list[T]]:
    """Deterministic hash split; an item lands in the same side forever."""
    train, heldout = [], []
    threshold = int(heldout_frac * 2**64)
    for item, key in zip(items, keys):
        (heldout if key < threshold else train).append(item)
    return train, heldout
