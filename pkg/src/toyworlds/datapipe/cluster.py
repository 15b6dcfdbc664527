"""Instruction clustering for dataset reporting.

Instructions are embedded as hashed character trigram counts (L2
normalized) and merged bottom-up with average linkage over cosine
distance. The output is a linkage table plus a cluster-wheel SVG; it is
reporting machinery, not part of the agent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..worldcore.hashing import fnv1a64

EMBED_DIM = 128


def embed_text(text: str, dim: int = EMBED_DIM) -> np.ndarray:
    padded = f"  {text.lower().strip()}  "
    vec = np.zeros(dim, dtype=np.float64)
    for i in range(len(padded) - 2):
        gram = padded[i : i + 3].encode("utf-8")
        vec[fnv1a64(gram) % dim] += 1.0
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def cosine_distances(vectors: np.ndarray) -> np.ndarray:
    sims = np.clip(vectors @ vectors.T, -1.0, 1.0)
    return 1.0 - sims


@dataclass
class Hierarchy:
    """Agglomerative merge tree: row (a, b, height, size) creates cluster
    n_leaves + row_index from clusters a and b."""

    labels: list[str]
    merges: list[tuple[int, int, float, int]]

    def n_leaves(self) -> int:
        return len(self.labels)

    def cut(self, k: int) -> list[list[int]]:
        """Leaf index groups after cutting to k clusters."""
        members: dict[int, list[int]] = {i: [i] for i in range(self.n_leaves())}
        next_id = self.n_leaves()
        merges = list(self.merges)
        while len(members) > k and merges:
            a, b, _, _ = merges.pop(0)
            members[next_id] = members.pop(a) + members.pop(b)
            next_id += 1
        return sorted(members.values(), key=lambda g: (-len(g), g[0]))


def cluster_instructions(instructions: list[str]) -> Hierarchy:
    """Average-linkage agglomerative clustering (Lance-Williams update)."""
    if len(instructions) < 2:
        raise ValueError("need at least 2 instructions to cluster")
    vectors = np.stack([embed_text(t) for t in instructions])
    dist = cosine_distances(vectors)
    n = len(instructions)
    np.fill_diagonal(dist, np.inf)

    active = {i: (i, 1) for i in range(n)}  # matrix row -> (cluster id, size)
    merges: list[tuple[int, int, float, int]] = []
    next_id = n
    for _ in range(n - 1):
        rows = sorted(active)
        sub = dist[np.ix_(rows, rows)]
        flat = np.argmin(sub)
        ri, rj = divmod(flat, len(rows))
        i, j = rows[ri], rows[rj]
        height = float(dist[i, j])
        id_i, size_i = active[i]
        id_j, size_j = active[j]
        size = size_i + size_j
        merges.append((min(id_i, id_j), max(id_i, id_j), height, size))
        # merged cluster lives in row i; average-linkage distance update
        for k in rows:
            if k in (i, j):
                continue
            dist[i, k] = dist[k, i] = (size_i * dist[i, k] + size_j * dist[j, k]) / size
        del active[j]
        active[i] = (next_id, size)
        next_id += 1
    return Hierarchy(labels=list(instructions), merges=merges)


def hierarchy_report(h: Hierarchy, k: int = 8) -> dict:
    groups = h.cut(min(k, h.n_leaves()))
    return {
        "n_instructions": h.n_leaves(),
        "clusters": [
            {
                "size": len(g),
                "representative": _medoid_label(h, g),
                "members": [h.labels[i] for i in g],
            }
            for g in groups
        ],
        "merges": [[a, b, round(height, 6), size] for a, b, height, size in h.merges],
    }


def _medoid_label(h: Hierarchy, group: list[int]) -> str:
    vectors = np.stack([embed_text(h.labels[i]) for i in group])
    centroid = vectors.mean(axis=0)
    best = int(np.argmax(vectors @ centroid))
    return h.labels[group[best]]


def write_cluster_wheel(h: Hierarchy, path: str | Path, k: int = 8) -> None:
    """Deterministic SVG wheel: one arc per cluster, sized by member count."""
    import math

    report = hierarchy_report(h, k)
    total = sum(c["size"] for c in report["clusters"])
    cx = cy = 240
    r_in, r_out = 70, 200
    palette = ["#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2",
               "#b279a2", "#eeca3b", "#9d755d"]
    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="480" height="480" '
        'font-family="sans-serif">',
        f'<text x="{cx}" y="24" text-anchor="middle" font-size="14">'
        f'instruction clusters (n={total})</text>',
    ]
    angle = -math.pi / 2
    for i, cluster in enumerate(report["clusters"]):
        span = 2 * math.pi * cluster["size"] / total
        a0, a1 = angle, angle + span
        angle = a1
        parts.append(_arc_path(cx, cy, r_in, r_out, a0, a1, palette[i % len(palette)]))
        mid = (a0 + a1) / 2
        tx = cx + math.cos(mid) * (r_out + 14)
        ty = cy + math.sin(mid) * (r_out + 14)
        anchor = "start" if math.cos(mid) >= 0 else "end"
        label = cluster["representative"][:28]
        parts.append(f'<text x="{tx:.1f}" y="{ty:.1f}" text-anchor="{anchor}" '
                     f'font-size="11">{_esc(label)} ({cluster["size"]})</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def write_cluster_report(h: Hierarchy, path: str | Path, k: int = 8) -> None:
    Path(path).write_text(json.dumps(hierarchy_report(h, k), indent=2, sort_keys=True) + "\n")


def _arc_path(cx, cy, r_in, r_out, a0, a1, fill) -> str:
    import math

    large = 1 if (a1 - a0) > math.pi else 0
    x0o, y0o = cx + r_out * math.cos(a0), cy + r_out * math.sin(a0)
    x1o, y1o = cx + r_out * math.cos(a1), cy + r_out * math.sin(a1)
    x0i, y0i = cx + r_in * math.cos(a1), cy + r_in * math.sin(a1)
    x1i, y1i = cx + r_in * math.cos(a0), cy + r_in * math.sin(a0)
    return (f'<path d="M {x0o:.2f} {y0o:.2f} A {r_out} {r_out} 0 {large} 1 '
            f'{x1o:.2f} {y1o:.2f} L {x0i:.2f} {y0i:.2f} A {r_in} {r_in} 0 {large} 0 '
            f'{x1i:.2f} {y1i:.2f} Z" fill="{fill}" stroke="white"/>')


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
