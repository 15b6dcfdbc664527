"""Shared observation/action/task types used by every world and the protocol.

The control contract is the same for all worlds: a fixed 16-key keyboard,
bucketed relative mouse motion (7x7), and two mouse buttons, sampled once
per tick. Observations are fixed-size 16x16 symbolic frames plus on-screen
text events.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any

from .hashing import fnv1a64

FRAME_W = 16
FRAME_H = 16
CELL_COUNT = FRAME_W * FRAME_H
MAX_SYMBOL = 63
MAX_COLOR = 15
MAX_OVERLAY_CHARS = 80

TICK_HZ = 10
DEFAULT_BUDGET_TICKS = 100  # 10 seconds at 10 Hz

# Canonical key order; bit i of a key mask corresponds to KEY_ORDER[i].
KEY_ORDER = (
    "W", "A", "S", "D", "SPACE", "E", "Q", "R",
    "F", "C", "1", "2", "3", "4", "SHIFT", "ESC",
)
KEY_SET = frozenset(KEY_ORDER)
KEY_INDEX = {k: i for i, k in enumerate(KEY_ORDER)}

MOUSE_BUCKET_MIN = -3
MOUSE_BUCKET_MAX = 3
MOUSE_BUCKETS = 7

SKILL_CATEGORIES = (
    "movement",
    "navigation",
    "resource gathering",
    "object management",
    "tool use",
    "construction",
    "menu/inventory",
    "look",
    "game progression",
)


class ProtocolError(Exception):
    """Raised when the step contract is violated (e.g. action tick mismatch)."""


class TaskError(Exception):
    """Raised for invalid or unresolvable task specifications."""


@dataclass(frozen=True)
class Frame:
    """One 16x16 symbolic screen: interleaved (symbol, color) cell bytes,
    row-major, plus free-form overlay text lines."""

    cells: bytes
    overlay_text: tuple[str, ...] = ()
    width: int = FRAME_W
    height: int = FRAME_H

    def validate(self) -> None:
        if self.width != FRAME_W or self.height != FRAME_H:
            raise ValueError("frame dimensions are fixed at 16x16")
        if len(self.cells) != 2 * CELL_COUNT:
            raise ValueError(f"expected {2 * CELL_COUNT} cell bytes, got {len(self.cells)}")
        for i in range(CELL_COUNT):
            if self.cells[2 * i] > MAX_SYMBOL:
                raise ValueError(f"symbol id out of range at cell {i}")
            if self.cells[2 * i + 1] > MAX_COLOR:
                raise ValueError(f"color id out of range at cell {i}")
        for line in self.overlay_text:
            if len(line) > MAX_OVERLAY_CHARS:
                raise ValueError("overlay line exceeds 80 chars")

    def symbol_at(self, x: int, y: int) -> int:
        return self.cells[2 * (y * self.width + x)]

    def color_at(self, x: int, y: int) -> int:
        return self.cells[2 * (y * self.width + x) + 1]

    def hash(self) -> int:
        """64-bit FNV-1a over the row-major cell bytes (overlay excluded)."""
        return fnv1a64(self.cells)


@dataclass(frozen=True)
class ActionEvent:
    """One tick of input: held keys, bucketed mouse motion, button state."""

    tick: int
    keys: frozenset[str] = frozenset()
    mouse_dx: int = 0
    mouse_dy: int = 0
    left_button: bool = False
    right_button: bool = False

    def validate(self) -> None:
        if self.tick < 0:
            raise ValueError("tick must be non-negative")
        bad = self.keys - KEY_SET
        if bad:
            raise ValueError(f"unknown keys: {sorted(bad)}")
        for v in (self.mouse_dx, self.mouse_dy):
            if not MOUSE_BUCKET_MIN <= v <= MOUSE_BUCKET_MAX:
                raise ValueError(f"mouse bucket {v} out of range")

    def is_noop(self) -> bool:
        return (not self.keys and self.mouse_dx == 0 and self.mouse_dy == 0
                and not self.left_button and not self.right_button)

    def key_mask(self) -> int:
        mask = 0
        for k in self.keys:
            mask |= 1 << KEY_INDEX[k]
        return mask

    @staticmethod
    def from_mask(tick: int, mask: int, dx: int = 0, dy: int = 0,
                  left: bool = False, right: bool = False) -> "ActionEvent":
        keys = frozenset(k for k, i in KEY_INDEX.items() if mask >> i & 1)
        return ActionEvent(tick, keys, dx, dy, left, right)

    @staticmethod
    def noop(tick: int) -> "ActionEvent":
        return ActionEvent(tick=tick)


@dataclass(frozen=True)
class Observation:
    """Frame plus the text events emitted since the previous observation."""

    tick: int
    frame: Frame
    text_events: tuple[tuple[int, str], ...] = ()


@dataclass
class WorldState:
    """World snapshot: id, RNG state, tick, and world-owned entity content.

    `entities` must stay JSON-serializable (str/int/bool/None/list/dict) so
    that canonical serialization and structural equality are exact.
    """

    world_id: str
    rng_state: int
    tick: int
    entities: dict[str, Any] = field(default_factory=dict)

    def copy(self) -> "WorldState":
        return WorldState(self.world_id, self.rng_state, self.tick,
                          _copy_jsonish(self.entities))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WorldState):
            return NotImplemented
        return (self.world_id == other.world_id and self.rng_state == other.rng_state
                and self.tick == other.tick and self.entities == other.entities)


def _copy_jsonish(value):
    # Faster than copy.deepcopy for plain JSON-shaped data; falls back for
    # anything exotic so bugs surface as deepcopies, not aliasing.
    if isinstance(value, dict):
        return {k: _copy_jsonish(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_copy_jsonish(v) for v in value]
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return copy.deepcopy(value)


@dataclass(frozen=True)
class TaskSpec:
    """An evaluatable task: initial state reference, instruction, evaluator."""

    task_id: str
    world_id: str
    save_state_ref: str
    instruction: str
    evaluator_spec: dict[str, Any]
    distractor_ids: tuple[str, ...] = ()
    budget_ticks: int = DEFAULT_BUDGET_TICKS
    skill_category: str = "movement"

    def validate(self) -> None:
        if self.budget_ticks <= 0:
            raise TaskError(f"{self.task_id}: budget must be positive")
        if self.skill_category not in SKILL_CATEGORIES:
            raise TaskError(f"{self.task_id}: unknown skill category {self.skill_category!r}")
        if not self.instruction.strip():
            raise TaskError(f"{self.task_id}: empty instruction")
        kind = self.evaluator_spec.get("kind")
        if kind not in ("ground_truth", "ocr_pattern", "judged"):
            raise TaskError(f"{self.task_id}: bad evaluator kind {kind!r}")


STATUS_SUCCESS = "success"
STATUS_FAILURE = "failure"
STATUS_TIMEOUT = "timeout"
STATUS_DISTRACTOR = "distractor_failure"
STATUS_ONGOING = "ongoing"

TERMINAL_STATUSES = (STATUS_SUCCESS, STATUS_FAILURE, STATUS_TIMEOUT, STATUS_DISTRACTOR)


@dataclass(frozen=True)
class EpisodeOutcome:
    status: str
    ticks_used: int
    trace_ref: str = ""

    def validate(self) -> None:
        if self.status not in TERMINAL_STATUSES:
            raise ValueError(f"not a terminal status: {self.status}")
