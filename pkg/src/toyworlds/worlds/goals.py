"""Ground-truth goal checking over the shared entity schema.

Evaluator specs are plain dicts so they serialize into task files:

    {"kind": "ground_truth", "predicate": {"name": ..., ...}}
    {"kind": "ocr_pattern", "patterns": [regex, ...],
     "action_predicate": {"key": "E", "within_ticks": 5}?}
    {"kind": "judged", "rubric": text}

Predicates are world-agnostic: they read avatar pose, object positions,
inventory, and the assembly graph. Movement predicates are measured
against the start pose recorded at task instantiation.
"""

from __future__ import annotations

import re
from typing import Any, Sequence

from ..worldcore.base import FACING_VECTORS
from ..worldcore.types import (
    STATUS_DISTRACTOR,
    STATUS_ONGOING,
    STATUS_SUCCESS,
    TaskError,
    WorldState,
)


def validate_evaluator(spec: dict[str, Any], state: WorldState) -> None:
    """Reject dangling references and bad patterns at task-load time."""
    kind = spec.get("kind")
    if kind == "ground_truth":
        pred = spec.get("predicate", {})
        if pred.get("name") not in PREDICATES:
            raise TaskError(f"unknown predicate {pred.get('name')!r}")
        for key in ("target", "target_b"):
            ref = pred.get(key)
            if ref is not None and ref not in state.entities["objects"]:
                raise TaskError(f"dangling entity reference {ref!r}")
    elif kind == "ocr_pattern":
        for pattern in spec.get("patterns", []):
            re.compile(pattern)
        if not spec.get("patterns"):
            raise TaskError("ocr_pattern evaluator needs at least one pattern")
    elif kind == "judged":
        if not spec.get("rubric"):
            raise TaskError("judged evaluator needs a rubric")
    else:
        raise TaskError(f"unknown evaluator kind {kind!r}")


def check_goal(
    state: WorldState,
    evaluator_spec: dict[str, Any],
    interaction_log: Sequence[Sequence],
    distractor_ids: Sequence[str] = (),
    text_events: Sequence[tuple[int, str]] = (),
) -> str:
    """Current episode status. Interacting with any listed distractor is an
    immediate failure that dominates later goal completion; callers latch
    the first terminal status, which makes success monotone."""
    distractors = set(distractor_ids) | set(evaluator_spec.get("distractors", ()))
    if distractors:
        for entry in interaction_log:
            if entry[1] in distractors:
                return STATUS_DISTRACTOR

    kind = evaluator_spec["kind"]
    if kind == "ground_truth":
        pred = evaluator_spec["predicate"]
        if PREDICATES[pred["name"]](state.entities, pred):
            return STATUS_SUCCESS
        return STATUS_ONGOING
    if kind == "ocr_pattern":
        if match_patterns_ordered(text_events, evaluator_spec["patterns"]) is not None:
            return STATUS_SUCCESS
        return STATUS_ONGOING
    # judged evaluators are resolved offline from human ratings
    return STATUS_ONGOING


def match_patterns_ordered(
    text_events: Sequence[tuple[int, str]], patterns: Sequence[str]
) -> int | None:
    """Tick of the final match if every pattern matches some event, in order."""
    compiled = [re.compile(p) for p in patterns]
    idx = 0
    last_tick: int | None = None
    for tick, text in text_events:
        if idx < len(compiled) and compiled[idx].search(text):
            last_tick = tick
            idx += 1
            if idx == len(compiled):
                return last_tick
    return None


# -- predicates ----------------------------------------------------------


def _obj(ent: dict, oid: str) -> dict:
    return ent["objects"][oid]


def _pred_held(ent, p):
    return ent["avatar"]["held"] == p["target"]


def _pred_near(ent, p):
    obj = _obj(ent, p["target"])
    if obj["x"] is None:
        return ent["avatar"]["held"] == p["target"]
    av = ent["avatar"]
    dist = max(abs(av["x"] - obj["x"]), abs(av["y"] - obj["y"]))
    return dist <= p.get("dist", 1)


def _pred_on_entity(ent, p):
    a = _obj(ent, p["target"])
    b = _obj(ent, p["target_b"])
    return a["x"] is not None and (a["x"], a["y"]) == (b["x"], b["y"])


def _pred_kind_is(ent, p):
    return _obj(ent, p["target"])["kind"] == p["value"]


def _pred_door_open(ent, p):
    return bool(_obj(ent, p["target"])["state"].get("open", False))


def _pred_moved_forward(ent, p):
    av, anchor = ent["avatar"], ent["anchor"]
    fx, fy = FACING_VECTORS[anchor["facing"]]
    progress = (av["x"] - anchor["x"]) * fx + (av["y"] - anchor["y"]) * fy
    return progress >= p["cells"]


def _pred_moved_back(ent, p):
    av, anchor = ent["avatar"], ent["anchor"]
    fx, fy = FACING_VECTORS[anchor["facing"]]
    progress = (av["x"] - anchor["x"]) * fx + (av["y"] - anchor["y"]) * fy
    return progress <= -p["cells"]


def _pred_turned(ent, p):
    return (ent["avatar"]["facing"] - ent["anchor"]["facing"]) % 4 == p["delta"]


def _pred_pitch_is(ent, p):
    return ent["avatar"]["pitch"] == p["value"]


def _pred_jumped(ent, p):
    return ent["avatar"]["jumps"] >= p.get("count", 1)


def _pred_menu_is(ent, p):
    return ent["avatar"]["menu"] == p["value"]


def _pred_slot_is(ent, p):
    return ent["avatar"]["slot"] == p["value"]


def _pred_inventory_at_least(ent, p):
    return ent.get("inventory", {}).get(p["item"], 0) >= p["count"]


def _edge_present(ent, a, b):
    edges = ent.get("assembly", {}).get("edges", [])
    return [a, b] in edges or [b, a] in edges


def _pred_edge_exists(ent, p):
    return _edge_present(ent, p["target"], p["target_b"])


def _pred_edge_absent(ent, p):
    return not _edge_present(ent, p["target"], p["target_b"])


PREDICATES = {
    "held": _pred_held,
    "near": _pred_near,
    "on_entity": _pred_on_entity,
    "kind_is": _pred_kind_is,
    "door_open": _pred_door_open,
    "moved_forward": _pred_moved_forward,
    "moved_back": _pred_moved_back,
    "turned": _pred_turned,
    "pitch_is": _pred_pitch_is,
    "jumped": _pred_jumped,
    "menu_is": _pred_menu_is,
    "slot_is": _pred_slot_is,
    "inventory_at_least": _pred_inventory_at_least,
    "edge_exists": _pred_edge_exists,
    "edge_absent": _pred_edge_absent,
}
