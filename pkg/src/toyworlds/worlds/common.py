"""Scenario-building helpers shared by the concrete worlds."""

from __future__ import annotations

from ..worldcore.registry import empty_state
from ..worldcore.rng import Rng
from ..worldcore.types import TaskSpec, WorldState


def gt(predicate: dict, **extra) -> dict:
    return {"kind": "ground_truth", "predicate": predicate, **extra}


def ocr(patterns: list[str], action_predicate: dict | None = None,
        expert: dict | None = None) -> dict:
    """Text-event evaluator; `expert` carries the scripted demonstrator's
    route (which object to work) since patterns alone don't name one."""
    spec: dict = {"kind": "ocr_pattern", "patterns": patterns}
    if action_predicate:
        spec["action_predicate"] = action_predicate
    if expert:
        spec["expert"] = expert
    return spec


def task(world_id: str, scenario: str, slug: str, instruction: str,
         evaluator: dict, skill: str, distractors: tuple[str, ...] = (),
         budget: int = 100) -> TaskSpec:
    return TaskSpec(
        task_id=f"{world_id}:{scenario}:{slug}",
        world_id=world_id,
        save_state_ref=f"{world_id}/{scenario}",
        instruction=instruction,
        evaluator_spec=evaluator,
        distractor_ids=distractors,
        budget_ticks=budget,
        skill_category=skill,
    )


def basic_control_tasks(world_id: str, scenario: str) -> list[TaskSpec]:
    """Movement/look/menu tasks phrased identically in every world, so the
    same instruction maps to the same behavior across environments."""
    mk = lambda slug, instr, ev, skill: task(world_id, scenario, slug, instr, ev, skill)
    return [
        mk("forward", "go forward", gt({"name": "moved_forward", "cells": 3}), "movement"),
        mk("back", "walk backwards", gt({"name": "moved_back", "cells": 2}), "movement"),
        mk("turnleft", "turn left", gt({"name": "turned", "delta": 3}), "movement"),
        mk("turnright", "turn right", gt({"name": "turned", "delta": 1}), "movement"),
        mk("jump", "jump up", gt({"name": "jumped", "count": 1}), "movement"),
        mk("lookup", "look up", gt({"name": "pitch_is", "value": 1}), "look"),
        mk("lookdown", "look down", gt({"name": "pitch_is", "value": -1}), "look"),
        mk("menu", "open the menu", gt({"name": "menu_is", "value": True}), "menu/inventory"),
    ]


def scatter_objects(state: WorldState, rng: Rng, specs: list[tuple[str, dict]],
                    reserved: set[tuple[int, int]]) -> None:
    """Place objects uniformly on free floor cells, avoiding `reserved`
    (avatar clearance and fixed furniture) and each other."""
    ent = state.entities
    m = ent["map"]
    free = [
        (x, y)
        for y in range(1, m["h"] - 1)
        for x in range(1, m["w"] - 1)
        if m["terrain"][y][x] == "." and (x, y) not in reserved
    ]
    taken = {(o["x"], o["y"]) for o in ent["objects"].values() if o["x"] is not None}
    free = [c for c in free if c not in taken]
    rng.shuffle(free)
    if len(free) < len(specs):
        raise ValueError("scenario map too small for object set")
    for (oid, obj), (x, y) in zip(specs, free):
        obj["x"], obj["y"] = x, y
        ent["objects"][oid] = obj


def avatar_clearance(ax: int, ay: int) -> set[tuple[int, int]]:
    """Cells kept object-free around the avatar start: 3 ahead (north) and
    2 behind for the basic movement tasks, plus a chebyshev-2 box so no
    goal or distractor begins within reach or "near" range."""
    cells = {(ax, ay - 3)}
    cells.update((x, y) for x in range(ax - 2, ax + 3) for y in range(ay - 2, ay + 3))
    return cells


def open_hall(world_id: str, w: int, h: int, seed: int, rng: Rng | None = None) -> WorldState:
    state = empty_state(world_id, w, h, rng_state=seed)
    place_avatar(state, rng or Rng(seed))
    return state


def place_avatar(state: WorldState, rng: Rng) -> None:
    """Seeded start pose with walkable floor 3 cells ahead and 2 back, so
    every placement supports the basic movement tasks."""
    m = state.entities["map"]
    av = state.entities["avatar"]
    for _ in range(1000):
        x = rng.randint(2, m["w"] - 3)
        y = rng.randint(4, m["h"] - 4)
        column = [(x, y + d) for d in range(-3, 3)]
        if all(m["terrain"][cy][cx] == "." for cx, cy in column):
            av["x"], av["y"], av["facing"] = x, y, 0
            return
    raise ValueError("no avatar placement with movement clearance")
