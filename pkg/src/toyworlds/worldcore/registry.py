"""World registration and task instantiation."""

from __future__ import annotations

from .base import GridWorld, make_avatar
from .rng import derive_seed
from .types import TaskSpec, TaskError, WorldState

_WORLDS: dict[str, GridWorld] = {}


def register_world(world: GridWorld) -> None:
    _WORLDS[world.world_id] = world


def get_world(world_id: str) -> GridWorld:
    try:
        return _WORLDS[world_id]
    except KeyError:
        raise TaskError(f"unknown world {world_id!r}") from None


def world_ids() -> list[str]:
    return sorted(_WORLDS)


def instantiate_task(spec: TaskSpec, seed: int) -> WorldState:
    """Build the task's initial state: scenario content is a function of
    (save_state_ref, seed) only, so tasks sharing a scenario share states.

    The instruction target and every listed distractor must exist in the
    built state; the start pose is recorded under entities["anchor"] for
    movement evaluators.
    """
    spec.validate()
    world = get_world(spec.world_id)
    ref = spec.save_state_ref
    if "/" not in ref:
        raise TaskError(f"{spec.task_id}: malformed save_state_ref {ref!r}")
    ref_world, scenario = ref.split("/", 1)
    if ref_world != spec.world_id:
        raise TaskError(f"{spec.task_id}: save_state_ref world mismatch")
    if scenario not in world.scenario_names():
        raise TaskError(f"{spec.task_id}: unresolvable save_state_ref {ref!r}")

    state = world.build_scenario(scenario, derive_seed(seed, ref))

    missing = [oid for oid in _referenced_entities(spec)
               if oid not in state.entities["objects"]]
    if missing:
        raise TaskError(f"{spec.task_id}: entities missing from scenario: {missing}")

    av = state.entities["avatar"]
    state.entities["anchor"] = {"x": av["x"], "y": av["y"], "facing": av["facing"]}
    return state


def _referenced_entities(spec: TaskSpec) -> list[str]:
    refs = list(spec.distractor_ids)
    ev = spec.evaluator_spec
    pred = ev.get("predicate", {})
    for key in ("target", "target_b"):
        value = pred.get(key)
        if isinstance(value, str):
            refs.append(value)
    return refs


def empty_state(world_id: str, w: int, h: int, rng_state: int = 0) -> WorldState:
    """Blank state skeleton used by scenario builders."""
    terrain = ["#" * w] + ["#" + "." * (w - 2) + "#" for _ in range(h - 2)] + ["#" * w]
    return WorldState(
        world_id=world_id,
        rng_state=rng_state,
        tick=0,
        entities={
            "map": {"w": w, "h": h, "terrain": terrain},
            "avatar": make_avatar(w // 2, h // 2),
            "objects": {},
            "inventory": {},
            "ilog": [],
        },
    )
