"""Task registry: built-in task lists, lookup, and the on-disk format.

The registry file is versioned, human-editable JSON with one record per
task, fields matching TaskSpec exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..worldcore.registry import get_world, instantiate_task, world_ids
from ..worldcore.types import TaskError, TaskSpec
from .goals import validate_evaluator

REGISTRY_VERSION = 1


def registry_list(world_id: str | None = None) -> list[TaskSpec]:
    worlds = [world_id] if world_id else world_ids()
    tasks: list[TaskSpec] = []
    for wid in worlds:
        tasks.extend(get_world(wid).tasks())
    return tasks


def find_task(task_id: str) -> TaskSpec:
    for spec in registry_list():
        if spec.task_id == task_id:
            return spec
    raise TaskError(f"no task {task_id!r} in registry")


def validate_registry(tasks: list[TaskSpec], seeds: tuple[int, ...] = (0,)) -> None:
    """Instantiate every task at the given seeds; evaluators must resolve
    and must not already be satisfied at tick 0."""
    from .goals import check_goal

    for spec in tasks:
        spec.validate()
        for seed in seeds:
            state = instantiate_task(spec, seed)
            validate_evaluator(spec.evaluator_spec, state)
            status = check_goal(state, spec.evaluator_spec, [], spec.distractor_ids)
            if status != "ongoing":
                raise TaskError(f"{spec.task_id}: evaluator already {status} at start")


def discrimination_groups(tasks: list[TaskSpec]) -> dict[str, list[TaskSpec]]:
    """Tasks grouped by shared initial state (same save_state_ref)."""
    groups: dict[str, list[TaskSpec]] = {}
    for spec in tasks:
        groups.setdefault(spec.save_state_ref, []).append(spec)
    return groups


def save_tasks(tasks: list[TaskSpec], path: str | Path) -> None:
    doc = {
        "version": REGISTRY_VERSION,
        "tasks": [
            {
                "task_id": t.task_id,
                "world_id": t.world_id,
                "save_state_ref": t.save_state_ref,
                "instruction": t.instruction,
                "evaluator_spec": t.evaluator_spec,
                "distractor_ids": list(t.distractor_ids),
                "budget_ticks": t.budget_ticks,
                "skill_category": t.skill_category,
            }
            for t in tasks
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_tasks(path: str | Path) -> list[TaskSpec]:
    doc = json.loads(Path(path).read_text())
    if doc.get("version") != REGISTRY_VERSION:
        raise TaskError(f"unsupported registry version {doc.get('version')}")
    return [
        TaskSpec(
            task_id=rec["task_id"],
            world_id=rec["world_id"],
            save_state_ref=rec["save_state_ref"],
            instruction=rec["instruction"],
            evaluator_spec=rec["evaluator_spec"],
            distractor_ids=tuple(rec["distractor_ids"]),
            budget_ticks=rec["budget_ticks"],
            skill_category=rec["skill_category"],
        )
        for rec in doc["tasks"]
    ]
