"""Three concrete instructable worlds plus the task registry."""

from ..worldcore.registry import register_world
from .buildlab import BuildLabWorld
from .goals import check_goal, match_patterns_ordered, validate_evaluator
from .harvest import HarvestWorld
from .playroom import PlayRoomWorld
from .taskfiles import (
    discrimination_groups,
    find_task,
    load_tasks,
    registry_list,
    save_tasks,
    validate_registry,
)

PLAYROOM = PlayRoomWorld()
BUILDLAB = BuildLabWorld()
HARVEST = HarvestWorld()

for _w in (PLAYROOM, BUILDLAB, HARVEST):
    register_world(_w)

__all__ = [
    "BUILDLAB", "BuildLabWorld", "HARVEST", "HarvestWorld", "PLAYROOM",
    "PlayRoomWorld", "check_goal", "discrimination_groups", "find_task",
    "load_tasks", "match_patterns_ordered", "registry_list", "save_tasks",
    "validate_evaluator", "validate_registry",
]
