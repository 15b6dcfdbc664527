"""Environment abstraction: deterministic tick worlds, save/load, tasks."""

from .base import GridWorld, make_avatar, make_object
from .hashing import fnv1a64
from .registry import empty_state, get_world, instantiate_task, register_world, world_ids
from .rng import Rng, derive_seed
from .saveio import SaveDecodeError, load, save
from .types import (
    DEFAULT_BUDGET_TICKS,
    KEY_ORDER,
    KEY_SET,
    SKILL_CATEGORIES,
    STATUS_DISTRACTOR,
    STATUS_FAILURE,
    STATUS_ONGOING,
    STATUS_SUCCESS,
    STATUS_TIMEOUT,
    TICK_HZ,
    ActionEvent,
    EpisodeOutcome,
    Frame,
    Observation,
    ProtocolError,
    TaskError,
    TaskSpec,
    WorldState,
)

__all__ = [
    "ActionEvent", "DEFAULT_BUDGET_TICKS", "EpisodeOutcome", "Frame", "GridWorld",
    "KEY_ORDER", "KEY_SET", "Observation", "ProtocolError", "Rng",
    "SKILL_CATEGORIES", "STATUS_DISTRACTOR", "STATUS_FAILURE", "STATUS_ONGOING",
    "STATUS_SUCCESS", "STATUS_TIMEOUT", "SaveDecodeError", "TICK_HZ", "TaskError",
    "TaskSpec", "WorldState", "derive_seed", "empty_state", "fnv1a64", "get_world",
    "instantiate_task", "load", "make_avatar", "make_object", "register_world",
    "save", "world_ids",
]
