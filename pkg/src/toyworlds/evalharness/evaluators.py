"""Evaluator kinds and per-episode status tracking.

Three ways to grade an episode: ground-truth predicates over true world
state, ordered pattern matching on on-screen text (optionally requiring a
recent key press), and human judgment (resolved offline from ratings).
The tracker latches the first terminal status, so success is terminal and
a distractor touch can never be outrun.
"""

from __future__ import annotations

import re
from typing import Sequence

from ..worldcore.types import (
    ActionEvent,
    Observation,
    STATUS_ONGOING,
    STATUS_SUCCESS,
    STATUS_TIMEOUT,
    TaskSpec,
    WorldState,
)
from ..worlds.goals import check_goal, match_patterns_ordered


def ocr_evaluate(
    text_events: Sequence[tuple[int, str]],
    spec: dict,
    actions: Sequence[ActionEvent] = (),
) -> bool:
    """True iff every pattern matches some event, in order, and (when the
    spec demands it) the required key was pressed within the allowed
    window before the final match."""
    if spec.get("kind") != "ocr_pattern":
        raise ValueError("ocr_evaluate needs an ocr_pattern spec")
    match_tick = match_patterns_ordered(text_events, spec["patterns"])
    if match_tick is None:
        return False
    action_pred = spec.get("action_predicate")
    if action_pred is None:
        return True
    key = action_pred["key"]
    window = action_pred.get("within_ticks", 5)
    for action in actions:
        if match_tick - window <= action.tick <= match_tick and key in action.keys:
            return True
    return False


class EpisodeTracker:
    """Accumulates per-tick evidence and reports the episode status."""

    def __init__(self, task: TaskSpec):
        self.task = task
        self.text_events: list[tuple[int, str]] = []
        self.actions: list[ActionEvent] = []
        self._latched: str | None = None

    def update(self, state: WorldState, obs: Observation,
               action: ActionEvent | None = None) -> str:
        if self._latched is not None:
            return self._latched
        self.text_events.extend(obs.text_events)
        if action is not None:
            self.actions.append(action)
        spec = self.task.evaluator_spec
        status = check_goal(state, spec, state.entities.get("ilog", []),
                            self.task.distractor_ids, text_events=self.text_events)
        if status == STATUS_SUCCESS and spec["kind"] == "ocr_pattern":
            if not ocr_evaluate(self.text_events, spec, self.actions):
                status = STATUS_ONGOING
        if status != STATUS_ONGOING:
            self._latched = status
        return status

    def final_status(self) -> str:
        return self._latched if self._latched is not None else STATUS_TIMEOUT

    def status_at_timeout(self) -> str:
        return self.final_status()


def compile_task_evaluator(task: TaskSpec) -> None:
    """Fail fast on bad patterns before any episode runs."""
    if task.evaluator_spec.get("kind") == "ocr_pattern":
        for pattern in task.evaluator_spec["patterns"]:
            re.compile(pattern)
