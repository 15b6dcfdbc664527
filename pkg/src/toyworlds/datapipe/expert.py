"""Scripted demonstrators: closed-loop planners that solve registry tasks.

Experts read the true world state (they are data generators, not
learners) and replan from scratch every tick, which keeps them robust to
latency and to their own missteps. Each tick they emit exactly one
action: a BFS step toward a stand cell, a quarter-turn to face the
target, a key edge, or an interaction.
"""

from __future__ import annotations

from collections import deque
from typing import Callable

from ..worldcore.base import FACING_VECTORS, GridWorld
from ..worldcore.types import ActionEvent, Observation, TaskSpec, WorldState
from ..netproto.simsession import ClientOutput, SimClient
from ..netproto.wire import ActionMsg


class ExpertError(Exception):
    """The scripted expert could not produce a plan (task likely unsolvable)."""


def _neighbors(x: int, y: int):
    yield x, y - 1
    yield x + 1, y
    yield x, y + 1
    yield x - 1, y


def _dir_of(x: int, y: int, tx: int, ty: int) -> int:
    """Cardinal direction from (x, y) toward the axis-dominant target."""
    dx, dy = tx - x, ty - y
    if abs(dx) >= abs(dy):
        return 1 if dx > 0 else 3
    return 2 if dy > 0 else 0


class ExpertPolicy:
    def __init__(self, world: GridWorld, task: TaskSpec):
        self.world = world
        self.task = task

    # -- low-level action builders ----------------------------------------

    def _act(self, state: WorldState, **kw) -> ActionEvent:
        return ActionEvent(tick=state.tick, **kw)

    def _edge_safe(self, state: WorldState, key: str, **kw) -> ActionEvent:
        """Press `key`, inserting a release tick if it is already held."""
        av = state.entities["avatar"]
        if key in av.get("prev_keys", []):
            return self._act(state)
        return self._act(state, keys=frozenset({key}), **kw)

    def _interact(self, state: WorldState) -> ActionEvent:
        return self._edge_safe(state, "E")

    def _secondary(self, state: WorldState) -> ActionEvent:
        av = state.entities["avatar"]
        if av.get("prev_right", False):
            return self._act(state)
        return self._act(state, right_button=True)

    # -- movement ----------------------------------------------------------

    def _bfs(self, ent: dict, start: tuple[int, int],
             goals: set[tuple[int, int]]) -> list[tuple[int, int]] | None:
        """Shortest path over passable cells; closed doors are traversable
        in planning (the walker opens them on contact)."""
        world = self.world

        def walkable(x: int, y: int) -> bool:
            if world.terrain_at(ent, x, y) == "#":
                return False
            for oid in world.objects_at(ent, x, y):
                obj = ent["objects"][oid]
                if obj["kind"] == "door":
                    continue
                if obj["kind"] in world.solid_kinds:
                    return False
            return True

        if start in goals:
            return [start]
        seen = {start}
        queue = deque([(start, [start])])
        while queue:
            (x, y), path = queue.popleft()
            for nx, ny in _neighbors(x, y):
                if (nx, ny) in seen or not walkable(nx, ny):
                    continue
                npath = path + [(nx, ny)]
                if (nx, ny) in goals:
                    return npath
                seen.add((nx, ny))
                queue.append(((nx, ny), npath))
        return None

    def _step_along(self, state: WorldState, path: list[tuple[int, int]]) -> ActionEvent:
        ent = state.entities
        av = ent["avatar"]
        nx, ny = path[1]
        # a closed door on the next cell gets opened first
        for oid in self.world.objects_at(ent, nx, ny):
            obj = ent["objects"][oid]
            if obj["kind"] == "door" and not obj["state"].get("open", False):
                face = self._face_cell(state, (nx, ny))
                return face if face is not None else self._interact(state)
        direction = _dir_of(av["x"], av["y"], nx, ny)
        key = ("W", "D", "S", "A")[(direction - av["facing"]) % 4]
        return self._act(state, keys=frozenset({key}))

    def _face_cell(self, state: WorldState, cell: tuple[int, int]) -> ActionEvent | None:
        """Quarter-turn toward the cell; None when already facing it."""
        av = state.entities["avatar"]
        direction = _dir_of(av["x"], av["y"], cell[0], cell[1])
        delta = (direction - av["facing"]) % 4
        if delta == 0:
            return None
        return self._act(state, mouse_dx=3 if delta in (1, 2) else -3)

    def _goto_and_face(self, state: WorldState, target_id: str,
                       reach: int = 1) -> ActionEvent | None:
        """Arrive at a stand cell aligned with the target and face it.
        Returns None once standing and facing within reach."""
        ent = state.entities
        av = ent["avatar"]
        obj = ent["objects"][target_id]
        tx, ty = obj["x"], obj["y"]
        if (av["x"], av["y"]) == (tx, ty):
            # standing on it; step off to any free neighbor
            for nx, ny in _neighbors(av["x"], av["y"]):
                if self.world.is_passable(ent, nx, ny):
                    direction = _dir_of(av["x"], av["y"], nx, ny)
                    key = ("W", "D", "S", "A")[(direction - av["facing"]) % 4]
                    return self._act(state, keys=frozenset({key}))
            raise ExpertError(f"{self.task.task_id}: boxed in on top of target")
        stands = self._stand_cells(ent, tx, ty, reach)
        if not stands:
            raise ExpertError(f"{self.task.task_id}: no stand cell for {target_id}")
        if (av["x"], av["y"]) in stands:
            return self._face_cell(state, (tx, ty))
        path = self._bfs(ent, (av["x"], av["y"]), stands)
        if path is None:
            raise ExpertError(f"{self.task.task_id}: no path to {target_id}")
        return self._step_along(state, path)

    def _stand_cells(self, ent: dict, tx: int, ty: int, reach: int) -> set[tuple[int, int]]:
        world = self.world
        cells: set[tuple[int, int]] = set()
        for dx, dy in FACING_VECTORS:
            for dist in range(1, reach + 1):
                sx, sy = tx + dx * dist, ty + dy * dist
                if not world.is_passable(ent, sx, sy):
                    break
                if dist == 2:
                    # the between cell must not occlude the interaction ray
                    bx, by = tx + dx, ty + dy
                    if world.objects_at(ent, bx, by):
                        break
                cells.add((sx, sy))
        return cells

    # -- composite plans ----------------------------------------------------

    def _plan_pickup(self, state: WorldState, target_id: str) -> ActionEvent:
        ent = state.entities
        av = ent["avatar"]
        if av["held"] is not None and av["held"] != target_id:
            return self._edge_safe(state, "Q")
        move = self._goto_and_face(state, target_id)
        return move if move is not None else self._interact(state)

    def _plan_interact(self, state: WorldState, target_id: str) -> ActionEvent:
        move = self._goto_and_face(state, target_id)
        return move if move is not None else self._interact(state)

    def _plan_place_on(self, state: WorldState, held_id: str, surface_id: str) -> ActionEvent:
        move = self._goto_and_face(state, surface_id)
        return move if move is not None else self._secondary(state)

    def _plan_attach(self, state: WorldState, block_id: str, anchor_id: str) -> ActionEvent:
        ent = state.entities
        av = ent["avatar"]
        obj = ent["objects"][anchor_id]
        tx, ty = obj["x"], obj["y"]
        stands = set()
        for dx, dy in FACING_VECTORS:
            sx, sy = tx + dx * 2, ty + dy * 2
            bx, by = tx + dx, ty + dy
            if (self.world.is_passable(ent, sx, sy)
                    and self.world.is_passable(ent, bx, by)
                    and not self.world.objects_at(ent, bx, by)):
                stands.add((sx, sy))
        if not stands:
            raise ExpertError(f"{self.task.task_id}: nowhere to attach from")
        if (av["x"], av["y"]) not in stands:
            path = self._bfs(ent, (av["x"], av["y"]), stands)
            if path is None:
                raise ExpertError(f"{self.task.task_id}: no path to anchor")
            return self._step_along(state, path)
        face = self._face_cell(state, (tx, ty))
        return face if face is not None else self._secondary(state)

    def _plan_harvest(self, state: WorldState, node_id: str) -> ActionEvent:
        from ..worlds.harvest import NODES
        ent = state.entities
        av = ent["avatar"]
        node = ent["objects"][node_id]
        required_slot = NODES[node["kind"]][1]
        if av["slot"] != required_slot:
            return self._edge_safe(state, str(required_slot))
        return self._plan_interact(state, node_id)

    def _plan_scan(self, state: WorldState, node_id: str) -> ActionEvent:
        av = state.entities["avatar"]
        if av["slot"] != 4:
            return self._edge_safe(state, "4")
        return self._plan_interact(state, node_id)

    def _plan_craft(self, state: WorldState, bench_id: str) -> ActionEvent:
        ent = state.entities
        if ent["inventory"].get("wood", 0) >= 2:
            return self._plan_interact(state, bench_id)
        trees = [oid for oid, o in sorted(ent["objects"].items())
                 if o["kind"] == "tree" and o["state"]["qty"] > 0]
        if not trees:
            raise ExpertError(f"{self.task.task_id}: no wood source")
        return self._plan_harvest(state, trees[0])

    def _plan_chop(self, state: WorldState, carrot_id: str) -> ActionEvent:
        ent = state.entities
        av = ent["avatar"]
        carrot = ent["objects"][carrot_id]
        boards = [oid for oid, o in sorted(ent["objects"].items()) if o["kind"] == "board"]
        if not boards:
            raise ExpertError(f"{self.task.task_id}: no cutting board")
        board = ent["objects"][boards[0]]
        on_board = (carrot["x"], carrot["y"]) == (board["x"], board["y"])
        knives = [oid for oid, o in sorted(ent["objects"].items()) if o["kind"] == "knife"]
        if not knives:
            raise ExpertError(f"{self.task.task_id}: no knife")
        knife_id = knives[0]
        if not on_board:
            if av["held"] == carrot_id:
                return self._plan_place_on(state, carrot_id, boards[0])
            return self._plan_pickup(state, carrot_id)
        if av["held"] != knife_id:
            return self._plan_pickup(state, knife_id)
        move = self._goto_and_face(state, carrot_id)
        return move if move is not None else self._interact(state)

    # -- dispatch ------------------------------------------------------------

    def next_action(self, state: WorldState) -> ActionEvent:
        ent = state.entities
        av = ent["avatar"]
        ev = self.task.evaluator_spec

        pred = ev.get("predicate", {})
        goal_is_menu = pred.get("name") == "menu_is"
        if av["menu"] and not goal_is_menu:
            return self._edge_safe(state, "ESC")

        if ev["kind"] == "ocr_pattern":
            hint = ev.get("expert", {})
            op = hint.get("op")
            if op == "harvest":
                return self._plan_harvest(state, hint["target"])
            if op == "scan":
                return self._plan_scan(state, hint["target"])
            if op == "craft":
                return self._plan_craft(state, hint["target"])
            if op == "interact":
                return self._plan_interact(state, hint["target"])
            raise ExpertError(f"{self.task.task_id}: no expert hint for ocr task")

        name = pred["name"]
        if name == "moved_forward":
            return self._act(state, keys=frozenset({"W"}))
        if name == "moved_back":
            return self._act(state, keys=frozenset({"S"}))
        if name == "turned":
            if (av["facing"] - ent["anchor"]["facing"]) % 4 == pred["delta"]:
                return self._act(state)
            return self._act(state, mouse_dx=3 if pred["delta"] == 1 else -3)
        if name == "pitch_is":
            if av["pitch"] == pred["value"]:
                return self._act(state)
            return self._act(state, mouse_dy=-3 if pred["value"] > av["pitch"] else 3)
        if name == "jumped":
            return self._edge_safe(state, "SPACE")
        if name == "menu_is":
            if av["menu"] == pred["value"]:
                return self._act(state)
            return self._edge_safe(state, "ESC")
        if name == "slot_is":
            if av["slot"] == pred["value"]:
                return self._act(state)
            return self._edge_safe(state, str(pred["value"]))
        if name == "held":
            return self._plan_pickup(state, pred["target"])
        if name == "near":
            move = self._goto_and_face(state, pred["target"])
            return move if move is not None else self._act(state)
        if name == "door_open":
            return self._plan_interact(state, pred["target"])
        if name == "on_entity":
            if av["held"] == pred["target"]:
                return self._plan_place_on(state, pred["target"], pred["target_b"])
            return self._plan_pickup(state, pred["target"])
        if name == "kind_is":
            return self._plan_chop(state, pred["target"])
        if name == "inventory_at_least":
            nodes = [oid for oid, o in sorted(ent["objects"].items())
                     if o["state"].get("resource") == pred["item"] and o["state"]["qty"] > 0]
            if not nodes:
                raise ExpertError(f"{self.task.task_id}: no node yields {pred['item']}")
            return self._plan_harvest(state, nodes[0])
        if name == "edge_exists":
            if av["held"] != pred["target"]:
                return self._plan_pickup(state, pred["target"])
            return self._plan_attach(state, pred["target"], pred["target_b"])
        if name == "edge_absent":
            return self._plan_pickup(state, pred["target"])
        raise ExpertError(f"{self.task.task_id}: no plan for predicate {name!r}")


class ExpertClient(SimClient):
    """Session client wrapping an ExpertPolicy with privileged state access."""

    def __init__(self, policy: ExpertPolicy,
                 state_provider: Callable[[], WorldState] | None = None):
        self.policy = policy
        self.state_provider = state_provider

    def bind_engine(self, engine) -> None:
        if self.state_provider is None:
            self.state_provider = lambda: engine.state

    def on_observation(self, obs: Observation) -> ClientOutput:
        state = self.state_provider()
        action = self.policy.next_action(state)
        return ClientOutput(messages=[ActionMsg(action)])
