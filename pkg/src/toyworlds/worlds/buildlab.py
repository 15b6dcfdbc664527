"""Build hall: interconnecting blocks with a simple attachment graph.

Blocks attach at connector points (small blocks have 2, large have 4).
A held block is placed one cell in front of the avatar and linked to a
block two cells ahead; interacting with a leaf block detaches its single
link and picks it up. Only loose blocks can be attached, so rigid groups
are trees and can never form cycles.
"""

from __future__ import annotations

from ..worldcore.base import GridWorld, make_object
from ..worldcore.rng import Rng
from ..worldcore.types import TaskSpec, WorldState
from .common import (
    avatar_clearance,
    basic_control_tasks,
    gt,
    open_hall,
    scatter_objects,
    task,
)

CONNECTORS = {"block_small": 2, "block_large": 4}


class BuildLabWorld(GridWorld):
    world_id = "buildlab"
    portable_kinds = frozenset({"block_small", "block_large"})

    def scenario_names(self) -> list[str]:
        return ["hall_a", "hall_b", "hall_c"]

    def build_scenario(self, name: str, seed: int) -> WorldState:
        rng = Rng(seed)
        state = open_hall(self.world_id, 16, 12, seed)
        ent = state.entities
        ent["assembly"] = {"edges": []}
        av = ent["avatar"]
        reserved = avatar_clearance(av["x"], av["y"])

        if name == "hall_a":
            blocks = [
                ("block_red", make_object("block_small", "red", None, None)),
                ("block_blue", make_object("block_large", "blue", None, None)),
                ("block_green", make_object("block_small", "green", None, None)),
                ("block_yellow", make_object("block_large", "yellow", None, None)),
            ]
            scatter_objects(state, rng, blocks, reserved)
        elif name == "hall_b":
            blocks = [
                ("block_red", make_object("block_small", "red", None, None)),
                ("block_purple", make_object("block_large", "purple", None, None)),
            ]
            scatter_objects(state, rng, blocks, reserved)
            self._place_attached_pair(
                state, rng, reserved,
                ("block_blue", make_object("block_small", "blue", None, None)),
                ("block_green", make_object("block_large", "green", None, None)))
        elif name == "hall_c":
            blocks = [
                ("block_orange", make_object("block_small", "orange", None, None)),
            ]
            scatter_objects(state, rng, blocks, reserved)
            self._place_attached_pair(
                state, rng, reserved,
                ("block_cyan", make_object("block_large", "cyan", None, None)),
                ("block_white", make_object("block_small", "white", None, None)))
        else:
            raise ValueError(f"unknown scenario {name!r}")
        return state

    def _place_attached_pair(self, state: WorldState, rng: Rng,
                             reserved: set, base: tuple, partner: tuple) -> None:
        """Scatter a base block, then put its partner on an adjacent free
        cell and link them."""
        ent = state.entities
        scatter_objects(state, rng, [base], reserved)
        base_obj = ent["objects"][base[0]]
        bx, by = base_obj["x"], base_obj["y"]
        options = [(bx, by + 1), (bx + 1, by), (bx, by - 1), (bx - 1, by)]
        for x, y in options:
            if (x, y) in reserved or not self.is_passable(ent, x, y):
                continue
            if self.objects_at(ent, x, y):
                continue
            partner[1]["x"], partner[1]["y"] = x, y
            ent["objects"][partner[0]] = partner[1]
            ent["assembly"]["edges"].append([base[0], partner[0]])
            return
        raise ValueError("no adjacent cell for attached pair")

    # -- attachment graph helpers ----------------------------------------

    def _degree(self, ent: dict, oid: str) -> int:
        return sum(1 for e in ent["assembly"]["edges"] if oid in e)

    def _free_connectors(self, ent: dict, oid: str) -> int:
        kind = ent["objects"][oid]["kind"]
        return CONNECTORS[kind] - self._degree(ent, oid)

    def on_interact(self, ent: dict, obj_id: str, events: list[str]) -> None:
        av = ent["avatar"]
        obj = ent["objects"][obj_id]
        if obj["kind"] not in self.portable_kinds:
            return
        if av["held"] is not None:
            events.append("Hands full")
            return
        degree = self._degree(ent, obj_id)
        if degree == 0:
            obj["x"] = obj["y"] = None
            av["held"] = obj_id
            events.append("Picked up block")
        elif degree == 1:
            # detach the leaf: drop its single link, then hold it
            edges = ent["assembly"]["edges"]
            for i in range(len(edges) - 1, -1, -1):
                if obj_id in edges[i]:
                    edges.pop(i)
                    break
            obj["x"] = obj["y"] = None
            av["held"] = obj_id
            events.append("Detached block")
        else:
            events.append("Stuck")

    def on_secondary(self, ent: dict, target: tuple[int, int],
                     obj_id: str | None, events: list[str]) -> None:
        # attach: held block goes one cell ahead, linked to a block two ahead
        av = ent["avatar"]
        if av["held"] is None:
            return
        cells = self.faced_cells(ent)
        near, far = cells[0], cells[1]
        if obj_id is not None:
            return  # the near cell must be free to receive the held block
        far_objs = self.objects_at(ent, *far)
        if not far_objs:
            return
        anchor_id = far_objs[0]
        if ent["objects"][anchor_id]["kind"] not in self.portable_kinds:
            return
        if self.terrain_at(ent, *near) == "#" or not self.is_passable(ent, *near):
            return
        held_id = av["held"]
        if self._free_connectors(ent, anchor_id) < 1 or self._free_connectors(ent, held_id) < 1:
            events.append("No free connector")
            return
        held = ent["objects"][held_id]
        held["x"], held["y"] = near
        ent["assembly"]["edges"].append([held_id, anchor_id])
        av["held"] = None
        events.append("Attached")

    def tasks(self) -> list[TaskSpec]:
        t = lambda *a, **k: task(self.world_id, *a, **k)
        out: list[TaskSpec] = []

        s = "hall_a"
        out += [
            t(s, "take-red-block", "pick up the red block",
              gt({"name": "held", "target": "block_red"}), "object management",
              ("block_green",)),
            t(s, "take-green-block", "pick up the green block",
              gt({"name": "held", "target": "block_green"}), "object management",
              ("block_red",)),
            t(s, "attach-red-blue", "attach the red block to the blue block",
              gt({"name": "edge_exists", "target": "block_red", "target_b": "block_blue"}),
              "construction", ("block_green",)),
            t(s, "attach-green-yellow", "connect the green block to the yellow block",
              gt({"name": "edge_exists", "target": "block_green", "target_b": "block_yellow"}),
              "construction", ("block_red",)),
            t(s, "attach-green-blue", "attach the green block to the blue block",
              gt({"name": "edge_exists", "target": "block_green", "target_b": "block_blue"}),
              "construction", ("block_yellow",)),
            t(s, "goto-blue-block", "go to the blue block",
              gt({"name": "near", "target": "block_blue"}), "navigation", ("block_red",)),
            t(s, "goto-yellow-block", "go to the yellow block",
              gt({"name": "near", "target": "block_yellow"}), "navigation",
              ("block_green",)),
        ] + basic_control_tasks(self.world_id, s)

        s = "hall_b"
        out += [
            t(s, "detach-blue", "detach the blue block from the green block",
              gt({"name": "edge_absent", "target": "block_blue", "target_b": "block_green"}),
              "construction", ("block_red",)),
            t(s, "attach-red-purple", "attach the red block to the purple block",
              gt({"name": "edge_exists", "target": "block_red", "target_b": "block_purple"}),
              "construction", ("block_blue",)),
            t(s, "attach-red-green", "attach the red block to the green block",
              gt({"name": "edge_exists", "target": "block_red", "target_b": "block_green"}),
              "construction", ("block_purple",)),
            t(s, "take-red-block", "pick up the red block",
              gt({"name": "held", "target": "block_red"}), "object management",
              ("block_purple",)),
            t(s, "goto-green-block", "go to the green block",
              gt({"name": "near", "target": "block_green"}), "navigation", ("block_red",)),
        ] + basic_control_tasks(self.world_id, s)

        s = "hall_c"
        out += [
            t(s, "attach-orange-cyan", "attach the orange block to the cyan block",
              gt({"name": "edge_exists", "target": "block_orange", "target_b": "block_cyan"}),
              "construction", ("block_white",)),
            t(s, "detach-white", "detach the white block from the cyan block",
              gt({"name": "edge_absent", "target": "block_white", "target_b": "block_cyan"}),
              "construction", ("block_orange",)),
            t(s, "take-orange-block", "pick up the orange block",
              gt({"name": "held", "target": "block_orange"}), "object management",
              ("block_white",)),
            t(s, "take-white-block", "take the white block",
              gt({"name": "held", "target": "block_white"}), "object management",
              ("block_orange",)),
            t(s, "goto-cyan-block", "go to the cyan block",
              gt({"name": "near", "target": "block_cyan"}), "navigation",
              ("block_orange",)),
        ] + basic_control_tasks(self.world_id, s)

        return out
