"""Harvest field: resource nodes, tools, and a crafting bench.

Every interaction outcome is announced through game-style on-screen text
("Wood +1", "Crafted Plank", "Too hard"), which is what pattern-based
evaluation keys on. Harvesting moves quantities from nodes to the
inventory one unit at a time, so totals are conserved.

Tool slots: 1 hand, 2 axe, 3 pick, 4 scanner.
"""

from __future__ import annotations

from ..worldcore.base import GridWorld, make_object
from ..worldcore.rng import Rng
from ..worldcore.types import TaskSpec, WorldState
from .common import (
    avatar_clearance,
    basic_control_tasks,
    gt,
    ocr,
    open_hall,
    scatter_objects,
    task,
)

SLOT_HAND, SLOT_AXE, SLOT_PICK, SLOT_SCANNER = 1, 2, 3, 4

# node kind -> (resource, required slot, units per harvest)
NODES = {
    "tree": ("wood", SLOT_AXE, 1),
    "rock": ("stone", SLOT_PICK, 1),
    "bush": ("berries", SLOT_HAND, 3),
    "carbon": ("carbon", SLOT_PICK, 25),
}
SCAN_NAMES = {"tree": "Tree", "rock": "Rock", "bush": "Bush", "carbon": "Carbon"}


class HarvestWorld(GridWorld):
    world_id = "harvest"

    def scenario_names(self) -> list[str]:
        return ["grove_a", "grove_b", "grove_c"]

    def build_scenario(self, name: str, seed: int) -> WorldState:
        rng = Rng(seed)
        state = open_hall(self.world_id, 18, 14, seed)
        ent = state.entities
        ent["inventory"] = {}
        av = ent["avatar"]
        reserved = avatar_clearance(av["x"], av["y"])

        def node(kind: str, qty: int) -> dict:
            resource = NODES[kind][0]
            return make_object(kind, _node_color(kind), None, None,
                               {"qty": qty, "resource": resource})

        if name == "grove_a":
            specs = [
                ("tree_1", node("tree", 5)),
                ("rock_1", node("rock", 5)),
                ("bush_1", node("bush", 9)),
                ("carbon_1", node("carbon", 100)),
                ("bench_1", make_object("bench", "brown", None, None)),
            ]
        elif name == "grove_b":
            specs = [
                ("tree_1", node("tree", 5)),
                ("tree_2", node("tree", 5)),
                ("rock_1", node("rock", 5)),
                ("bush_1", node("bush", 9)),
                ("carbon_1", node("carbon", 100)),
                ("bench_1", make_object("bench", "brown", None, None)),
            ]
        elif name == "grove_c":
            specs = [
                ("tree_1", node("tree", 5)),
                ("rock_1", node("rock", 5)),
                ("bush_1", node("bush", 9)),
                ("carbon_1", node("carbon", 100)),
                ("bench_1", make_object("bench", "brown", None, None)),
            ]
        else:
            raise ValueError(f"unknown scenario {name!r}")
        scatter_objects(state, rng, specs, reserved)
        return state

    def on_interact(self, ent: dict, obj_id: str, events: list[str]) -> None:
        av = ent["avatar"]
        obj = ent["objects"][obj_id]
        kind = obj["kind"]
        if kind == "bench":
            inv = ent["inventory"]
            if inv.get("wood", 0) >= 2:
                inv["wood"] -= 2
                inv["plank"] = inv.get("plank", 0) + 1
                events.append("Crafted Plank")
            else:
                events.append("Need 2 Wood")
            return
        if kind not in NODES:
            return
        if av["slot"] == SLOT_SCANNER:
            events.append(f"Scanned {SCAN_NAMES[kind]}")
            return
        resource, required_slot, units = NODES[kind]
        if av["slot"] != required_slot:
            events.append("Too hard")
            return
        if obj["state"]["qty"] <= 0:
            events.append("Depleted")
            return
        amount = min(units, obj["state"]["qty"])
        obj["state"]["qty"] -= amount
        inv = ent["inventory"]
        inv[resource] = inv.get(resource, 0) + amount
        events.append(f"{resource.capitalize()} +{amount}")

    def tasks(self) -> list[TaskSpec]:
        t = lambda *a, **k: task(self.world_id, *a, **k)
        out: list[TaskSpec] = []

        s = "grove_a"
        out += [
            t(s, "collect-wood", "collect wood",
              ocr([r"Wood \+\d+"], expert={"op": "harvest", "target": "tree_1"}),
              "resource gathering", ("rock_1",)),
            t(s, "collect-stone", "collect stone",
              ocr([r"Stone \+\d+"], expert={"op": "harvest", "target": "rock_1"}),
              "resource gathering", ("tree_1",)),
            t(s, "gather-berries", "gather berries",
              ocr([r"Berries \+\d+"], expert={"op": "harvest", "target": "bush_1"}),
              "resource gathering", ("rock_1",)),
            t(s, "mine-carbon", "mine carbon",
              ocr([r"Carbon \+\d+"], expert={"op": "harvest", "target": "carbon_1"}),
              "resource gathering", ("bush_1",)),
            t(s, "craft-plank", "craft a plank",
              ocr([r"Crafted Plank"], expert={"op": "craft", "target": "bench_1"}),
              "game progression", (), 160),
            t(s, "use-bench", "use the workbench",
              ocr([r"(Crafted Plank|Need 2 Wood)"],
                  expert={"op": "interact", "target": "bench_1"}),
              "game progression", ("tree_1",)),
            t(s, "scan-tree", "scan the tree with the scanner",
              ocr([r"Scanned Tree"], {"key": "E", "within_ticks": 5},
                  expert={"op": "scan", "target": "tree_1"}),
              "tool use", ("rock_1",)),
            t(s, "equip-axe", "equip the axe",
              gt({"name": "slot_is", "value": SLOT_AXE}), "tool use"),
            t(s, "equip-pick", "switch to the pick",
              gt({"name": "slot_is", "value": SLOT_PICK}), "menu/inventory"),
            t(s, "goto-tree", "go to the tree",
              gt({"name": "near", "target": "tree_1"}), "navigation", ("rock_1",)),
            t(s, "goto-bench", "go to the workbench",
              gt({"name": "near", "target": "bench_1"}), "navigation", ("tree_1",)),
        ] + basic_control_tasks(self.world_id, s)

        s = "grove_b"
        out += [
            t(s, "chop-wood", "chop down some wood",
              ocr([r"Wood \+\d+"], expert={"op": "harvest", "target": "tree_1"}),
              "resource gathering", ("bush_1",)),
            t(s, "mine-carbon", "mine some carbon",
              ocr([r"Carbon \+\d+"], expert={"op": "harvest", "target": "carbon_1"}),
              "resource gathering", ("tree_1",)),
            t(s, "two-wood", "collect two wood",
              gt({"name": "inventory_at_least", "item": "wood", "count": 2}),
              "resource gathering", ("rock_1",)),
            t(s, "craft-plank", "craft a plank",
              ocr([r"Crafted Plank"], expert={"op": "craft", "target": "bench_1"}),
              "game progression", (), 160),
            t(s, "scan-rock", "scan the rock",
              ocr([r"Scanned Rock"], {"key": "E", "within_ticks": 5},
                  expert={"op": "scan", "target": "rock_1"}),
              "tool use", ("tree_2",)),
            t(s, "equip-scanner", "equip the scanner",
              gt({"name": "slot_is", "value": SLOT_SCANNER}), "tool use"),
            t(s, "goto-bush", "go to the berry bush",
              gt({"name": "near", "target": "bush_1"}), "navigation", ("tree_1",)),
            t(s, "goto-carbon", "go to the carbon deposit",
              gt({"name": "near", "target": "carbon_1"}), "navigation", ("rock_1",)),
        ] + basic_control_tasks(self.world_id, s)

        s = "grove_c"
        out += [
            t(s, "gather-berries", "gather some berries",
              ocr([r"Berries \+\d+"], expert={"op": "harvest", "target": "bush_1"}),
              "resource gathering", ("tree_1",)),
            t(s, "collect-stone", "collect stone",
              ocr([r"Stone \+\d+"], expert={"op": "harvest", "target": "rock_1"}),
              "resource gathering", ("bush_1",)),
            t(s, "mine-carbon", "mine carbon",
              ocr([r"Carbon \+\d+"], expert={"op": "harvest", "target": "carbon_1"}),
              "resource gathering", ("rock_1",)),
            t(s, "use-bench", "use the workbench",
              ocr([r"(Crafted Plank|Need 2 Wood)"],
                  expert={"op": "interact", "target": "bench_1"}),
              "game progression", ("bush_1",)),
            t(s, "scan-bush", "scan the berry bush",
              ocr([r"Scanned Bush"], {"key": "E", "within_ticks": 5},
                  expert={"op": "scan", "target": "bush_1"}),
              "tool use", ("rock_1",)),
            t(s, "slot-two", "switch to slot two",
              gt({"name": "slot_is", "value": 2}), "menu/inventory"),
            t(s, "goto-rock", "go to the rock",
              gt({"name": "near", "target": "rock_1"}), "navigation", ("tree_1",)),
        ] + basic_control_tasks(self.world_id, s)

        return out


def _node_color(kind: str) -> str:
    return {"tree": "green", "rock": "gray", "bush": "red", "carbon": "purple"}[kind]
