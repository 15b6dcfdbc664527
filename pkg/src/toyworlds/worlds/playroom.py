"""Playroom: connected rooms with portable household objects.

Primary mechanics: picking things up, placing them on surfaces, opening
the connecting door, and chopping a carrot with the knife on the cutting
board. The chop only fires when the carrot sits on a board cell and the
knife is in hand, which makes "chop the carrot" a genuine multi-step task
when the carrot starts elsewhere.
"""

from __future__ import annotations

from ..worldcore.base import GridWorld, make_object
from ..worldcore.registry import empty_state
from ..worldcore.rng import Rng
from ..worldcore.types import TaskSpec, WorldState
from .common import avatar_clearance, basic_control_tasks, gt, scatter_objects, task

PORTABLE = frozenset({"cube", "ball", "knife", "carrot", "carrot_chopped"})


class PlayRoomWorld(GridWorld):
    world_id = "playroom"
    portable_kinds = PORTABLE
    surface_kinds = frozenset({"table", "board"})

    def scenario_names(self) -> list[str]:
        return ["room_a", "room_b", "kitchen"]

    # Two 9-wide rooms joined by a doorway in the dividing wall.
    def _two_rooms(self, seed: int, rng: Rng) -> WorldState:
        w, h = 19, 10
        state = empty_state(self.world_id, w, h, rng_state=seed)
        ent = state.entities
        terrain = [list(row) for row in ent["map"]["terrain"]]
        door_y = rng.randint(2, h - 3)
        for y in range(1, h - 1):
            terrain[y][9] = "#" if y != door_y else "."
        ent["map"]["terrain"] = ["".join(row) for row in terrain]
        from .common import place_avatar
        av = ent["avatar"]
        for _ in range(100):
            place_avatar(state, rng)
            if max(abs(av["x"] - 9), abs(av["y"] - door_y)) > 2:
                break
        ent["objects"]["door_1"] = make_object("door", "brown", 9, door_y, {"open": False})
        return state

    def build_scenario(self, name: str, seed: int) -> WorldState:
        rng = Rng(seed)
        state = self._two_rooms(seed, rng)
        ent = state.entities
        av = ent["avatar"]
        reserved = avatar_clearance(av["x"], av["y"])
        door_y = ent["objects"]["door_1"]["y"]
        reserved |= {(8, door_y), (9, door_y), (10, door_y)}  # keep the passage open

        if name == "room_a":
            specs = [
                ("table_1", make_object("table", "brown", None, None)),
                ("board_1", make_object("board", "brown", None, None)),
                ("cube_green", make_object("cube", "green", None, None)),
                ("ball_blue", make_object("ball", "blue", None, None)),
                ("cube_red", make_object("cube", "red", None, None)),
                ("knife_1", make_object("knife", "gray", None, None)),
            ]
            scatter_objects(state, rng, specs, reserved)
            board = ent["objects"]["board_1"]
            ent["objects"]["carrot_1"] = make_object(
                "carrot", "orange", board["x"], board["y"])
        elif name == "room_b":
            specs = [
                ("table_1", make_object("table", "brown", None, None)),
                ("board_1", make_object("board", "brown", None, None)),
                ("cube_purple", make_object("cube", "purple", None, None)),
                ("ball_orange", make_object("ball", "orange", None, None)),
                ("cube_yellow", make_object("cube", "yellow", None, None)),
                ("knife_1", make_object("knife", "gray", None, None)),
                ("carrot_1", make_object("carrot", "orange", None, None)),
            ]
            scatter_objects(state, rng, specs, reserved)
        elif name == "kitchen":
            specs = [
                ("table_1", make_object("table", "brown", None, None)),
                ("board_1", make_object("board", "brown", None, None)),
                ("cube_cyan", make_object("cube", "cyan", None, None)),
                ("ball_white", make_object("ball", "white", None, None)),
                ("knife_1", make_object("knife", "gray", None, None)),
                ("carrot_2", make_object("carrot", "orange", None, None)),
            ]
            scatter_objects(state, rng, specs, reserved)
            board = ent["objects"]["board_1"]
            ent["objects"]["carrot_1"] = make_object(
                "carrot", "orange", board["x"], board["y"])
        else:
            raise ValueError(f"unknown scenario {name!r}")
        return state

    def on_interact(self, ent: dict, obj_id: str, events: list[str]) -> None:
        av = ent["avatar"]
        obj = ent["objects"][obj_id]
        kind = obj["kind"]
        if kind == "door":
            obj["state"]["open"] = not obj["state"].get("open", False)
            events.append("Door opened" if obj["state"]["open"] else "Door closed")
            return
        if kind == "carrot" and av["held"] is not None:
            held = ent["objects"][av["held"]]
            if held["kind"] == "knife" and self._on_board(ent, obj):
                obj["kind"] = "carrot_chopped"
                events.append("Chopped!")
                return
        if kind in PORTABLE:
            if av["held"] is None:
                obj["x"] = obj["y"] = None
                av["held"] = obj_id
                events.append(f"Picked up {kind}")
            else:
                events.append("Hands full")

    def _on_board(self, ent: dict, obj: dict) -> bool:
        return any(
            o["kind"] == "board" and (o["x"], o["y"]) == (obj["x"], obj["y"])
            for o in ent["objects"].values()
        )

    def on_secondary(self, ent: dict, target: tuple[int, int],
                     obj_id: str | None, events: list[str]) -> None:
        # place the held item: onto a surface, or onto empty floor
        av = ent["avatar"]
        if av["held"] is None:
            return
        x, y = target
        if obj_id is not None:
            if ent["objects"][obj_id]["kind"] not in self.surface_kinds:
                return
        elif not self.is_passable(ent, x, y):
            return
        held = ent["objects"][av["held"]]
        held["x"], held["y"] = x, y
        av["held"] = None
        events.append(f"Placed {held['kind']}")

    def tasks(self) -> list[TaskSpec]:
        t = lambda *a, **k: task(self.world_id, *a, **k)
        out: list[TaskSpec] = []

        s = "room_a"
        out += [
            t(s, "lift-green-cube", "lift the green cube",
              gt({"name": "held", "target": "cube_green"}), "object management",
              ("ball_blue",)),
            t(s, "take-blue-ball", "pick up the blue ball",
              gt({"name": "held", "target": "ball_blue"}), "object management",
              ("cube_green",)),
            t(s, "take-red-cube", "pick up the red cube",
              gt({"name": "held", "target": "cube_red"}), "object management",
              ("ball_blue",)),
            t(s, "goto-table", "go to the table",
              gt({"name": "near", "target": "table_1"}), "navigation", ("cube_green",)),
            t(s, "goto-door", "go to the door",
              gt({"name": "near", "target": "door_1"}), "navigation", ("ball_blue",)),
            t(s, "open-door", "open the door",
              gt({"name": "door_open", "target": "door_1"}), "game progression"),
            t(s, "cube-on-table", "put the green cube on the table",
              gt({"name": "on_entity", "target": "cube_green", "target_b": "table_1"}),
              "object management", ("ball_blue",)),
            t(s, "chop-carrot", "chop the carrot",
              gt({"name": "kind_is", "target": "carrot_1", "value": "carrot_chopped"}),
              "tool use", ("cube_green",)),
            t(s, "take-knife", "pick up the knife",
              gt({"name": "held", "target": "knife_1"}), "tool use", ("cube_red",)),
        ] + basic_control_tasks(self.world_id, s)

        s = "room_b"
        out += [
            t(s, "lift-purple-cube", "lift the purple cube",
              gt({"name": "held", "target": "cube_purple"}), "object management",
              ("ball_orange",)),
            t(s, "take-orange-ball", "pick up the orange ball",
              gt({"name": "held", "target": "ball_orange"}), "object management",
              ("cube_purple",)),
            t(s, "goto-yellow-cube", "go to the yellow cube",
              gt({"name": "near", "target": "cube_yellow"}), "navigation",
              ("ball_orange",)),
            t(s, "carrot-on-board", "put the carrot on the board",
              gt({"name": "on_entity", "target": "carrot_1", "target_b": "board_1"}),
              "object management", ("ball_orange",)),
            t(s, "chop-carrot", "chop the carrot",
              gt({"name": "kind_is", "target": "carrot_1", "value": "carrot_chopped"}),
              "tool use", ("cube_purple",)),
            t(s, "ball-on-table", "put the orange ball on the table",
              gt({"name": "on_entity", "target": "ball_orange", "target_b": "table_1"}),
              "object management", ("cube_yellow",)),
            t(s, "goto-door", "go to the door",
              gt({"name": "near", "target": "door_1"}), "navigation", ("cube_purple",)),
            t(s, "open-door", "open the door",
              gt({"name": "door_open", "target": "door_1"}), "game progression"),
            t(s, "take-knife", "pick up the knife",
              gt({"name": "held", "target": "knife_1"}), "tool use", ("cube_yellow",)),
        ] + basic_control_tasks(self.world_id, s)

        s = "kitchen"
        out += [
            t(s, "chop-board-carrot", "chop the carrot on the board",
              gt({"name": "kind_is", "target": "carrot_1", "value": "carrot_chopped"}),
              "tool use", ("carrot_2",)),
            t(s, "lift-cyan-cube", "lift the cyan cube",
              gt({"name": "held", "target": "cube_cyan"}), "object management",
              ("ball_white",)),
            t(s, "take-white-ball", "pick up the white ball",
              gt({"name": "held", "target": "ball_white"}), "object management",
              ("cube_cyan",)),
            t(s, "goto-table", "go to the table",
              gt({"name": "near", "target": "table_1"}), "navigation", ("ball_white",)),
            t(s, "cube-on-table", "put the cyan cube on the table",
              gt({"name": "on_entity", "target": "cube_cyan", "target_b": "table_1"}),
              "object management", ("ball_white",)),
            t(s, "goto-white-ball", "go to the white ball",
              gt({"name": "near", "target": "ball_white"}), "navigation",
              ("cube_cyan",)),
            t(s, "take-knife", "pick up the knife",
              gt({"name": "held", "target": "knife_1"}), "tool use", ("cube_cyan",)),
        ] + basic_control_tasks(self.world_id, s)

        return out
