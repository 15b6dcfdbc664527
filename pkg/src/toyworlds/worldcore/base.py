"""Shared tick mechanics for all grid worlds.

Every world is a 2D grid larger than the screen. The avatar moves one cell
per tick, turns in 90-degree steps driven by bucketed mouse X, pitches its
view with mouse Y, and interacts along its facing ray (reach 2 cells).
Subclasses provide terrain generation, object kinds, and the semantics of
interact / secondary-use; everything else (input edges, movement,
collision, rendering, the HUD row) lives here so the interface feels
identical across worlds.

Rendering is egocentric: the frame is centered on the avatar and rotated
so the avatar always faces up. Row 0 is a HUD strip (menu state, selected
slot, held item, pitch); the world is never told about the screen.
"""

from __future__ import annotations

from typing import Any

from .types import (
    FRAME_H,
    FRAME_W,
    ActionEvent,
    Frame,
    Observation,
    ProtocolError,
    WorldState,
)

# Symbol vocabulary shared by all worlds; world-specific kinds map into it.
SYM_VOID = 0
SYM_FLOOR = 1
SYM_WALL = 2
SYM_AVATAR = 3
SYM_AVATAR_AIR = 4
SYM_DOOR_CLOSED = 5
SYM_DOOR_OPEN = 6
SYM_TABLE = 7
SYM_CUBE = 8
SYM_BALL = 9
SYM_KNIFE = 10
SYM_CARROT = 11
SYM_CARROT_CHOPPED = 12
SYM_BOARD = 13
SYM_TREE = 14
SYM_ROCK = 15
SYM_BUSH = 16
SYM_CARBON = 17
SYM_BENCH = 18
SYM_BLOCK_SMALL = 19
SYM_BLOCK_LARGE = 20
SYM_HUD_MENU = 21
SYM_HUD_SLOT = 22
SYM_HUD_HELD = 23
SYM_HUD_PITCH = 24
SYM_HUD_BLANK = 25

KIND_SYMBOLS = {
    "door": SYM_DOOR_CLOSED,
    "table": SYM_TABLE,
    "cube": SYM_CUBE,
    "ball": SYM_BALL,
    "knife": SYM_KNIFE,
    "carrot": SYM_CARROT,
    "carrot_chopped": SYM_CARROT_CHOPPED,
    "board": SYM_BOARD,
    "tree": SYM_TREE,
    "rock": SYM_ROCK,
    "bush": SYM_BUSH,
    "carbon": SYM_CARBON,
    "bench": SYM_BENCH,
    "block_small": SYM_BLOCK_SMALL,
    "block_large": SYM_BLOCK_LARGE,
}

COLOR_NONE = 0
COLOR_NAMES = {
    "red": 1, "green": 2, "blue": 3, "yellow": 4, "purple": 5,
    "orange": 6, "white": 7, "gray": 8, "brown": 9, "cyan": 10,
}

# facing: 0=N 1=E 2=S 3=W; grid y grows downward.
FACING_VECTORS = ((0, -1), (1, 0), (0, 1), (-1, 0))
REACH = 2
TURN_THRESHOLD = 3  # accumulated mouse buckets per 90-degree step

AVATAR_CX = FRAME_W // 2
AVATAR_CY = FRAME_H // 2


def rot_cw(x: int, y: int, times: int) -> tuple[int, int]:
    for _ in range(times % 4):
        x, y = -y, x
    return x, y


class GridWorld:
    """Base class: subclasses set `world_id`, kind sets, and hooks."""

    world_id: str = ""
    solid_kinds: frozenset[str] = frozenset(
        {"table", "board", "bench", "tree", "rock", "bush", "carbon",
         "block_small", "block_large"}
    )
    portable_kinds: frozenset[str] = frozenset()
    surface_kinds: frozenset[str] = frozenset()  # can receive placed items

    # -- subclass hooks -------------------------------------------------

    def scenario_names(self) -> list[str]:
        raise NotImplementedError

    def build_scenario(self, name: str, seed: int) -> WorldState:
        raise NotImplementedError

    def tasks(self) -> list:
        raise NotImplementedError

    def on_interact(self, ent: dict, obj_id: str, events: list[str]) -> None:
        """World-specific primary interaction with an object (already in reach)."""

    def on_secondary(self, ent: dict, target: tuple[int, int],
                     obj_id: str | None, events: list[str]) -> None:
        """World-specific secondary use (right button) at the faced cell."""

    # -- queries ---------------------------------------------------------

    def terrain_at(self, ent: dict, x: int, y: int) -> str:
        m = ent["map"]
        if 0 <= x < m["w"] and 0 <= y < m["h"]:
            return m["terrain"][y][x]
        return "#"

    def objects_at(self, ent: dict, x: int, y: int) -> list[str]:
        """Objects on a cell, items stacked above surfaces."""
        found = [oid for oid, o in ent["objects"].items()
                 if o["x"] == x and o["y"] == y]
        found.sort(key=lambda oid: (ent["objects"][oid]["kind"] in self.surface_kinds, oid))
        return found

    def is_passable(self, ent: dict, x: int, y: int) -> bool:
        if self.terrain_at(ent, x, y) == "#":
            return False
        for oid in self.objects_at(ent, x, y):
            obj = ent["objects"][oid]
            if obj["kind"] == "door":
                if not obj["state"].get("open", False):
                    return False
            elif obj["kind"] in self.solid_kinds:
                return False
        return True

    def faced_cells(self, ent: dict) -> list[tuple[int, int]]:
        av = ent["avatar"]
        dx, dy = FACING_VECTORS[av["facing"]]
        return [(av["x"] + dx * d, av["y"] + dy * d) for d in range(1, REACH + 1)]

    def interact_target(self, ent: dict) -> str | None:
        """First object along the facing ray within reach; walls block the ray."""
        for x, y in self.faced_cells(ent):
            if self.terrain_at(ent, x, y) == "#":
                return None
            objs = self.objects_at(ent, x, y)
            if objs:
                return objs[0]
        return None

    # -- the tick --------------------------------------------------------

    def step(self, state: WorldState, action: ActionEvent) -> tuple[WorldState, Observation]:
        if action.tick != state.tick:
            raise ProtocolError(
                f"action tick {action.tick} does not match state tick {state.tick}")
        action.validate()

        new = state.copy()
        ent = new.entities
        av = ent["avatar"]
        new.tick = state.tick + 1
        events: list[str] = []

        prev = set(av.get("prev_keys", []))
        keys = set(action.keys)
        rising = keys - prev

        if av["air"] > 0:
            av["air"] -= 1

        if "ESC" in rising:
            av["menu"] = not av["menu"]
            events.append("Menu opened" if av["menu"] else "Menu closed")
        for slot_key in ("1", "2", "3", "4"):
            if slot_key in rising:
                av["slot"] = int(slot_key)

        if not av["menu"]:
            self._apply_look(av, action)
            if "SPACE" in rising and av["air"] == 0:
                av["air"] = 2
                av["jumps"] += 1
            self._apply_move(ent, av, keys)
            if "E" in rising or (action.left_button and not av.get("prev_left", False)):
                target = self.interact_target(ent)
                ent["ilog"].append([new.tick, target if target else "noop"])
                if target is not None:
                    self.on_interact(ent, target, events)
            if action.right_button and not av.get("prev_right", False):
                cells = self.faced_cells(ent)
                tx, ty = cells[0]
                objs = self.objects_at(ent, tx, ty)
                self.on_secondary(ent, (tx, ty), objs[0] if objs else None, events)
            if "Q" in rising and av["held"] is not None:
                self._drop_held(ent, av, events)

        av["prev_keys"] = sorted(keys)
        av["prev_left"] = action.left_button
        av["prev_right"] = action.right_button

        obs = self.observe(new, [(new.tick, e) for e in events])
        return new, obs

    def _apply_look(self, av: dict, action: ActionEvent) -> None:
        av["yaw_acc"] += action.mouse_dx
        while av["yaw_acc"] >= TURN_THRESHOLD:
            av["facing"] = (av["facing"] + 1) % 4
            av["yaw_acc"] -= TURN_THRESHOLD
        while av["yaw_acc"] <= -TURN_THRESHOLD:
            av["facing"] = (av["facing"] - 1) % 4
            av["yaw_acc"] += TURN_THRESHOLD
        # mouse up (negative dy) raises the view
        av["pitch_acc"] += action.mouse_dy
        while av["pitch_acc"] >= TURN_THRESHOLD:
            av["pitch"] = max(-1, av["pitch"] - 1)
            av["pitch_acc"] -= TURN_THRESHOLD
        while av["pitch_acc"] <= -TURN_THRESHOLD:
            av["pitch"] = min(1, av["pitch"] + 1)
            av["pitch_acc"] += TURN_THRESHOLD

    def _apply_move(self, ent: dict, av: dict, keys: set[str]) -> None:
        # one cell per tick; W/S/A/D priority, facing-relative
        move = None
        if "W" in keys:
            move = 0
        elif "S" in keys:
            move = 2
        elif "A" in keys:
            move = 3
        elif "D" in keys:
            move = 1
        if move is None:
            return
        dx, dy = FACING_VECTORS[(av["facing"] + move) % 4]
        nx, ny = av["x"] + dx, av["y"] + dy
        if self.is_passable(ent, nx, ny):
            av["x"], av["y"] = nx, ny

    def _drop_held(self, ent: dict, av: dict, events: list[str]) -> None:
        held = ent["objects"][av["held"]]
        for x, y in self.faced_cells(ent)[:1] + [(av["x"], av["y"])]:
            if self.terrain_at(ent, x, y) != "#" and self.is_passable(ent, x, y):
                held["x"], held["y"] = x, y
                av["held"] = None
                return
        # nowhere to drop: keep holding

    # -- rendering --------------------------------------------------------

    def object_symbol(self, obj: dict) -> tuple[int, int]:
        kind = obj["kind"]
        sym = KIND_SYMBOLS.get(kind, SYM_CUBE)
        if kind == "door" and obj["state"].get("open", False):
            sym = SYM_DOOR_OPEN
        return sym, obj.get("color", COLOR_NONE)

    def observe(self, state: WorldState, text_events=()) -> Observation:
        ent = state.entities
        av = ent["avatar"]
        cells = bytearray(2 * FRAME_W * FRAME_H)

        by_pos: dict[tuple[int, int], str] = {}
        for oid in sorted(ent["objects"]):
            obj = ent["objects"][oid]
            if obj["x"] is not None:
                by_pos.setdefault((obj["x"], obj["y"]), oid)

        facing = av["facing"]
        for fy in range(FRAME_H):
            for fx in range(FRAME_W):
                rx, ry = fx - AVATAR_CX, fy - AVATAR_CY
                wx, wy = rot_cw(rx, ry, facing)
                wx += av["x"]
                wy += av["y"]
                idx = 2 * (fy * FRAME_W + fx)
                m = ent["map"]
                if not (0 <= wx < m["w"] and 0 <= wy < m["h"]):
                    cells[idx] = SYM_VOID
                    continue
                terr = m["terrain"][wy][wx]
                if terr == "#":
                    cells[idx] = SYM_WALL
                    cells[idx + 1] = COLOR_NAMES["gray"]
                else:
                    cells[idx] = SYM_FLOOR
                    cells[idx + 1] = COLOR_NONE
                oid = by_pos.get((wx, wy))
                if oid is not None:
                    sym, color = self.object_symbol(ent["objects"][oid])
                    cells[idx] = sym
                    cells[idx + 1] = color

        aidx = 2 * (AVATAR_CY * FRAME_W + AVATAR_CX)
        cells[aidx] = SYM_AVATAR_AIR if av["air"] > 0 else SYM_AVATAR
        cells[aidx + 1] = COLOR_NAMES["white"]

        self._render_hud(ent, av, cells)

        overlay: list[str] = []
        if av["menu"]:
            inv = ent.get("inventory", {})
            items = " ".join(f"{k}:{v}" for k, v in sorted(inv.items())) or "empty"
            overlay.append(f"MENU inventory {items}"[:80])

        frame = Frame(cells=bytes(cells), overlay_text=tuple(overlay))
        return Observation(tick=state.tick, frame=frame, text_events=tuple(text_events))

    def _render_hud(self, ent: dict, av: dict, cells: bytearray) -> None:
        def put(col: int, sym: int, color: int) -> None:
            cells[2 * col] = sym
            cells[2 * col + 1] = color

        put(0, SYM_HUD_MENU, COLOR_NAMES["green"] if av["menu"] else COLOR_NONE)
        put(1, SYM_HUD_SLOT, av["slot"])
        held_color = COLOR_NONE
        held_sym = SYM_HUD_BLANK
        if av["held"] is not None:
            obj = ent["objects"][av["held"]]
            held_sym, held_color = self.object_symbol(obj)
        put(2, SYM_HUD_HELD, COLOR_NONE)
        put(3, held_sym, held_color)
        put(4, SYM_HUD_PITCH, av["pitch"] + 1)
        for col in range(5, FRAME_W):
            put(col, SYM_HUD_BLANK, COLOR_NONE)


def make_avatar(x: int, y: int, facing: int = 0) -> dict[str, Any]:
    return {
        "x": x, "y": y, "facing": facing, "pitch": 0,
        "yaw_acc": 0, "pitch_acc": 0, "held": None, "slot": 1,
        "menu": False, "air": 0, "jumps": 0,
        "prev_keys": [], "prev_left": False, "prev_right": False,
    }


def make_object(kind: str, color: str | int, x: int, y: int,
                state: dict | None = None) -> dict[str, Any]:
    color_id = COLOR_NAMES.get(color, color) if isinstance(color, str) else color
    return {"kind": kind, "color": color_id, "x": x, "y": y, "state": state or {}}
