"""Built-in fixture scenes.

Synthetic floor plans in three size classes (floor areas 68.56, 136.11 and
846.15 m^2). Receptacle footprints are also emitted as wall segments so
agents cannot drive through furniture; every receptacle keeps a clear
approach strip in front of it.

The same builders write the packaged JSON fixtures (scripts/build_fixtures.py)
and serve tests directly.
"""

from __future__ import annotations

from .scene import Scene, scene_from_dict

SMALL_W, SMALL_H = 8.57, 8.0        # 68.56 m^2
MEDIUM_W, MEDIUM_H = 13.611, 10.0   # 136.11 m^2
LARGE_W, LARGE_H = 28.205, 30.0     # 846.15 m^2

TABLE_DEPTH = 0.5
TABLE_WIDTH = 0.9
TABLE_HEIGHT = 0.9

# scene id -> dataset split; benchmark classes resolve via size_class
TRAIN_SCENES = ("small_a", "small_b", "small_c", "small_d", "medium_a", "medium_b")
VAL_SCENES = ("small_e", "medium_c")
TEST_SCENES = ("small_f", "small_g")
ALL_SCENE_IDS = TRAIN_SCENES + VAL_SCENES + TEST_SCENES + ("large_a",)


def _rect_edges(rect):
    x0, y0, x1, y1 = rect
    return [
        [x0, y0, x1, y0],
        [x1, y0, x1, y1],
        [x1, y1, x0, y1],
        [x0, y1, x0, y0],
    ]


def _table_against(side: str, along: float, bounds, inset: float = 0.05):
    """Receptacle rect hugging one perimeter wall, centered at `along`."""
    x0, y0, x1, y1 = bounds
    hw = TABLE_WIDTH / 2
    if side == "left":
        return (x0 + inset, along - hw, x0 + inset + TABLE_DEPTH, along + hw)
    if side == "right":
        return (x1 - inset - TABLE_DEPTH, along - hw, x1 - inset, along + hw)
    if side == "bottom":
        return (along - hw, y0 + inset, along + hw, y0 + inset + TABLE_DEPTH)
    if side == "top":
        return (along - hw, y1 - inset - TABLE_DEPTH, along + hw, y1 - inset)
    raise ValueError(side)


def _small_dict(idx: int) -> dict:
    sid = f"small_{chr(ord('a') + idx)}"
    bounds = (0.0, 0.0, SMALL_W, SMALL_H)
    wall_x = 4.2 + 0.15 * ((idx % 3) - 1)
    door_c = 2.0 + 1.0 * (idx % 4)
    door_w = 1.8
    walls = [
        [wall_x, 0.0, wall_x, door_c - door_w / 2],
        [wall_x, door_c + door_w / 2, wall_x, SMALL_H],
    ]
    if idx % 2 == 1:
        # stub wall in the right room for an L-shaped corridor
        stub_y = 5.6 if door_c < 4.0 else 2.2
        walls.append([wall_x + 1.7, stub_y, SMALL_W - 1.6, stub_y])
    receptacles = [
        {"name": "table_0", "rect": list(_table_against("left", 5.8 - 0.3 * idx, bounds)),
         "height": TABLE_HEIGHT, "open": True},
        {"name": "table_1", "rect": list(_table_against("bottom", 2.0 + 0.2 * idx, bounds)),
         "height": TABLE_HEIGHT, "open": True},
        {"name": "table_2", "rect": list(_table_against("right", 1.6 + 0.25 * idx, bounds)),
         "height": TABLE_HEIGHT, "open": True},
        {"name": "table_3", "rect": list(_table_against("top", SMALL_W - 1.9 - 0.2 * idx, bounds)),
         "height": TABLE_HEIGHT, "open": True},
    ]
    for r in receptacles:
        walls.extend(_rect_edges(r["rect"]))
    spawn = [
        [1.0, 1.0, wall_x - 1.0, SMALL_H - 1.0],
        [wall_x + 1.0, 1.0, SMALL_W - 1.0, SMALL_H - 1.0],
    ]
    return {
        "schema": "scene/1",
        "id": sid,
        "size_class": "small",
        "bounds": list(bounds),
        "walls": walls,
        "receptacles": receptacles,
        "spawn_regions": spawn,
    }


def _medium_dict(idx: int) -> dict:
    sid = f"medium_{chr(ord('a') + idx)}"
    bounds = (0.0, 0.0, MEDIUM_W, MEDIUM_H)
    vx = 6.7 + 0.3 * idx
    hy = 5.0
    door_w = 1.8
    v_door = 2.6 + 0.8 * idx
    h_door = 9.6 - 0.5 * idx
    walls = [
        [vx, 0.0, vx, v_door - door_w / 2],
        [vx, v_door + door_w / 2, vx, MEDIUM_H],
        [vx, hy, h_door - door_w / 2, hy],
        [h_door + door_w / 2, hy, MEDIUM_W, hy],
    ]
    receptacles = [
        {"name": "table_0", "rect": list(_table_against("left", 7.6, bounds)),
         "height": TABLE_HEIGHT, "open": True},
        {"name": "table_1", "rect": list(_table_against("left", 2.2, bounds)),
         "height": TABLE_HEIGHT, "open": True},
        {"name": "table_2", "rect": list(_table_against("bottom", 9.6 + 0.3 * idx, bounds)),
         "height": TABLE_HEIGHT, "open": True},
        {"name": "table_3", "rect": list(_table_against("right", 2.4, bounds)),
         "height": TABLE_HEIGHT, "open": True},
        {"name": "table_4", "rect": list(_table_against("right", 7.8, bounds)),
         "height": TABLE_HEIGHT, "open": True},
        {"name": "table_5", "rect": list(_table_against("top", 3.1 + 0.4 * idx, bounds)),
         "height": TABLE_HEIGHT, "open": True},
    ]
    for r in receptacles:
        walls.extend(_rect_edges(r["rect"]))
    spawn = [
        [1.0, 1.0, vx - 1.0, MEDIUM_H - 1.0],
        [vx + 1.0, 1.0, MEDIUM_W - 1.0, hy - 1.0],
        [vx + 1.0, hy + 1.0, MEDIUM_W - 1.0, MEDIUM_H - 1.0],
    ]
    return {
        "schema": "scene/1",
        "id": sid,
        "size_class": "medium",
        "bounds": list(bounds),
        "walls": walls,
        "receptacles": receptacles,
        "spawn_regions": spawn,
    }


def _large_dict() -> dict:
    bounds = (0.0, 0.0, LARGE_W, LARGE_H)
    door_w = 1.8
    walls = []
    for vx in (9.4, 18.8):
        for lo, hi, door in ((0.0, 15.0, 7.0), (15.0, LARGE_H, 22.0)):
            walls.append([vx, lo, vx, door - door_w / 2])
            walls.append([vx, door + door_w / 2, vx, hi])
    # one horizontal wall at y=15 with three doors
    hx = 0.0
    for hdoor in (4.6, 14.2, 23.6):
        walls.append([hx, 15.0, hdoor - door_w / 2, 15.0])
        hx = hdoor + door_w / 2
    walls.append([hx, 15.0, LARGE_W, 15.0])
    receptacles = []
    spots = [("left", 6.0), ("left", 22.0), ("bottom", 5.0), ("bottom", 14.0),
             ("right", 8.0), ("right", 24.0), ("top", 6.0), ("top", 23.0)]
    for i, (side, along) in enumerate(spots):
        receptacles.append({
            "name": f"table_{i}",
            "rect": list(_table_against(side, along, bounds)),
            "height": TABLE_HEIGHT,
            "open": True,
        })
    for r in receptacles:
        walls.extend(_rect_edges(r["rect"]))
    spawn = [[1.5, 1.5, 8.0, 13.5], [10.8, 1.5, 17.4, 13.5], [20.2, 16.5, 26.8, 28.5]]
    return {
        "schema": "scene/1",
        "id": "large_a",
        "size_class": "large",
        "bounds": list(bounds),
        "walls": walls,
        "receptacles": receptacles,
        "spawn_regions": spawn,
    }


def fixture_scene_dict(scene_id: str) -> dict:
    if scene_id.startswith("small_"):
        idx = ord(scene_id[-1]) - ord("a")
        if 0 <= idx < 7:
            return _small_dict(idx)
    if scene_id.startswith("medium_"):
        idx = ord(scene_id[-1]) - ord("a")
        if 0 <= idx < 3:
            return _medium_dict(idx)
    if scene_id == "large_a":
        return _large_dict()
    raise KeyError(f"unknown fixture scene {scene_id!r}")


def fixture_scene(scene_id: str) -> Scene:
    return scene_from_dict(fixture_scene_dict(scene_id), origin=f"fixture:{scene_id}")


def fixture_for_class(size_class: str) -> Scene:
    return fixture_scene({"small": "small_a", "medium": "medium_a", "large": "large_a"}[size_class])
