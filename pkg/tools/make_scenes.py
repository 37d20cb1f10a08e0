"""Regenerate the bundled scene files.

The wall scene's reference pixel coordinates are computed by projecting
the reference points through the scene camera, so they stay consistent
with the geometry if anything here changes. Run from the repo root:

    python3 tools/make_scenes.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from imagined_goals.geometry import Pose, look_at_quat, vec3
from imagined_goals.render import project_point
from imagined_goals.scene import CameraModel, scene_from_dict, validate_scene

OUT_DIR = Path(__file__).resolve().parent.parent / "scenes"


def table_scene() -> dict:
    return {
        "task": "place_bowl_on_table",
        "camera": {
            "position": [0.0, -0.35, 2.4],
            "look_at": [0.0, 1.8, 0.75],
            "fov_deg": 60.0,
            "width": 512,
            "height": 512,
        },
        "objects": [
            {"id": "floor", "label": "floor",
             "shape": {"type": "plane", "normal": [0, 0, 1], "offset": 0.0},
             "position": [0, 0, 0], "color": [120, 120, 130]},
            {"id": "room_wall", "label": "wall",
             "shape": {"type": "plane", "normal": [0, -1, 0], "offset": -3.0},
             "position": [0, 3, 0], "color": [180, 175, 165]},
            {"id": "table", "label": "table",
             "shape": {"type": "box", "half_extents": [0.6, 0.4, 0.375]},
             "position": [0.0, 1.8, 0.375], "color": [150, 100, 60]},
            {"id": "glass_1", "label": "glass",
             "shape": {"type": "cylinder", "radius": 0.03, "height": 0.15},
             "position": [-0.35, 2.15, 0.825], "color": [80, 170, 190]},
            {"id": "glass_2", "label": "glass",
             "shape": {"type": "cylinder", "radius": 0.03, "height": 0.15},
             "position": [0.0, 2.16, 0.825], "color": [80, 170, 190]},
            {"id": "glass_3", "label": "glass",
             "shape": {"type": "cylinder", "radius": 0.03, "height": 0.15},
             "position": [0.3, 2.14, 0.825], "color": [80, 170, 190]},
            {"id": "bowl", "label": "bowl",
             "shape": {"type": "cylinder", "radius": 0.075, "height": 0.0625},
             "position": [-1.0, 1.0, 0.03125], "color": [40, 90, 200],
             "renderable": False},
        ],
    }


def wall_scene() -> dict:
    camera_position = vec3(-0.8, -0.2, 1.25)
    camera = CameraModel(
        pose=Pose(camera_position, look_at_quat(camera_position, vec3(-0.8, 3.0, 1.25))),
        fov_horizontal=80.0, width=512, height=512)

    def px(x: float, z: float) -> list[float]:
        uv = project_point(camera, vec3(x, 3.0, z))
        assert uv is not None
        return [round(uv[0], 6), round(uv[1], 6)]

    return {
        "task": "hang_frame_on_wall",
        "camera": {
            "position": [-0.8, -0.2, 1.25],
            "look_at": [-0.8, 3.0, 1.25],
            "fov_deg": 80.0,
            "width": 512,
            "height": 512,
        },
        "objects": [
            {"id": "floor", "label": "floor",
             "shape": {"type": "plane", "normal": [0, 0, 1], "offset": 0.0},
             "position": [0, 0, 0], "color": [120, 120, 130]},
            {"id": "wall", "label": "wall",
             "shape": {"type": "box", "half_extents": [1.5, 0.03125, 1.25]},
             "position": [0.0, 3.03125, 1.25], "color": [200, 198, 190]},
            {"id": "wardrobe", "label": "wardrobe",
             "shape": {"type": "box", "half_extents": [0.5, 0.15, 1.1]},
             "position": [-0.9, 2.85, 1.1], "color": [110, 80, 50]},
            {"id": "plant", "label": "plant",
             "shape": {"type": "cylinder", "radius": 0.12, "height": 0.7},
             "position": [-1.4, 1.6, 0.35], "color": [60, 140, 70]},
            {"id": "picture_frame", "label": "picture_frame",
             "shape": {"type": "box", "half_extents": [0.18, 0.015625, 0.24]},
             "position": [1.0, 2.984375, 0.24], "color": [160, 40, 45],
             "renderable": False},
        ],
        "wall_refs": {
            "wardrobe_height_m": 2.2,
            "wardrobe_top_px": px(-0.9, 2.2),
            "wardrobe_base_px": px(-0.9, 0.0),
            "wall_left_corner_px": px(-1.5, 0.0),
            "wall_segment_m": 0.6,
            "wall_plane": "wall",
        },
    }


def main() -> int:
    OUT_DIR.mkdir(exist_ok=True)
    for name, doc in (("table.json", table_scene()), ("wall.json", wall_scene())):
        problems = validate_scene(scene_from_dict(doc))
        if problems:
            raise SystemExit(f"{name}: {problems}")
        path = OUT_DIR / name
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
