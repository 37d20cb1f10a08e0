"""Ground-truth 3D scene model: primitive objects, camera, named tasks.

Scenes are immutable after load and safe to share between pipeline stages.
Scene files store angles in degrees and camera orientation as a look-at
point; both are converted exactly once here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .geometry import Pose, Vec3, look_at_quat, quat_from_yaw, quat_rotate, unit, vec3


class Task(Enum):
    PLACE_BOWL_ON_TABLE = "place_bowl_on_table"
    HANG_FRAME_ON_WALL = "hang_frame_on_wall"


@dataclass(frozen=True)
class Box:
    half_extents: Vec3  # meters

    def __post_init__(self):
        object.__setattr__(self, "half_extents", np.asarray(self.half_extents, dtype=np.float64))


@dataclass(frozen=True)
class Cylinder:
    radius: float  # meters
    height: float  # meters, axis along local z


@dataclass(frozen=True)
class Plane:
    """Infinite plane n·p = offset, world coordinates."""

    normal: Vec3
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "normal", unit(np.asarray(self.normal, dtype=np.float64)))


Shape = Union[Box, Cylinder, Plane]


@dataclass(frozen=True)
class Primitive:
    id: str
    label: str
    shape: Shape
    pose: Pose
    color: tuple[int, int, int] = (128, 128, 128)
    renderable: bool = True


@dataclass(frozen=True)
class Intrinsics:
    f: float   # focal length, pixels
    cx: float  # principal point, pixels
    cy: float


def camera_intrinsics(fov_deg: float, width: int, height: int) -> Intrinsics:
    """Pinhole intrinsics from horizontal field of view and resolution."""
    if not 0.0 < fov_deg < 180.0:
        raise ValueError(f"horizontal fov must be in (0, 180) degrees, got {fov_deg}")
    f = (width / 2.0) / math.tan(math.radians(fov_deg) / 2.0)
    return Intrinsics(f=f, cx=width / 2.0, cy=height / 2.0)


@dataclass(frozen=True)
class CameraModel:
    pose: Pose
    fov_horizontal: float  # degrees
    width: int
    height: int

    @property
    def intrinsics(self) -> Intrinsics:
        return camera_intrinsics(self.fov_horizontal, self.width, self.height)


@dataclass(frozen=True)
class WallRefs:
    """Commissioning references for the wall-anchored pose estimator.

    All reference pixels are projections of points lying on the wall
    plane itself (not on the wardrobe's front face), so the pixel-to-meter
    scales they induce are exact for a fronto-parallel view.
    """

    wardrobe_height_m: float
    wardrobe_top_px: tuple[float, float]
    wardrobe_base_px: tuple[float, float]
    wall_left_corner_px: tuple[float, float]
    wall_segment_m: float
    wall_plane: str  # primitive id of the wall


@dataclass(frozen=True)
class Scene:
    objects: tuple[Primitive, ...]
    camera: CameraModel
    task: Task
    wall_refs: Optional[WallRefs] = None

    def find(self, object_id: str) -> Optional[Primitive]:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        return None

    def by_label(self, label: str) -> list[Primitive]:
        return [obj for obj in self.objects if obj.label == label]

    def with_objects(self, objects: list[Primitive]) -> "Scene":
        return replace(self, objects=tuple(objects))


def validate_scene(scene: Scene) -> list[str]:
    """Collect every invariant violation; an empty list means valid.

    Violations are data, not errors: callers decide whether to proceed.
    Ordering is deterministic: sorted by (object id, rule name), with
    scene-level rules carrying an empty object id.
    """
    found: list[tuple[str, str, str]] = []  # (object_id, rule, message)

    def add(obj_id: str, rule: str, msg: str):
        found.append((obj_id, rule, msg))

    seen: dict[str, int] = {}
    for obj in scene.objects:
        seen[obj.id] = seen.get(obj.id, 0) + 1
    for obj_id, count in seen.items():
        if count > 1:
            add(obj_id, "duplicate_id", f"object id {obj_id!r} used {count} times")

    for obj in scene.objects:
        s = obj.shape
        if isinstance(s, Box) and not np.all(s.half_extents > 0):
            add(obj.id, "positive_dims", f"object {obj.id!r}: box half-extents must be positive")
        elif isinstance(s, Cylinder) and (s.radius <= 0 or s.height <= 0):
            add(obj.id, "positive_dims", f"object {obj.id!r}: cylinder radius/height must be positive")

    cam = scene.camera
    if not 0.0 < cam.fov_horizontal < 180.0:
        add("", "camera_fov", f"camera fov must be in (0, 180), got {cam.fov_horizontal}")
    if cam.width < 16 or cam.height < 16:
        add("", "camera_resolution", f"camera resolution must be at least 16x16, got {cam.width}x{cam.height}")

    if scene.task is Task.PLACE_BOWL_ON_TABLE:
        tables = scene.by_label("table")
        if len(tables) != 1:
            add("", "task_objects", f"place_bowl_on_table scene needs exactly one 'table', found {len(tables)}")
    elif scene.task is Task.HANG_FRAME_ON_WALL:
        for label in ("wall", "wardrobe"):
            n = len(scene.by_label(label))
            if n != 1:
                add("", "task_objects", f"hang_frame_on_wall scene needs exactly one {label!r}, found {n}")
        if scene.wall_refs is None:
            add("", "wall_refs", "hang_frame_on_wall scene requires wall_refs")
        else:
            refs = scene.wall_refs
            if refs.wardrobe_height_m <= 0 or refs.wall_segment_m <= 0:
                add("", "wall_refs", "wall_refs lengths must be positive")
            for name, (u, v) in (
                ("wardrobe_top_px", refs.wardrobe_top_px),
                ("wardrobe_base_px", refs.wardrobe_base_px),
                ("wall_left_corner_px", refs.wall_left_corner_px),
            ):
                if not (0 <= u <= cam.width and 0 <= v <= cam.height):
                    add("", "wall_refs", f"wall_refs {name} {(u, v)} outside image bounds")
            if scene.wall_refs.wall_plane and scene.find(refs.wall_plane) is None:
                add("", "wall_refs", f"wall_refs wall_plane {refs.wall_plane!r} not in scene")

    found.sort(key=lambda item: (item[0], item[1]))
    return [msg for _, _, msg in found]


# --- JSON schema -----------------------------------------------------------

def _shape_from_dict(d: dict) -> Shape:
    kind = d["type"]
    if kind == "box":
        return Box(half_extents=np.asarray(d["half_extents"], dtype=np.float64))
    if kind == "cylinder":
        return Cylinder(radius=float(d["radius"]), height=float(d["height"]))
    if kind == "plane":
        return Plane(normal=np.asarray(d["normal"], dtype=np.float64), offset=float(d["offset"]))
    raise ValueError(f"unknown shape type {kind!r}")


def _shape_to_dict(s: Shape) -> dict:
    if isinstance(s, Box):
        return {"type": "box", "half_extents": [float(x) for x in s.half_extents]}
    if isinstance(s, Cylinder):
        return {"type": "cylinder", "radius": s.radius, "height": s.height}
    return {"type": "plane", "normal": [float(x) for x in s.normal], "offset": s.offset}


def scene_from_dict(doc: dict) -> Scene:
    task = Task(doc["task"])
    cam_doc = doc["camera"]
    position = vec3(*cam_doc["position"])
    orientation = look_at_quat(position, vec3(*cam_doc["look_at"]))
    camera = CameraModel(
        pose=Pose(position, orientation),
        fov_horizontal=float(cam_doc["fov_deg"]),
        width=int(cam_doc["width"]),
        height=int(cam_doc["height"]),
    )
    objects = []
    for obj_doc in doc["objects"]:
        yaw = math.radians(float(obj_doc.get("yaw_deg", 0.0)))
        objects.append(
            Primitive(
                id=obj_doc["id"],
                label=obj_doc["label"],
                shape=_shape_from_dict(obj_doc["shape"]),
                pose=Pose(vec3(*obj_doc["position"]), quat_from_yaw(yaw)),
                color=tuple(int(c) for c in obj_doc.get("color", (128, 128, 128))),
                renderable=bool(obj_doc.get("renderable", True)),
            )
        )
    wall_refs = None
    if "wall_refs" in doc and doc["wall_refs"] is not None:
        r = doc["wall_refs"]
        wall_refs = WallRefs(
            wardrobe_height_m=float(r["wardrobe_height_m"]),
            wardrobe_top_px=tuple(float(x) for x in r["wardrobe_top_px"]),
            wardrobe_base_px=tuple(float(x) for x in r["wardrobe_base_px"]),
            wall_left_corner_px=tuple(float(x) for x in r["wall_left_corner_px"]),
            wall_segment_m=float(r["wall_segment_m"]),
            wall_plane=str(r["wall_plane"]),
        )
    return Scene(objects=tuple(objects), camera=camera, task=task, wall_refs=wall_refs)


def load_scene(path: Union[str, Path]) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        return scene_from_dict(json.load(fh))


# --- wall helpers shared by placement and back-projection ------------------

def wall_front_plane(scene: Scene, wall_id: str) -> Plane:
    """Plane of the wall face that looks toward the camera.

    A box-shaped wall contributes the face plane nearest the camera along
    its own normal; a plane-shaped wall is used directly.
    """
    wall = scene.find(wall_id)
    if wall is None:
        raise ValueError(f"no wall primitive {wall_id!r} in scene")
    if isinstance(wall.shape, Plane):
        return wall.shape
    if not isinstance(wall.shape, Box):
        raise ValueError(f"wall primitive {wall_id!r} must be a box or a plane")
    # thinnest box axis is the wall normal direction
    he = wall.shape.half_extents
    axis = int(np.argmin(he))
    local_n = np.zeros(3)
    local_n[axis] = 1.0
    n = unit(quat_rotate(wall.pose.orientation, local_n))
    to_cam = scene.camera.pose.position - wall.pose.position
    if float(np.dot(n, to_cam)) < 0:
        n = -n
    face_point = wall.pose.position + n * float(he[axis])
    return Plane(normal=n, offset=float(np.dot(n, face_point)))


def wall_in_plane_axes(scene: Scene, plane: Plane) -> tuple[Vec3, Vec3]:
    """(horizontal, vertical-down) unit axes of a wall plane.

    Horizontal follows the camera's image-u direction projected into the
    plane; vertical-down follows image-v. Exact for fronto-parallel walls.
    """
    cam_q = scene.camera.pose.orientation
    right = quat_rotate(cam_q, vec3(1.0, 0.0, 0.0))
    down = quat_rotate(cam_q, vec3(0.0, 1.0, 0.0))
    n = plane.normal

    def project(v: Vec3) -> Vec3:
        return unit(v - n * float(np.dot(v, n)))

    return project(right), project(down)
