"""Goal pose validity checks and candidate selection.

Footprints are discs (bowl, glasses) and rectangles (frame, wardrobe),
matching the cylinder/box primitives exactly. Verdicts collect every
violated rule; a placement is valid iff no rule is violated. The score
orders valid placements by safety margin and never goes negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .detection import Detection
from .geometry import Vec3, quat_rotate, vec3
from .scene import Box, Cylinder, Scene


@dataclass(frozen=True)
class PlacementRules:
    bowl_radius_m: float
    clearance_m: float = 0.02
    edge_margin_m: float = 0.02
    frame_wall_margin_m: float = 0.05

    def __post_init__(self):
        if self.bowl_radius_m <= 0:
            raise ValueError(f"bowl_radius_m must be positive, got {self.bowl_radius_m}")
        for name in ("clearance_m", "edge_margin_m", "frame_wall_margin_m"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class Verdict:
    valid: bool
    violations: tuple[str, ...]
    score: float

    def __post_init__(self):
        if self.valid != (len(self.violations) == 0):
            raise ValueError("valid must equal violations being empty")


def _verdict(violations: list[str], score: float) -> Verdict:
    return Verdict(valid=not violations, violations=tuple(violations), score=max(0.0, score))


HEIGHT_TOLERANCE_M = 0.01


def check_table_placement(scene: Scene, point: Vec3, rules: PlacementRules) -> Verdict:
    """Judge a bowl goal point against the table top and the glasses.

    The point is expected on the table surface; it is checked in the
    table's own frame, so the verdict is invariant under rotating the
    whole scene about world z.
    """
    tables = scene.by_label("table")
    if not tables:
        raise ValueError("scene has no 'table'")
    table = tables[0]
    if not isinstance(table.shape, Box):
        raise ValueError("table must be a box")
    point = np.asarray(point, dtype=np.float64)

    half = table.shape.half_extents
    local = table.pose.inverse_transform(point)
    top_z = float(half[2])  # table frame: surface at +half_z
    shrink = rules.bowl_radius_m + rules.edge_margin_m
    violations: list[str] = []

    allowed_x = half[0] - shrink
    allowed_y = half[1] - shrink
    if abs(local[0]) > allowed_x or abs(local[1]) > allowed_y:
        violations.append(
            f"table edge: point {point[:2].tolist()} outside table top shrunk by {shrink:.3f} m")
    edge_slack = min(allowed_x - abs(local[0]), allowed_y - abs(local[1]))

    glass_slack = float(math.hypot(half[0], half[1]))  # upper bound when unconstrained
    for glass in scene.by_label("glass"):
        if not isinstance(glass.shape, Cylinder):
            continue
        required = rules.bowl_radius_m + glass.shape.radius + rules.clearance_m
        distance = float(math.hypot(point[0] - glass.pose.position[0],
                                    point[1] - glass.pose.position[1]))
        slack = distance - required
        if slack < 0:
            violations.append(
                f"glass clearance: {distance:.4f} m from {glass.id!r}, need {required:.4f} m")
        glass_slack = min(glass_slack, slack)

    if abs(local[2] - top_z) > HEIGHT_TOLERANCE_M:
        violations.append(
            f"surface height: point z differs from table surface by {abs(local[2] - top_z):.4f} m")

    return _verdict(violations, max(0.0, glass_slack) + max(0.0, edge_slack))


def _support_interval(primitive, axis: Vec3, origin: Vec3) -> tuple[float, float]:
    """Projection interval of a primitive onto a unit axis through origin."""
    center = float(np.dot(primitive.pose.position - origin, axis))
    shape = primitive.shape
    if isinstance(shape, Box):
        extent = 0.0
        for i in range(3):
            local_axis = np.zeros(3)
            local_axis[i] = 1.0
            world_axis = quat_rotate(primitive.pose.orientation, local_axis)
            extent += float(shape.half_extents[i]) * abs(float(np.dot(world_axis, axis)))
    elif isinstance(shape, Cylinder):
        axial = quat_rotate(primitive.pose.orientation, vec3(0.0, 0.0, 1.0))
        along = abs(float(np.dot(axial, axis)))
        radial = math.sqrt(max(0.0, 1.0 - along * along))
        extent = shape.height / 2.0 * along + shape.radius * radial
    else:
        raise ValueError(f"cannot project primitive {primitive.id!r}")
    return center - extent, center + extent


def check_wall_placement(scene: Scene, center: Vec3, extents: tuple[float, float],
                         rules: PlacementRules) -> Verdict:
    """Judge a frame rectangle (center +- extents/2, in the wall plane).

    Violations: exceeding the wall's in-plane bounds shrunk by the wall
    margin, and overlapping the wardrobe's footprint as projected onto
    the wall. The score is the smallest surviving margin.
    """
    walls = scene.by_label("wall")
    wardrobes = scene.by_label("wardrobe")
    if not walls:
        raise ValueError("scene has no 'wall'")
    if not wardrobes:
        raise ValueError("scene has no 'wardrobe'")
    wall, wardrobe = walls[0], wardrobes[0]
    if not isinstance(wall.shape, Box):
        raise ValueError("wall must be a box for bounded placement checks")

    center = np.asarray(center, dtype=np.float64)
    half = wall.shape.half_extents
    thin = int(np.argmin(half))
    vertical = 2  # yaw-only poses keep local z vertical
    horizontal = next(i for i in range(3) if i not in (thin, vertical))

    local = wall.pose.inverse_transform(center)
    half_w, half_h = extents[0] / 2.0, extents[1] / 2.0
    margin = rules.frame_wall_margin_m
    violations: list[str] = []

    slack_h = (float(half[horizontal]) - margin) - (abs(float(local[horizontal])) + half_w)
    slack_v = (float(half[vertical]) - margin) - (abs(float(local[vertical])) + half_h)
    if slack_h < 0 or slack_v < 0:
        violations.append(
            f"wall bounds: rectangle exceeds wall extent shrunk by {margin:.3f} m")

    h_axis = quat_rotate(wall.pose.orientation, _unit_axis(horizontal))
    v_axis = quat_rotate(wall.pose.orientation, _unit_axis(vertical))
    ward_h = _support_interval(wardrobe, h_axis, wall.pose.position)
    ward_v = _support_interval(wardrobe, v_axis, wall.pose.position)
    rect_h = (float(local[horizontal]) - half_w, float(local[horizontal]) + half_w)
    rect_v = (float(local[vertical]) - half_h, float(local[vertical]) + half_h)
    gap_h = max(ward_h[0] - rect_h[1], rect_h[0] - ward_h[1])
    gap_v = max(ward_v[0] - rect_v[1], rect_v[0] - ward_v[1])
    separation = max(gap_h, gap_v)
    if separation < 0:
        violations.append("wardrobe overlap: rectangle intersects the wardrobe footprint")

    return _verdict(violations, min(slack_h, slack_v, separation))


def _unit_axis(index: int) -> np.ndarray:
    axis = np.zeros(3)
    axis[index] = 1.0
    return axis


def choose_candidate(scored: list[tuple[Detection, object, Verdict]]
                     ) -> Optional[tuple[Detection, object, Verdict]]:
    """Winning (detection, goal, verdict) triple, or None if no valid one.

    Among valid verdicts: highest confidence, then highest score, then
    lowest candidate index. Fully ordered, so the choice is unique.
    """
    valid = [entry for entry in scored if entry[2].valid]
    if not valid:
        return None
    return max(valid, key=lambda entry: (entry[0].confidence, entry[2].score,
                                         -entry[0].candidate_index))
