"""Back-projection: from a 2D detection to a 3D goal pose.

Two estimators, matching the two tasks:

- depth-ray: anchor at the detection's bottom-center, read range from
  the depth image, walk the pixel ray out into the world. Used for
  objects that rest on a horizontal surface.
- wall-refs: similar-triangles pixel-to-meter scaling from known
  reference dimensions (an object of known height and a wall segment
  of known length), exact for a fronto-parallel wall. Used for objects
  mounted on a vertical plane.

Pixel coordinates are continuous with integer-centered pixels: the ray
of pixel (u, v) is the one the renderer casts for that pixel.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .detection import Detection
from .geometry import Vec3, quat_rotate, vec3
from .images import DepthImage
from .scene import (CameraModel, Intrinsics, Scene, WallRefs,
                    wall_front_plane, wall_in_plane_axes)

RESCUE_RING_RADIUS = 5  # px; how far to search for finite depth around a bad anchor


def pixel_ray(intr: Intrinsics, pixel: tuple[float, float]) -> np.ndarray:
    """Unit view ray of a pixel in the camera frame (+z forward)."""
    u, v = pixel
    x = (u - intr.cx) / intr.f
    y = (v - intr.cy) / intr.f
    inv = 1.0 / math.sqrt(x * x + y * y + 1.0)
    return np.array([x * inv, y * inv, inv])


def pixel_to_world(camera: CameraModel, pixel: tuple[float, float], range_m: float) -> np.ndarray:
    """World point at `range_m` meters along a pixel's view ray."""
    if not math.isfinite(range_m) or range_m <= 0:
        raise ValueError(f"no surface at pixel {pixel}: range {range_m}")
    ray = quat_rotate(camera.pose.orientation, pixel_ray(camera.intrinsics, pixel))
    return camera.pose.position + range_m * ray


def sample_depth(depth: DepthImage, pixel: tuple[float, float]) -> float:
    """Range at a continuous pixel, robust to background and border texels.

    Bilinear over the 4 nearest texels, excluding infinite and
    out-of-image texels and renormalizing the weights. If no finite
    texel contributes, search outward ring by ring (Chebyshev radius
    1..5 around the nearest texel) and return the finite texel closest
    to the query point, ties broken by (row, column).
    """
    u, v = pixel
    ranges = depth.ranges
    h, w = ranges.shape
    u0, v0 = math.floor(u), math.floor(v)
    fu, fv = u - u0, v - v0
    total_weight = 0.0
    acc = 0.0
    for (ui, vi, weight) in (
        (u0, v0, (1 - fu) * (1 - fv)),
        (u0 + 1, v0, fu * (1 - fv)),
        (u0, v0 + 1, (1 - fu) * fv),
        (u0 + 1, v0 + 1, fu * fv),
    ):
        if 0 <= ui < w and 0 <= vi < h and math.isfinite(ranges[vi, ui]):
            acc += weight * float(ranges[vi, ui])
            total_weight += weight
    if total_weight > 0.0:
        return acc / total_weight

    uc = min(max(int(round(u)), 0), w - 1)
    vc = min(max(int(round(v)), 0), h - 1)
    for radius in range(1, RESCUE_RING_RADIUS + 1):
        best: Optional[tuple[float, int, int]] = None
        for vi in range(vc - radius, vc + radius + 1):
            for ui in range(uc - radius, uc + radius + 1):
                if max(abs(vi - vc), abs(ui - uc)) != radius:
                    continue
                if not (0 <= ui < w and 0 <= vi < h):
                    continue
                if not math.isfinite(ranges[vi, ui]):
                    continue
                dist = math.hypot(ui - u, vi - v)
                key = (dist, vi, ui)
                if best is None or key < best:
                    best = key
        if best is not None:
            return float(ranges[best[1], best[2]])
    raise ValueError(f"anchor off-surface: no finite depth within {RESCUE_RING_RADIUS} px of {pixel}")


def estimate_table_pose(camera: CameraModel, depth: DepthImage, det: Detection,
                        footprint_radius_m: float = 0.0) -> np.ndarray:
    """World point where the detected object meets its supporting surface.

    Anchor pixel = bottom-center of the bbox, pixel-center convention.
    The anchored surface point is the near rim of the object's
    footprint, not its axis; when the footprint radius is known,
    passing it shifts the estimate that far along the horizontal
    view direction, recovering the footprint center.
    """
    x_min, y_min, x_max, y_max = det.bbox
    anchor = ((x_min + x_max) / 2.0, y_max - 0.5)
    range_m = sample_depth(depth, anchor)
    point = pixel_to_world(camera, anchor, range_m)
    if footprint_radius_m > 0.0:
        toward = point - camera.pose.position
        toward[2] = 0.0
        norm = float(np.linalg.norm(toward))
        if norm > 1e-12:
            point = point + (footprint_radius_m / norm) * toward
    return point


def estimate_wall_pose(det: Detection, refs: WallRefs,
                       scene: Scene) -> tuple[np.ndarray, tuple[float, float]]:
    """(center on the wall plane, extents in meters) of a wall-mounted detection.

    Pixel-to-meter scales come from the reference dimensions: vertical
    from the wardrobe height, horizontal from the wardrobe-to-corner
    wall segment. The displacement of the bbox center from the wardrobe
    base reference pixel, scaled by (s_h, s_v), is applied from the
    wardrobe-base world anchor along the wall's in-plane axes. Exact
    for a fronto-parallel wall; the anchor and both reference pixels
    must be points of the wall plane itself.
    """
    dv = refs.wardrobe_top_px[1] - refs.wardrobe_base_px[1]
    du = refs.wardrobe_base_px[0] - refs.wall_left_corner_px[0]
    if dv == 0 or du == 0:
        raise ValueError("degenerate reference: zero pixel span in wall_refs")
    s_v = refs.wardrobe_height_m / abs(dv)
    s_h = refs.wall_segment_m / abs(du)

    plane = wall_front_plane(scene, refs.wall_plane)
    h_axis, v_axis = wall_in_plane_axes(scene, plane)

    wardrobes = scene.by_label("wardrobe")
    if not wardrobes:
        raise ValueError("scene has no 'wardrobe' to anchor wall references")
    wardrobe = wardrobes[0]
    half_z = _vertical_half_extent(wardrobe)
    base = wardrobe.pose.position - vec3(0.0, 0.0, half_z)
    # project the base point onto the wall plane so in-plane moves stay in-plane
    anchor = base - plane.normal * (float(np.dot(plane.normal, base)) - plane.offset)

    x_min, y_min, x_max, y_max = det.bbox
    center_px = ((x_min + x_max) / 2.0, (y_min + y_max) / 2.0)
    delta_u = center_px[0] - refs.wardrobe_base_px[0]
    delta_v = center_px[1] - refs.wardrobe_base_px[1]
    center = anchor + (s_h * delta_u) * h_axis + (s_v * delta_v) * v_axis
    extents = ((x_max - x_min) * s_h, (y_max - y_min) * s_v)
    return center, extents


def _vertical_half_extent(primitive) -> float:
    from .scene import Box, Cylinder

    shape = primitive.shape
    if isinstance(shape, Box):
        # yaw-only poses keep local z vertical
        return float(shape.half_extents[2])
    if isinstance(shape, Cylinder):
        return shape.height / 2.0
    raise ValueError(f"cannot anchor on primitive {primitive.id!r} of shape {type(shape).__name__}")
