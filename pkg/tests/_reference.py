"""Independent reference implementations used as test oracles.

Everything here is deliberately written from the stated definitions,
not from the production code: scalar loops instead of array math, a
marching intersector instead of closed forms, and scipy's rotation
class instead of the package's own quaternion kit. Agreement between
the two sides is the evidence the tests are after.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np
from scipy.spatial.transform import Rotation

TAN_22_5 = 0.4142135623730951

_SOBEL_X = ((-1, -1, -1.0), (-1, 1, 1.0), (0, -1, -2.0), (0, 1, 2.0), (1, -1, -1.0), (1, 1, 1.0))
_SOBEL_Y = ((-1, -1, -1.0), (-1, 0, -2.0), (-1, 1, -1.0), (1, -1, 1.0), (1, 0, 2.0), (1, 1, 1.0))


# --- scalar Canny -------------------------------------------------------------

def scalar_canny(pixels: np.ndarray, sigma: float, radius: int,
                 low: float, high: float) -> np.ndarray:
    """Plain-loop Canny over an (h, w, 3) uint8 array; returns bool (h, w).

    Stage order and per-pixel arithmetic follow the detector's stated
    contract: float64 throughout, left-to-right luma sum, ascending-tap
    accumulation for blur and Sobel, comparison-quantized directions,
    strict-greater suppression, and flood-fill hysteresis.
    """
    h, w = pixels.shape[0], pixels.shape[1]

    gray = [[0.0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            r = float(pixels[y, x, 0])
            g = float(pixels[y, x, 1])
            b = float(pixels[y, x, 2])
            gray[y][x] = (0.299 * r + 0.587 * g) + 0.114 * b

    kernel = _scalar_gaussian_kernel(sigma, radius)
    rows = [[0.0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for j in range(-radius, radius + 1):
                acc += kernel[j + radius] * gray[y][_clamp(x + j, w)]
            rows[y][x] = acc
    blurred = [[0.0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for j in range(-radius, radius + 1):
                acc += kernel[j + radius] * rows[_clamp(y + j, h)][x]
            blurred[y][x] = acc

    gx = [[0.0] * w for _ in range(h)]
    gy = [[0.0] * w for _ in range(h)]
    mag = [[0.0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            ax = 0.0
            for dy, dx, weight in _SOBEL_X:
                ax += weight * blurred[_clamp(y + dy, h)][_clamp(x + dx, w)]
            ay = 0.0
            for dy, dx, weight in _SOBEL_Y:
                ay += weight * blurred[_clamp(y + dy, h)][_clamp(x + dx, w)]
            gx[y][x] = ax
            gy[y][x] = ay
            mag[y][x] = math.sqrt(ax * ax + ay * ay)

    neighbors = {0: ((0, 1), (0, -1)), 1: ((1, 1), (-1, -1)),
                 2: ((1, 0), (-1, 0)), 3: ((1, -1), (-1, 1))}
    weak = [[False] * w for _ in range(h)]
    strong = [[False] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            m = mag[y][x]
            bin_id = _scalar_direction_bin(gx[y][x], gy[y][x])
            (dy1, dx1), (dy2, dx2) = neighbors[bin_id]
            n1 = mag[_clamp(y + dy1, h)][_clamp(x + dx1, w)]
            n2 = mag[_clamp(y + dy2, h)][_clamp(x + dx2, w)]
            if n1 > m or n2 > m:
                continue
            if m >= low:
                weak[y][x] = True
                if m >= high:
                    strong[y][x] = True

    out = [[False] * w for _ in range(h)]
    queue = deque()
    for y in range(h):
        for x in range(w):
            if strong[y][x]:
                out[y][x] = True
                queue.append((y, x))
    while queue:
        y, x = queue.popleft()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and weak[ny][nx] and not out[ny][nx]:
                    out[ny][nx] = True
                    queue.append((ny, nx))
    return np.array(out, dtype=bool)


def _scalar_gaussian_kernel(sigma: float, radius: int) -> list[float]:
    taps = [math.exp(-(float(x) * float(x)) / (2.0 * sigma * sigma))
            for x in range(-radius, radius + 1)]
    total = 0.0
    for tap in taps:
        total += tap
    return [tap / total for tap in taps]


def _scalar_direction_bin(gx: float, gy: float) -> int:
    ax, ay = abs(gx), abs(gy)
    if ay <= TAN_22_5 * ax:
        return 0
    product = gx * gy
    if product > 0:
        return 1 if ax >= TAN_22_5 * ay else 2
    if product < 0:
        return 3 if ax > TAN_22_5 * ay else 2
    return 2


def _clamp(i: int, n: int) -> int:
    return 0 if i < 0 else (n - 1 if i >= n else i)


# --- marching ray intersector --------------------------------------------------

def march_intersect(origin, direction, primitive, t_max: float = 50.0,
                    steps: int = 200_000):
    """First boundary crossing of a ray against a solid, by dense marching.

    Samples inside/outside along the ray, takes the first sign change,
    then bisects it down to ~1e-12 of the interval. Resolution along
    the ray is t_max/steps, so thin features below that are missed;
    callers choose steps accordingly. Returns None without a crossing.
    """
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    ts = np.linspace(0.0, t_max, steps + 1)
    points = origin[None, :] + ts[:, None] * direction[None, :]
    inside = _inside(points, primitive)
    flips = np.flatnonzero(inside[1:] != inside[:-1])
    if flips.size == 0:
        return None
    lo, hi = ts[flips[0]], ts[flips[0] + 1]
    lo_inside = bool(inside[flips[0]])
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if bool(_inside((origin + mid * direction)[None, :], primitive)[0]) == lo_inside:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _inside(points: np.ndarray, primitive) -> np.ndarray:
    from imagined_goals.scene import Box, Cylinder, Plane

    shape = primitive.shape
    if isinstance(shape, Plane):
        return points @ np.asarray(shape.normal) <= shape.offset
    rot = Rotation.from_quat(_to_scipy_quat(primitive.pose.orientation))
    local = rot.inv().apply(points - np.asarray(primitive.pose.position))
    if isinstance(shape, Box):
        he = np.asarray(shape.half_extents)
        return np.all(np.abs(local) <= he, axis=1)
    if isinstance(shape, Cylinder):
        radial = np.hypot(local[:, 0], local[:, 1])
        return (radial <= shape.radius) & (np.abs(local[:, 2]) <= shape.height / 2.0)
    raise TypeError(f"unsupported shape {type(shape).__name__}")


# --- independent camera projection ---------------------------------------------

def forward_project(camera, point):
    """(u, v, range) of a world point, computed with scipy's rotations.

    Returns None when the point is not strictly in front of the camera.
    """
    point = np.asarray(point, dtype=np.float64)
    rot = Rotation.from_quat(_to_scipy_quat(camera.pose.orientation))
    local = rot.inv().apply(point - np.asarray(camera.pose.position))
    if local[2] <= 0.0:
        return None
    f = (camera.width / 2.0) / math.tan(math.radians(camera.fov_horizontal) / 2.0)
    u = camera.width / 2.0 + f * local[0] / local[2]
    v = camera.height / 2.0 + f * local[1] / local[2]
    return u, v, float(np.linalg.norm(point - np.asarray(camera.pose.position)))


def _to_scipy_quat(q) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=np.float64)
    return np.array([x, y, z, w])


# --- scene builders -------------------------------------------------------------

def small_table_scene_dict(width: int = 96, height: int = 96) -> dict:
    """Compact bowl-task scene for fast unit tests and wire fixtures."""
    return {
        "task": "place_bowl_on_table",
        "camera": {"position": [0.0, -0.35, 2.4], "look_at": [0.0, 1.8, 0.75],
                   "fov_deg": 60.0, "width": width, "height": height},
        "objects": [
            {"id": "floor", "label": "floor",
             "shape": {"type": "plane", "normal": [0.0, 0.0, 1.0], "offset": 0.0},
             "position": [0.0, 0.0, 0.0], "color": [120, 120, 130]},
            {"id": "table", "label": "table",
             "shape": {"type": "box", "half_extents": [0.6, 0.4, 0.375]},
             "position": [0.0, 1.8, 0.375], "color": [150, 100, 60]},
            {"id": "glass_a", "label": "glass",
             "shape": {"type": "cylinder", "radius": 0.03, "height": 0.15},
             "position": [-0.3, 2.15, 0.825], "color": [80, 170, 190]},
            {"id": "glass_b", "label": "glass",
             "shape": {"type": "cylinder", "radius": 0.03, "height": 0.15},
             "position": [0.3, 2.14, 0.825], "color": [80, 170, 190]},
            {"id": "bowl", "label": "bowl",
             "shape": {"type": "cylinder", "radius": 0.075, "height": 0.0625},
             "position": [-1.0, 1.0, 0.03125], "color": [40, 90, 200],
             "renderable": False},
        ],
    }


def saturated_table_scene_dict() -> dict:
    """Table tiled with glasses so densely that no bowl placement is valid.

    Bowl r=0.075, glass r=0.03, clearance 0.02 force centers 0.125 m
    apart; a 0.15 m glass grid leaves every table point within
    0.15/sqrt(2) < 0.125 m of some glass, so the checker rejects all of
    the table, and the sampler must report saturation.
    """
    scene = small_table_scene_dict(width=64, height=64)
    objects = [obj for obj in scene["objects"] if obj["label"] != "glass"]
    pitch = 0.15
    index = 0
    xs = np.arange(-0.6, 0.6 + 1e-9, pitch)
    ys = np.arange(1.4, 2.2 + 1e-9, pitch)
    for x in xs:
        for y in ys:
            objects.append({
                "id": f"glass_{index:02d}", "label": "glass",
                "shape": {"type": "cylinder", "radius": 0.03, "height": 0.15},
                "position": [round(float(x), 6), round(float(y), 6), 0.825],
                "color": [80, 170, 190],
            })
            index += 1
    scene["objects"] = objects
    return scene
