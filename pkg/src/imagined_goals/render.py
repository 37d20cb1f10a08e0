"""Ray-cast renderer for primitive scenes.

One ray per pixel, sampled at integer pixel coordinates (u, v) with
u in [0, width) and v in [0, height); the principal point sits at
(width/2, height/2). Camera rays use the pinhole model

    dir_cam = normalize(((u - cx) / f, (v - cy) / f, 1))

and are rotated into the world by the camera orientation. Depth is the
Euclidean range t along the unit ray, not the distance to the image
plane; pixels that hit nothing carry +inf and the background color.

Shading is a single fixed directional light plus an ambient term:

    intensity = ambient + (1 - ambient) * max(0, n . (-light_dir))

with the surface normal flipped toward the ray origin first, and each
color channel quantized as clamp(floor(channel * intensity + 0.5)).

Hits replace the current winner only when strictly closer, so on exact
range ties the earliest object in scene order keeps the pixel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import Pose, Vec3, quat_to_matrix, unit, vec3
from .images import DepthImage, RasterImage
from .scene import Box, CameraModel, Cylinder, Plane, Primitive, Scene, validate_scene

LIGHT_DIR = unit(vec3(-1.0, -1.0, -2.0))  # direction the light travels
AMBIENT = 0.35
BACKGROUND_RGB = (210, 210, 210)

_T_MIN = 1e-9  # hits closer than this count as misses
_PARALLEL = 1e-12


@dataclass(frozen=True)
class RenderResult:
    raster: RasterImage
    depth: DepthImage
    hit_index: np.ndarray  # int32 (h, w); index into scene.objects, -1 where no hit


def project_point(camera: CameraModel, point: Vec3) -> Optional[tuple[float, float]]:
    """Pixel coordinates of a world point, or None if behind the camera."""
    local = camera.pose.inverse_transform(np.asarray(point, dtype=np.float64))
    if local[2] <= 0.0:
        return None
    intr = camera.intrinsics
    return (intr.cx + intr.f * local[0] / local[2], intr.cy + intr.f * local[1] / local[2])


# --- scalar intersection contract -------------------------------------------

def ray_primitive_intersect(origin: Vec3, direction: Vec3,
                            primitive: Primitive) -> Optional[float]:
    """Closest hit distance of a ray against one primitive, or None.

    Distance is strictly positive, in units of |direction|. A ray that
    starts inside a closed shape reports the exit point.
    """
    hit = _ray_intersect_with_normal(origin, direction, primitive)
    return None if hit is None else hit[0]


def _ray_intersect_with_normal(origin: Vec3, direction: Vec3,
                               primitive: Primitive) -> Optional[tuple[float, Vec3]]:
    """Like ray_primitive_intersect but also returns the outward world
    normal at the hit point, not yet flipped toward the ray."""
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    shape = primitive.shape
    if isinstance(shape, Plane):
        nd = float(np.dot(shape.normal, d))
        if abs(nd) < _PARALLEL:
            return None
        t = (shape.offset - float(np.dot(shape.normal, o))) / nd
        if t <= _T_MIN:
            return None
        return t, shape.normal.copy()

    pose = primitive.pose
    ol = pose.inverse_transform(o)
    rot = quat_to_matrix(pose.orientation)
    dl = rot.T @ d

    if isinstance(shape, Box):
        hit = _box_intersect_scalar(ol, dl, shape.half_extents)
    elif isinstance(shape, Cylinder):
        hit = _cylinder_intersect_scalar(ol, dl, shape.radius, shape.height)
    else:
        raise TypeError(f"unsupported shape {type(shape).__name__}")
    if hit is None:
        return None
    t, n_local = hit
    return t, rot @ n_local


def _box_intersect_scalar(o, d, he) -> Optional[tuple[float, np.ndarray]]:
    t_enter, t_exit = -np.inf, np.inf
    enter_axis = exit_axis = 0
    for axis in range(3):
        if abs(d[axis]) < _PARALLEL:
            if abs(o[axis]) > he[axis]:
                return None
            continue
        ta = (-he[axis] - o[axis]) / d[axis]
        tb = (he[axis] - o[axis]) / d[axis]
        t1, t2 = (ta, tb) if ta <= tb else (tb, ta)
        if t1 > t_enter:
            t_enter, enter_axis = t1, axis
        if t2 < t_exit:
            t_exit, exit_axis = t2, axis
    if t_enter > t_exit or t_exit <= _T_MIN:
        return None
    if t_enter > _T_MIN:
        t, axis, sign = t_enter, enter_axis, -np.sign(d[enter_axis])
    else:
        t, axis, sign = t_exit, exit_axis, np.sign(d[exit_axis])
    normal = np.zeros(3)
    normal[axis] = sign
    return float(t), normal


def _cylinder_intersect_scalar(o, d, radius, height) -> Optional[tuple[float, np.ndarray]]:
    hz = height / 2.0
    best_t, best_n = np.inf, None

    a = d[0] * d[0] + d[1] * d[1]
    if a > _PARALLEL:
        b = 2.0 * (o[0] * d[0] + o[1] * d[1])
        c = o[0] * o[0] + o[1] * o[1] - radius * radius
        disc = b * b - 4.0 * a * c
        if disc >= 0.0:
            sq = np.sqrt(disc)
            for t in ((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)):
                if _T_MIN < t < best_t and abs(o[2] + t * d[2]) <= hz:
                    x, y = o[0] + t * d[0], o[1] + t * d[1]
                    best_t, best_n = t, np.array([x / radius, y / radius, 0.0])

    if abs(d[2]) > _PARALLEL:
        for z_face, nz in ((-hz, -1.0), (hz, 1.0)):
            t = (z_face - o[2]) / d[2]
            if _T_MIN < t < best_t:
                x, y = o[0] + t * d[0], o[1] + t * d[1]
                if x * x + y * y <= radius * radius:
                    best_t, best_n = t, np.array([0.0, 0.0, nz])

    if best_n is None:
        return None
    return float(best_t), best_n


# --- vectorized passes -------------------------------------------------------

def _box_pass(ol, dlx, dly, dlz, he):
    n = dlx.shape[0]
    t_enter = np.full(n, -np.inf)
    t_exit = np.full(n, np.inf)
    enter_axis = np.zeros(n, np.int8)
    exit_axis = np.zeros(n, np.int8)
    miss = np.zeros(n, bool)
    for axis, di in enumerate((dlx, dly, dlz)):
        oi, h = ol[axis], he[axis]
        par = np.abs(di) < _PARALLEL
        miss |= par & (abs(oi) > h)
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (-h - oi) / di
            tb = (h - oi) / di
        t1 = np.where(par, -np.inf, np.minimum(ta, tb))
        t2 = np.where(par, np.inf, np.maximum(ta, tb))
        upd = t1 > t_enter
        t_enter = np.where(upd, t1, t_enter)
        enter_axis = np.where(upd, axis, enter_axis)
        upd = t2 < t_exit
        t_exit = np.where(upd, t2, t_exit)
        exit_axis = np.where(upd, axis, exit_axis)
    hit = ~miss & (t_enter <= t_exit) & (t_exit > _T_MIN)
    inside = hit & (t_enter <= _T_MIN)
    t = np.where(hit, np.where(inside, t_exit, t_enter), np.inf)
    axis_sel = np.where(inside, exit_axis, enter_axis)
    d_sel = np.where(axis_sel == 0, dlx, np.where(axis_sel == 1, dly, dlz))
    sign = np.where(inside, np.sign(d_sel), -np.sign(d_sel))
    nx = np.where(axis_sel == 0, sign, 0.0)
    ny = np.where(axis_sel == 1, sign, 0.0)
    nz = np.where(axis_sel == 2, sign, 0.0)
    return t, nx, ny, nz


def _cylinder_pass(ol, dlx, dly, dlz, radius, height):
    n = dlx.shape[0]
    hz = height / 2.0
    ox, oy, oz = ol
    a = dlx * dlx + dly * dly
    b = 2.0 * (ox * dlx + oy * dly)
    c = ox * ox + oy * oy - radius * radius
    disc = b * b - 4.0 * a * c
    side_ok = (a > _PARALLEL) & (disc >= 0.0)
    sq = np.sqrt(np.where(disc >= 0.0, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_near = (-b - sq) / (2.0 * a)
        t_far = (-b + sq) / (2.0 * a)
        t_bot = (-hz - oz) / dlz
        t_top = (hz - oz) / dlz
    cap_ok = np.abs(dlz) > _PARALLEL

    best = np.full(n, np.inf)
    kind = np.full(n, -1, np.int8)  # 0/1 side, 2 bottom cap, 3 top cap
    r2 = radius * radius
    with np.errstate(invalid="ignore"):
        candidates = (
            (t_near, side_ok & (t_near > _T_MIN) & (np.abs(oz + t_near * dlz) <= hz), 0),
            (t_far, side_ok & (t_far > _T_MIN) & (np.abs(oz + t_far * dlz) <= hz), 1),
            (t_bot, cap_ok & (t_bot > _T_MIN), 2),
            (t_top, cap_ok & (t_top > _T_MIN), 3),
        )
        for t_cand, valid, k in candidates:
            if k >= 2:
                x = ox + t_cand * dlx
                y = oy + t_cand * dly
                valid = valid & (x * x + y * y <= r2)
            upd = valid & (t_cand < best)
            best = np.where(upd, t_cand, best)
            kind = np.where(upd, k, kind)

    side = (kind == 0) | (kind == 1)
    t_safe = np.where(kind >= 0, best, 0.0)
    hx = ox + t_safe * dlx
    hy = oy + t_safe * dly
    nx = np.where(side, hx / radius, 0.0)
    ny = np.where(side, hy / radius, 0.0)
    nz = np.where(kind == 2, -1.0, np.where(kind == 3, 1.0, 0.0))
    return best, nx, ny, nz


def _plane_pass(origin, dx, dy, dz, plane: Plane):
    n = plane.normal
    nd = n[0] * dx + n[1] * dy + n[2] * dz
    no = float(np.dot(n, origin))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (plane.offset - no) / nd
    valid = (np.abs(nd) > _PARALLEL) & (t > _T_MIN)
    t = np.where(valid, t, np.inf)
    shape = dx.shape
    return (t, np.full(shape, n[0]), np.full(shape, n[1]), np.full(shape, n[2]))


def _camera_rays(camera: CameraModel):
    intr = camera.intrinsics
    uu, vv = np.meshgrid(np.arange(camera.width, dtype=np.float64),
                         np.arange(camera.height, dtype=np.float64))
    x = (uu.ravel() - intr.cx) / intr.f
    y = (vv.ravel() - intr.cy) / intr.f
    inv = 1.0 / np.sqrt(x * x + y * y + 1.0)
    rot = quat_to_matrix(camera.pose.orientation)
    dcx, dcy, dcz = x * inv, y * inv, inv
    dx = rot[0, 0] * dcx + rot[0, 1] * dcy + rot[0, 2] * dcz
    dy = rot[1, 0] * dcx + rot[1, 1] * dcy + rot[1, 2] * dcz
    dz = rot[2, 0] * dcx + rot[2, 1] * dcy + rot[2, 2] * dcz
    return dx, dy, dz


@dataclass
class Trace:
    """Per-ray hit state from tracing a scene, before shading.

    Kept in float64 so later composite passes resolve depth ties the
    same way a from-scratch render would.
    """
    origin: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    dz: np.ndarray
    t: np.ndarray
    index: np.ndarray
    nx: np.ndarray
    ny: np.ndarray
    nz: np.ndarray
    width: int
    height: int


def _trace_object(obj: Primitive, origin, dx, dy, dz):
    """(t, nx, ny, nz) in world frame for one primitive over all rays."""
    if isinstance(obj.shape, Plane):
        return _plane_pass(origin, dx, dy, dz, obj.shape)
    rot = quat_to_matrix(obj.pose.orientation)
    ol = rot.T @ (origin - obj.pose.position)
    dlx = rot[0, 0] * dx + rot[1, 0] * dy + rot[2, 0] * dz
    dly = rot[0, 1] * dx + rot[1, 1] * dy + rot[2, 1] * dz
    dlz = rot[0, 2] * dx + rot[1, 2] * dy + rot[2, 2] * dz
    if isinstance(obj.shape, Box):
        t, nx, ny, nz = _box_pass(ol, dlx, dly, dlz, obj.shape.half_extents)
    else:
        t, nx, ny, nz = _cylinder_pass(ol, dlx, dly, dlz,
                                       obj.shape.radius, obj.shape.height)
    return (t,
            rot[0, 0] * nx + rot[0, 1] * ny + rot[0, 2] * nz,
            rot[1, 0] * nx + rot[1, 1] * ny + rot[1, 2] * nz,
            rot[2, 0] * nx + rot[2, 1] * ny + rot[2, 2] * nz)


def trace_scene(scene: Scene, camera: Optional[CameraModel] = None) -> Trace:
    """Trace every renderable primitive; the scene must pass validation."""
    problems = validate_scene(scene)
    if problems:
        raise ValueError("invalid scene: " + "; ".join(problems))
    if camera is None:
        camera = scene.camera
    npix = camera.height * camera.width
    origin = camera.pose.position
    dx, dy, dz = _camera_rays(camera)

    state = Trace(origin=origin, dx=dx, dy=dy, dz=dz,
                  t=np.full(npix, np.inf), index=np.full(npix, -1, np.int32),
                  nx=np.zeros(npix), ny=np.zeros(npix), nz=np.zeros(npix),
                  width=camera.width, height=camera.height)
    for index, obj in enumerate(scene.objects):
        if not obj.renderable:
            continue
        _merge_pass(state, index, *_trace_object(obj, origin, dx, dy, dz))
    return state


def _merge_pass(state: Trace, index: int, t, nx, ny, nz) -> None:
    closer = t < state.t  # strict, so earlier objects keep exact ties
    state.t = np.where(closer, t, state.t)
    state.index = np.where(closer, index, state.index).astype(np.int32)
    state.nx = np.where(closer, nx, state.nx)
    state.ny = np.where(closer, ny, state.ny)
    state.nz = np.where(closer, nz, state.nz)


def _shade_pixels(color, nx, ny, nz, dx, dy, dz) -> np.ndarray:
    """uint8 (n, 3) Lambert shading of hit pixels of one color."""
    flip = (nx * dx + ny * dy + nz * dz) > 0.0
    sign = np.where(flip, -1.0, 1.0)  # normals face the ray origin
    lam = -(nx * sign * LIGHT_DIR[0] + ny * sign * LIGHT_DIR[1] + nz * sign * LIGHT_DIR[2])
    intensity = AMBIENT + (1.0 - AMBIENT) * np.maximum(0.0, lam)
    rgb = np.asarray(color, dtype=np.float64)
    shaded = np.floor(rgb[None, :] * intensity[:, None] + 0.5)
    return np.clip(shaded, 0.0, 255.0).astype(np.uint8)


def shade_trace(scene: Scene, state: Trace) -> RenderResult:
    """RenderResult from a completed trace."""
    raster = np.empty((state.t.shape[0], 3), np.uint8)
    raster[:] = np.asarray(BACKGROUND_RGB, np.uint8)
    for index, obj in enumerate(scene.objects):
        sel = state.index == index
        if not sel.any():
            continue
        raster[sel] = _shade_pixels(obj.color, state.nx[sel], state.ny[sel],
                                    state.nz[sel], state.dx[sel], state.dy[sel],
                                    state.dz[sel])
    h, w = state.height, state.width
    return RenderResult(
        raster=RasterImage(pixels=raster.reshape(h, w, 3)),
        depth=DepthImage(ranges=state.t.astype(np.float32).reshape(h, w)),
        hit_index=state.index.reshape(h, w).copy(),
    )


def render(scene: Scene, camera: Optional[CameraModel] = None) -> RenderResult:
    """Render every primitive with renderable=True.

    Uses the scene camera unless an override is given. The scene must
    pass validation.
    """
    return shade_trace(scene, trace_scene(scene, camera))


def composite_render(base: Trace, base_raster: RasterImage, extra: Primitive,
                     extra_index: int) -> RenderResult:
    """Render of the traced scene with one primitive appended.

    Equivalent to appending `extra` to the scene and rendering from
    scratch, but only the new primitive is traced; pixels it does not
    win are taken from the base render unchanged.
    """
    t, nx, ny, nz = _trace_object(extra, base.origin, base.dx, base.dy, base.dz)
    win = t < base.t
    raster = base_raster.pixels.reshape(-1, 3).copy()
    raster[win] = _shade_pixels(extra.color, nx[win], ny[win], nz[win],
                                base.dx[win], base.dy[win], base.dz[win])
    h, w = base.height, base.width
    return RenderResult(
        raster=RasterImage(pixels=raster.reshape(h, w, 3)),
        depth=DepthImage(ranges=np.where(win, t, base.t).astype(np.float32).reshape(h, w)),
        hit_index=np.where(win, extra_index, base.index).astype(np.int32).reshape(h, w),
    )
