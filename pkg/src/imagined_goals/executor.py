"""Pick-and-place planning and kinematic execution.

The gripper is a free-flying point: no arm, no inverse kinematics. The
plan is rectilinear up-over-down: rise to a lift plane, transit
horizontally, descend. The lift plane is an absolute gripper height;
the planner refuses a plan whose carried object would not clear the
tallest obstacle by the safety margin.

Execution steps the trajectory kinematically at 50 Hz (plus the exact
waypoint times, so grasp/release happen at their precise poses) and
monitors, while the object is carried, its separation from every other
object. Flush contact counts as separation zero, not as a violation;
only true penetration is. Object dimensions and goal poses that are
exact binary fractions keep intended contacts at exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .geometry import Pose, Vec3, quat_rotate, vec3
from .images import RasterImage
from .render import render
from .scene import Box, Cylinder, Plane, Primitive, Scene

SPEED_MPS = 0.25
TICK_HZ = 50
LIFT_SAFETY_M = 0.05
GRASP_TOLERANCE_M = 1e-6
SNAPSHOT_SIZE = 256  # snapshots are visual artifacts; rendered small for speed

EVENT_NONE = "none"
EVENT_GRASP = "grasp"
EVENT_RELEASE = "release"


@dataclass(frozen=True)
class Waypoint:
    time: float
    pose: Pose
    event: str = EVENT_NONE


@dataclass(frozen=True)
class Trajectory:
    object_id: str
    goal: Pose
    speed_mps: float
    waypoints: tuple[Waypoint, ...]

    def __post_init__(self):
        times = [wp.time for wp in self.waypoints]
        if not times or times[0] != 0.0 or any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("waypoint times must strictly increase from 0")
        events = [wp.event for wp in self.waypoints if wp.event != EVENT_NONE]
        if events != [EVENT_GRASP, EVENT_RELEASE]:
            raise ValueError("trajectory must contain exactly one grasp then one release")

    @property
    def duration(self) -> float:
        return self.waypoints[-1].time


@dataclass(frozen=True)
class ExecutionReport:
    final_scene: Scene
    snapshots: tuple[tuple[str, RasterImage], ...]
    success: bool
    max_clearance_violation_m: float


def grasp_point(obj: Primitive, approach_normal: Optional[Vec3] = None) -> np.ndarray:
    """Where the gripper holds the object.

    Cylinders are held at their top center. Boxes (the picture frame)
    are held at the center of their back face, the face pointing away
    from `approach_normal` (the wall normal).
    """
    if isinstance(obj.shape, Cylinder):
        return obj.pose.position + vec3(0.0, 0.0, obj.shape.height / 2.0)
    if isinstance(obj.shape, Box):
        if approach_normal is None:
            raise ValueError("box grasp needs the approach normal")
        half_thickness = float(np.min(obj.shape.half_extents))
        return obj.pose.position - np.asarray(approach_normal, dtype=np.float64) * half_thickness
    raise ValueError(f"cannot grasp primitive {obj.id!r}")


def hang_below_grasp(obj: Primitive) -> float:
    """Vertical extent of the object below its grasp point."""
    if isinstance(obj.shape, Cylinder):
        return obj.shape.height
    return float(obj.shape.half_extents[2])


def _obstacle_top(obj: Primitive) -> float:
    shape = obj.shape
    if isinstance(shape, Box):
        return float(obj.pose.position[2] + shape.half_extents[2])
    if isinstance(shape, Cylinder):
        return float(obj.pose.position[2] + shape.height / 2.0)
    raise ValueError("planes have no bounded top")


def lift_obstacles(scene: Scene, object_id: str) -> list[Primitive]:
    """Objects the carried object must fly over.

    Planes are unbounded and walls are slid along rather than flown
    over, so both are excluded; they are still monitored for contact
    during execution.
    """
    return [obj for obj in scene.objects
            if obj.id != object_id
            and not isinstance(obj.shape, Plane)
            and obj.label != "wall"]


def required_lift_height(scene: Scene, object_id: str) -> float:
    """Lowest admissible lift plane for carrying the given object."""
    obj = scene.find(object_id)
    if obj is None:
        raise ValueError(f"unknown object {object_id!r}")
    tops = [_obstacle_top(o) for o in lift_obstacles(scene, object_id)]
    max_top = max(tops) if tops else 0.0
    return max_top + LIFT_SAFETY_M + hang_below_grasp(obj)


def plan_pick_and_place(scene: Scene, object_id: str, goal: Pose, lift_height_m: float,
                        approach_normal: Optional[Vec3] = None) -> Trajectory:
    """Rectilinear pick-and-place trajectory at constant speed.

    `lift_height_m` is the gripper's absolute transit height. The plan
    keeps the object's orientation; rotating transits are out of scope,
    so the goal orientation must match the object's.
    """
    obj = scene.find(object_id)
    if obj is None:
        raise ValueError(f"unknown object {object_id!r}")
    start = obj.pose
    if np.allclose(start.position, goal.position, atol=1e-12) and \
            np.allclose(start.orientation, goal.orientation, atol=1e-12):
        raise ValueError("goal equals current pose; nothing to plan")
    if not np.allclose(start.orientation, goal.orientation, atol=1e-9) and \
            not np.allclose(start.orientation, -goal.orientation, atol=1e-9):
        raise ValueError("rotating transit not supported; goal orientation must match start")

    minimum_lift = required_lift_height(scene, object_id)
    if lift_height_m < minimum_lift - 1e-12:
        raise ValueError(
            f"insufficient lift: plane {lift_height_m} m does not clear obstacles; "
            f"need at least {minimum_lift} m")

    grip_start = grasp_point(obj, approach_normal)
    offset = grip_start - start.position  # gripper relative to object center, world frame
    grip_goal = goal.position + offset

    positions = [
        vec3(grip_start[0], grip_start[1], lift_height_m),
        grip_start,
        vec3(grip_start[0], grip_start[1], lift_height_m),
        vec3(grip_goal[0], grip_goal[1], lift_height_m),
        grip_goal,
    ]
    events = [EVENT_NONE, EVENT_GRASP, EVENT_NONE, EVENT_NONE, EVENT_RELEASE]

    waypoints: list[Waypoint] = []
    time = 0.0
    previous: Optional[np.ndarray] = None
    for position, event in zip(positions, events):
        if previous is not None:
            length = float(np.linalg.norm(position - previous))
            if length < 1e-12 and event == EVENT_NONE:
                continue  # zero-length leg: no waypoint, times must strictly increase
            time += length / SPEED_MPS
        waypoints.append(Waypoint(time=time, pose=Pose(position, goal.orientation), event=event))
        previous = position

    traj = Trajectory(object_id=object_id, goal=goal, speed_mps=SPEED_MPS,
                      waypoints=tuple(waypoints))
    grasp_wp = next(wp for wp in traj.waypoints if wp.event == EVENT_GRASP)
    if float(np.linalg.norm(grasp_wp.pose.position - grip_start)) > GRASP_TOLERANCE_M:
        raise AssertionError("grasp waypoint drifted from the object's grasp point")
    return traj


# --- separation geometry -----------------------------------------------------

def _interval_gap(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Signed gap between intervals; negative means they overlap by that much."""
    return max(a[0] - b[1], b[0] - a[1])


def _z_interval(position: np.ndarray, shape) -> tuple[float, float]:
    if isinstance(shape, Cylinder):
        half = shape.height / 2.0
    else:
        half = float(shape.half_extents[2])
    return position[2] - half, position[2] + half


def _separation_cyl_cyl(pa: np.ndarray, sa: Cylinder, pb: np.ndarray, sb: Cylinder) -> float:
    gap_h = math.hypot(pa[0] - pb[0], pa[1] - pb[1]) - (sa.radius + sb.radius)
    gap_z = _interval_gap(_z_interval(pa, sa), _z_interval(pb, sb))
    if gap_h >= 0.0 or gap_z >= 0.0:
        return math.hypot(max(0.0, gap_h), max(0.0, gap_z))
    return max(gap_h, gap_z)  # penetration: least-negative axis is the escape


def _separation_cyl_box(p_cyl: np.ndarray, cyl: Cylinder, box_prim: Primitive) -> float:
    box = box_prim.shape
    local = box_prim.pose.inverse_transform(p_cyl)  # yaw-only pose keeps z vertical
    dx = abs(local[0]) - float(box.half_extents[0])
    dy = abs(local[1]) - float(box.half_extents[1])
    if dx > 0.0 or dy > 0.0:
        gap_h = math.hypot(max(0.0, dx), max(0.0, dy)) - cyl.radius
    else:
        gap_h = max(dx, dy) - cyl.radius  # axis center inside the rectangle
    gap_z = _interval_gap(
        (local[2] - cyl.height / 2.0, local[2] + cyl.height / 2.0),
        (-float(box.half_extents[2]), float(box.half_extents[2])))
    if gap_h >= 0.0 or gap_z >= 0.0:
        return math.hypot(max(0.0, gap_h), max(0.0, gap_z))
    return max(gap_h, gap_z)


def _box_axes(prim: Primitive) -> list[np.ndarray]:
    return [quat_rotate(prim.pose.orientation, axis)
            for axis in (vec3(1, 0, 0), vec3(0, 1, 0), vec3(0, 0, 1))]


def _support_radius(prim: Primitive, axis: np.ndarray) -> float:
    shape = prim.shape
    if isinstance(shape, Box):
        return sum(float(shape.half_extents[i]) * abs(float(np.dot(ax, axis)))
                   for i, ax in enumerate(_box_axes(prim)))
    axial = quat_rotate(prim.pose.orientation, vec3(0.0, 0.0, 1.0))
    along = abs(float(np.dot(axial, axis)))
    return shape.height / 2.0 * along + shape.radius * math.sqrt(max(0.0, 1.0 - along * along))


def _separation_box_box(a: Primitive, b: Primitive) -> float:
    """Separating-axis gap over both boxes' face normals.

    Exact for touching/penetrating decisions; for well-separated boxes
    it is a lower bound on Euclidean distance, which is all the
    monitor needs.
    """
    delta = b.pose.position - a.pose.position
    best = -math.inf
    for axis in _box_axes(a) + _box_axes(b):
        gap = abs(float(np.dot(delta, axis))) - _support_radius(a, axis) - _support_radius(b, axis)
        best = max(best, gap)
    return best


def _separation_to_plane(prim: Primitive, plane: Plane) -> float:
    signed = float(np.dot(plane.normal, prim.pose.position)) - plane.offset
    return abs(signed) - _support_radius(prim, plane.normal)


def separation(a: Primitive, b: Primitive) -> float:
    """Signed clearance between two primitives: 0 touching, <0 penetrating."""
    if isinstance(b.shape, Plane):
        if isinstance(a.shape, Plane):
            raise ValueError("plane-plane separation is not defined")
        return _separation_to_plane(a, b.shape)
    if isinstance(a.shape, Plane):
        return _separation_to_plane(b, a.shape)
    if isinstance(a.shape, Cylinder) and isinstance(b.shape, Cylinder):
        return _separation_cyl_cyl(a.pose.position, a.shape, b.pose.position, b.shape)
    if isinstance(a.shape, Cylinder) and isinstance(b.shape, Box):
        return _separation_cyl_box(a.pose.position, a.shape, b)
    if isinstance(a.shape, Box) and isinstance(b.shape, Cylinder):
        return _separation_cyl_box(b.pose.position, b.shape, a)
    return _separation_box_box(a, b)


# --- execution ---------------------------------------------------------------

def _gripper_pose_at(traj: Trajectory, t: float) -> Pose:
    waypoints = traj.waypoints
    if t <= waypoints[0].time:
        return waypoints[0].pose
    for before, after in zip(waypoints, waypoints[1:]):
        if t == after.time:
            return after.pose  # exact endpoint, no interpolation rounding
        if t < after.time:
            frac = (t - before.time) / (after.time - before.time)
            position = before.pose.position + frac * (after.pose.position - before.pose.position)
            return Pose(position, after.pose.orientation)
    return waypoints[-1].pose


def _sample_times(traj: Trajectory) -> list[float]:
    ticks = int(math.floor(traj.duration * TICK_HZ))
    times = {round(k / TICK_HZ, 9) for k in range(ticks + 1)}
    times.update(wp.time for wp in traj.waypoints)
    times.add(traj.duration)
    return sorted(times)


def execute(scene: Scene, traj: Trajectory,
            snapshot_phases: Sequence[str] = ("a", "b", "c", "d")) -> ExecutionReport:
    """Simulate a trajectory and report the outcome.

    Snapshot phases: "a" start, "b" grasp, "c" mid-transit, "d" after
    release, mirroring the pick-and-place storyboard.
    """
    obj = scene.find(traj.object_id)
    if obj is None:
        raise ValueError(f"unknown object {traj.object_id!r}")
    others = [o for o in scene.objects if o.id != traj.object_id]

    grasp_time = next(wp.time for wp in traj.waypoints if wp.event == EVENT_GRASP)
    release_time = next(wp.time for wp in traj.waypoints if wp.event == EVENT_RELEASE)
    grasp_offset = obj.pose.position - _gripper_pose_at(traj, grasp_time).position

    max_violation = 0.0
    object_pose = obj.pose
    for t in _sample_times(traj):
        if grasp_time <= t <= release_time:
            if t == release_time:
                object_pose = traj.goal
            else:
                grip = _gripper_pose_at(traj, t)
                object_pose = Pose(grip.position + grasp_offset, grip.orientation)
            carried = replace(obj, pose=object_pose)
            for other in others:
                clearance = separation(carried, other)
                if clearance < 0.0:
                    max_violation = max(max_violation, -clearance)
    final_pose = traj.goal

    placed = replace(obj, pose=final_pose, renderable=True)
    final_scene = scene.with_objects([placed if o.id == obj.id else o for o in scene.objects])

    phase_times = {
        "a": 0.0,
        "b": grasp_time,
        "c": (grasp_time + release_time) / 2.0,
        "d": traj.duration,
    }
    snapshots = []
    for phase in snapshot_phases:
        if phase not in phase_times:
            raise ValueError(f"unknown snapshot phase {phase!r}")
        snapshots.append((phase, _snapshot(scene, traj, obj, grasp_offset,
                                           grasp_time, release_time, phase_times[phase])))

    success = (float(np.linalg.norm(final_pose.position - traj.goal.position)) <= 1e-9
               and max_violation == 0.0)
    return ExecutionReport(final_scene=final_scene, snapshots=tuple(snapshots),
                           success=success, max_clearance_violation_m=max_violation)


def _snapshot(scene: Scene, traj: Trajectory, obj: Primitive, grasp_offset: np.ndarray,
              grasp_time: float, release_time: float, t: float) -> RasterImage:
    grip = _gripper_pose_at(traj, t)
    if t < grasp_time:
        object_pose = obj.pose
    elif t >= release_time:
        object_pose = traj.goal
    else:
        object_pose = Pose(grip.position + grasp_offset, grip.orientation)
    moved = replace(obj, pose=object_pose, renderable=True)
    marker = Primitive(id="gripper_marker", label="gripper",
                       shape=Box(half_extents=vec3(0.02, 0.02, 0.02)),
                       pose=grip, color=(60, 60, 60))
    small_camera = replace(scene.camera, width=SNAPSHOT_SIZE, height=SNAPSHOT_SIZE)
    snap_scene = scene.with_objects(
        [moved if o.id == obj.id else o for o in scene.objects] + [marker])
    return render(snap_scene, small_camera).raster
