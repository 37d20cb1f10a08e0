from __future__ import annotations

import copy
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from imagined_goals.geometry import quat_rotate, vec3
from imagined_goals.scene import (Box, Cylinder, Plane, Task, camera_intrinsics,
                                  scene_from_dict, validate_scene,
                                  wall_front_plane, wall_in_plane_axes)

from _reference import small_table_scene_dict


def test_intrinsics_fov_90_is_half_width():
    intr = camera_intrinsics(90.0, 512, 512)
    assert intr.f == pytest.approx(256.0, rel=1e-12)
    assert intr.cx == 256.0
    assert intr.cy == 256.0


def test_intrinsics_fov_60():
    intr = camera_intrinsics(60.0, 640, 480)
    assert intr.f == pytest.approx(320.0 / math.tan(math.radians(30.0)), rel=1e-12)
    assert intr.f == pytest.approx(554.2563, abs=1e-4)
    assert intr.cx == 320.0
    assert intr.cy == 240.0


def test_intrinsics_near_degenerate_fov():
    assert camera_intrinsics(179.9, 512, 512).f == pytest.approx(0.2234, abs=1e-4)


@pytest.mark.parametrize("fov", [0.0, -10.0, 180.0, 360.0])
def test_intrinsics_rejects_fov_out_of_range(fov):
    with pytest.raises(ValueError):
        camera_intrinsics(fov, 512, 512)


@given(st.tuples(st.floats(min_value=1.0, max_value=179.0),
                 st.floats(min_value=1.0, max_value=179.0)))
def test_intrinsics_monotone_decreasing_in_fov(fovs):
    lo, hi = sorted(fovs)
    if lo == hi:
        return
    assert camera_intrinsics(hi, 512, 512).f < camera_intrinsics(lo, 512, 512).f


def test_bundled_scenes_are_valid(table_scene, wall_scene):
    assert validate_scene(table_scene) == []
    assert validate_scene(wall_scene) == []


def test_duplicate_object_id_is_reported():
    doc = small_table_scene_dict()
    doc["objects"].append(copy.deepcopy(doc["objects"][2]))
    problems = validate_scene(scene_from_dict(doc))
    assert len(problems) == 1
    assert "glass_a" in problems[0]


def test_missing_wall_refs_is_reported(wall_scene):
    from dataclasses import replace
    stripped = replace(wall_scene, wall_refs=None)
    problems = validate_scene(stripped)
    assert len(problems) == 1
    assert "wall_refs" in problems[0]


def test_nonpositive_dimensions_are_reported():
    doc = small_table_scene_dict()
    doc["objects"][1]["shape"]["half_extents"] = [0.6, 0.0, 0.375]
    doc["objects"][2]["shape"]["radius"] = -0.01
    problems = validate_scene(scene_from_dict(doc))
    assert len(problems) == 2
    assert "glass_a" in problems[0]  # ordering: by object id, then rule
    assert "table" in problems[1]


def test_scene_lookup_helpers(table_scene):
    table = table_scene.find("table")
    assert table is not None and isinstance(table.shape, Box)
    assert table_scene.find("nope") is None
    glasses = table_scene.by_label("glass")
    assert len(glasses) == 3
    assert all(isinstance(g.shape, Cylinder) for g in glasses)
    trimmed = table_scene.with_objects([table])
    assert len(trimmed.objects) == 1
    assert len(table_scene.objects) > 1  # original untouched


def test_scene_from_dict_converts_yaw_and_look_at():
    doc = small_table_scene_dict()
    doc["objects"][1]["yaw_deg"] = 90.0
    scene = scene_from_dict(doc)
    table = scene.find("table")
    local_x = quat_rotate(table.pose.orientation, vec3(1.0, 0.0, 0.0))
    assert np.allclose(local_x, [0.0, 1.0, 0.0], atol=1e-12)
    forward = quat_rotate(scene.camera.pose.orientation, vec3(0.0, 0.0, 1.0))
    target = vec3(*doc["camera"]["look_at"]) - vec3(*doc["camera"]["position"])
    assert np.allclose(forward, target / np.linalg.norm(target), atol=1e-12)
    assert scene.task is Task.PLACE_BOWL_ON_TABLE


def test_scene_from_dict_rejects_unknown_shape():
    doc = small_table_scene_dict()
    doc["objects"][0]["shape"] = {"type": "sphere", "radius": 1.0}
    with pytest.raises(ValueError, match="unknown shape"):
        scene_from_dict(doc)


def test_wall_front_plane_faces_camera(wall_scene):
    wall = wall_scene.by_label("wall")[0]
    plane = wall_front_plane(wall_scene, wall.id)
    to_camera = wall_scene.camera.pose.position - wall.pose.position
    assert float(np.dot(plane.normal, to_camera)) > 0.0
    # face plane passes through the wall surface nearest the camera
    he = wall.shape.half_extents
    face_point = wall.pose.position + plane.normal * float(np.min(he))
    assert float(np.dot(plane.normal, face_point)) == pytest.approx(plane.offset, abs=1e-12)


def test_wall_front_plane_passthrough_for_plane_walls(table_scene):
    plane = wall_front_plane(table_scene, "room_wall")
    wall = table_scene.find("room_wall")
    assert isinstance(wall.shape, Plane)
    assert np.allclose(plane.normal, wall.shape.normal)
    assert plane.offset == wall.shape.offset


def test_wall_front_plane_unknown_id(table_scene):
    with pytest.raises(ValueError, match="no wall primitive"):
        wall_front_plane(table_scene, "missing")


def test_wall_in_plane_axes_are_orthonormal(wall_scene):
    wall = wall_scene.by_label("wall")[0]
    plane = wall_front_plane(wall_scene, wall.id)
    h_axis, v_axis = wall_in_plane_axes(wall_scene, plane)
    for axis in (h_axis, v_axis):
        assert float(np.linalg.norm(axis)) == pytest.approx(1.0, abs=1e-12)
        assert abs(float(np.dot(axis, plane.normal))) < 1e-12
    assert float(v_axis[2]) < 0.0  # image-v maps to world-down on the wall
