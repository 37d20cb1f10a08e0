from __future__ import annotations

import json
from pathlib import Path

import pytest

from imagined_goals.render import render, trace_scene
from imagined_goals.scene import Scene, load_scene, scene_from_dict

from _reference import saturated_table_scene_dict, small_table_scene_dict

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENES_DIR = REPO_ROOT / "scenes"
FIXTURES_DIR = REPO_ROOT / "fixtures"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture(scope="session")
def table_scene() -> Scene:
    return load_scene(SCENES_DIR / "table.json")


@pytest.fixture(scope="session")
def wall_scene() -> Scene:
    return load_scene(SCENES_DIR / "wall.json")


@pytest.fixture(scope="session")
def table_render(table_scene):
    return render(table_scene)


@pytest.fixture(scope="session")
def wall_render(wall_scene):
    return render(wall_scene)


@pytest.fixture(scope="session")
def table_trace(table_scene):
    return trace_scene(table_scene)


@pytest.fixture(scope="session")
def small_scene() -> Scene:
    return scene_from_dict(small_table_scene_dict())


@pytest.fixture(scope="session")
def small_scene_path(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("scenes") / "small_table.json"
    path.write_text(json.dumps(small_table_scene_dict()), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def saturated_scene_path(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("scenes") / "saturated_table.json"
    path.write_text(json.dumps(saturated_table_scene_dict()), encoding="utf-8")
    return path
