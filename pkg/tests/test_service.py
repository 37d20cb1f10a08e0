from __future__ import annotations

import base64
import json

import pytest
from fastapi.testclient import TestClient

from imagined_goals.detection import HttpDetectionBackend
from imagined_goals.edges import canny
from imagined_goals.generation import (HttpGenerationBackend, default_params,
                                       placement_rules, task_object, task_prompt)
from imagined_goals.geometry import vec3
from imagined_goals.images import RasterImage, encode_pgm, encode_ppm
from imagined_goals.pipeline import PipelineConfig, run_pipeline
from imagined_goals.placement import check_table_placement
from imagined_goals.render import render
from imagined_goals.scene import Task, load_scene
from imagined_goals.service import create_app


@pytest.fixture(scope="module")
def fixture_app(fixtures_dir):
    return TestClient(create_app(str(fixtures_dir / "fixture_scene.json")))


@pytest.fixture(scope="module")
def bare_app():
    return TestClient(create_app())


def test_health(bare_app):
    response = bare_app.get("/v1/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_generate_matches_golden_exchange(fixture_app, fixtures_dir):
    request = json.loads((fixtures_dir / "gen_request.json").read_text())
    expected = json.loads((fixtures_dir / "gen_response.json").read_text())
    response = fixture_app.post("/v1/generate", json=request)
    assert response.status_code == 200
    assert response.json() == expected


def test_detect_matches_golden_exchange(fixture_app, fixtures_dir):
    request = json.loads((fixtures_dir / "detect_request.json").read_text())
    expected = json.loads((fixtures_dir / "detect_response.json").read_text())
    response = fixture_app.post("/v1/detect", json=request)
    assert response.status_code == 200
    assert response.json() == expected


def test_generate_rejects_bad_base64(fixture_app, fixtures_dir):
    request = json.loads((fixtures_dir / "gen_request.json").read_text())
    request["edge_map_pgm_b64"] = "!!!not-base64!!!"
    response = fixture_app.post("/v1/generate", json=request)
    assert response.status_code == 400
    assert response.json()["error"].startswith("edge_map_pgm_b64 is not valid base64")


def test_generate_rejects_missing_prompt(fixture_app, fixtures_dir):
    request = json.loads((fixtures_dir / "gen_request.json").read_text())
    del request["prompt"]
    response = fixture_app.post("/v1/generate", json=request)
    assert response.status_code == 400
    assert "error" in response.json()


def test_generate_rejects_zero_batch(fixture_app, fixtures_dir):
    request = json.loads((fixtures_dir / "gen_request.json").read_text())
    request["batch"] = 0
    response = fixture_app.post("/v1/generate", json=request)
    assert response.status_code == 400
    assert "batch" in response.json()["error"]


def test_endpoints_require_a_scene(bare_app, fixtures_dir):
    gen_request = json.loads((fixtures_dir / "gen_request.json").read_text())
    response = bare_app.post("/v1/generate", json=gen_request)
    assert response.status_code == 503
    assert response.json() == {"error": "no scene configured for generation"}
    det_request = json.loads((fixtures_dir / "detect_request.json").read_text())
    response = bare_app.post("/v1/detect", json=det_request)
    assert response.status_code == 503
    assert response.json() == {"error": "no scene configured for detection"}


def test_generate_saturated_scene_returns_409(saturated_scene_path):
    client = TestClient(create_app(str(saturated_scene_path)))
    scene = load_scene(saturated_scene_path)
    edge_map = canny(render(scene).raster)
    params = default_params()
    response = client.post("/v1/generate", json={
        "request_id": "sat-1",
        "prompt": task_prompt(Task.PLACE_BOWL_ON_TABLE),
        "edge_map_pgm_b64": base64.b64encode(encode_pgm(edge_map)).decode("ascii"),
        "guidance": params.guidance, "steps": params.steps,
        "sampler": params.sampler, "scheduler": params.scheduler,
        "cfg": params.cfg, "batch": 2, "seed": 5,
    })
    assert response.status_code == 409
    assert response.json() == {
        "error": "scene saturated: no valid placement in 10000 samples"}


def test_detect_unknown_image_returns_404(fixture_app, small_scene):
    pixels = render(small_scene).raster.pixels.copy()
    pixels[0, 0, 0] ^= 1  # one-bit change defeats the registry's content keying
    foreign = RasterImage(pixels)
    response = fixture_app.post("/v1/detect", json={
        "image_ppm_b64": base64.b64encode(encode_ppm(foreign)).decode("ascii"),
        "labels": ["bowl"],
    })
    assert response.status_code == 404
    assert response.json() == {"error": "no ground truth available for this image"}


def test_pipeline_endpoint_runs_to_completion(bare_app, small_scene_path, tmp_path):
    response = bare_app.post("/v1/pipeline/run", json={
        "scene": str(small_scene_path), "out": str(tmp_path), "seed": 9})
    assert response.status_code == 200
    body = response.json()
    assert body["exit_code"] == 0
    assert body["success"] is True
    assert (tmp_path / "manifest.json").is_file()


def test_pipeline_endpoint_rejects_bad_config(bare_app, small_scene_path, tmp_path):
    response = bare_app.post("/v1/pipeline/run", json={
        "scene": str(small_scene_path), "out": str(tmp_path), "backend": "magic"})
    assert response.status_code == 400
    assert "backend must be 'mock' or 'http'" in response.json()["error"]


def test_pipeline_over_wire_backends(small_scene_path, tmp_path):
    """Full closed loop with both stages talking HTTP to the service."""
    client = TestClient(create_app(str(small_scene_path)))
    gen = HttpGenerationBackend("http://testserver", client=client)
    det = HttpDetectionBackend("http://testserver", client=client)
    config = PipelineConfig(scene_path=str(small_scene_path), out_dir=str(tmp_path),
                            backend="http", backend_url="http://testserver",
                            detector="http", detector_url="http://testserver", seed=4)
    manifest = run_pipeline(config, gen_backend=gen, det_backend=det)
    assert manifest.exit_code == 0
    assert manifest.success
    scene = load_scene(small_scene_path)
    bowl = task_object(scene)
    goal = manifest.goal["position"]
    foot = vec3(goal[0], goal[1], goal[2] - bowl.shape.height / 2.0)
    assert check_table_placement(scene, foot, placement_rules(scene)).valid
