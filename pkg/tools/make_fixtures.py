#!/usr/bin/env python3
"""Regenerate the committed wire-protocol fixtures and golden files.

Run from the repository root:

    python3 tools/make_fixtures.py

Outputs are deterministic, so a rerun after an intentional behavior
change is reviewable as an ordinary diff. Two suites consume them:

* this package's tests replay the request fixtures against the service
  and require byte-for-byte equal responses;
* the adapter package's tests stub its upstream with the upstream_*
  payloads and require the translated wire responses to match.
"""

from __future__ import annotations

import base64
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from fastapi.testclient import TestClient

from imagined_goals.edges import canny
from imagined_goals.generation import default_params, task_prompt
from imagined_goals.images import decode_ppm, encode_pgm, write_pgm
from imagined_goals.render import render
from imagined_goals.scene import Task, load_scene, scene_from_dict
from imagined_goals.service import create_app

from _reference import small_table_scene_dict

FIXTURES = ROOT / "fixtures"
GOLDEN = ROOT / "tests" / "golden"


def _dump(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {path.relative_to(ROOT)}")


def main() -> int:
    FIXTURES.mkdir(exist_ok=True)
    GOLDEN.mkdir(exist_ok=True)

    scene_dict = small_table_scene_dict()
    scene_path = FIXTURES / "fixture_scene.json"
    _dump(scene_path, scene_dict)

    scene = scene_from_dict(scene_dict)
    edges = canny(render(scene).raster)
    params = default_params()
    gen_request = {
        "request_id": "fixture-0001",
        "prompt": task_prompt(Task.PLACE_BOWL_ON_TABLE),
        "edge_map_pgm_b64": base64.b64encode(encode_pgm(edges)).decode("ascii"),
        "guidance": params.guidance,
        "steps": params.steps,
        "sampler": params.sampler,
        "scheduler": params.scheduler,
        "cfg": params.cfg,
        "batch": 2,
        "seed": 11,
    }
    _dump(FIXTURES / "gen_request.json", gen_request)

    client = TestClient(create_app(str(scene_path)))
    gen_response = client.post("/v1/generate", json=gen_request)
    gen_response.raise_for_status()
    _dump(FIXTURES / "gen_response.json", gen_response.json())

    # detect request for candidate 0, with the label list already expanded
    # to model aliases the way the HTTP detection client sends it
    candidate_b64 = gen_response.json()["images_ppm_b64"][0]
    detect_request = {
        "image_ppm_b64": candidate_b64,
        "labels": ["bowl", "Bowl", "Mixing bowl"],
    }
    _dump(FIXTURES / "detect_request.json", detect_request)

    detect_response = client.post("/v1/detect", json=detect_request)
    detect_response.raise_for_status()
    _dump(FIXTURES / "detect_response.json", detect_response.json())

    # upstream-shaped payloads for the adapter package: raw RGB8 instead
    # of PPM, model class names instead of canonical labels
    images = [decode_ppm(base64.b64decode(item))
              for item in gen_response.json()["images_ppm_b64"]]
    upstream_gen = {
        "job_id": gen_request["request_id"],
        "images": [{
            "width": image.width,
            "height": image.height,
            "rgb8_b64": base64.b64encode(image.pixels.tobytes()).decode("ascii"),
        } for image in images],
    }
    _dump(FIXTURES / "upstream_gen_response.json", upstream_gen)

    bowl_box = detect_response.json()["detections"][0]["bbox"]
    upstream_detect = {
        "objects": [
            {"class_name": "Bowl", "box": bowl_box, "score": 0.97},
            {"class_name": "Vase", "box": [1.0, 1.0, 5.0, 5.0], "score": 0.5},
        ],
    }
    _dump(FIXTURES / "upstream_detect_response.json", upstream_detect)

    # what a faithful adapter must answer for detect_request given the
    # upstream payload above: requested labels kept verbatim, the
    # unrequested class dropped
    adapter_detect = {
        "detections": [
            {"label": "Bowl", "bbox": [float(b) for b in bowl_box], "confidence": 0.97},
        ],
    }
    _dump(FIXTURES / "adapter_detect_response.json", adapter_detect)

    table = load_scene(ROOT / "scenes" / "table.json")
    write_pgm(GOLDEN / "table_edges.pgm", canny(render(table).raster))
    print(f"wrote {(GOLDEN / 'table_edges.pgm').relative_to(ROOT)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
