"""HTTP service exposing the pipeline and the backend wire protocols.

The service plays two roles. `/v1/pipeline/run` runs the full loop
in-process and returns the manifest. When started with a scene, it also
hosts `/v1/generate` and `/v1/detect` as a stand-in model server
backed by the deterministic compositor and its ground-truth registry,
so the HTTP backend/detector paths can be exercised against it.

Errors use the wire shape {"error": "..."} with a 4xx/5xx status.
"""

from __future__ import annotations

import argparse
import base64
import binascii
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .detection import OracleDetectionBackend, OracleRegistry
from .generation import (GenParams, GenRequest, MockGenerationBackend,
                         SceneSaturatedError, generate_candidates)
from .images import decode_pgm, decode_ppm, encode_ppm
from .pipeline import PipelineConfig, run_pipeline
from .scene import load_scene


class GenerateBody(BaseModel):
    request_id: str
    prompt: str
    edge_map_pgm_b64: str
    guidance: float
    steps: int
    sampler: str
    scheduler: str
    cfg: float
    batch: int
    seed: int


class DetectBody(BaseModel):
    image_ppm_b64: str
    labels: list[str]


class PipelineBody(BaseModel):
    scene: str
    out: str
    backend: str = "mock"
    backend_url: Optional[str] = None
    detector: str = "mock"
    detector_url: Optional[str] = None
    seed: int = 0
    batch: int = 4
    max_rounds: int = 1
    timeout_secs: float = 120.0


class _ServiceError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def _decode_b64(field: str, value: str) -> bytes:
    try:
        return base64.b64decode(value, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise _ServiceError(400, f"{field} is not valid base64: {exc}") from exc


def create_app(scene_path: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="imagined-goals")

    backend = None
    detector = None
    if scene_path is not None:
        scene = load_scene(scene_path)
        registry = OracleRegistry()
        backend = MockGenerationBackend(scene, registry)
        detector = OracleDetectionBackend(registry)

    @app.exception_handler(_ServiceError)
    async def service_error(_request: Request, exc: _ServiceError):
        return JSONResponse(status_code=exc.status, content={"error": exc.message})

    @app.exception_handler(RequestValidationError)
    async def validation_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/v1/health")
    async def health():
        return {"status": "ok"}

    @app.post("/v1/generate")
    async def generate(body: GenerateBody):
        if backend is None:
            raise _ServiceError(503, "no scene configured for generation")
        try:
            params = GenParams(guidance=body.guidance, steps=body.steps,
                               sampler=body.sampler, scheduler=body.scheduler,
                               cfg=body.cfg, batch=body.batch, seed=body.seed)
            edge_map = decode_pgm(_decode_b64("edge_map_pgm_b64", body.edge_map_pgm_b64))
            request = GenRequest(edge_map=edge_map, prompt=body.prompt,
                                 params=params, request_id=body.request_id)
        except _ServiceError:
            raise
        except ValueError as exc:
            raise _ServiceError(400, str(exc)) from exc
        try:
            candidates = generate_candidates(request, backend)
        except SceneSaturatedError as exc:
            raise _ServiceError(409, str(exc)) from exc
        except ValueError as exc:
            raise _ServiceError(400, str(exc)) from exc
        return {
            "request_id": body.request_id,
            "images_ppm_b64": [base64.b64encode(encode_ppm(c.image)).decode("ascii")
                               for c in candidates],
        }

    @app.post("/v1/detect")
    async def detect_endpoint(body: DetectBody):
        if detector is None:
            raise _ServiceError(503, "no scene configured for detection")
        try:
            image = decode_ppm(_decode_b64("image_ppm_b64", body.image_ppm_b64))
        except _ServiceError:
            raise
        except ValueError as exc:
            raise _ServiceError(400, str(exc)) from exc
        try:
            detections = detector.detect(image, body.labels)
        except ValueError as exc:
            raise _ServiceError(404, str(exc)) from exc
        return {"detections": [
            {"label": det.label, "bbox": [float(b) for b in det.bbox],
             "confidence": det.confidence} for det in detections]}

    @app.post("/v1/pipeline/run")
    async def pipeline_run(body: PipelineBody):
        try:
            config = PipelineConfig(
                scene_path=body.scene, out_dir=body.out,
                backend=body.backend, backend_url=body.backend_url,
                detector=body.detector, detector_url=body.detector_url,
                seed=body.seed, batch=body.batch, max_rounds=body.max_rounds,
                timeout_secs=body.timeout_secs)
        except ValueError as exc:
            raise _ServiceError(400, str(exc)) from exc
        manifest = run_pipeline(config)
        return manifest.to_dict()

    return app


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="imagined-goals-serve")
    parser.add_argument("--scene", default=None,
                        help="scene JSON backing the /v1/generate and /v1/detect endpoints")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8080)
    args = parser.parse_args(argv)

    import uvicorn
    uvicorn.run(create_app(args.scene), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
