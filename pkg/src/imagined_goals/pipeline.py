"""End-to-end run: render, imagine, detect, localize, check, place.

One run works through a fixed stage order and leaves its artifacts in
the output directory as it goes, so a failed run still shows everything
it produced. The manifest is deterministic for a given scene, seed and
backend pair except for the run id and stage timings.

Exit semantics: 0 placed and verified, 2 finished but no candidate was
both detected and judged valid, 1 a stage failed outright.
"""

from __future__ import annotations

import json
import time
import uuid
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .backprojection import estimate_table_pose, estimate_wall_pose
from .detection import (DEFAULT_MIN_CONFIDENCE, Detection, DetectionBackend,
                        HttpDetectionBackend, OracleDetectionBackend, OracleRegistry,
                        detect, filter_detections)
from .edges import CannyParams, canny
from .executor import execute, plan_pick_and_place, required_lift_height
from .generation import (GenerationBackend, GenRequest, HttpGenerationBackend,
                         MockGenerationBackend, SceneSaturatedError, default_params,
                         generate_candidates, placement_rules, task_object, task_prompt)
from .geometry import IDENTITY_QUAT, Pose, vec3
from .images import draw_bbox, write_depth, write_pgm, write_ppm
from .placement import check_table_placement, check_wall_placement, choose_candidate
from .render import render
from .scene import Box, Scene, Task, load_scene, validate_scene, wall_front_plane

SNAPSHOT_PHASES = ("a", "b", "c", "d")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_CANDIDATE = 2


@dataclass
class PipelineConfig:
    scene_path: str
    out_dir: str
    backend: str = "mock"
    backend_url: Optional[str] = None
    detector: str = "mock"
    detector_url: Optional[str] = None
    seed: int = 0
    batch: int = 4
    max_rounds: int = 1
    timeout_secs: float = 120.0

    def __post_init__(self):
        if self.backend not in ("mock", "http"):
            raise ValueError(f"backend must be 'mock' or 'http', got {self.backend!r}")
        if self.detector not in ("mock", "http"):
            raise ValueError(f"detector must be 'mock' or 'http', got {self.detector!r}")
        if self.backend == "http" and not self.backend_url:
            raise ValueError("http backend requires backend_url")
        if self.detector == "http" and not self.detector_url:
            raise ValueError("http detector requires detector_url")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")


@dataclass
class RunManifest:
    run_id: str
    scene_path: str
    task: str = ""
    prompt: str = ""
    params: dict = field(default_factory=dict)
    max_rounds: int = 0
    candidates: list = field(default_factory=list)
    winner: Optional[dict] = None
    goal: Optional[dict] = None
    trajectory: Optional[list] = None
    execution: Optional[dict] = None
    success: bool = False
    exit_code: int = EXIT_ERROR
    errors: list = field(default_factory=list)
    timings_ms: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _json_vec(v) -> list[float]:
    return [float(x) for x in np.asarray(v, dtype=np.float64)]


def _verdict_dict(verdict) -> dict:
    return {"valid": verdict.valid, "violations": list(verdict.violations),
            "score": float(verdict.score)}


def _detection_dict(det: Detection) -> dict:
    return {"label": det.label, "bbox": [int(b) for b in det.bbox],
            "confidence": float(det.confidence)}


def make_backends(config: PipelineConfig, scene: Scene
                  ) -> tuple[GenerationBackend, DetectionBackend]:
    """Backend pair for a config; mock generator and detector share ground truth."""
    registry = OracleRegistry()
    if config.backend == "mock":
        gen: GenerationBackend = MockGenerationBackend(scene, registry)
    else:
        gen = HttpGenerationBackend(config.backend_url, timeout_secs=config.timeout_secs)
    if config.detector == "mock":
        det: DetectionBackend = OracleDetectionBackend(registry)
    else:
        det = HttpDetectionBackend(config.detector_url, timeout_secs=config.timeout_secs)
    return gen, det


def run_pipeline(config: PipelineConfig,
                 gen_backend: Optional[GenerationBackend] = None,
                 det_backend: Optional[DetectionBackend] = None) -> RunManifest:
    """Run the whole loop for one scene; returns the manifest it also writes.

    Backends may be injected; otherwise they are built from the config.
    """
    run_id = uuid.uuid4().hex[:12]
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(run_id=run_id, scene_path=str(config.scene_path),
                           max_rounds=config.max_rounds)
    timings = manifest.timings_ms

    @contextmanager
    def stage(name: str):
        begin = time.perf_counter()
        try:
            yield
        finally:
            timings[name] = round((time.perf_counter() - begin) * 1000.0, 3)

    try:
        _run_stages(config, manifest, out, stage, gen_backend, det_backend)
    except Exception as exc:  # stage already recorded; anything else is a bug surfaced honestly
        if not manifest.errors:
            manifest.errors.append({"stage": "pipeline", "error": str(exc)})
    finally:
        if manifest.errors:
            manifest.exit_code = EXIT_ERROR
        elif manifest.winner is None:
            manifest.exit_code = EXIT_NO_CANDIDATE
        else:
            manifest.exit_code = EXIT_OK if manifest.success else EXIT_ERROR
        (out / "manifest.json").write_text(
            json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="ascii")
    return manifest


class _StageFailure(Exception):
    """Raised after an error has been recorded to unwind the run."""


def _run_stages(config: PipelineConfig, manifest: RunManifest, out: Path, stage,
                gen_backend: Optional[GenerationBackend],
                det_backend: Optional[DetectionBackend]) -> None:
    def fail(stage_name: str, exc: Exception):
        manifest.errors.append({"stage": stage_name, "error": str(exc)})
        raise _StageFailure() from exc

    try:
        with stage("load_scene"):
            scene = load_scene(config.scene_path)
            problems = validate_scene(scene)
            if problems:
                raise ValueError("invalid scene: " + "; ".join(problems))
    except _StageFailure:
        raise
    except Exception as exc:
        fail("load_scene", exc)

    manifest.task = scene.task.value
    prompt = task_prompt(scene.task)
    manifest.prompt = prompt

    try:
        with stage("render"):
            base = render(scene)
            write_ppm(out / "render.ppm", base.raster)
            write_depth(out / "depth.depth", base.depth)
    except Exception as exc:
        fail("render", exc)

    try:
        with stage("edges"):
            edge_map = canny(base.raster, CannyParams())
            write_pgm(out / "edges.pgm", edge_map)
    except Exception as exc:
        fail("edges", exc)

    if gen_backend is None or det_backend is None:
        built_gen, built_det = make_backends(config, scene)
        gen_backend = gen_backend or built_gen
        det_backend = det_backend or built_det

    base_params = replace(default_params(), seed=config.seed, batch=config.batch)
    manifest.params = asdict(base_params)
    target_label = task_object(scene).label
    rules = placement_rules(scene)

    winner_entry = None
    for round_index in range(config.max_rounds):
        params = replace(base_params, seed=config.seed + round_index)
        request_id = manifest.run_id if round_index == 0 \
            else f"{manifest.run_id}-r{round_index}"
        request = GenRequest(edge_map=edge_map, prompt=prompt, params=params,
                             request_id=request_id)

        try:
            with stage(f"generate_round{round_index}"):
                candidates = generate_candidates(request, gen_backend)
        except SceneSaturatedError as exc:
            for i in range(params.batch):
                manifest.candidates.append({
                    "round": round_index, "candidate_index": i, "seed": params.seed,
                    "image": None, "detection": None, "estimate": None,
                    "verdict": {"valid": False, "violations": [str(exc)], "score": 0.0},
                })
            continue
        except Exception as exc:
            fail("generate", exc)

        scored = []
        for cand in candidates:
            artifact = round_index * params.batch + cand.candidate_index
            record = {"round": round_index, "candidate_index": cand.candidate_index,
                      "seed": params.seed, "image": f"candidate_{artifact}.ppm",
                      "detection": None, "estimate": None, "verdict": None}
            manifest.candidates.append(record)
            write_ppm(out / f"candidate_{artifact}.ppm", cand.image)

            try:
                with stage(f"detect_round{round_index}_c{cand.candidate_index}"):
                    dets = filter_detections(
                        detect(cand, target_label, det_backend), DEFAULT_MIN_CONFIDENCE)
            except Exception as exc:
                fail("detect", exc)
            if not dets:
                continue
            best = dets[0]
            record["detection"] = _detection_dict(best)
            overlay = draw_bbox(cand.image, best.bbox)
            write_ppm(out / f"candidate_{artifact}_overlay.ppm", overlay)

            try:
                if scene.task is Task.PLACE_BOWL_ON_TABLE:
                    point = estimate_table_pose(scene.camera, base.depth, best,
                                                footprint_radius_m=rules.bowl_radius_m)
                    verdict = check_table_placement(scene, point, rules)
                    estimate = (point, None)
                    record["estimate"] = {"task_object": target_label,
                                          "goal_position": _json_vec(point)}
                else:
                    center, extents = estimate_wall_pose(best, scene.wall_refs, scene)
                    verdict = check_wall_placement(scene, center, extents, rules)
                    estimate = (center, extents)
                    record["estimate"] = {"task_object": target_label,
                                          "goal_position": _json_vec(center),
                                          "goal_extents_m": [float(extents[0]),
                                                             float(extents[1])]}
            except ValueError as exc:
                record["verdict"] = {"valid": False, "violations": [str(exc)], "score": 0.0}
                continue

            record["verdict"] = _verdict_dict(verdict)
            scored.append((best, estimate, verdict))

        pick = choose_candidate(scored)
        if pick is not None:
            winner_entry = (round_index, pick)
            break

    if winner_entry is None:
        return  # exit code 2 derived from the missing winner

    round_index, (best, estimate, verdict) = winner_entry
    manifest.winner = {"round": round_index, "candidate_index": best.candidate_index,
                       "confidence": float(best.confidence), "score": float(verdict.score)}

    try:
        with stage("goal"):
            goal, approach_normal = _goal_pose(scene, estimate)
            manifest.goal = {"position": _json_vec(goal.position),
                             "orientation": _json_vec(goal.orientation)}
    except Exception as exc:
        fail("goal", exc)

    obj = task_object(scene)
    try:
        with stage("plan"):
            lift = required_lift_height(scene, obj.id)
            traj = plan_pick_and_place(scene, obj.id, goal, lift, approach_normal)
            manifest.trajectory = [
                {"time": wp.time, "position": _json_vec(wp.pose.position),
                 "orientation": _json_vec(wp.pose.orientation), "event": wp.event}
                for wp in traj.waypoints]
    except Exception as exc:
        fail("plan", exc)

    try:
        with stage("execute"):
            report = execute(scene, traj, SNAPSHOT_PHASES)
            for phase, snap in report.snapshots:
                write_ppm(out / f"step_{phase}.ppm", snap)
            manifest.execution = {
                "success": report.success,
                "max_clearance_violation_m": float(report.max_clearance_violation_m)}
            if not report.success:
                raise RuntimeError(
                    "execution failed: clearance violation "
                    f"{report.max_clearance_violation_m} m")
    except Exception as exc:
        fail("execute", exc)

    manifest.success = True


def _goal_pose(scene: Scene, estimate) -> tuple[Pose, Optional[np.ndarray]]:
    """Final object pose from an estimate, with contact heights snapped.

    The estimator gives the in-plane location; the support height comes
    from the scene so intended contacts are exact instead of inheriting
    depth-sampling noise.
    """
    obj = task_object(scene)
    if scene.task is Task.PLACE_BOWL_ON_TABLE:
        point, _ = estimate
        table = scene.by_label("table")[0]
        top = float(table.pose.position[2]) + float(table.shape.half_extents[2])
        center = vec3(float(point[0]), float(point[1]), top + obj.shape.height / 2.0)
        return Pose(position=center, orientation=IDENTITY_QUAT), None

    center_est, _ = estimate
    wall = scene.by_label("wall")[0]
    plane = wall_front_plane(scene, wall.id)
    center_est = np.asarray(center_est, dtype=np.float64)
    on_plane = center_est - plane.normal * (float(np.dot(plane.normal, center_est))
                                            - plane.offset)
    if not isinstance(wall.shape, Box):
        raise ValueError("hanging goals need a box wall")
    half_thickness = float(np.min(obj.shape.half_extents))
    center = on_plane + plane.normal * half_thickness
    return Pose(position=center, orientation=wall.pose.orientation), plane.normal
