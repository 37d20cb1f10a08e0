"""Goal-image generation: produce images in which the task is already done.

Two backends implement the same interface. The HTTP backend forwards
requests to an inference service over the `/v1/generate` wire protocol.
The mock backend composites the goal object into the 3D scene and
re-renders; compositing in 3D (not pasting a sprite) keeps the
candidate image geometrically consistent with the base depth image,
which back-projection relies on. The mock records its ground truth in
an oracle registry so oracle-mode detection and accuracy measurements
can answer exactly.
"""

from __future__ import annotations

import base64
import random
from dataclasses import dataclass
from typing import Optional, Protocol

import httpx
import numpy as np

from .detection import Detection, OracleRegistry
from .geometry import IDENTITY_QUAT, Pose, vec3
from .images import EdgeMap, RasterImage, decode_ppm, encode_pgm
from .placement import (PlacementRules, check_table_placement,
                        check_wall_placement)
from .render import Trace, composite_render, render, shade_trace, trace_scene
from .scene import Box, Cylinder, Primitive, Scene, Task, wall_front_plane

MAX_PLACEMENT_SAMPLES = 10_000
IMAGINED_OBJECT_ID = "imagined_goal_object"


class SceneSaturatedError(RuntimeError):
    """No valid goal pose found within the sampling budget."""


@dataclass(frozen=True)
class GenParams:
    guidance: float = 30.0
    steps: int = 20
    sampler: str = "euler"
    scheduler: str = "normal"
    cfg: float = 1.6
    batch: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.batch < 1:
            raise ValueError(f"batch must be >= 1, got {self.batch}")
        if self.guidance < 0:
            raise ValueError(f"guidance must be >= 0, got {self.guidance}")
        if self.cfg < 1.0:
            raise ValueError(f"cfg must be >= 1.0, got {self.cfg}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must fit an unsigned 64-bit integer, got {self.seed}")


def default_params() -> GenParams:
    return GenParams()


def task_prompt(task: Task) -> str:
    if task is Task.PLACE_BOWL_ON_TABLE:
        return "A room with a single bowl and glasses on a table"
    return "A room with a plant, a cupboard and a picture frame hanging on the wall"


@dataclass(frozen=True)
class GenRequest:
    edge_map: EdgeMap
    prompt: str
    params: GenParams
    request_id: str

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")


@dataclass(frozen=True)
class CandidateImage:
    image: RasterImage
    candidate_index: int
    request_id: str
    backend_name: str


class GenerationBackend(Protocol):
    name: str

    def generate(self, request: GenRequest) -> list[RasterImage]:
        """Batch of goal images; length must equal request.params.batch."""
        ...


def task_object(scene: Scene) -> Primitive:
    """The object to be imagined and placed, from the scene's parked copy."""
    label = "bowl" if scene.task is Task.PLACE_BOWL_ON_TABLE else "picture_frame"
    matches = scene.by_label(label)
    if not matches:
        raise ValueError(f"scene has no {label!r} object to place")
    return matches[0]


def placement_rules(scene: Scene) -> PlacementRules:
    obj = task_object(scene)
    if isinstance(obj.shape, Cylinder):
        radius = obj.shape.radius
    else:
        radius = float(max(obj.shape.half_extents[0], obj.shape.half_extents[1]))
    return PlacementRules(bowl_radius_m=radius)


def mock_compose(scene: Scene, seed: int, candidate_index: int,
                 rules: Optional[PlacementRules] = None,
                 base: Optional[tuple[Trace, RasterImage]] = None
                 ) -> tuple[RasterImage, Pose]:
    """Deterministic goal image plus the exact pose that was composited.

    A goal pose is rejection-sampled with a PRNG seeded by
    seed XOR candidate_index; the placement checker is the arbiter of
    validity. The chosen object is inserted into a copy of the scene
    and rendered. Raises SceneSaturatedError when no valid pose turns
    up within the sampling budget.

    Passing the scene's existing trace and raster as `base` reuses them
    so only the inserted object is traced; the image is identical.
    """
    rng = random.Random(seed ^ candidate_index)
    rules = rules or placement_rules(scene)
    obj = task_object(scene)

    if scene.task is Task.PLACE_BOWL_ON_TABLE:
        pose = _sample_bowl_pose(scene, obj, rng, rules)
    else:
        pose = _sample_frame_pose(scene, obj, rng, rules)

    imagined = Primitive(id=IMAGINED_OBJECT_ID, label=obj.label, shape=obj.shape,
                         pose=pose, color=obj.color, renderable=True)
    if base is not None:
        trace, raster = base
        return composite_render(trace, raster, imagined, len(scene.objects)).raster, pose
    composed = scene.with_objects(list(scene.objects) + [imagined])
    return render(composed).raster, pose


def _sample_bowl_pose(scene: Scene, bowl: Primitive, rng: random.Random,
                      rules: PlacementRules) -> Pose:
    table = scene.by_label("table")[0]
    if not isinstance(table.shape, Box) or not isinstance(bowl.shape, Cylinder):
        raise ValueError("table must be a box and the bowl a cylinder")
    half = table.shape.half_extents
    for _ in range(MAX_PLACEMENT_SAMPLES):
        local = vec3(rng.uniform(-half[0], half[0]), rng.uniform(-half[1], half[1]), half[2])
        point = table.pose.transform(local)
        if check_table_placement(scene, point, rules).valid:
            center = point + vec3(0.0, 0.0, bowl.shape.height / 2.0)
            return Pose(position=center, orientation=IDENTITY_QUAT)
    raise SceneSaturatedError(
        f"scene saturated: no valid placement in {MAX_PLACEMENT_SAMPLES} samples")


def _sample_frame_pose(scene: Scene, frame: Primitive, rng: random.Random,
                       rules: PlacementRules) -> Pose:
    wall = scene.by_label("wall")[0]
    if not isinstance(frame.shape, Box) or not isinstance(wall.shape, Box):
        raise ValueError("frame and wall must be boxes")
    plane = wall_front_plane(scene, wall.id)
    half = wall.shape.half_extents
    thin = int(np.argmin(half))
    horizontal = next(i for i in range(3) if i not in (thin, 2))
    extents = (2.0 * float(frame.shape.half_extents[0]), 2.0 * float(frame.shape.half_extents[2]))
    half_thickness = float(frame.shape.half_extents[1])
    shadow = _wardrobe_shadow(scene, wall, plane, horizontal)

    for _ in range(MAX_PLACEMENT_SAMPLES):
        local = np.zeros(3)
        local[horizontal] = rng.uniform(-half[horizontal], half[horizontal])
        local[2] = rng.uniform(-half[2], half[2])
        if shadow is not None and _rect_overlaps(
                (local[horizontal] - extents[0] / 2.0, local[horizontal] + extents[0] / 2.0,
                 local[2] - extents[1] / 2.0, local[2] + extents[1] / 2.0), shadow):
            continue  # rectangle hidden behind the wardrobe from this viewpoint
        on_wall = wall.pose.transform(local)
        # sampled point projected onto the wall's camera-facing plane
        on_plane = on_wall - plane.normal * (float(np.dot(plane.normal, on_wall)) - plane.offset)
        if check_wall_placement(scene, on_plane, extents, rules).valid:
            center = on_plane + plane.normal * half_thickness
            return Pose(position=center, orientation=wall.pose.orientation)
    raise SceneSaturatedError(
        f"scene saturated: no valid placement in {MAX_PLACEMENT_SAMPLES} samples")


_SHADOW_BUFFER_M = 0.01


def _wardrobe_shadow(scene: Scene, wall: Primitive, plane,
                     horizontal: int) -> Optional[tuple[float, float, float, float]]:
    """Wall region the wardrobe hides from the camera.

    The wardrobe sticks out from the wall, so from the camera's
    viewpoint it covers more of the wall than its footprint. Projecting
    its corners from the camera onto the wall plane bounds that region
    in wall-local (horizontal, vertical) coordinates; sampled frames
    must keep clear of it or the detector would see a clipped shape.
    """
    wardrobes = scene.by_label("wardrobe")
    if not wardrobes or not isinstance(wardrobes[0].shape, Box):
        return None
    wardrobe = wardrobes[0]
    he = wardrobe.shape.half_extents
    origin = scene.camera.pose.position
    points = []
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for sz in (-1.0, 1.0):
                corner = wardrobe.pose.transform(vec3(sx * he[0], sy * he[1], sz * he[2]))
                direction = corner - origin
                denominator = float(np.dot(plane.normal, direction))
                if abs(denominator) < 1e-12:
                    continue
                t = (plane.offset - float(np.dot(plane.normal, origin))) / denominator
                if t <= 0.0:
                    continue
                local = wall.pose.inverse_transform(origin + t * direction)
                points.append((float(local[horizontal]), float(local[2])))
    if not points:
        return None
    hs = [p[0] for p in points]
    vs = [p[1] for p in points]
    return min(hs), max(hs), min(vs), max(vs)


def _rect_overlaps(rect: tuple[float, float, float, float],
                   hull: tuple[float, float, float, float]) -> bool:
    return not (rect[1] + _SHADOW_BUFFER_M < hull[0]
                or rect[0] - _SHADOW_BUFFER_M > hull[1]
                or rect[3] + _SHADOW_BUFFER_M < hull[2]
                or rect[2] - _SHADOW_BUFFER_M > hull[3])


class MockGenerationBackend:
    """Deterministic stand-in for the diffusion service.

    Renders the scene with the goal object composited at a sampled
    valid pose. Ground truth (silhouette bbox per candidate, the base
    render, exact poses) is recorded in the registry when one is given.
    """

    name = "mock"

    def __init__(self, scene: Scene, registry: Optional[OracleRegistry] = None):
        self._scene = scene
        self._registry = registry
        self._trace = None
        self._base = None

    def base_render(self):
        if self._base is None:
            self._trace = trace_scene(self._scene)
            self._base = shade_trace(self._scene, self._trace)
        return self._base

    def generate(self, request: GenRequest) -> list[RasterImage]:
        edge = request.edge_map
        camera = self._scene.camera
        if (edge.width, edge.height) != (camera.width, camera.height):
            raise ValueError(
                f"edge map {edge.width}x{edge.height} does not match camera "
                f"{camera.width}x{camera.height} for request {request.request_id}")
        base = self.base_render()
        if self._registry is not None:
            self._registry.register_image(base.raster, [])
        label = task_object(self._scene).label
        images = []
        for index in range(request.params.batch):
            image, pose = mock_compose(self._scene, request.params.seed, index,
                                       base=(self._trace, base.raster))
            images.append(image)
            if self._registry is not None:
                bbox = _diff_bbox(base.raster, image)
                dets = [] if bbox is None else [
                    Detection(label=label, bbox=bbox, confidence=1.0, candidate_index=index)]
                self._registry.register_image(image, dets)
                self._registry.register_pose(request.request_id, index, pose)
        return images


def _diff_bbox(base: RasterImage, candidate: RasterImage
               ) -> Optional[tuple[float, float, float, float]]:
    """Tight bbox (right/bottom exclusive) of pixels differing from base."""
    changed = np.any(base.pixels != candidate.pixels, axis=2)
    rows = np.flatnonzero(changed.any(axis=1))
    cols = np.flatnonzero(changed.any(axis=0))
    if rows.size == 0:
        return None
    return (float(cols[0]), float(rows[0]), float(cols[-1] + 1), float(rows[-1] + 1))


class HttpGenerationBackend:
    """Client for the `/v1/generate` wire protocol."""

    name = "http"

    def __init__(self, base_url: str, timeout_secs: float = 120.0,
                 client: Optional[httpx.Client] = None):
        self._base_url = base_url.rstrip("/")
        self._timeout = timeout_secs
        self._client = client or httpx.Client()

    def generate(self, request: GenRequest) -> list[RasterImage]:
        params = request.params
        body = {
            "request_id": request.request_id,
            "prompt": request.prompt,
            "edge_map_pgm_b64": base64.b64encode(encode_pgm(request.edge_map)).decode("ascii"),
            "guidance": params.guidance,
            "steps": params.steps,
            "sampler": params.sampler,
            "scheduler": params.scheduler,
            "cfg": params.cfg,
            "batch": params.batch,
            "seed": params.seed,
        }
        response = self._client.post(f"{self._base_url}/v1/generate", json=body,
                                     timeout=self._timeout)
        if response.status_code != 200:
            message = _error_text(response)
            if message.startswith("scene saturated"):
                raise SceneSaturatedError(message)  # keep no-candidate semantics over the wire
            raise RuntimeError(
                f"generation backend returned {response.status_code} for request "
                f"{request.request_id}: {message}")
        payload = response.json()
        encoded = payload.get("images_ppm_b64")
        if not isinstance(encoded, list):
            raise RuntimeError(f"malformed response for request {request.request_id}: "
                               "missing images_ppm_b64")
        return [decode_ppm(base64.b64decode(item)) for item in encoded]


def _error_text(response: httpx.Response) -> str:
    try:
        return response.json().get("error", response.text)
    except Exception:
        return response.text


def generate_candidates(request: GenRequest, backend: GenerationBackend) -> list[CandidateImage]:
    """Exactly `batch` candidates with indices 0..batch-1, or an error."""
    images = backend.generate(request)
    batch = request.params.batch
    if len(images) != batch:
        raise RuntimeError(
            f"incomplete batch for request {request.request_id}: expected {batch} images, "
            f"got {len(images)}")
    edge = request.edge_map
    for index, image in enumerate(images):
        if (image.width, image.height) != (edge.width, edge.height):
            raise RuntimeError(
                f"candidate {index} of request {request.request_id} is "
                f"{image.width}x{image.height}, expected {edge.width}x{edge.height}")
    return [CandidateImage(image=image, candidate_index=index,
                           request_id=request.request_id, backend_name=backend.name)
            for index, image in enumerate(images)]
