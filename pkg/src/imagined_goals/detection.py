"""Object detection over candidate images, via pluggable backends.

The oracle backend answers from ground truth recorded when the mock
generator composited the object: it recognizes images by content hash
and returns the exact silhouette bounding box with confidence 1.0.
The HTTP backend speaks the `/v1/detect` wire protocol and maps
model-specific class names to our canonical labels via `labels.json`.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Protocol

import httpx

from .images import RasterImage, encode_ppm

CANONICAL_LABELS = ("bowl", "picture_frame")
DEFAULT_MIN_CONFIDENCE = 0.25


@dataclass(frozen=True)
class Detection:
    label: str
    bbox: tuple[float, float, float, float]  # (x_min, y_min, x_max, y_max), right/bottom exclusive
    confidence: float
    candidate_index: int = 0

    def __post_init__(self):
        x_min, y_min, x_max, y_max = self.bbox
        if not (0 <= x_min < x_max and 0 <= y_min < y_max):
            raise ValueError(f"malformed bbox {self.bbox}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


class DetectionBackend(Protocol):
    name: str

    def detect(self, image: RasterImage, labels: list[str]) -> list[Detection]:
        """Raw detections for the requested canonical labels."""
        ...


def image_key(image: RasterImage) -> str:
    return hashlib.sha256(encode_ppm(image)).hexdigest()


class OracleRegistry:
    """Ground truth retained by the mock generator, keyed by image content.

    Detection entries map an image hash to its known detections (empty
    for the base render). Poses are kept per (request_id, candidate
    index) for accuracy measurements; they are never surfaced through
    the pipeline's own outputs.
    """

    def __init__(self):
        self._detections: dict[str, list[Detection]] = {}
        self._poses: dict[tuple[str, int], object] = {}

    def register_image(self, image: RasterImage, detections: list[Detection]) -> None:
        self._detections[image_key(image)] = list(detections)

    def register_pose(self, request_id: str, candidate_index: int, pose) -> None:
        self._poses[(request_id, candidate_index)] = pose

    def lookup(self, image: RasterImage) -> Optional[list[Detection]]:
        return self._detections.get(image_key(image))

    def ground_truth_pose(self, request_id: str, candidate_index: int):
        return self._poses[(request_id, candidate_index)]


class OracleDetectionBackend:
    """Answers only for images the mock generator produced or was based on."""

    name = "oracle"

    def __init__(self, registry: OracleRegistry):
        self._registry = registry

    def detect(self, image: RasterImage, labels: list[str]) -> list[Detection]:
        known = self._registry.lookup(image)
        if known is None:
            raise ValueError("no ground truth available for this image")
        return [det for det in known if det.label in labels]


def load_label_map() -> dict[str, list[str]]:
    """Canonical label -> model class aliases, from the bundled labels.json."""
    text = resources.files("imagined_goals").joinpath("labels.json").read_text("utf-8")
    return json.loads(text)


class HttpDetectionBackend:
    """Client for the `/v1/detect` wire protocol."""

    name = "http"

    def __init__(self, base_url: str, timeout_secs: float = 120.0,
                 client: Optional[httpx.Client] = None,
                 label_map: Optional[dict[str, list[str]]] = None):
        self._base_url = base_url.rstrip("/")
        self._timeout = timeout_secs
        self._client = client or httpx.Client()
        self._label_map = label_map if label_map is not None else load_label_map()

    def detect(self, image: RasterImage, labels: list[str]) -> list[Detection]:
        aliases: list[str] = []
        to_canonical: dict[str, str] = {}
        for canonical in labels:
            for alias in self._label_map.get(canonical, [canonical]):
                aliases.append(alias)
                to_canonical[alias] = canonical
        body = {
            "image_ppm_b64": base64.b64encode(encode_ppm(image)).decode("ascii"),
            "labels": aliases,
        }
        response = self._client.post(f"{self._base_url}/v1/detect", json=body, timeout=self._timeout)
        if response.status_code != 200:
            raise RuntimeError(f"detect backend returned {response.status_code}: {_error_text(response)}")
        payload = response.json()
        detections = []
        for item in payload.get("detections", []):
            canonical = to_canonical.get(item["label"])
            if canonical is None:
                continue  # unknown model class: dropped, not an error
            x0, y0, x1, y1 = item["bbox"]
            x0, y0 = max(0.0, float(x0)), max(0.0, float(y0))
            x1, y1 = min(float(x1), float(image.width)), min(float(y1), float(image.height))
            if x1 <= x0 or y1 <= y0:
                continue
            detections.append(Detection(label=canonical, bbox=(x0, y0, x1, y1),
                                         confidence=float(item["confidence"])))
        return detections


def _error_text(response: httpx.Response) -> str:
    try:
        return response.json().get("error", response.text)
    except Exception:
        return response.text


def detect(image, target_label: str, backend: DetectionBackend) -> list[Detection]:
    """Detections of `target_label` in a candidate image, best first.

    Sorted by confidence descending, ties by (y_min, x_min) ascending.
    Bounding boxes are validated against the image dimensions.
    """
    if target_label not in CANONICAL_LABELS:
        raise ValueError(f"unsupported target label {target_label!r}, expected one of {CANONICAL_LABELS}")
    raster = image.image
    found = backend.detect(raster, [target_label])
    results = []
    for det in found:
        if det.label != target_label:
            continue
        x_min, y_min, x_max, y_max = det.bbox
        if x_max > raster.width or y_max > raster.height:
            raise ValueError(f"bbox {det.bbox} exceeds image dimensions {raster.width}x{raster.height}")
        results.append(Detection(label=det.label, bbox=det.bbox, confidence=det.confidence,
                                 candidate_index=image.candidate_index))
    results.sort(key=lambda d: (-d.confidence, d.bbox[1], d.bbox[0]))
    return results


def filter_detections(dets: list[Detection], min_confidence: float) -> list[Detection]:
    """Subsequence with confidence >= min_confidence, order preserved."""
    if not 0.0 <= min_confidence <= 1.0:
        raise ValueError(f"min_confidence must be in [0, 1], got {min_confidence}")
    return [det for det in dets if det.confidence >= min_confidence]
