"""Goal-imagination pipeline for synthetic tabletop and wall scenes.

A scene is rendered, reduced to an edge map, and handed to an
edge-conditioned image generator that imagines the scene with the goal
object added. A detector finds the object in each candidate image, the
detection is back-projected to a 3D goal, checked for validity, and a
pick-and-place trajectory puts the object there.
"""

from .backprojection import (estimate_table_pose, estimate_wall_pose, pixel_ray,
                             pixel_to_world, sample_depth)
from .detection import (CANONICAL_LABELS, Detection, DetectionBackend,
                        HttpDetectionBackend, OracleDetectionBackend, OracleRegistry,
                        detect, filter_detections)
from .edges import CannyParams, canny
from .executor import (ExecutionReport, Trajectory, Waypoint, execute,
                       plan_pick_and_place, required_lift_height, separation)
from .generation import (CandidateImage, GenerationBackend, GenParams, GenRequest,
                         HttpGenerationBackend, MockGenerationBackend,
                         SceneSaturatedError, default_params, generate_candidates,
                         mock_compose, task_prompt)
from .geometry import IDENTITY_QUAT, Pose, look_at_quat, quat_from_yaw
from .images import (DepthImage, EdgeMap, RasterImage, decode_depth, decode_pgm,
                     decode_ppm, encode_depth, encode_pgm, encode_ppm)
from .pipeline import (EXIT_ERROR, EXIT_NO_CANDIDATE, EXIT_OK, PipelineConfig,
                       RunManifest, run_pipeline)
from .placement import (PlacementRules, Verdict, check_table_placement,
                        check_wall_placement, choose_candidate)
from .render import RenderResult, project_point, ray_primitive_intersect, render
from .scene import (Box, CameraModel, Cylinder, Plane, Primitive, Scene, Task,
                    WallRefs, camera_intrinsics, load_scene, scene_from_dict,
                    validate_scene)
from .service import create_app

__version__ = "0.1.0"

__all__ = [
    "Box", "CANONICAL_LABELS", "CameraModel", "CandidateImage", "CannyParams",
    "Cylinder", "DepthImage", "Detection", "DetectionBackend", "EdgeMap",
    "EXIT_ERROR", "EXIT_NO_CANDIDATE", "EXIT_OK", "ExecutionReport", "GenParams",
    "GenRequest", "GenerationBackend", "HttpDetectionBackend", "HttpGenerationBackend",
    "IDENTITY_QUAT", "MockGenerationBackend", "OracleDetectionBackend", "OracleRegistry",
    "PipelineConfig", "PlacementRules", "Plane", "Pose", "Primitive", "RasterImage",
    "RenderResult", "RunManifest", "SceneSaturatedError", "Scene", "Task", "Trajectory",
    "Verdict", "WallRefs", "Waypoint", "camera_intrinsics", "canny",
    "check_table_placement", "check_wall_placement", "choose_candidate", "create_app",
    "decode_depth", "decode_pgm", "decode_ppm", "default_params", "detect",
    "encode_depth", "encode_pgm", "encode_ppm", "estimate_table_pose",
    "estimate_wall_pose", "execute", "filter_detections", "generate_candidates",
    "load_scene", "look_at_quat", "mock_compose", "pixel_ray", "pixel_to_world",
    "plan_pick_and_place", "project_point", "quat_from_yaw", "ray_primitive_intersect",
    "render", "required_lift_height", "run_pipeline", "sample_depth", "scene_from_dict",
    "separation", "task_prompt", "validate_scene",
]
