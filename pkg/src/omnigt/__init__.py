"""Toolkit for turning motion-capture object trajectories into 2-D
ground-truth image annotations for a stationary dual-fisheye camera.

Subpackages cover the camera model (`geometry`), board-based intrinsic
calibration (`calibration`), wand-based pose estimation (`pose`), flash
time sync (`sync`), on-disk formats (`dataio`), the annotation mapping
pipeline (`mapping`), error quantification (`evaluation`), and the CLI /
JSON API surfaces (`cli`, `server`).
"""

from .errors import ToolkitError
from .geometry import (
    CameraIntrinsics,
    CameraPoint,
    CameraPose,
    DualLensRig,
    LensId,
    LensModel,
    PixelPoint,
    SphericalCoord,
    WorldPoint,
    distort_project,
    project,
    select_lens,
    to_spherical,
    world_to_camera,
)
from .lm import LMOptions

__all__ = [
    "CameraIntrinsics",
    "CameraPoint",
    "CameraPose",
    "DualLensRig",
    "LMOptions",
    "LensId",
    "LensModel",
    "PixelPoint",
    "SphericalCoord",
    "ToolkitError",
    "WorldPoint",
    "distort_project",
    "project",
    "select_lens",
    "to_spherical",
    "world_to_camera",
]

__version__ = "0.1.0"
