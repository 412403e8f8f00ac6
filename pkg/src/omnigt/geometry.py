"""Camera-model mathematics for a stationary dual-fisheye rig.

Coordinate conventions
----------------------
* World points are millimetres in the motion-capture coordinate system.
* A lens camera frame is right-handed with +z in front of the lens; a pose
  (R, t) maps world -> camera as ``c = R @ w + t``.
* Lens-local pixel coordinates live in a 960x1080 sub-image; full-frame
  coordinates span the 1920x1080 frame, with the right-hand lens offset by
  the sub-image width.
* Projection follows the rational distortion model: normalized coordinates
  are scaled by a ratio of two cubic polynomials in r^2 plus tangential
  terms, then mapped through the focal lengths and principal point.

Projection is deliberately unclipped: points may map outside the sensor and
callers decide whether such pixels are usable.  Points with z <= 0 in the
lens frame are an error, not a projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Tuple

import numpy as np

from .errors import BehindCamera, DegenerateDenominator, ZeroVector

DENOMINATOR_EPS = 1e-12

_POSE_ORTHO_TOL = 1e-10


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} must have finite components")


@dataclass(frozen=True)
class WorldPoint:
    """Position in mocap world coordinates, millimetres."""

    X: float
    Y: float
    Z: float

    def __post_init__(self):
        _require_finite("WorldPoint", self.X, self.Y, self.Z)

    def as_array(self) -> np.ndarray:
        return np.array([self.X, self.Y, self.Z])


@dataclass(frozen=True)
class CameraPoint:
    """Position in a lens camera frame, millimetres."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        _require_finite("CameraPoint", self.x, self.y, self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class SphericalCoord:
    """Spherical form of a camera-frame point: radius, zenith, azimuth."""

    r: float
    theta: float
    phi: float

    def __post_init__(self):
        if self.r < 0.0:
            raise ValueError("radius must be >= 0")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError("zenith angle must lie in [0, pi]")


@dataclass(frozen=True)
class PixelPoint:
    """Continuous pixel coordinates; may lie outside the image bounds."""

    u: float
    v: float

    def __post_init__(self):
        _require_finite("PixelPoint", self.u, self.v)

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v])


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters plus the eight rational-model coefficients.

    The radial factor is (1 + k1 r^2 + k2 r^4 + k3 r^6) /
    (1 + k4 r^2 + k5 r^4 + k6 r^6); p1, p2 are the tangential coefficients.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0
    k4: float = 0.0
    k5: float = 0.0
    k6: float = 0.0
    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self):
        _require_finite(
            "CameraIntrinsics",
            self.fx, self.fy, self.cx, self.cy,
            self.k1, self.k2, self.k3, self.k4, self.k5, self.k6,
            self.p1, self.p2,
        )
        if self.fx <= 0.0 or self.fy <= 0.0:
            raise ValueError("focal lengths must be positive")

    def coefficients(self) -> np.ndarray:
        """Distortion coefficients in (k1..k6, p1, p2) order."""
        return np.array([self.k1, self.k2, self.k3, self.k4, self.k5,
                         self.k6, self.p1, self.p2])

    def matrix(self) -> np.ndarray:
        """3x3 camera matrix."""
        return np.array([
            [self.fx, 0.0, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ])


@dataclass(frozen=True, eq=False)
class CameraPose:
    """Rigid map from world into a lens camera frame: c = R @ w + t (mm)."""

    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        t = np.array(self.t, dtype=float).reshape(3)
        if R.shape != (3, 3):
            raise ValueError("R must be 3x3")
        if not (np.isfinite(R).all() and np.isfinite(t).all()):
            raise ValueError("pose entries must be finite")
        if np.abs(R.T @ R - np.eye(3)).max() > _POSE_ORTHO_TOL:
            raise ValueError("R is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > _POSE_ORTHO_TOL:
            raise ValueError("R must have determinant +1")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    @staticmethod
    def identity() -> "CameraPose":
        return CameraPose(np.eye(3), np.zeros(3))


class LensId(Enum):
    """The two lenses: Backside fills full-frame u in [0, 960), Buttonside
    u in [960, 1920)."""

    BACKSIDE = "Backside"
    BUTTONSIDE = "Buttonside"

    @staticmethod
    def from_string(name: str) -> "LensId":
        for lens in LensId:
            if lens.value == name:
                return lens
        raise ValueError(f"unknown lens {name!r}")


@dataclass(frozen=True)
class LensModel:
    """Calibration of one lens: intrinsics plus its world pose."""

    intrinsics: CameraIntrinsics
    pose: CameraPose


@dataclass(frozen=True)
class DualLensRig:
    """Both lens models plus the frame geometry they share."""

    lenses: Mapping[LensId, LensModel]
    frame_width: int = 1920
    frame_height: int = 1080
    sub_width: int = 960

    def __post_init__(self):
        object.__setattr__(self, "lenses", dict(self.lenses))
        if set(self.lenses) != set(LensId):
            raise ValueError("rig requires exactly one model per lens")

    def lens_offset(self, lens: LensId) -> int:
        """Full-frame u offset of a lens's sub-image."""
        return self.sub_width if lens is LensId.BUTTONSIDE else 0


def world_to_camera(pose: CameraPose, p: WorldPoint) -> CameraPoint:
    """Apply the rigid world -> lens-frame transform."""
    c = pose.R @ p.as_array() + pose.t
    return CameraPoint(float(c[0]), float(c[1]), float(c[2]))


def transform_points(pose: CameraPose, pts: np.ndarray) -> np.ndarray:
    """Vectorized world -> camera transform for an (n, 3) array."""
    return np.asarray(pts, dtype=float) @ pose.R.T + pose.t


def to_spherical(c: CameraPoint) -> SphericalCoord:
    """Radius, zenith angle from +z, and quadrant-aware azimuth."""
    r = math.sqrt(c.x * c.x + c.y * c.y + c.z * c.z)
    if r == 0.0:
        raise ZeroVector("cannot convert the origin to spherical coordinates")
    theta = math.acos(max(-1.0, min(1.0, c.z / r)))
    phi = math.atan2(c.y, c.x)
    return SphericalCoord(r, theta, phi)


def radial_factor(intr: CameraIntrinsics, r2: float) -> float:
    """Rational radial scale N(r^2)/D(r^2) at squared radius r2."""
    num = 1.0 + r2 * (intr.k1 + r2 * (intr.k2 + r2 * intr.k3))
    den = 1.0 + r2 * (intr.k4 + r2 * (intr.k5 + r2 * intr.k6))
    if abs(den) < DENOMINATOR_EPS:
        raise DegenerateDenominator(f"rational denominator vanishes at r^2={r2}")
    return num / den


def distort_normalized(intr: CameraIntrinsics, xy: np.ndarray) -> np.ndarray:
    """Apply radial+tangential distortion to normalized (n, 2) coordinates.

    No validity checks; rows where the denominator vanishes come back
    non-finite.  The scalar entry point is :func:`distort_project`.
    """
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    x, y = xy[:, 0], xy[:, 1]
    r2 = x * x + y * y
    num = 1.0 + r2 * (intr.k1 + r2 * (intr.k2 + r2 * intr.k3))
    den = 1.0 + r2 * (intr.k4 + r2 * (intr.k5 + r2 * intr.k6))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = num / den
    xd = x * s + 2.0 * intr.p1 * x * y + intr.p2 * (r2 + 2.0 * x * x)
    yd = y * s + intr.p1 * (r2 + 2.0 * y * y) + 2.0 * intr.p2 * x * y
    return np.column_stack([xd, yd])


def undistort_normalized(
    intr: CameraIntrinsics,
    xy: np.ndarray,
    max_iterations: int = 10,
    tolerance: float = 1e-12,
) -> np.ndarray:
    """Invert :func:`distort_normalized` by fixed-point iteration.

    Converges for moderate distortion (r^2 well inside the lens's usable
    field); iteration stops early once the update falls below `tolerance`.
    """
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    xd, yd = xy[:, 0], xy[:, 1]
    x, y = xd.copy(), yd.copy()
    for _ in range(max_iterations):
        r2 = x * x + y * y
        num = 1.0 + r2 * (intr.k1 + r2 * (intr.k2 + r2 * intr.k3))
        den = 1.0 + r2 * (intr.k4 + r2 * (intr.k5 + r2 * intr.k6))
        with np.errstate(divide="ignore", invalid="ignore"):
            s = num / den
        tx = 2.0 * intr.p1 * x * y + intr.p2 * (r2 + 2.0 * x * x)
        ty = intr.p1 * (r2 + 2.0 * y * y) + 2.0 * intr.p2 * x * y
        x_new = (xd - tx) / s
        y_new = (yd - ty) / s
        delta = max(np.abs(x_new - x).max(), np.abs(y_new - y).max())
        x, y = x_new, y_new
        if delta < tolerance:
            break
    return np.column_stack([x, y])


def distort_project(intr: CameraIntrinsics, c: CameraPoint) -> PixelPoint:
    """Project a lens-frame point to lens-local pixels via the full model."""
    if c.z <= 0.0:
        raise BehindCamera(f"point has z={c.z} <= 0 in the lens frame")
    xp = c.x / c.z
    yp = c.y / c.z
    r2 = xp * xp + yp * yp
    num = 1.0 + r2 * (intr.k1 + r2 * (intr.k2 + r2 * intr.k3))
    den = 1.0 + r2 * (intr.k4 + r2 * (intr.k5 + r2 * intr.k6))
    if abs(den) < DENOMINATOR_EPS:
        raise DegenerateDenominator(f"rational denominator vanishes at r^2={r2}")
    s = num / den
    xd = xp * s + 2.0 * intr.p1 * xp * yp + intr.p2 * (r2 + 2.0 * xp * xp)
    yd = yp * s + intr.p1 * (r2 + 2.0 * yp * yp) + 2.0 * intr.p2 * xp * yp
    return PixelPoint(intr.fx * xd + intr.cx, intr.fy * yd + intr.cy)


def project(intr: CameraIntrinsics, pose: CameraPose, p: WorldPoint) -> PixelPoint:
    """World point -> lens-local pixels (transform then distort-project)."""
    return distort_project(intr, world_to_camera(pose, p))


def project_points(
    intr: CameraIntrinsics, pose: CameraPose, pts: np.ndarray
) -> np.ndarray:
    """Vectorized projection of (n, 3) world points to (n, 2) pixels.

    Rows that land behind the lens come back +inf instead of raising, so
    optimizer line searches can reject such steps by cost.
    """
    cam = transform_points(pose, pts)
    z = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        xy = cam[:, :2] / z[:, None]
        d = distort_normalized(intr, xy)
        uv = d * np.array([intr.fx, intr.fy]) + np.array([intr.cx, intr.cy])
    uv[z <= 0.0] = np.inf
    return uv


def zenith_angle(c: CameraPoint) -> float:
    """Angle from the lens optical axis (+z), in [0, pi]."""
    return to_spherical(c).theta


def select_lens(
    rig: DualLensRig, p: WorldPoint
) -> Optional[Tuple[LensId, PixelPoint]]:
    """Pick the lens whose hemisphere contains the point and project into it.

    A lens is a candidate when the point's zenith angle in that lens frame
    is below pi/2; the smaller angle wins (Backside on an exact tie).  The
    lens-local projection is offset into full-frame coordinates.  Returns
    None when neither hemisphere sees the point.
    """
    best: Optional[Tuple[float, LensId, CameraPoint]] = None
    for lens in (LensId.BACKSIDE, LensId.BUTTONSIDE):
        model = rig.lenses[lens]
        cam = world_to_camera(model.pose, p)
        norm = math.sqrt(cam.x**2 + cam.y**2 + cam.z**2)
        if norm == 0.0:
            continue
        theta = math.acos(max(-1.0, min(1.0, cam.z / norm)))
        if theta >= math.pi / 2.0:
            continue
        if best is None or theta < best[0]:
            best = (theta, lens, cam)
    if best is None:
        return None
    _, lens, cam = best
    local = distort_project(rig.lenses[lens].intrinsics, cam)
    return lens, PixelPoint(local.u + rig.lens_offset(lens), local.v)
