"""Per-lens, per-session camera pose from wand training points.

Intrinsics stay fixed; the pose is seeded linearly and refined by damped
least squares on the re-projection residuals.  Six or more points go
through the direct linear transform on undistorted normalized coordinates;
four or five points fall back to an alternating ray-depth / orthogonal
Procrustes seed before the same refinement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .dataio import TrainingSet
from .errors import DegenerateConfiguration, InsufficientPoints, LensMismatch
from .evaluation import ReprojectionReport, reprojection_errors
from .geometry import CameraIntrinsics, CameraPose, undistort_normalized
from .jacobians import project_and_jacobians
from .lm import LMOptions, levenberg_marquardt
from .rotations import axis_angle_to_matrix, matrix_to_axis_angle, nearest_rotation

MIN_TRAINING_POINTS = 4
_DLT_MIN_POINTS = 6


@dataclass(frozen=True)
class PoseEstimate:
    """Refined pose plus its re-projection report and solver diagnostics."""

    pose: CameraPose
    report: ReprojectionReport
    converged: bool
    cost_history: Tuple[float, ...]


def _point_arrays(ts: TrainingSet) -> Tuple[np.ndarray, np.ndarray]:
    world = np.array([[p.world.X, p.world.Y, p.world.Z] for p in ts.points])
    image = np.array([[p.image.u, p.image.v] for p in ts.points])
    return world, image


def _undistorted_normals(
    ts: TrainingSet, intr: CameraIntrinsics
) -> Tuple[np.ndarray, np.ndarray]:
    """World points and ideal-pinhole normalized image coordinates."""
    world, image = _point_arrays(ts)
    distorted = (image - np.array([intr.cx, intr.cy])) / np.array([intr.fx, intr.fy])
    # generous iteration budget: wand points reach large radii where the
    # fixed point contracts slowly, and the linear seed benefits directly
    return world, undistort_normalized(intr, distorted, max_iterations=50)


def solve_pose_dlt(ts: TrainingSet, intr: CameraIntrinsics) -> CameraPose:
    """Linear pose estimate from >= 6 non-coplanar correspondences.

    Image points are undistorted to ideal pinhole coordinates first, then
    [R|t] is solved up to scale and projected onto a proper rotation.
    """
    n = len(ts.points)
    if n < _DLT_MIN_POINTS:
        raise InsufficientPoints(
            f"linear pose solve needs >= {_DLT_MIN_POINTS} points, got {n}")
    world, normal = _undistorted_normals(ts, intr)

    A = np.zeros((2 * n, 12))
    ones = np.ones(n)
    A[0::2, 0:3] = world
    A[0::2, 3] = ones
    A[0::2, 8:11] = -normal[:, [0]] * world
    A[0::2, 11] = -normal[:, 0]
    A[1::2, 4:7] = world
    A[1::2, 7] = ones
    A[1::2, 8:11] = -normal[:, [1]] * world
    A[1::2, 11] = -normal[:, 1]

    _, sv, Vt = np.linalg.svd(A)
    if sv[-2] < 1e-8 * sv[0]:
        raise DegenerateConfiguration(
            "training points are (near) coplanar-degenerate for the linear solve")
    P = Vt[-1].reshape(3, 4)
    M = P[:, :3]
    if np.linalg.det(M) < 0.0:
        P = -P
        M = -M
    scale = np.linalg.svd(M, compute_uv=False).mean()
    if scale < 1e-15:
        raise DegenerateConfiguration("linear solution has zero rotation block")
    R = nearest_rotation(M)
    t = P[:, 3] / scale
    return CameraPose(R, t)


def _procrustes_seed(ts: TrainingSet, intr: CameraIntrinsics) -> CameraPose:
    """Seed pose for 4-5 points: alternate ray depths with a rigid fit.

    Back-projected rays get a common initial depth chosen so the camera-
    frame spread matches the world spread; an orthogonal Procrustes fit and
    a depth update then alternate until the pose settles.
    """
    world, normal = _undistorted_normals(ts, intr)
    rays = np.column_stack([normal, np.ones(len(normal))])
    rays /= np.linalg.norm(rays, axis=1, keepdims=True)

    centroid = world.mean(axis=0)
    world_spread = np.linalg.norm(world - centroid, axis=1).mean()
    ray_spread = np.linalg.norm(rays - rays.mean(axis=0), axis=1).mean()
    if ray_spread < 1e-12:
        raise DegenerateConfiguration("training rays are coincident")
    depths = np.full(len(rays), world_spread / ray_spread)

    R = np.eye(3)
    t = np.zeros(3)
    for _ in range(100):
        cam = rays * depths[:, None]
        cam_centroid = cam.mean(axis=0)
        C = (cam - cam_centroid).T @ (world - centroid)
        R_new = nearest_rotation(C)
        t_new = cam_centroid - R_new @ centroid
        cam_pred = world @ R_new.T + t_new
        new_depths = np.maximum(
            np.einsum("ij,ij->i", cam_pred, rays), 1e-6 * depths.mean())
        shift = max(np.abs(R_new - R).max(),
                    np.abs(t_new - t).max() / max(1.0, np.abs(t_new).max()))
        R, t = R_new, t_new
        depths = new_depths
        if shift < 1e-12:
            break
    return CameraPose(R, t)


def refine_pose(
    pose0: CameraPose,
    ts: TrainingSet,
    intr: CameraIntrinsics,
    options: Optional[LMOptions] = None,
) -> PoseEstimate:
    """Minimize re-projection error over the 6 pose parameters."""
    world, image = _point_arrays(ts)
    observed = image.ravel()

    def residuals(params: np.ndarray) -> np.ndarray:
        uv, _, _ = project_and_jacobians(
            intr, params[:3], params[3:], world, want_intrinsics=False)
        return uv.ravel() - observed

    def jacobian(params: np.ndarray) -> np.ndarray:
        _, d_pose, _ = project_and_jacobians(
            intr, params[:3], params[3:], world, want_intrinsics=False)
        return d_pose.reshape(-1, 6)

    x0 = np.concatenate([matrix_to_axis_angle(pose0.R), pose0.t])
    result = levenberg_marquardt(residuals, jacobian, x0, options)
    pose = CameraPose(axis_angle_to_matrix(result.params[:3]), result.params[3:])
    report = reprojection_errors(ts, intr, pose)
    return PoseEstimate(
        pose=pose,
        report=report,
        converged=result.converged,
        cost_history=tuple(result.cost_history),
    )


def estimate_pose(
    ts: TrainingSet,
    intr: CameraIntrinsics,
    options: Optional[LMOptions] = None,
) -> PoseEstimate:
    """Linear seed (DLT, or the minimal-count fallback) plus refinement."""
    for p in ts.points:
        if p.lens is not ts.lens:
            raise LensMismatch(
                f"point at frame {p.frame} is for lens {p.lens.value}, "
                f"set is {ts.lens.value}")
    n = len(ts.points)
    if n < MIN_TRAINING_POINTS:
        raise InsufficientPoints(
            f"pose estimation requires a minimum of {MIN_TRAINING_POINTS} "
            f"training points, got {n}")
    if n >= _DLT_MIN_POINTS:
        pose0 = solve_pose_dlt(ts, intr)
    else:
        pose0 = _procrustes_seed(ts, intr)
    return refine_pose(pose0, ts, intr, options)
