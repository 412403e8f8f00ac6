"""Per-lens intrinsic calibration from chessboard corner views.

The pipeline is the classic planar one: a normalized-DLT homography per
view, a closed-form zero-skew solution for the pinhole parameters from the
absolute-conic constraints, per-view poses decomposed from the homography
columns, then a joint damped least-squares refinement of the pinhole
parameters, all eight rational-model coefficients and every view pose.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DegenerateConfiguration,
    DegenerateHomography,
    DegenerateOrientations,
    InsufficientPoints,
    InsufficientViews,
)
from .geometry import CameraIntrinsics, CameraPose
from .jacobians import (
    N_INTRINSIC,
    intrinsics_to_vector,
    project_and_jacobians,
    vector_to_intrinsics,
)
from .lm import LMOptions, levenberg_marquardt
from .rotations import axis_angle_to_matrix, matrix_to_axis_angle, nearest_rotation

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class BoardSpec:
    """Interior-corner grid of the calibration chessboard."""

    cols: int
    rows: int
    square_size: float  # mm

    def __post_init__(self):
        if self.cols < 3 or self.rows < 3:
            raise ValueError("board needs at least 3x3 interior corners")
        if self.square_size <= 0.0:
            raise ValueError("square size must be positive")

    @property
    def corner_count(self) -> int:
        return self.cols * self.rows


def board_points(board: BoardSpec) -> np.ndarray:
    """Board-plane corner coordinates (n, 3), row-major, Z = 0."""
    cols = np.arange(board.cols) * board.square_size
    rows = np.arange(board.rows) * board.square_size
    xx, yy = np.meshgrid(cols, rows)
    return np.column_stack([xx.ravel(), yy.ravel(), np.zeros(board.corner_count)])


@dataclass(frozen=True, eq=False)
class CornerView:
    """One chessboard view: board-plane points paired with detected pixels."""

    view_id: str
    board_points: np.ndarray  # (n, 3), Z = 0
    image_points: np.ndarray  # (n, 2), lens-local pixels

    def __post_init__(self):
        bp = np.asarray(self.board_points, dtype=float)
        ip = np.asarray(self.image_points, dtype=float)
        if bp.ndim != 2 or bp.shape[1] != 3 or ip.shape != (bp.shape[0], 2):
            raise ValueError("board/image point arrays must be (n,3) and (n,2)")
        bp.setflags(write=False)
        ip.setflags(write=False)
        object.__setattr__(self, "board_points", bp)
        object.__setattr__(self, "image_points", ip)


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    intrinsics: CameraIntrinsics
    poses: Tuple[CameraPose, ...]
    rms_error: float  # root mean squared 2-D point error, pixels
    view_errors: Tuple[float, ...]  # per-view mean point error, pixels
    converged: bool
    cost_history: Tuple[float, ...]


def _similarity_normalization(pts: np.ndarray) -> np.ndarray:
    """Similarity transform taking pts to centroid 0, mean distance sqrt(2)."""
    centroid = pts.mean(axis=0)
    dist = np.linalg.norm(pts - centroid, axis=1).mean()
    if dist < 1e-12:
        raise DegenerateConfiguration("points are coincident")
    s = np.sqrt(2.0) / dist
    return np.array([
        [s, 0.0, -s * centroid[0]],
        [0.0, s, -s * centroid[1]],
        [0.0, 0.0, 1.0],
    ])


def estimate_homography(
    correspondences: Sequence[Tuple[Sequence[float], Sequence[float]]],
) -> np.ndarray:
    """Least-squares plane->image homography via the normalized DLT.

    Input is a sequence of (plane point, image point) pairs; plane points
    may be 2-D or 3-D with Z = 0.  The result is scaled so its bottom-right
    entry is 1 whenever that entry is nonzero.
    """
    if len(correspondences) < 4:
        raise InsufficientPoints("homography estimation needs >= 4 correspondences")
    src = np.array([c[0] for c in correspondences], dtype=float)[:, :2]
    dst = np.array([c[1] for c in correspondences], dtype=float)[:, :2]
    T_src = _similarity_normalization(src)
    T_dst = _similarity_normalization(dst)
    src_h = np.column_stack([src, np.ones(len(src))]) @ T_src.T
    dst_h = np.column_stack([dst, np.ones(len(dst))]) @ T_dst.T

    n = len(src)
    A = np.zeros((2 * n, 9))
    x, y = src_h[:, 0], src_h[:, 1]
    u, v = dst_h[:, 0], dst_h[:, 1]
    A[0::2, 0] = -x
    A[0::2, 1] = -y
    A[0::2, 2] = -1.0
    A[0::2, 6] = u * x
    A[0::2, 7] = u * y
    A[0::2, 8] = u
    A[1::2, 3] = -x
    A[1::2, 4] = -y
    A[1::2, 5] = -1.0
    A[1::2, 6] = v * x
    A[1::2, 7] = v * y
    A[1::2, 8] = v

    _, sv, Vt = np.linalg.svd(A)
    if sv[-2] < 1e-10 * sv[0]:
        raise DegenerateConfiguration("homography design matrix is rank-deficient")
    H = np.linalg.inv(T_dst) @ Vt[-1].reshape(3, 3) @ T_src
    if abs(H[2, 2]) > 1e-12:
        H = H / H[2, 2]
    if abs(np.linalg.det(H)) <= 1e-12:
        raise DegenerateConfiguration("estimated homography is singular")
    return H


def _conic_constraint(H: np.ndarray, i: int, j: int) -> np.ndarray:
    """Constraint row on (B11, B22, B13, B23, B33) for zero-skew B."""
    h_i, h_j = H[:, i], H[:, j]
    return np.array([
        h_i[0] * h_j[0],
        h_i[1] * h_j[1],
        h_i[2] * h_j[0] + h_i[0] * h_j[2],
        h_i[2] * h_j[1] + h_i[1] * h_j[2],
        h_i[2] * h_j[2],
    ])


def init_intrinsics(homographies: Sequence[np.ndarray]) -> CameraIntrinsics:
    """Closed-form zero-skew pinhole parameters; distortion starts at zero."""
    if len(homographies) < 3:
        raise InsufficientViews("closed-form intrinsics need >= 3 views")
    rows = []
    for H in homographies:
        rows.append(_conic_constraint(H, 0, 1))
        rows.append(_conic_constraint(H, 0, 0) - _conic_constraint(H, 1, 1))
    V = np.array(rows)
    # pixel-unit homographies make the conic columns span ~12 orders of
    # magnitude; equilibrate columns so conditioning reflects the geometry.
    # The solution is the null direction, so sigma_min ~ 0 is expected; the
    # determined part of the system is conditioned by the second-smallest.
    col_scale = np.linalg.norm(V, axis=0)
    col_scale[col_scale < 1e-300] = 1.0
    _, sv, Vt = np.linalg.svd(V / col_scale)
    if sv[-2] < 1e-300 or sv[0] / sv[-2] > _COND_LIMIT:
        raise DegenerateOrientations(
            "board orientations do not constrain the intrinsics")
    b = Vt[-1] / col_scale
    if b[0] < 0.0:
        b = -b
    B11, B22, B13, B23, B33 = b
    if B11 <= 0.0 or B22 <= 0.0:
        raise DegenerateOrientations("conic solution is not positive definite")
    cy = -B23 / B22
    lam = B33 - B13 * B13 / B11 + cy * B23
    if lam / B11 <= 0.0 or lam / B22 <= 0.0:
        raise DegenerateOrientations("conic solution is not positive definite")
    fx = float(np.sqrt(lam / B11))
    fy = float(np.sqrt(lam / B22))
    cx = float(-B13 * fx * fx / lam)
    return CameraIntrinsics(fx=fx, fy=fy, cx=cx, cy=float(cy))


def init_view_pose(intr: CameraIntrinsics, H: np.ndarray) -> CameraPose:
    """Decompose a board homography into the view pose (board in front)."""
    A_inv = np.linalg.inv(intr.matrix())
    h1, h2, h3 = H[:, 0], H[:, 1], H[:, 2]
    norm1 = np.linalg.norm(A_inv @ h1)
    if norm1 < 1e-12:
        raise DegenerateHomography("homography column collapses under A^-1")
    lam = 1.0 / norm1
    t = lam * (A_inv @ h3)
    if t[2] < 0.0:
        lam = -lam
        t = -t
    if abs(t[2]) < 1e-12:
        raise DegenerateHomography("board plane passes through the camera center")
    r1 = lam * (A_inv @ h1)
    r2 = lam * (A_inv @ h2)
    r3 = np.cross(r1, r2)
    if np.linalg.norm(r3) < 1e-9:
        raise DegenerateHomography("homography columns are parallel")
    R = nearest_rotation(np.column_stack([r1, r2, r3]))
    return CameraPose(R, t)


def _pack(intr: CameraIntrinsics, poses: Sequence[CameraPose]) -> np.ndarray:
    parts = [intrinsics_to_vector(intr)]
    for pose in poses:
        parts.append(matrix_to_axis_angle(pose.R))
        parts.append(pose.t)
    return np.concatenate(parts)


def _unpack(params: np.ndarray, n_views: int):
    intr = vector_to_intrinsics(params[:N_INTRINSIC])
    poses = []
    for i in range(n_views):
        base = N_INTRINSIC + 6 * i
        rvec = params[base:base + 3]
        t = params[base + 3:base + 6]
        poses.append((rvec, t))
    return intr, poses


def refine_calibration(
    init: CameraIntrinsics,
    poses: Sequence[CameraPose],
    views: Sequence[CornerView],
    options: Optional[LMOptions] = None,
) -> CalibrationResult:
    """Jointly refine intrinsics, distortion and all view poses.

    Minimizes the summed squared re-projection error over the 12 intrinsic
    parameters and 6 pose parameters per view.  A run that exhausts the
    iteration budget is returned with converged=False rather than raised.
    """
    if len(poses) != len(views):
        raise ValueError("need exactly one initial pose per view")
    n_views = len(views)
    counts = [len(v.image_points) for v in views]
    observed = np.concatenate([v.image_points for v in views]).ravel()

    def residuals(params: np.ndarray) -> np.ndarray:
        intr, pose_params = _unpack(params, n_views)
        out = []
        for view, (rvec, t) in zip(views, pose_params):
            uv, _, _ = project_and_jacobians(
                intr, rvec, t, view.board_points, want_intrinsics=False)
            out.append(uv.ravel())
        return np.concatenate(out) - observed

    def jacobian(params: np.ndarray) -> np.ndarray:
        intr, pose_params = _unpack(params, n_views)
        total = 2 * sum(counts)
        J = np.zeros((total, N_INTRINSIC + 6 * n_views))
        row = 0
        for i, (view, (rvec, t)) in enumerate(zip(views, pose_params)):
            _, d_pose, d_intr = project_and_jacobians(
                intr, rvec, t, view.board_points)
            n = counts[i]
            J[row:row + 2 * n, :N_INTRINSIC] = d_intr.reshape(2 * n, N_INTRINSIC)
            col = N_INTRINSIC + 6 * i
            J[row:row + 2 * n, col:col + 6] = d_pose.reshape(2 * n, 6)
            row += 2 * n
        return J

    result = levenberg_marquardt(residuals, jacobian, _pack(init, poses), options)
    intr, pose_params = _unpack(result.params, n_views)
    final_poses = tuple(
        CameraPose(axis_angle_to_matrix(rvec), t) for rvec, t in pose_params)

    res = residuals(result.params).reshape(-1, 2)
    point_err = np.linalg.norm(res, axis=1)
    view_errors = []
    start = 0
    for n in counts:
        view_errors.append(float(point_err[start:start + n].mean()))
        start += n
    rms = float(np.sqrt((point_err**2).mean()))
    return CalibrationResult(
        intrinsics=intr,
        poses=final_poses,
        rms_error=rms,
        view_errors=tuple(view_errors),
        converged=result.converged,
        cost_history=tuple(result.cost_history),
    )


def calibrate(
    views: Sequence[CornerView],
    board: BoardSpec,
    options: Optional[LMOptions] = None,
) -> CalibrationResult:
    """Full pipeline: homographies -> closed form -> poses -> joint LM."""
    if len(views) < 3:
        raise InsufficientViews("calibration needs >= 3 board views")
    for view in views:
        if len(view.image_points) != board.corner_count:
            raise ValueError(
                f"view {view.view_id}: expected {board.corner_count} corners")
    homographies = [
        estimate_homography(list(zip(v.board_points[:, :2], v.image_points)))
        for v in views
    ]
    init = init_intrinsics(homographies)
    poses = [init_view_pose(init, H) for H in homographies]
    return refine_calibration(init, poses, views, options)
