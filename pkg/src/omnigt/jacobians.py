"""Analytic derivatives of the projection chain.

Shared by the board calibration (which differentiates with respect to the
intrinsics, the distortion coefficients and per-view poses) and the wand
pose refinement (pose only).  Everything is vectorized over points; the
pose is parameterized as axis-angle + translation.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from .geometry import CameraIntrinsics
from .rotations import axis_angle_to_matrix, rotation_jacobian

# column layout of the intrinsic parameter block
INTRINSIC_NAMES = ("fx", "fy", "cx", "cy",
                   "k1", "k2", "k3", "k4", "k5", "k6", "p1", "p2")
N_INTRINSIC = len(INTRINSIC_NAMES)


def intrinsics_to_vector(intr: CameraIntrinsics) -> np.ndarray:
    return np.array([getattr(intr, name) for name in INTRINSIC_NAMES])


def vector_to_intrinsics(vec: np.ndarray) -> CameraIntrinsics:
    return CameraIntrinsics(**{n: float(v) for n, v in zip(INTRINSIC_NAMES, vec)})


def _distortion_terms(intr: CameraIntrinsics, x: np.ndarray, y: np.ndarray):
    r2 = x * x + y * y
    num = 1.0 + r2 * (intr.k1 + r2 * (intr.k2 + r2 * intr.k3))
    den = 1.0 + r2 * (intr.k4 + r2 * (intr.k5 + r2 * intr.k6))
    return r2, num, den


def project_and_jacobians(
    intr: CameraIntrinsics,
    rvec: np.ndarray,
    t: np.ndarray,
    world: np.ndarray,
    want_intrinsics: bool = True,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project (n, 3) world points and differentiate the pixel output.

    Returns (uv, d_uv/d_pose, d_uv/d_intrinsics) with shapes (n, 2),
    (n, 2, 6) and (n, 2, 12); the pose block is ordered (rvec, t) and the
    intrinsic block follows INTRINSIC_NAMES.  When `want_intrinsics` is
    False the last array is empty.

    Points behind the lens yield non-finite rows; the LM driver rejects
    such steps by cost, so no exception is raised here.
    """
    world = np.atleast_2d(np.asarray(world, dtype=float))
    n = world.shape[0]
    R = axis_angle_to_matrix(rvec)
    cam = world @ R.T + np.asarray(t, dtype=float)
    x_c, y_c, z_c = cam[:, 0], cam[:, 1], cam[:, 2]

    with np.errstate(divide="ignore", invalid="ignore"):
        inv_z = 1.0 / z_c
    x = x_c * inv_z
    y = y_c * inv_z
    r2, num, den = _distortion_terms(intr, x, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = num / den
    xd = x * s + 2.0 * intr.p1 * x * y + intr.p2 * (r2 + 2.0 * x * x)
    yd = y * s + intr.p1 * (r2 + 2.0 * y * y) + 2.0 * intr.p2 * x * y
    uv = np.column_stack([intr.fx * xd + intr.cx, intr.fy * yd + intr.cy])
    behind = z_c <= 0.0
    uv[behind] = np.inf

    # d(s)/d(r2) from the quotient rule
    dnum = intr.k1 + r2 * (2.0 * intr.k2 + 3.0 * intr.k3 * r2)
    dden = intr.k4 + r2 * (2.0 * intr.k5 + 3.0 * intr.k6 * r2)
    with np.errstate(divide="ignore", invalid="ignore"):
        ds = (dnum * den - num * dden) / (den * den)

    # distorted coords w.r.t. normalized coords, (n, 2, 2)
    dxd_dx = s + 2.0 * x * x * ds + 2.0 * intr.p1 * y + 6.0 * intr.p2 * x
    dxd_dy = 2.0 * x * y * ds + 2.0 * intr.p1 * x + 2.0 * intr.p2 * y
    dyd_dx = 2.0 * x * y * ds + 2.0 * intr.p1 * x + 2.0 * intr.p2 * y
    dyd_dy = s + 2.0 * y * y * ds + 6.0 * intr.p1 * y + 2.0 * intr.p2 * x
    dd_da = np.empty((n, 2, 2))
    dd_da[:, 0, 0] = dxd_dx
    dd_da[:, 0, 1] = dxd_dy
    dd_da[:, 1, 0] = dyd_dx
    dd_da[:, 1, 1] = dyd_dy

    # normalized coords w.r.t. camera point, (n, 2, 3)
    da_dc = np.zeros((n, 2, 3))
    da_dc[:, 0, 0] = inv_z
    da_dc[:, 0, 2] = -x * inv_z
    da_dc[:, 1, 1] = inv_z
    da_dc[:, 1, 2] = -y * inv_z

    # camera point w.r.t. (rvec, t), (n, 3, 6)
    dc_dpose = np.empty((n, 3, 6))
    dc_dpose[:, :, :3] = rotation_jacobian(rvec, world)
    dc_dpose[:, :, 3:] = np.eye(3)

    focal = np.array([[intr.fx], [intr.fy]])  # (2, 1) broadcast over points
    duv_da = focal[None, :, :] * dd_da  # (n, 2, 2)
    duv_dc = np.einsum("nij,njk->nik", duv_da, da_dc)  # (n, 2, 3)
    duv_dpose = np.einsum("nij,njk->nik", duv_dc, dc_dpose)  # (n, 2, 6)

    if not want_intrinsics:
        return uv, duv_dpose, np.empty((n, 2, 0))

    duv_dintr = np.zeros((n, 2, N_INTRINSIC))
    duv_dintr[:, 0, 0] = xd          # fx
    duv_dintr[:, 1, 1] = yd          # fy
    duv_dintr[:, 0, 2] = 1.0         # cx
    duv_dintr[:, 1, 3] = 1.0         # cy
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_den = 1.0 / den
    for j, power in enumerate((r2, r2 * r2, r2 * r2 * r2)):
        dk_num = power * inv_den            # d(s)/d(k1..k3)
        dk_den = -s * power * inv_den       # d(s)/d(k4..k6)
        duv_dintr[:, 0, 4 + j] = intr.fx * x * dk_num
        duv_dintr[:, 1, 4 + j] = intr.fy * y * dk_num
        duv_dintr[:, 0, 7 + j] = intr.fx * x * dk_den
        duv_dintr[:, 1, 7 + j] = intr.fy * y * dk_den
    duv_dintr[:, 0, 10] = intr.fx * 2.0 * x * y          # p1
    duv_dintr[:, 1, 10] = intr.fy * (r2 + 2.0 * y * y)
    duv_dintr[:, 0, 11] = intr.fx * (r2 + 2.0 * x * x)   # p2
    duv_dintr[:, 1, 11] = intr.fy * 2.0 * x * y
    return uv, duv_dpose, duv_dintr
