"""Axis-angle (Rodrigues) rotation utilities for the nonlinear solvers.

Rotations are optimized as 3-parameter axis-angle vectors ``rvec`` whose
direction is the rotation axis and whose norm is the angle in radians.
"""

from __future__ import annotations

import numpy as np

_SMALL_ANGLE = 1e-8


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: skew(v) @ u == v x u."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def axis_angle_to_matrix(rvec: np.ndarray) -> np.ndarray:
    """Rodrigues formula, series-evaluated near the identity for stability."""
    rvec = np.asarray(rvec, dtype=float)
    theta2 = float(rvec @ rvec)
    theta = np.sqrt(theta2)
    K = skew(rvec)
    if theta < 1e-4:
        # sin(t)/t and (1-cos(t))/t^2 to O(t^4); exact to double precision here
        a = 1.0 - theta2 / 6.0 * (1.0 - theta2 / 20.0)
        b = 0.5 * (1.0 - theta2 / 12.0 * (1.0 - theta2 / 30.0))
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta2
    return np.eye(3) + a * K + b * (K @ K)


def _quaternion_from_matrix(R: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) with w >= 0, via the largest-pivot rule."""
    m00, m01, m02 = R[0]
    m10, m11, m12 = R[1]
    m20, m21, m22 = R[2]
    trace = m00 + m11 + m22
    if trace > 0.0:
        s = np.sqrt(trace + 1.0) * 2.0
        q = np.array([0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s])
    elif m00 >= m11 and m00 >= m22:
        s = np.sqrt(1.0 + m00 - m11 - m22) * 2.0
        q = np.array([(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s])
    elif m11 >= m22:
        s = np.sqrt(1.0 + m11 - m00 - m22) * 2.0
        q = np.array([(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s])
    else:
        s = np.sqrt(1.0 + m22 - m00 - m11) * 2.0
        q = np.array([(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s])
    if q[0] < 0.0:
        q = -q
    return q / np.linalg.norm(q)


def matrix_to_axis_angle(R: np.ndarray) -> np.ndarray:
    """Inverse of :func:`axis_angle_to_matrix`; angle returned in [0, pi]."""
    q = _quaternion_from_matrix(np.asarray(R, dtype=float))
    w, vec = q[0], q[1:]
    norm = np.linalg.norm(vec)
    if norm < _SMALL_ANGLE:
        return 2.0 * vec  # sin(t/2) ~ t/2
    angle = 2.0 * np.arctan2(norm, w)
    return vec / norm * angle


def nearest_rotation(M: np.ndarray) -> np.ndarray:
    """Orthogonal Procrustes projection of M onto SO(3)."""
    U, _, Vt = np.linalg.svd(np.asarray(M, dtype=float))
    if np.linalg.det(U @ Vt) < 0.0:
        U = U.copy()
        U[:, -1] = -U[:, -1]
    return U @ Vt


def rotate_points(rvec: np.ndarray, pts: np.ndarray) -> np.ndarray:
    return np.asarray(pts, dtype=float) @ axis_angle_to_matrix(rvec).T


def rotation_jacobian(rvec: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """d(R(rvec) @ p)/d(rvec) for each point; shape (n, 3, 3).

    Uses the compact exponential-coordinates derivative; the i-th column of
    each 3x3 block is the partial derivative with respect to rvec[i].
    """
    rvec = np.asarray(rvec, dtype=float)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = pts.shape[0]
    theta2 = float(rvec @ rvec)
    R = axis_angle_to_matrix(rvec)
    rotated = pts @ R.T
    jac = np.empty((n, 3, 3))
    if theta2 < _SMALL_ANGLE**2:
        # limit at the identity: d(Rp)/dr -> -[p]x
        for i in range(3):
            e = np.zeros(3)
            e[i] = 1.0
            jac[:, :, i] = np.cross(e, rotated)
        return jac
    Vx = skew(rvec)
    eye = np.eye(3)
    for i in range(3):
        col = np.cross(rvec, (eye - R) @ eye[:, i])
        Mi = (rvec[i] * Vx + skew(col)) / theta2
        jac[:, :, i] = rotated @ Mi.T
    return jac
