"""Shared synthetic fixtures and independent oracles.

The oracles here are deliberately scalar / brute-force and written against
the formulas directly, independent of the library's vectorized paths.
"""

import math

import numpy as np
import pytest

from omnigt.calibration import CornerView, board_points
from omnigt.dataio import TrainingPoint, TrainingSet
from omnigt.geometry import (
    CameraIntrinsics,
    CameraPose,
    DualLensRig,
    LensId,
    LensModel,
    PixelPoint,
    WorldPoint,
)

# coefficient set used by the synthetic rig throughout the suite
SYNTH_COEFFS = dict(k1=-0.2, k2=0.05, k3=0.01, k4=-0.1, k5=0.02, k6=0.005,
                    p1=1e-3, p2=-5e-4)


def oracle_project(intr, x, y, z):
    """Scalar evaluation of the projection chain, written independently."""
    xp = x / z
    yp = y / z
    r2 = xp * xp + yp * yp
    r4 = r2 * r2
    r6 = r4 * r2
    num = 1.0 + intr.k1 * r2 + intr.k2 * r4 + intr.k3 * r6
    den = 1.0 + intr.k4 * r2 + intr.k5 * r4 + intr.k6 * r6
    xpp = xp * (num / den) + 2.0 * intr.p1 * xp * yp + intr.p2 * (r2 + 2.0 * xp * xp)
    ypp = yp * (num / den) + intr.p1 * (r2 + 2.0 * yp * yp) + 2.0 * intr.p2 * xp * yp
    return intr.fx * xpp + intr.cx, intr.fy * ypp + intr.cy


def brute_force_nearest(target, available):
    """Nearest frame to target with ties toward the larger frame."""
    best = None
    for f in available:
        if best is None:
            best = f
            continue
        d, bd = abs(f - target), abs(best - target)
        if d < bd or (d == bd and f > best):
            best = f
    return best


def random_rotation(rng):
    """Uniform-ish random rotation via QR with sign fix."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return q


def look_rotation(forward, up=(0.0, 0.0, 1.0)):
    """Rotation whose camera frame looks along `forward` (world coords):
    camera +z = forward, +y = world-down-ish, right-handed."""
    z = np.asarray(forward, dtype=float)
    z = z / np.linalg.norm(z)
    up = np.asarray(up, dtype=float)
    y = -(up - (up @ z) * z)
    if np.linalg.norm(y) < 1e-9:  # forward parallel to up; pick another down
        y = np.array([0.0, -1.0, 0.0]) - (np.array([0.0, -1.0, 0.0]) @ z) * z
    y = y / np.linalg.norm(y)
    x = np.cross(y, z)
    return np.vstack([x, y, z])


def pose_looking(forward, position, up=(0.0, 0.0, 1.0)):
    """CameraPose of a camera at `position` (world mm) looking along
    `forward`."""
    R = look_rotation(forward, up)
    t = -R @ np.asarray(position, dtype=float)
    return CameraPose(R, t)


@pytest.fixture
def synth_intrinsics():
    return CameraIntrinsics(fx=420.0, fy=425.0, cx=482.0, cy=538.0, **SYNTH_COEFFS)


@pytest.fixture
def pinhole_intrinsics():
    return CameraIntrinsics(fx=800.0, fy=800.0, cx=480.0, cy=540.0)


def make_dual_rig(camera_position=(2500.0, 1800.0, 1400.0)):
    """Two opposed lenses looking along +/- world X from a tripod position."""
    back_intr = CameraIntrinsics(fx=420.0, fy=425.0, cx=482.0, cy=538.0,
                                 **SYNTH_COEFFS)
    button_intr = CameraIntrinsics(fx=430.0, fy=428.0, cx=478.0, cy=542.0,
                                   **SYNTH_COEFFS)
    return DualLensRig(lenses={
        LensId.BACKSIDE: LensModel(back_intr, pose_looking((1, 0, 0), camera_position)),
        LensId.BUTTONSIDE: LensModel(button_intr, pose_looking((-1, 0, 0), camera_position)),
    })


@pytest.fixture
def dual_rig():
    return make_dual_rig()


def make_board_views(intr, board, n_views, rng, noise=0.0):
    """Synthesize corner views of a board from a known camera.

    Wide-lens usage: the board is held close and pushed well off-axis so
    corners reach large zenith angles (undistorted r^2 up to ~2.5), which
    is what pins down the high-order rational coefficients.  All corners
    stay in front of the lens.
    """
    from omnigt.geometry import project_points, transform_points
    from omnigt.rotations import axis_angle_to_matrix

    base = board_points(board)
    center = base.mean(axis=0)
    views = []
    truth_poses = []
    i = 0
    while len(views) < n_views:
        i += 1
        tilt_x = rng.uniform(-0.7, 0.7)
        tilt_y = rng.uniform(-0.7, 0.7)
        spin = rng.uniform(-0.6, 0.6)
        R = (axis_angle_to_matrix([tilt_x, 0, 0])
             @ axis_angle_to_matrix([0, tilt_y, 0])
             @ axis_angle_to_matrix([0, 0, spin]))
        depth = rng.uniform(220.0, 650.0)
        # every other view pushed toward the field edge
        reach = 420.0 if len(views) % 2 else 160.0
        shift = np.array([rng.uniform(-reach, reach),
                          rng.uniform(-reach, reach), depth])
        t = shift - R @ center
        pose = CameraPose(R, t)
        cam = transform_points(pose, base)
        if cam[:, 2].min() < 90.0:
            continue
        r2 = (cam[:, 0] ** 2 + cam[:, 1] ** 2) / cam[:, 2] ** 2
        if r2.max() > 2.6:
            continue
        uv = project_points(intr, pose, base)
        if not np.isfinite(uv).all():
            continue
        if noise > 0.0:
            uv = uv + rng.normal(scale=noise, size=uv.shape)
        views.append(CornerView(view_id=f"view{len(views):02d}",
                                board_points=base, image_points=uv))
        truth_poses.append(pose)
        if i > 200 * n_views:
            raise RuntimeError("could not synthesize enough views")
    return views, truth_poses


def make_training_set(intr, pose, n_points, rng, noise=0.0,
                      lens=LensId.BACKSIDE, session="synthetic",
                      max_theta_deg=60.0, planar=False):
    """Synthesize wand correspondences for a known pose.

    Camera-frame directions are sampled inside a cone about the optical
    axis, assigned depths, pulled back to world coordinates through the
    inverse pose, and projected to pixels with optional Gaussian noise.
    """
    from omnigt.geometry import distort_project

    points = []
    R_inv = pose.R.T
    while len(points) < n_points:
        theta = math.radians(rng.uniform(2.0, max_theta_deg))
        phi = rng.uniform(-math.pi, math.pi)
        depth = rng.uniform(800.0, 4500.0)
        cam = depth * np.array([
            math.sin(theta) * math.cos(phi),
            math.sin(theta) * math.sin(phi),
            math.cos(theta),
        ])
        if planar:
            cam[2] = 2000.0
        world = R_inv @ (cam - pose.t)
        from omnigt.geometry import CameraPoint

        px = distort_project(intr, CameraPoint(*cam))
        u = px.u + (rng.normal(scale=noise) if noise > 0.0 else 0.0)
        v = px.v + (rng.normal(scale=noise) if noise > 0.0 else 0.0)
        points.append(TrainingPoint(
            frame=len(points),
            image=PixelPoint(u, v),
            world=WorldPoint(*world),
            lens=lens,
        ))
    return TrainingSet(lens=lens, session=session, points=tuple(points))


def rotation_angle(Ra, Rb):
    """Angle of the relative rotation between two rotation matrices."""
    cos = (np.trace(Ra.T @ Rb) - 1.0) / 2.0
    return math.acos(max(-1.0, min(1.0, cos)))


SESSION_CAMERA = (2500.0, 1800.0, 1400.0)


def build_session_fixture(base_dir, rng, objects=("EE1", "EE2"),
                          wand_stream=True, frame_range=(36, 362)):
    """Write a complete synthetic session to a directory.

    Training sets are synthesized from the known rig poses, so on-the-fly
    pose estimation reproduces the rig; object streams circle the camera
    (crossing hemispheres) except the first, which sits on the Backside
    axis.  Returns (header_path, rig).
    """
    from pathlib import Path

    from omnigt import dataio
    from omnigt.dataio import MocapRecord
    from omnigt.sync import FlashPair

    base = Path(base_dir)
    base.mkdir(parents=True, exist_ok=True)
    camera = np.array(SESSION_CAMERA)
    rig = make_dual_rig(tuple(camera))
    mocap_frames = list(range(100, 970))

    for lens, tag in ((LensId.BACKSIDE, "back"), (LensId.BUTTONSIDE, "button")):
        model = rig.lenses[lens]
        (base / f"intr_{tag}.json").write_bytes(
            dataio.write_intrinsics_json(model.intrinsics))
        ts = make_training_set(model.intrinsics, model.pose, 24, rng,
                               lens=lens, session="fixture",
                               max_theta_deg=55.0)
        (base / f"train_{tag}.xml").write_bytes(dataio.write_training_xml(ts))

    def record(frame, pos, markers=5, sync=0):
        return MocapRecord(frame=frame, timestamp=frame / 40.0,
                           x=float(pos[0]), y=float(pos[1]), z=float(pos[2]),
                           pitch=0.0, roll=0.0, yaw=0.0,
                           markers=markers, sync=sync)

    object_lines = []
    for i, name in enumerate(objects):
        records = []
        for j, f in enumerate(mocap_frames):
            if i == 0:
                pos = camera + [2000.0, 0.0, 0.0]
            else:
                angle = 0.7 * i + 2.0 * math.pi * j / len(mocap_frames)
                pos = camera + [1800.0 * math.cos(angle),
                                1800.0 * math.sin(angle), 0.0]
            sync = 1 if f in (100, 969) else 0
            records.append(record(f, pos, sync=sync))
        ref = f"{name.lower()}.csv"
        (base / ref).write_bytes(dataio.write_mocap_csv(records))
        object_lines.append((name, f"{i + 1:02d}", ref))

    if wand_stream:
        records = []
        for j, f in enumerate(mocap_frames):
            angle = 2.0 * math.pi * j / len(mocap_frames)
            pos = camera + [1500.0 * math.cos(angle),
                            1500.0 * math.sin(angle),
                            300.0 * math.sin(3 * angle)]
            records.append(record(f, pos, markers=1))
        (base / "wand.csv").write_bytes(dataio.write_mocap_csv(records))

    header = dataio.SessionHeader(
        session_id="fixture",
        video=dataio.VideoMeta(),
        lenses={
            LensId.BACKSIDE: dataio.LensRefs("intr_back.json", "train_back.xml"),
            LensId.BUTTONSIDE: dataio.LensRefs("intr_button.json", "train_button.xml"),
        },
        objects=tuple(
            dataio.ObjectRef(name=name, id=oid, mocap_ref=ref,
                             visible_max=5, box_width=63, box_height=74)
            for name, oid, ref in object_lines
        ) + ((dataio.ObjectRef(name="wand", id="99", mocap_ref="wand.csv",
                               visible_max=1),) if wand_stream else ()),
        flashes=(FlashPair(36, 100), FlashPair(362, 969)),
        frame_range=frame_range,
    )
    header_path = base / "session.xml"
    header_path.write_bytes(dataio.save_session(header))
    return header_path, rig
