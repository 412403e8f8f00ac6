"""JSON API over a loaded session, serving the browser annotator.

Read endpoints expose session metadata, per-frame images and mapped
annotations, training sets, re-projection reports and comparison series.
Write endpoints append/delete training points, set the flash anchors and
trigger pose re-estimation; every mutation persists through the session's
files and is serialized behind one lock, so reads always see a consistent
snapshot.
"""

from __future__ import annotations

import math
import threading
from dataclasses import replace
from pathlib import Path
from typing import Dict, Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import Response

from . import dataio, evaluation, mapping
from .dataio import Session, TrainingPoint, TrainingSet
from .errors import InsufficientPoints, LensMismatch, ToolkitError
from .geometry import LensId, PixelPoint, WorldPoint
from .lm import LMOptions
from .pose import MIN_TRAINING_POINTS, PoseEstimate, estimate_pose
from .sync import FlashPair, build_sync, expected_mocap_frame, video_to_mocap

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
_MEDIA_TYPES = {".png": "image/png", ".jpg": "image/jpeg", ".jpeg": "image/jpeg"}


class SessionWorkspace:
    """Mutable session state backed by the files a header references."""

    def __init__(
        self,
        header_path: Path,
        frames_dir: Optional[Path] = None,
        options: Optional[LMOptions] = None,
    ):
        self.header_path = Path(header_path)
        self.base_dir = self.header_path.parent
        self.frames_dir = Path(frames_dir) if frames_dir else None
        self.options = options
        self._lock = threading.Lock()
        self.session: Session = dataio.load_session(
            self.header_path.read_bytes(), dataio.dir_resolver(self.base_dir))
        self._poses: Dict[LensId, PoseEstimate] = {}
        self.comparison: Optional[evaluation.ComparisonResult] = None
        self.min_visible = 1

    # reads

    def pose_estimate(self, lens: LensId) -> PoseEstimate:
        est = self._poses.get(lens)
        if est is None:
            est = estimate_pose(
                self.session.training[lens], self.session.intrinsics[lens],
                self.options)
            self._poses[lens] = est
        return est

    def annotations(self, video_frame: int):
        run, _ = self._prepared_run()
        if not run.start <= video_frame <= run.end:
            raise HTTPException(404, f"frame {video_frame} outside session range")
        return mapping.map_frame(run, video_frame)

    def _prepared_run(self):
        for lens in LensId:
            self.pose_estimate(lens)  # fill cache; surfaces point-count errors
        poses = {lens: self._poses[lens] for lens in LensId}
        video = self.session.header.video
        from .geometry import DualLensRig, LensModel

        rig = DualLensRig(
            lenses={lens: LensModel(self.session.intrinsics[lens],
                                    poses[lens].pose) for lens in LensId},
            frame_width=video.width, frame_height=video.height,
            sub_width=video.sub_width)
        configs = {
            o.name: mapping.ObjectConfig(
                name=o.name, id=o.id, visible_max=o.visible_max,
                box_width=o.box_width, box_height=o.box_height)
            for o in self.session.header.objects
        }
        frame_range = self.session.header.frame_range
        if frame_range is None:
            raise HTTPException(409, "session header declares no frame range")
        run = mapping.MappingRun(
            rig=rig, sync_model=self.session.sync_model,
            streams=self.session.streams, configs=configs,
            start=frame_range[0], end=frame_range[1])
        return run, poses

    def frame_image(self, video_frame: int) -> Optional[Path]:
        if self.frames_dir is None:
            return None
        for stem in (str(video_frame), f"{video_frame:06d}"):
            for suffix in _IMAGE_SUFFIXES:
                candidate = self.frames_dir / f"{stem}{suffix}"
                if candidate.exists():
                    return candidate
        return None

    # mutations (all hold the lock and persist before returning)

    def add_training_point(self, lens: LensId, frame: int, u: float, v: float,
                           x: float, y: float, z: float) -> TrainingSet:
        with self._lock:
            ts = self.session.training[lens]
            point = TrainingPoint(
                frame=frame, image=PixelPoint(u, v),
                world=WorldPoint(x, y, z), lens=lens)
            updated = TrainingSet(
                lens=ts.lens, session=ts.session, points=ts.points + (point,))
            self._persist_training(lens, updated)
            return updated

    def delete_training_point(self, lens: LensId, index: int) -> TrainingSet:
        with self._lock:
            ts = self.session.training[lens]
            if not 0 <= index < len(ts.points):
                raise HTTPException(404, f"no training point at index {index}")
            points = ts.points[:index] + ts.points[index + 1:]
            updated = TrainingSet(lens=ts.lens, session=ts.session, points=points)
            self._persist_training(lens, updated)
            return updated

    def _persist_training(self, lens: LensId, updated: TrainingSet) -> None:
        ref = self.session.header.lenses[lens].training_ref
        (self.base_dir / ref).write_bytes(dataio.write_training_xml(updated))
        training = dict(self.session.training)
        training[lens] = updated
        self.session = replace(self.session, training=training)
        self._poses.pop(lens, None)

    def set_flashes(self, first: FlashPair, second: FlashPair) -> None:
        with self._lock:
            model = build_sync(first, second)  # validates anchors
            header = replace(self.session.header, flashes=(first, second))
            self.header_path.write_bytes(dataio.save_session(header))
            self.session = replace(self.session, header=header, sync_model=model)

    def estimate(self, lens: LensId) -> PoseEstimate:
        with self._lock:
            self._poses.pop(lens, None)
            return self.pose_estimate(lens)

    def run_comparison(self, system_xml: bytes, min_visible: int):
        run, _ = self._prepared_run()
        frames, _ = mapping.map_video(run)
        system = dataio.parse_groundtruth_xml(system_xml)
        result = evaluation.compare(frames, system, min_visible)
        with self._lock:
            self.comparison = result
            self.min_visible = min_visible
        return result


def _lens_or_404(name: str) -> LensId:
    try:
        return LensId.from_string(name)
    except ValueError:
        raise HTTPException(404, f"unknown lens {name!r}") from None


def _object_json(obj: dataio.GroundTruthObject) -> dict:
    return {
        "name": obj.name,
        "id": obj.id,
        "lens": obj.lens.value,
        "centroid": {"x": obj.centroid[0], "y": obj.centroid[1]},
        "boxinfo": {"x": obj.box.x, "y": obj.box.y,
                    "width": obj.box.width, "height": obj.box.height},
        "visibility": {"visible": obj.visible, "visibleMax": obj.visible_max},
    }


def _report_json(est: PoseEstimate) -> dict:
    report = est.report
    return {
        "mean": report.mean,
        "sigma": report.sigma,
        "count": report.count,
        "excluded": report.excluded,
        "singleton": report.singleton,
        "converged": est.converged,
        "samples": [
            {
                "image": {"u": s.image.u, "v": s.image.v},
                "reprojected": (None if s.reprojected is None else
                                {"u": s.reprojected.u, "v": s.reprojected.v}),
                "error": (None if math.isinf(s.error) else s.error),
            }
            for s in report.samples
        ],
    }


def _comparison_json(result: evaluation.ComparisonResult) -> dict:
    return {
        "series": {
            name: {
                "entries": [{"frame": e.frame, "distance": e.distance}
                            for e in s.entries],
                "mean": s.mean,
                "max": s.max,
                "matched": s.matched,
                "missing": s.missing,
            }
            for name, s in result.series.items()
        },
        "unmatchedSystem": result.unmatched_system,
        "warnings": list(result.warnings),
    }


def create_app(workspace: SessionWorkspace) -> FastAPI:
    app = FastAPI(title="mocap ground-truth annotator API")

    @app.exception_handler(ToolkitError)
    async def _toolkit_error(request: Request, exc: ToolkitError):
        from fastapi.responses import JSONResponse

        status = 422 if isinstance(exc, (InsufficientPoints, LensMismatch)) else 400
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.get("/api/session")
    def session_info():
        header = workspace.session.header
        return {
            "id": header.session_id,
            "video": {
                "fps": header.video.fps,
                "width": header.video.width,
                "height": header.video.height,
                "subWidth": header.video.sub_width,
            },
            "frameRange": (None if header.frame_range is None else
                           {"start": header.frame_range[0],
                            "end": header.frame_range[1]}),
            "objects": [
                {"name": o.name, "id": o.id, "visibleMax": o.visible_max}
                for o in header.objects
            ],
            "lenses": {
                lens.value: {
                    "trainingPoints": len(workspace.session.training[lens].points),
                }
                for lens in LensId
            },
            "flashes": [
                {"video": f.video_frame, "mocap": f.mocap_frame}
                for f in header.flashes
            ],
        }

    @app.get("/api/frames/{video_frame}/annotations")
    def frame_annotations(video_frame: int):
        frame = workspace.annotations(video_frame)
        return {
            "frame": frame.number,
            "objects": [_object_json(o) for o in frame.objects],
        }

    @app.get("/api/frames/{video_frame}/image")
    def frame_image(video_frame: int):
        path = workspace.frame_image(video_frame)
        if path is None:
            raise HTTPException(404, f"no image for frame {video_frame}")
        return Response(content=path.read_bytes(),
                        media_type=_MEDIA_TYPES[path.suffix])

    @app.get("/api/training/{lens_name}")
    def get_training(lens_name: str):
        lens = _lens_or_404(lens_name)
        ts = workspace.session.training[lens]
        return {
            "lens": ts.lens.value,
            "session": ts.session,
            "minimumForPose": MIN_TRAINING_POINTS,
            "points": [
                {"frame": p.frame, "u": p.image.u, "v": p.image.v,
                 "x": p.world.X, "y": p.world.Y, "z": p.world.Z}
                for p in ts.points
            ],
        }

    @app.post("/api/training/{lens_name}", status_code=201)
    def post_training(lens_name: str, body: dict):
        lens = _lens_or_404(lens_name)
        try:
            frame = int(body["frame"])
            u, v = float(body["u"]), float(body["v"])
        except (KeyError, TypeError, ValueError):
            raise HTTPException(422, "body requires frame, u, v") from None
        if "x" in body and "y" in body and "z" in body:
            world = (float(body["x"]), float(body["y"]), float(body["z"]))
        else:
            world = _wand_position(workspace, frame)
        updated = workspace.add_training_point(lens, frame, u, v, *world)
        return {"count": len(updated.points)}

    @app.delete("/api/training/{lens_name}/{index}")
    def delete_training(lens_name: str, index: int):
        lens = _lens_or_404(lens_name)
        updated = workspace.delete_training_point(lens, index)
        return {"count": len(updated.points)}

    @app.put("/api/sync")
    def put_sync(body: dict):
        try:
            flashes = [FlashPair(int(f["video"]), int(f["mocap"]))
                       for f in body["flashes"]]
        except (KeyError, TypeError, ValueError):
            raise HTTPException(422, "body requires flashes: [{video, mocap}x2]") from None
        if len(flashes) != 2:
            raise HTTPException(422, "exactly two flash anchors required")
        workspace.set_flashes(flashes[0], flashes[1])
        return {"slope": workspace.session.sync_model.slope}

    @app.post("/api/pose/{lens_name}/estimate")
    def post_estimate(lens_name: str):
        lens = _lens_or_404(lens_name)
        est = workspace.estimate(lens)
        return {
            "lens": lens.value,
            "rotation": est.pose.R.tolist(),
            "translation": est.pose.t.tolist(),
            "report": _report_json(est),
        }

    @app.get("/api/pose/{lens_name}/report")
    def get_report(lens_name: str):
        lens = _lens_or_404(lens_name)
        return _report_json(workspace.pose_estimate(lens))

    @app.post("/api/compare")
    async def post_compare(request: Request, min_visible: int = 1):
        body = await request.body()
        result = workspace.run_comparison(body, min_visible)
        return _comparison_json(result)

    @app.get("/api/comparison")
    def get_comparison():
        if workspace.comparison is None:
            raise HTTPException(404, "no comparison loaded")
        return _comparison_json(workspace.comparison)

    return app


def _wand_position(workspace: SessionWorkspace, video_frame: int):
    """World position of the wand at the mocap record synced to a frame.

    Clicking a training point only supplies the pixel; the 3-D side comes
    from the session's wand stream (object named 'wand' or the only
    stream).  404 when no usable record exists.
    """
    streams = workspace.session.streams
    if "wand" in streams:
        records = streams["wand"]
    elif len(streams) == 1:
        records = next(iter(streams.values()))
    else:
        raise HTTPException(
            422, "no wand stream in session; supply x, y, z explicitly")
    if not records:
        raise HTTPException(404, f"no mocap record for frame {video_frame}")
    frames = [r.frame for r in records]
    nearest = video_to_mocap(workspace.session.sync_model, video_frame, frames)
    target = expected_mocap_frame(workspace.session.sync_model, video_frame)
    if abs(nearest - target) > 2.0 * workspace.session.sync_model.slope:
        raise HTTPException(404, f"no mocap record near frame {video_frame}")
    record = next(r for r in records if r.frame == nearest)
    return record.x, record.y, record.z


def serve(
    header_path: Path,
    frames_dir: Optional[Path],
    host: str,
    port: int,
    ui_dir: Optional[Path] = None,
) -> None:
    """Run the API (blocking); mounts a built UI directory when given."""
    import uvicorn

    workspace = SessionWorkspace(header_path, frames_dir)
    app = create_app(workspace)
    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    uvicorn.run(app, host=host, port=port)
