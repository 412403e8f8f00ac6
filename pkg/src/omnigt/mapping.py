"""Per-frame mapping of mocap trajectories to ground-truth annotations.

For every video frame in the run range, each tracked object's nearest
mocap record is looked up through the flash sync model, the record's world
position picks a lens by zenith angle and projects to full-frame pixels,
and the result is emitted as an annotated object with visibility counts
and a centroid-centered placeholder box.

Objects are omitted from a frame (never written with a sentinel) when the
stream has no usable record, when neither lens sees the point, or when the
rounded centroid lands outside the selected lens's half-frame; the run
summary counts each kind of omission and every lens crossing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from .dataio import (
    BoxInfo,
    GroundTruthFrame,
    GroundTruthObject,
    MocapRecord,
    Session,
)
from .geometry import DualLensRig, LensId, LensModel, WorldPoint, select_lens
from .lm import LMOptions
from .pose import PoseEstimate, estimate_pose
from .sync import SyncModel, expected_mocap_frame, video_to_mocap


def round_half_away(value: float) -> int:
    """Round to the nearest integer, halves away from zero."""
    if value >= 0.0:
        return math.floor(value + 0.5)
    return math.ceil(value - 0.5)


@dataclass(frozen=True)
class ObjectConfig:
    """Static annotation attributes of one tracked object."""

    name: str
    id: str
    visible_max: int
    box_width: int
    box_height: int

    def __post_init__(self):
        if self.visible_max < 1:
            raise ValueError("visibleMax must be >= 1")
        if self.box_width <= 0 or self.box_height <= 0:
            raise ValueError("box dimensions must be positive")


@dataclass(frozen=True, eq=False)
class MappingRun:
    """Everything one mapping pass needs, immutable."""

    rig: DualLensRig
    sync_model: SyncModel
    streams: Mapping[str, Tuple[MocapRecord, ...]]
    configs: Mapping[str, ObjectConfig]
    start: int
    end: int
    # omit an object when the nearest mocap frame is farther than this from
    # the affine prediction; None = two video-frame periods
    max_sync_gap: Optional[float] = None

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("frame range start must be <= end")
        streams = {name: tuple(recs) for name, recs in self.streams.items()}
        missing = set(streams) - set(self.configs)
        if missing:
            raise ValueError(f"streams without object config: {sorted(missing)}")
        frames = {}
        by_frame = {}
        for name, recs in streams.items():
            ordered = sorted(recs, key=lambda r: r.frame)
            streams[name] = tuple(ordered)
            frames[name] = [r.frame for r in ordered]
            by_frame[name] = {r.frame: r for r in ordered}
        object.__setattr__(self, "streams", streams)
        object.__setattr__(self, "configs", dict(self.configs))
        object.__setattr__(self, "_frames", frames)
        object.__setattr__(self, "_by_frame", by_frame)

    @property
    def sync_gap(self) -> float:
        if self.max_sync_gap is not None:
            return self.max_sync_gap
        return 2.0 * self.sync_model.slope


def make_boxinfo(centroid: Tuple[int, int], cfg: ObjectConfig) -> BoxInfo:
    """Placeholder box centered on the centroid (floor-half offsets)."""
    return BoxInfo(
        x=centroid[0] - cfg.box_width // 2,
        y=centroid[1] - cfg.box_height // 2,
        width=cfg.box_width,
        height=cfg.box_height,
    )


def _map_object(
    run: MappingRun, name: str, video_frame: int
) -> Tuple[str, Optional[GroundTruthObject], Optional[LensId]]:
    """Map one object at one frame; returns (outcome, object, lens)."""
    frames = run._frames[name]
    if not frames:
        return "no_record", None, None
    nearest = video_to_mocap(run.sync_model, video_frame, frames)
    predicted = expected_mocap_frame(run.sync_model, video_frame)
    if abs(nearest - predicted) > run.sync_gap:
        return "no_record", None, None
    record = run._by_frame[name][nearest]
    try:
        position = WorldPoint(record.x, record.y, record.z)
    except ValueError:  # non-finite mocap sample
        return "no_record", None, None
    selected = select_lens(run.rig, position)
    if selected is None:
        return "no_lens", None, None
    lens, pixel = selected
    cu = round_half_away(pixel.u)
    cv = round_half_away(pixel.v)
    offset = run.rig.lens_offset(lens)
    if not (offset <= cu < offset + run.rig.sub_width
            and 0 <= cv < run.rig.frame_height):
        return "off_frame", None, lens
    cfg = run.configs[name]
    obj = GroundTruthObject(
        name=name,
        id=cfg.id,
        lens=lens,
        centroid=(cu, cv),
        box=make_boxinfo((cu, cv), cfg),
        visible=min(record.markers, cfg.visible_max),
        visible_max=cfg.visible_max,
    )
    return "emitted", obj, lens


def map_frame(run: MappingRun, video_frame: int) -> GroundTruthFrame:
    """Annotations for one video frame (objects in name order)."""
    if not run.start <= video_frame <= run.end:
        raise ValueError(
            f"frame {video_frame} outside run range [{run.start}, {run.end}]")
    objects = []
    for name in sorted(run.streams):
        outcome, obj, _ = _map_object(run, name, video_frame)
        if outcome == "emitted":
            objects.append(obj)
    return GroundTruthFrame(video_frame, tuple(objects))


@dataclass
class ObjectRunStats:
    emitted: int = 0
    no_record: int = 0
    no_lens: int = 0
    off_frame: int = 0
    lens_crossings: int = 0


@dataclass
class RunSummary:
    frames: int
    per_object: Dict[str, ObjectRunStats] = field(default_factory=dict)

    def stream_gaps(self) -> int:
        return sum(s.no_record for s in self.per_object.values())


def map_video(run: MappingRun) -> Tuple[List[GroundTruthFrame], RunSummary]:
    """Map the whole frame range; deterministic for identical inputs."""
    summary = RunSummary(frames=run.end - run.start + 1)
    names = sorted(run.streams)
    for name in names:
        summary.per_object[name] = ObjectRunStats()
    previous_lens: Dict[str, LensId] = {}
    frames = []
    for v in range(run.start, run.end + 1):
        objects = []
        for name in names:
            outcome, obj, lens = _map_object(run, name, v)
            stats = summary.per_object[name]
            if outcome == "emitted":
                stats.emitted += 1
                objects.append(obj)
                prev = previous_lens.get(name)
                if prev is not None and prev is not lens:
                    stats.lens_crossings += 1
                previous_lens[name] = lens
            elif outcome == "no_record":
                stats.no_record += 1
            elif outcome == "no_lens":
                stats.no_lens += 1
            else:
                stats.off_frame += 1
        frames.append(GroundTruthFrame(v, tuple(objects)))
    return frames, summary


def prepare_run(
    session: Session,
    options: Optional[LMOptions] = None,
    frame_range: Optional[Tuple[int, int]] = None,
    max_sync_gap: Optional[float] = None,
) -> Tuple[MappingRun, Dict[LensId, PoseEstimate]]:
    """Estimate both lens poses from the session's training sets and
    assemble a MappingRun (the on-the-fly pose estimation of the mapping
    stage)."""
    poses = {}
    for lens in LensId:
        poses[lens] = estimate_pose(
            session.training[lens], session.intrinsics[lens], options)
    video = session.header.video
    rig = DualLensRig(
        lenses={
            lens: LensModel(session.intrinsics[lens], poses[lens].pose)
            for lens in LensId
        },
        frame_width=video.width,
        frame_height=video.height,
        sub_width=video.sub_width,
    )
    configs = {
        o.name: ObjectConfig(
            name=o.name, id=o.id, visible_max=o.visible_max,
            box_width=o.box_width, box_height=o.box_height)
        for o in session.header.objects
    }
    chosen_range = frame_range or session.header.frame_range
    if chosen_range is None:
        raise ValueError("no frame range: pass one or set it in the header")
    run = MappingRun(
        rig=rig,
        sync_model=session.sync_model,
        streams=session.streams,
        configs=configs,
        start=chosen_range[0],
        end=chosen_range[1],
        max_sync_gap=max_sync_gap,
    )
    return run, poses
