"""Parsers and writers for every on-disk format.

Formats
-------
* Mocap CSV: UTF-8, header ``frame,timestamp,x,y,z,pitch,roll,yaw,markers,sync``;
  the parser accepts any column permutation of those names (header-driven),
  the writer always emits the canonical order with LF line endings.
* Training XML: ``<training lens session><point frame u v x y z/></training>``
  with u, v in lens-local pixels and x, y, z in world millimetres.
* Ground-truth annotation XML: ``dataset/frameInformation`` blocks holding a
  self-closed ``<frame number/>`` marker followed by sibling ``<object>``
  elements with ``boxinfo``, ``centroid`` and ``visibility`` children.
* Corner views: CSV with header ``view,u,v``; rows grouped by contiguous
  view id, exactly cols*rows points per view in row-major board order.
* Intrinsics / pose / calibration results: JSON.
* Session header XML: record of the input files making up one recording
  session plus the flash sync anchors and video geometry.

Every parser either returns a value or raises a structured ToolkitError;
arbitrary bytes never escape as stdlib exceptions.
"""

from __future__ import annotations

import csv
import io
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

from .calibration import BoardSpec, CalibrationResult, CornerView, board_points
from .errors import (
    CountMismatch,
    DuplicateObject,
    MalformedRow,
    MissingFile,
    MissingHeader,
    SchemaViolation,
)
from .geometry import (
    CameraIntrinsics,
    CameraPose,
    LensId,
    PixelPoint,
    WorldPoint,
)
from .sync import FlashPair, SyncModel, build_sync

FRAME_WIDTH = 1920
FRAME_HEIGHT = 1080
SUB_WIDTH = 960

_CSV_COLUMNS = ("frame", "timestamp", "x", "y", "z",
                "pitch", "roll", "yaw", "markers", "sync")


def _fmt(value: float) -> str:
    """Shortest exact decimal form; round-trips through float()."""
    return repr(float(value))


def _attr_escape(value: str) -> str:
    return escape(value, {'"': "&quot;"})


# ---------------------------------------------------------------------------
# record types


@dataclass(frozen=True)
class MocapRecord:
    """One mocap sample: pose of a tracked object plus bookkeeping fields."""

    frame: int
    timestamp: float
    x: float
    y: float
    z: float
    pitch: float
    roll: float
    yaw: float
    markers: int
    sync: int

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError("frame must be >= 0")
        if self.markers < 0:
            raise ValueError("markers must be >= 0")

    def position(self) -> WorldPoint:
        return WorldPoint(self.x, self.y, self.z)


@dataclass(frozen=True)
class TrainingPoint:
    """One 2D<->3D correspondence: a clicked wand-marker pixel and the
    measured world position at that video frame."""

    frame: int
    image: PixelPoint  # lens-local
    world: WorldPoint
    lens: LensId


@dataclass(frozen=True)
class TrainingSet:
    """All training points collected for one lens in one session.

    Pose estimation requires at least 4 points; the container itself stays
    valid below that so partially annotated sets can be persisted.
    """

    lens: LensId
    session: str
    points: Tuple[TrainingPoint, ...]


@dataclass(frozen=True)
class BoxInfo:
    """Placeholder bounding box: corner plus dimensions, pixels."""

    x: int
    y: int
    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("box dimensions must be positive")


@dataclass(frozen=True)
class GroundTruthObject:
    """One annotated object in one frame."""

    name: str
    id: str
    lens: LensId
    centroid: Tuple[int, int]  # (u, v), full-frame
    box: BoxInfo
    visible: int
    visible_max: int

    def __post_init__(self):
        if not 0 <= self.visible <= self.visible_max:
            raise ValueError("visible must lie in [0, visibleMax]")
        u, v = self.centroid
        lo = SUB_WIDTH if self.lens is LensId.BUTTONSIDE else 0
        if not lo <= u < lo + SUB_WIDTH:
            raise ValueError(
                f"centroid u={u} outside the {self.lens.value} half-frame")
        if not 0 <= v < FRAME_HEIGHT:
            raise ValueError(f"centroid v={v} outside the frame")


@dataclass(frozen=True)
class GroundTruthFrame:
    """All annotated objects of one video frame."""

    number: int
    objects: Tuple[GroundTruthObject, ...]

    def __post_init__(self):
        seen = set()
        for obj in self.objects:
            key = (obj.name, obj.id)
            if key in seen:
                raise DuplicateObject(
                    f"frame {self.number}: duplicate object {key}")
            seen.add(key)


# ---------------------------------------------------------------------------
# mocap CSV


def parse_mocap_csv(data: bytes) -> List[MocapRecord]:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MissingHeader(f"input is not UTF-8 text: {exc}") from None
    rows = [row for row in csv.reader(io.StringIO(text)) if row]
    if not rows:
        raise MissingHeader("empty input")
    header = [h.strip() for h in rows[0]]
    if sorted(header) != sorted(_CSV_COLUMNS):
        raise MissingHeader(
            f"expected columns {','.join(_CSV_COLUMNS)} in any order, "
            f"got {','.join(header)}")
    idx = {name: header.index(name) for name in _CSV_COLUMNS}
    records = []
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise MalformedRow(i, f"expected {len(header)} fields, got {len(row)}")
        try:
            records.append(MocapRecord(
                frame=int(row[idx["frame"]]),
                timestamp=float(row[idx["timestamp"]]),
                x=float(row[idx["x"]]),
                y=float(row[idx["y"]]),
                z=float(row[idx["z"]]),
                pitch=float(row[idx["pitch"]]),
                roll=float(row[idx["roll"]]),
                yaw=float(row[idx["yaw"]]),
                markers=int(row[idx["markers"]]),
                sync=int(row[idx["sync"]]),
            ))
        except ValueError as exc:
            raise MalformedRow(i, str(exc)) from None
    return records


def write_mocap_csv(records: Sequence[MocapRecord]) -> bytes:
    lines = [",".join(_CSV_COLUMNS)]
    for r in records:
        lines.append(",".join([
            str(r.frame), _fmt(r.timestamp),
            _fmt(r.x), _fmt(r.y), _fmt(r.z),
            _fmt(r.pitch), _fmt(r.roll), _fmt(r.yaw),
            str(r.markers), str(r.sync),
        ]))
    return ("\n".join(lines) + "\n").encode("utf-8")


def sync_flagged(records: Sequence[MocapRecord]) -> List[MocapRecord]:
    """Rows whose sync field logged a flash event."""
    return [r for r in records if r.sync != 0]


# ---------------------------------------------------------------------------
# XML plumbing


def _parse_xml(data: bytes) -> ET.Element:
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        raise SchemaViolation("/", f"not well-formed XML: {exc}") from None


def _require_attr(el: ET.Element, name: str, path: str) -> str:
    value = el.get(name)
    if value is None:
        raise SchemaViolation(path, f"missing attribute {name!r}")
    return value


def _int_attr(el: ET.Element, name: str, path: str) -> int:
    raw = _require_attr(el, name, path)
    try:
        return int(raw)
    except ValueError:
        raise SchemaViolation(path, f"attribute {name}={raw!r} is not an integer") from None


def _float_attr(el: ET.Element, name: str, path: str) -> float:
    raw = _require_attr(el, name, path)
    try:
        return float(raw)
    except ValueError:
        raise SchemaViolation(path, f"attribute {name}={raw!r} is not a number") from None


def _lens_attr(el: ET.Element, name: str, path: str) -> LensId:
    raw = _require_attr(el, name, path)
    try:
        return LensId.from_string(raw)
    except ValueError as exc:
        raise SchemaViolation(path, str(exc)) from None


# ---------------------------------------------------------------------------
# training XML


def parse_training_xml(data: bytes) -> TrainingSet:
    root = _parse_xml(data)
    if root.tag != "training":
        raise SchemaViolation("/", f"expected <training> root, got <{root.tag}>")
    lens = _lens_attr(root, "lens", "training")
    session = _require_attr(root, "session", "training")
    points = []
    for i, el in enumerate(root):
        path = f"training/point[{i + 1}]"
        if el.tag != "point":
            raise SchemaViolation(path, f"unexpected element <{el.tag}>")
        frame = _int_attr(el, "frame", path)
        image = PixelPoint(_float_attr(el, "u", path), _float_attr(el, "v", path))
        world = WorldPoint(
            _float_attr(el, "x", path),
            _float_attr(el, "y", path),
            _float_attr(el, "z", path),
        )
        points.append(TrainingPoint(frame=frame, image=image, world=world, lens=lens))
    return TrainingSet(lens=lens, session=session, points=tuple(points))


def write_training_xml(ts: TrainingSet) -> bytes:
    lines = [
        f'<training lens="{ts.lens.value}" session="{_attr_escape(ts.session)}">'
    ]
    for p in ts.points:
        lines.append(
            f'  <point frame="{p.frame}" u="{_fmt(p.image.u)}" v="{_fmt(p.image.v)}"'
            f' x="{_fmt(p.world.X)}" y="{_fmt(p.world.Y)}" z="{_fmt(p.world.Z)}"/>'
        )
    lines.append("</training>")
    return ("\n".join(lines) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# ground-truth annotation XML


def _parse_gt_object(el: ET.Element, path: str) -> GroundTruthObject:
    name = _require_attr(el, "name", path)
    lens = _lens_attr(el, "lens", path)
    obj_id = _require_attr(el, "id", path)
    box_el = el.find("boxinfo")
    centroid_el = el.find("centroid")
    vis_el = el.find("visibility")
    if box_el is None or centroid_el is None or vis_el is None:
        raise SchemaViolation(
            path, "object needs boxinfo, centroid and visibility children")
    for child in el:
        if child.tag not in ("boxinfo", "centroid", "visibility"):
            raise SchemaViolation(path, f"unexpected element <{child.tag}>")
    box = BoxInfo(
        x=_int_attr(box_el, "x", f"{path}/boxinfo"),
        y=_int_attr(box_el, "y", f"{path}/boxinfo"),
        width=_int_attr(box_el, "width", f"{path}/boxinfo"),
        height=_int_attr(box_el, "height", f"{path}/boxinfo"),
    )
    centroid = (
        _int_attr(centroid_el, "x", f"{path}/centroid"),
        _int_attr(centroid_el, "y", f"{path}/centroid"),
    )
    visible = _int_attr(vis_el, "visible", f"{path}/visibility")
    visible_max = _int_attr(vis_el, "visibleMax", f"{path}/visibility")
    try:
        return GroundTruthObject(
            name=name, id=obj_id, lens=lens, centroid=centroid,
            box=box, visible=visible, visible_max=visible_max)
    except ValueError as exc:
        raise SchemaViolation(path, str(exc)) from None


def parse_groundtruth_xml(data: bytes) -> List[GroundTruthFrame]:
    root = _parse_xml(data)
    if root.tag != "dataset":
        raise SchemaViolation("/", f"expected <dataset> root, got <{root.tag}>")
    frames: List[GroundTruthFrame] = []
    seen_numbers = set()
    for bi, block in enumerate(root):
        bpath = f"dataset/frameInformation[{bi + 1}]"
        if block.tag != "frameInformation":
            raise SchemaViolation(bpath, f"unexpected element <{block.tag}>")
        number: Optional[int] = None
        objects: List[GroundTruthObject] = []

        def flush():
            if number is not None:
                frames.append(GroundTruthFrame(number, tuple(objects)))

        for ei, el in enumerate(block):
            path = f"{bpath}/*[{ei + 1}]"
            if el.tag == "frame":
                flush()
                number = _int_attr(el, "number", path)
                if number in seen_numbers:
                    raise SchemaViolation(path, f"duplicate frame number {number}")
                seen_numbers.add(number)
                objects = []
            elif el.tag == "object":
                if number is None:
                    raise SchemaViolation(path, "object appears before any <frame> marker")
                objects.append(_parse_gt_object(el, path))
            else:
                raise SchemaViolation(path, f"unexpected element <{el.tag}>")
        flush()
    return frames


def write_groundtruth_xml(frames: Sequence[GroundTruthFrame]) -> bytes:
    out = ["<dataset>"]
    for f in frames:
        out.append("  <frameInformation>")
        out.append(f'    <frame number="{f.number}" />')
        for o in f.objects:
            out.append(
                f'    <object name="{_attr_escape(o.name)}" lens="{o.lens.value}"'
                f' id="{_attr_escape(o.id)}">')
            out.append(
                f'        <boxinfo y="{o.box.y}" x="{o.box.x}"'
                f' width="{o.box.width}" height="{o.box.height}"/>')
            out.append(f'        <centroid y="{o.centroid[1]}" x="{o.centroid[0]}"/>')
            out.append(
                f'        <visibility visible="{o.visible}"'
                f' visibleMax="{o.visible_max}"/>')
            out.append("    </object>")
        out.append("  </frameInformation>")
    out.append("</dataset>")
    return ("\n".join(out) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# corner views


def parse_corner_views(data: bytes, board: BoardSpec) -> List[CornerView]:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MissingHeader(f"input is not UTF-8 text: {exc}") from None
    rows = [row for row in csv.reader(io.StringIO(text)) if row]
    if not rows:
        raise MissingHeader("empty input")
    header = [h.strip() for h in rows[0]]
    if header != ["view", "u", "v"]:
        raise MissingHeader(f"expected header view,u,v, got {','.join(header)}")
    groups: List[Tuple[str, List[Tuple[float, float]]]] = []
    for i, row in enumerate(rows[1:]):
        if len(row) != 3:
            raise MalformedRow(i, f"expected 3 fields, got {len(row)}")
        vid = row[0]
        try:
            point = (float(row[1]), float(row[2]))
        except ValueError as exc:
            raise MalformedRow(i, str(exc)) from None
        if not groups or groups[-1][0] != vid:
            groups.append((vid, []))
        groups[-1][1].append(point)
    base = board_points(board)
    views = []
    for vid, points in groups:
        if len(points) != board.corner_count:
            raise CountMismatch(
                f"view {vid!r}: expected {board.corner_count} points, "
                f"got {len(points)}")
        views.append(CornerView(
            view_id=vid,
            board_points=base,
            image_points=np.array(points),
        ))
    return views


def write_corner_views(views: Sequence[CornerView]) -> bytes:
    lines = ["view,u,v"]
    for view in views:
        for u, v in view.image_points:
            lines.append(f"{view.view_id},{_fmt(u)},{_fmt(v)}")
    return ("\n".join(lines) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# JSON serialization of calibration artifacts


_INTRINSIC_KEYS = ("fx", "fy", "cx", "cy",
                   "k1", "k2", "k3", "k4", "k5", "k6", "p1", "p2")


def _parse_json(data: bytes) -> dict:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaViolation("/", f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaViolation("/", "top-level JSON value must be an object")
    return doc


def _intrinsics_from_dict(doc: dict, path: str) -> CameraIntrinsics:
    kwargs = {}
    for key in _INTRINSIC_KEYS:
        if key not in doc:
            raise SchemaViolation(path, f"missing key {key!r}")
        try:
            kwargs[key] = float(doc[key])
        except (TypeError, ValueError):
            raise SchemaViolation(path, f"key {key!r} is not a number") from None
    try:
        return CameraIntrinsics(**kwargs)
    except ValueError as exc:
        raise SchemaViolation(path, str(exc)) from None


def parse_intrinsics_json(data: bytes) -> CameraIntrinsics:
    """Accepts a flat intrinsics object or a calibration result wrapper."""
    doc = _parse_json(data)
    if "intrinsics" in doc and isinstance(doc["intrinsics"], dict):
        return _intrinsics_from_dict(doc["intrinsics"], "intrinsics")
    return _intrinsics_from_dict(doc, "/")


def write_intrinsics_json(intr: CameraIntrinsics) -> bytes:
    doc = {key: getattr(intr, key) for key in _INTRINSIC_KEYS}
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def _pose_to_dict(pose: CameraPose) -> dict:
    return {"rotation": pose.R.tolist(), "translation": pose.t.tolist()}


def _pose_from_dict(doc: dict, path: str) -> CameraPose:
    if "rotation" not in doc or "translation" not in doc:
        raise SchemaViolation(path, "pose needs rotation and translation keys")
    try:
        return CameraPose(np.array(doc["rotation"], dtype=float),
                          np.array(doc["translation"], dtype=float))
    except ValueError as exc:
        raise SchemaViolation(path, str(exc)) from None


def write_pose_json(pose: CameraPose, lens: LensId, session: str) -> bytes:
    doc = {"lens": lens.value, "session": session, **_pose_to_dict(pose)}
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def parse_pose_json(data: bytes) -> Tuple[CameraPose, LensId, str]:
    doc = _parse_json(data)
    for key in ("lens", "session"):
        if key not in doc:
            raise SchemaViolation("/", f"missing key {key!r}")
    try:
        lens = LensId.from_string(doc["lens"])
    except ValueError as exc:
        raise SchemaViolation("lens", str(exc)) from None
    return _pose_from_dict(doc, "/"), lens, str(doc["session"])


def write_calibration_json(
    result: CalibrationResult, view_ids: Sequence[str]
) -> bytes:
    doc = {
        "intrinsics": {k: getattr(result.intrinsics, k) for k in _INTRINSIC_KEYS},
        "rms_error": result.rms_error,
        "converged": result.converged,
        "views": [
            {"view": vid, "mean_error": err, **_pose_to_dict(pose)}
            for vid, pose, err in zip(view_ids, result.poses, result.view_errors)
        ],
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# session header


@dataclass(frozen=True)
class VideoMeta:
    fps: float = 15.0
    width: int = FRAME_WIDTH
    height: int = FRAME_HEIGHT
    sub_width: int = SUB_WIDTH


@dataclass(frozen=True)
class LensRefs:
    intrinsics_ref: str
    training_ref: str


@dataclass(frozen=True)
class ObjectRef:
    name: str
    id: str
    mocap_ref: str
    visible_max: int
    box_width: int = 64
    box_height: int = 64


@dataclass(frozen=True)
class SessionHeader:
    """File manifest of one recording session."""

    session_id: str
    video: VideoMeta
    lenses: Dict[LensId, LensRefs]
    objects: Tuple[ObjectRef, ...]
    flashes: Tuple[FlashPair, FlashPair]
    frame_range: Optional[Tuple[int, int]] = None


@dataclass(frozen=True, eq=False)
class Session:
    """A fully loaded session: the header plus every referenced file parsed."""

    header: SessionHeader
    intrinsics: Dict[LensId, CameraIntrinsics]
    training: Dict[LensId, TrainingSet]
    streams: Dict[str, Tuple[MocapRecord, ...]]
    sync_model: SyncModel


def parse_session_header(data: bytes) -> SessionHeader:
    root = _parse_xml(data)
    if root.tag != "session":
        raise SchemaViolation("/", f"expected <session> root, got <{root.tag}>")
    session_id = _require_attr(root, "id", "session")
    video = VideoMeta()
    lenses: Dict[LensId, LensRefs] = {}
    objects: List[ObjectRef] = []
    flashes: List[FlashPair] = []
    frame_range: Optional[Tuple[int, int]] = None
    for el in root:
        path = f"session/{el.tag}"
        if el.tag == "video":
            video = VideoMeta(
                fps=_float_attr(el, "fps", path) if el.get("fps") else 15.0,
                width=_int_attr(el, "width", path) if el.get("width") else FRAME_WIDTH,
                height=_int_attr(el, "height", path) if el.get("height") else FRAME_HEIGHT,
                sub_width=_int_attr(el, "subWidth", path) if el.get("subWidth") else SUB_WIDTH,
            )
        elif el.tag == "lens":
            lens = _lens_attr(el, "name", path)
            if lens in lenses:
                raise SchemaViolation(path, f"duplicate lens {lens.value}")
            lenses[lens] = LensRefs(
                intrinsics_ref=_require_attr(el, "intrinsics", path),
                training_ref=_require_attr(el, "training", path),
            )
        elif el.tag == "object":
            name = _require_attr(el, "name", path)
            if any(o.name == name for o in objects):
                raise SchemaViolation(path, f"duplicate object {name!r}")
            objects.append(ObjectRef(
                name=name,
                id=_require_attr(el, "id", path),
                mocap_ref=_require_attr(el, "mocap", path),
                visible_max=_int_attr(el, "visibleMax", path),
                box_width=_int_attr(el, "boxWidth", path) if el.get("boxWidth") else 64,
                box_height=_int_attr(el, "boxHeight", path) if el.get("boxHeight") else 64,
            ))
        elif el.tag == "sync":
            for fl in el:
                fpath = f"{path}/flash"
                if fl.tag != "flash":
                    raise SchemaViolation(fpath, f"unexpected element <{fl.tag}>")
                try:
                    flashes.append(FlashPair(
                        video_frame=_int_attr(fl, "video", fpath),
                        mocap_frame=_int_attr(fl, "mocap", fpath),
                    ))
                except ValueError as exc:
                    raise SchemaViolation(fpath, str(exc)) from None
        elif el.tag == "range":
            start = _int_attr(el, "start", path)
            end = _int_attr(el, "end", path)
            if start > end:
                raise SchemaViolation(path, "range start must be <= end")
            frame_range = (start, end)
        else:
            raise SchemaViolation(path, f"unexpected element <{el.tag}>")
    if set(lenses) != set(LensId):
        raise SchemaViolation(
            "session", "exactly two lens entries are required, one per lens")
    if len(flashes) != 2:
        raise SchemaViolation(
            "session/sync", f"exactly two flash anchors required, got {len(flashes)}")
    return SessionHeader(
        session_id=session_id,
        video=video,
        lenses=lenses,
        objects=tuple(objects),
        flashes=(flashes[0], flashes[1]),
        frame_range=frame_range,
    )


def save_session(header: SessionHeader) -> bytes:
    v = header.video
    lines = [
        f'<session id="{_attr_escape(header.session_id)}">',
        f'  <video fps="{_fmt(v.fps)}" width="{v.width}" height="{v.height}"'
        f' subWidth="{v.sub_width}"/>',
    ]
    for lens in (LensId.BACKSIDE, LensId.BUTTONSIDE):
        refs = header.lenses[lens]
        lines.append(
            f'  <lens name="{lens.value}" intrinsics="{_attr_escape(refs.intrinsics_ref)}"'
            f' training="{_attr_escape(refs.training_ref)}"/>')
    for o in header.objects:
        lines.append(
            f'  <object name="{_attr_escape(o.name)}" id="{_attr_escape(o.id)}"'
            f' mocap="{_attr_escape(o.mocap_ref)}" visibleMax="{o.visible_max}"'
            f' boxWidth="{o.box_width}" boxHeight="{o.box_height}"/>')
    lines.append("  <sync>")
    for fl in header.flashes:
        lines.append(f'    <flash video="{fl.video_frame}" mocap="{fl.mocap_frame}"/>')
    lines.append("  </sync>")
    if header.frame_range is not None:
        lines.append(
            f'  <range start="{header.frame_range[0]}" end="{header.frame_range[1]}"/>')
    lines.append("</session>")
    return ("\n".join(lines) + "\n").encode("utf-8")


def dir_resolver(base) -> Callable[[str], bytes]:
    """Resolve relative file references against a directory."""
    from pathlib import Path

    base_path = Path(base)

    def resolve(ref: str) -> bytes:
        return (base_path / ref).read_bytes()

    return resolve


def load_session(data: bytes, resolver: Callable[[str], bytes]) -> Session:
    """Parse a session header and pull in every referenced file."""
    header = parse_session_header(data)

    def fetch(ref: str) -> bytes:
        try:
            return resolver(ref)
        except (FileNotFoundError, KeyError, OSError) as exc:
            raise MissingFile(f"cannot resolve {ref!r}: {exc}") from None

    intrinsics = {}
    training = {}
    for lens, refs in header.lenses.items():
        intrinsics[lens] = parse_intrinsics_json(fetch(refs.intrinsics_ref))
        ts = parse_training_xml(fetch(refs.training_ref))
        if ts.lens is not lens:
            raise SchemaViolation(
                f"session/lens[{lens.value}]",
                f"training file {refs.training_ref!r} is for lens {ts.lens.value}")
        training[lens] = ts
    streams = {}
    for obj in header.objects:
        records = parse_mocap_csv(fetch(obj.mocap_ref))
        streams[obj.name] = tuple(sorted(records, key=lambda r: r.frame))
    model = build_sync(header.flashes[0], header.flashes[1])
    return Session(
        header=header,
        intrinsics=intrinsics,
        training=training,
        streams=streams,
        sync_model=model,
    )
