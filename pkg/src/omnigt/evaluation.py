"""Error quantification: wand re-projection statistics and tracker comparison.

Re-projection reports measure the systematic error of the calibrated
mapping by projecting each training point's measured world position and
taking the Euclidean pixel distance to the hand-clicked image point.  The
comparison half matches tracker output against ground-truth annotations
frame by frame, on (name, lens), and records per-object distance series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .dataio import GroundTruthFrame, TrainingSet
from .errors import BehindCamera, DegenerateDenominator
from .geometry import (
    CameraIntrinsics,
    CameraPose,
    PixelPoint,
    distort_project,
    world_to_camera,
)


@dataclass(frozen=True)
class ReprojectionSample:
    """One training point with its re-projected position and pixel error.

    A point that cannot be projected (behind the lens or on a degenerate
    radius) carries error=inf and no re-projected point; such samples are
    excluded from the report statistics.
    """

    image: PixelPoint
    reprojected: Optional[PixelPoint]
    error: float


@dataclass(frozen=True)
class ReprojectionReport:
    samples: Tuple[ReprojectionSample, ...]
    mean: float  # pixels, over projectable samples
    sigma: float  # sample standard deviation (n-1); 0 when count < 2
    count: int  # samples included in the statistics
    excluded: int  # samples with no valid projection
    singleton: bool  # statistics computed from a single sample


def reprojection_errors(
    ts: TrainingSet, intr: CameraIntrinsics, pose: CameraPose
) -> ReprojectionReport:
    """Per-point re-projection errors plus mean and sample sigma."""
    if not ts.points:
        raise ValueError("training set is empty")
    samples: List[ReprojectionSample] = []
    errors: List[float] = []
    excluded = 0
    for p in ts.points:
        try:
            reproj = distort_project(intr, world_to_camera(pose, p.world))
        except (BehindCamera, DegenerateDenominator):
            samples.append(ReprojectionSample(p.image, None, math.inf))
            excluded += 1
            continue
        err = math.hypot(p.image.u - reproj.u, p.image.v - reproj.v)
        samples.append(ReprojectionSample(p.image, reproj, err))
        errors.append(err)
    count = len(errors)
    if count == 0:
        mean, sigma = math.inf, 0.0
    else:
        mean = sum(errors) / count
        if count > 1:
            sigma = math.sqrt(sum((e - mean) ** 2 for e in errors) / (count - 1))
        else:
            sigma = 0.0
    return ReprojectionReport(
        samples=tuple(samples),
        mean=mean,
        sigma=sigma,
        count=count,
        excluded=excluded,
        singleton=count == 1,
    )


def error_map(report: ReprojectionReport) -> List[Tuple[PixelPoint, float]]:
    """Error samples positioned at their training points, report order."""
    if not report.samples:
        raise ValueError("report is empty")
    return [(s.image, s.error) for s in report.samples]


@dataclass(frozen=True)
class RadialSplit:
    """Mean error inside vs. outside a radial cutoff from a center point."""

    inner_mean: float
    outer_mean: float
    cutoff_radius: float
    inner_count: int
    outer_count: int


def radial_error_split(
    report: ReprojectionReport,
    center: Tuple[float, float],
    fraction: float = 0.8,
) -> RadialSplit:
    """Split projectable samples at fraction*max radius from `center`.

    Quantifies whether errors concentrate toward the edge of the field of
    view: points with radius above the cutoff go to the outer group.
    """
    pts = [(s.image, s.error) for s in report.samples if math.isfinite(s.error)]
    if not pts:
        raise ValueError("report has no projectable samples")
    radii = [math.hypot(p.u - center[0], p.v - center[1]) for p, _ in pts]
    cutoff = fraction * max(radii)
    inner = [e for r, (_, e) in zip(radii, pts) if r <= cutoff]
    outer = [e for r, (_, e) in zip(radii, pts) if r > cutoff]
    return RadialSplit(
        inner_mean=sum(inner) / len(inner) if inner else 0.0,
        outer_mean=sum(outer) / len(outer) if outer else 0.0,
        cutoff_radius=cutoff,
        inner_count=len(inner),
        outer_count=len(outer),
    )


# ---------------------------------------------------------------------------
# tracker comparison


@dataclass(frozen=True)
class ComparisonEntry:
    """Distance for one ground-truth object at one frame; None = missing."""

    frame: int
    distance: Optional[float]


@dataclass(frozen=True)
class ObjectSeries:
    name: str
    entries: Tuple[ComparisonEntry, ...]
    mean: float  # over matched frames; 0 when nothing matched
    max: float
    matched: int
    missing: int


@dataclass(frozen=True)
class ComparisonResult:
    series: Dict[str, ObjectSeries]
    unmatched_system: int  # system objects matching no gated ground truth
    warnings: Tuple[str, ...]  # id disagreements on matched pairs


def compare(
    gt: Sequence[GroundTruthFrame],
    sys: Sequence[GroundTruthFrame],
    min_visible: int = 1,
) -> ComparisonResult:
    """Frame-by-frame Euclidean distances between matching objects.

    Ground-truth objects with visible < min_visible are skipped (no ground
    truth available).  A match requires the same frame, name and lens; a
    matched pair with differing ids is recorded as a warning.  System
    objects never matched count as unmatched.
    """
    sys_by_frame = {f.number: list(f.objects) for f in sys}
    entries: Dict[str, List[ComparisonEntry]] = {}
    warnings: List[str] = []
    unmatched = 0
    gt_numbers = set()
    for frame in sorted(gt, key=lambda f: f.number):
        gt_numbers.add(frame.number)
        sys_objs = sys_by_frame.get(frame.number, [])
        consumed = [False] * len(sys_objs)
        for obj in frame.objects:
            if obj.visible < min_visible:
                continue
            match = None
            for i, cand in enumerate(sys_objs):
                if not consumed[i] and cand.name == obj.name and cand.lens is obj.lens:
                    match = i
                    break
            if match is None:
                entries.setdefault(obj.name, []).append(
                    ComparisonEntry(frame.number, None))
            else:
                consumed[match] = True
                cand = sys_objs[match]
                if cand.id != obj.id:
                    warnings.append(
                        f"frame {frame.number} object {obj.name!r}: "
                        f"id {obj.id!r} vs system id {cand.id!r}")
                d = math.hypot(
                    obj.centroid[0] - cand.centroid[0],
                    obj.centroid[1] - cand.centroid[1])
                entries.setdefault(obj.name, []).append(
                    ComparisonEntry(frame.number, d))
        unmatched += consumed.count(False)
    for frame in sys:
        if frame.number not in gt_numbers:
            unmatched += len(frame.objects)

    series = {}
    for name in sorted(entries):
        ent = tuple(entries[name])
        dists = [e.distance for e in ent if e.distance is not None]
        series[name] = ObjectSeries(
            name=name,
            entries=ent,
            mean=sum(dists) / len(dists) if dists else 0.0,
            max=max(dists) if dists else 0.0,
            matched=len(dists),
            missing=len(ent) - len(dists),
        )
    return ComparisonResult(
        series=series,
        unmatched_system=unmatched,
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# text/CSV emission


def error_map_csv(report: ReprojectionReport) -> bytes:
    lines = ["u,v,error"]
    for point, err in error_map(report):
        lines.append(f"{point.u!r},{point.v!r},{err!r}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def comparison_csv(result: ComparisonResult) -> bytes:
    lines = ["object,frame,distance"]
    for name in sorted(result.series):
        for entry in result.series[name].entries:
            dist = "" if entry.distance is None else repr(entry.distance)
            lines.append(f"{name},{entry.frame},{dist}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def summary_table(rows: Sequence[Tuple[str, ReprojectionReport]]) -> str:
    """Per-lens re-projection summary: mean, sigma and point count."""
    label_width = max([len(label) for label, _ in rows] + [10]) + 2
    out = [f"{'':<{label_width}}{'mean (pixels)':>14}{'sigma (pixels)':>16}{'Points':>8}"]
    for label, report in rows:
        out.append(
            f"{label:<{label_width}}{report.mean:>14.2f}"
            f"{report.sigma:>16.2f}{report.count:>8}")
    return "\n".join(out) + "\n"


def comparison_summary(result: ComparisonResult) -> str:
    out = [f"{'object':<10}{'matched':>9}{'missing':>9}{'mean':>10}{'max':>10}"]
    for name in sorted(result.series):
        s = result.series[name]
        out.append(
            f"{name:<10}{s.matched:>9}{s.missing:>9}{s.mean:>10.2f}{s.max:>10.2f}")
    out.append(f"unmatched system objects: {result.unmatched_system}")
    for w in result.warnings:
        out.append(f"warning: {w}")
    return "\n".join(out) + "\n"
