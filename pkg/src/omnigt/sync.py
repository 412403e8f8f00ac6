"""Video-to-mocap time alignment from two flash anchor events.

Two manually identified flash events fix an affine map from video frame
index to mocap frame index; each video frame is then lined up with the
mocap record nearest the predicted index.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Sequence

from .errors import DegenerateAnchors, EmptyTimeline


@dataclass(frozen=True)
class FlashPair:
    """One flash event: the video frame showing it and the mocap frame
    whose sync field logged it."""

    video_frame: int
    mocap_frame: int

    def __post_init__(self):
        if self.video_frame < 0 or self.mocap_frame < 0:
            raise ValueError("flash frame indices must be >= 0")


@dataclass(frozen=True)
class SyncModel:
    """Affine video->mocap frame mapping anchored at two flashes."""

    first: FlashPair
    second: FlashPair
    slope: float  # mocap frames per video frame


def build_sync(a: FlashPair, b: FlashPair) -> SyncModel:
    """Fit the affine mapping; anchors may be given in either order."""
    if a.video_frame > b.video_frame:
        a, b = b, a
    dv = b.video_frame - a.video_frame
    dm = b.mocap_frame - a.mocap_frame
    if dv == 0:
        raise DegenerateAnchors("flash anchors share a video frame")
    if dm <= 0:
        raise DegenerateAnchors("mocap frames must increase with video frames")
    return SyncModel(first=a, second=b, slope=dm / dv)


def expected_mocap_frame(model: SyncModel, video_frame: int) -> float:
    """Continuous mocap frame index predicted for a video frame."""
    return model.first.mocap_frame + (video_frame - model.first.video_frame) * model.slope


def video_to_mocap(model: SyncModel, video_frame: int, available: Sequence[int]) -> int:
    """Nearest available mocap frame to the prediction; ties round up.

    `available` must be sorted ascending.  Out-of-range predictions clamp
    to the nearest end of the timeline.
    """
    if not available:
        raise EmptyTimeline("no mocap frames to synchronize against")
    target = expected_mocap_frame(model, video_frame)
    i = bisect.bisect_left(available, target)
    if i == 0:
        return available[0]
    if i == len(available):
        return available[-1]
    lo, hi = available[i - 1], available[i]
    if target - lo < hi - target:
        return lo
    return hi  # equidistant -> larger frame
