import math

import numpy as np
import pytest

from conftest import make_training_set, pose_looking
from omnigt.dataio import (
    BoxInfo,
    GroundTruthFrame,
    GroundTruthObject,
    TrainingPoint,
    TrainingSet,
)
from omnigt.evaluation import (
    compare,
    comparison_csv,
    comparison_summary,
    error_map,
    error_map_csv,
    radial_error_split,
    reprojection_errors,
    summary_table,
)
from omnigt.geometry import CameraPose, LensId, PixelPoint, WorldPoint


def _obj(name, id_, lens, centroid, visible=5, visible_max=5, box=None):
    return GroundTruthObject(
        name=name, id=id_, lens=lens, centroid=centroid,
        box=box or BoxInfo(x=centroid[0] - 10, y=centroid[1] - 10,
                           width=21, height=21),
        visible=visible, visible_max=visible_max)


class TestReprojectionErrors:
    def test_self_consistency_fixpoint(self, synth_intrinsics):
        rng = np.random.default_rng(110)
        pose = pose_looking((0, 0, 1), (0, 0, 0))
        ts = make_training_set(synth_intrinsics, pose, 15, rng)
        report = reprojection_errors(ts, synth_intrinsics, pose)
        assert report.count == 15
        assert report.mean == 0.0
        assert report.sigma == 0.0
        assert all(s.error < 1e-9 for s in report.samples)

    def test_singleton_statistics(self, synth_intrinsics):
        pose = pose_looking((0, 0, 1), (0, 0, 0))
        world = WorldPoint(100.0, 50.0, 2000.0)
        from omnigt.geometry import project

        true_px = project(synth_intrinsics, pose, world)
        # a click exactly 2.78 px away horizontally
        ts = TrainingSet(lens=LensId.BACKSIDE, session="s", points=(
            TrainingPoint(frame=0, image=PixelPoint(true_px.u + 2.78, true_px.v),
                          world=world, lens=LensId.BACKSIDE),))
        report = reprojection_errors(ts, synth_intrinsics, pose)
        assert report.mean == pytest.approx(2.78, abs=1e-12)
        assert report.sigma == 0.0
        assert report.singleton
        assert report.count == 1

    def test_behind_camera_flagged_and_excluded(self, synth_intrinsics):
        pose = pose_looking((0, 0, 1), (0, 0, 0))
        good = WorldPoint(0.0, 0.0, 2000.0)
        behind = WorldPoint(0.0, 0.0, -2000.0)
        from omnigt.geometry import project

        px = project(synth_intrinsics, pose, good)
        ts = TrainingSet(lens=LensId.BACKSIDE, session="s", points=(
            TrainingPoint(frame=0, image=PixelPoint(px.u + 3.0, px.v),
                          world=good, lens=LensId.BACKSIDE),
            TrainingPoint(frame=1, image=PixelPoint(10.0, 10.0),
                          world=behind, lens=LensId.BACKSIDE),
        ))
        report = reprojection_errors(ts, synth_intrinsics, pose)
        assert report.count == 1
        assert report.excluded == 1
        assert math.isinf(report.samples[1].error)
        assert report.samples[1].reprojected is None
        assert report.mean == pytest.approx(3.0)

    def test_statistics_match_brute_force(self, synth_intrinsics):
        rng = np.random.default_rng(111)
        pose = pose_looking((0, 1, 0), (50, 60, 70))
        ts = make_training_set(synth_intrinsics, pose, 30, rng, noise=2.0)
        report = reprojection_errors(ts, synth_intrinsics, pose)
        errors = [s.error for s in report.samples if math.isfinite(s.error)]
        mean = sum(errors) / len(errors)
        sigma = math.sqrt(sum((e - mean) ** 2 for e in errors) / (len(errors) - 1))
        assert abs(report.mean - mean) < 1e-12
        assert abs(report.sigma - sigma) < 1e-12

    def test_empty_set_rejected(self, synth_intrinsics):
        ts = TrainingSet(lens=LensId.BACKSIDE, session="s", points=())
        with pytest.raises(ValueError):
            reprojection_errors(ts, synth_intrinsics, CameraPose.identity())


class TestErrorMap:
    def test_singleton(self, synth_intrinsics):
        pose = pose_looking((0, 0, 1), (0, 0, 0))
        world = WorldPoint(0.0, 0.0, 2000.0)
        ts = TrainingSet(lens=LensId.BACKSIDE, session="s", points=(
            TrainingPoint(frame=0, image=PixelPoint(480.0, 540.0),
                          world=world, lens=LensId.BACKSIDE),))
        report = reprojection_errors(ts, synth_intrinsics, pose)
        samples = error_map(report)
        assert len(samples) == 1
        assert samples[0][0] == PixelPoint(480.0, 540.0)

    def test_preserves_order_and_count(self, synth_intrinsics):
        rng = np.random.default_rng(112)
        pose = pose_looking((0, 0, 1), (0, 0, 0))
        ts = make_training_set(synth_intrinsics, pose, 25, rng, noise=1.0)
        report = reprojection_errors(ts, synth_intrinsics, pose)
        samples = error_map(report)
        assert len(samples) == len(report.samples) == 25
        for sample, point in zip(samples, ts.points):
            assert sample[0] == point.image

    def test_edge_bias_split_matches_grouping_oracle(self, synth_intrinsics):
        rng = np.random.default_rng(113)
        pose = pose_looking((0, 0, 1), (0, 0, 0))
        ts = make_training_set(synth_intrinsics, pose, 40, rng, noise=3.0)
        report = reprojection_errors(ts, synth_intrinsics, pose)
        center = (synth_intrinsics.cx, synth_intrinsics.cy)
        split = radial_error_split(report, center, fraction=0.8)
        # hand-rolled grouping
        pairs = [(math.hypot(s.image.u - center[0], s.image.v - center[1]),
                  s.error) for s in report.samples]
        rmax = max(r for r, _ in pairs)
        outer = [e for r, e in pairs if r > 0.8 * rmax]
        inner = [e for r, e in pairs if r <= 0.8 * rmax]
        assert split.outer_count == len(outer)
        assert split.inner_count == len(inner)
        assert split.outer_mean == pytest.approx(sum(outer) / len(outer))
        assert split.inner_mean == pytest.approx(sum(inner) / len(inner))
        assert split.cutoff_radius == pytest.approx(0.8 * rmax)


class TestCompare:
    def test_three_four_five(self):
        gt = [GroundTruthFrame(1, (_obj("EE1", "01", LensId.BACKSIDE, (530, 525)),))]
        sy = [GroundTruthFrame(1, (_obj("EE1", "01", LensId.BACKSIDE, (533, 529)),))]
        result = compare(gt, sy)
        assert result.series["EE1"].entries[0].distance == 5.0
        assert result.series["EE1"].mean == 5.0
        assert result.unmatched_system == 0

    def test_identity(self):
        frames = [
            GroundTruthFrame(1, (_obj("EE1", "01", LensId.BACKSIDE, (530, 525)),
                                 _obj("EE2", "02", LensId.BUTTONSIDE, (1506, 458)))),
            GroundTruthFrame(2, (_obj("EE1", "01", LensId.BACKSIDE, (531, 526)),)),
        ]
        result = compare(frames, frames)
        for series in result.series.values():
            assert all(e.distance == 0.0 for e in series.entries)
            assert series.missing == 0
        assert result.unmatched_system == 0
        assert result.warnings == ()

    def test_wrong_lens_is_missing_and_unmatched(self):
        gt = [GroundTruthFrame(1, (_obj("EE1", "01", LensId.BACKSIDE, (530, 525)),))]
        sy = [GroundTruthFrame(1, (_obj("EE1", "01", LensId.BUTTONSIDE, (1490, 525)),))]
        result = compare(gt, sy)
        assert result.series["EE1"].entries[0].distance is None
        assert result.series["EE1"].missing == 1
        assert result.unmatched_system == 1

    def test_matching_rule_over_all_name_lens_pairs(self):
        # enumerate every (name, lens) combination on both sides; matched
        # distance appears exactly when both name and lens agree
        names = ["EE1", "EE2"]
        lenses = [LensId.BACKSIDE, LensId.BUTTONSIDE]
        for gname in names:
            for glens in lenses:
                for sname in names:
                    for slens in lenses:
                        gu = 100 if glens is LensId.BACKSIDE else 1100
                        su = 140 if slens is LensId.BACKSIDE else 1140
                        gt = [GroundTruthFrame(1, (_obj(gname, "01", glens, (gu, 200)),))]
                        sy = [GroundTruthFrame(1, (_obj(sname, "01", slens, (su, 230)),))]
                        result = compare(gt, sy)
                        entry = result.series[gname].entries[0]
                        if gname == sname and glens is slens:
                            assert entry.distance == 50.0
                            assert result.unmatched_system == 0
                        else:
                            assert entry.distance is None
                            assert result.unmatched_system == 1

    def test_visibility_gate(self):
        gt = [GroundTruthFrame(1, (
            _obj("EE1", "01", LensId.BACKSIDE, (530, 525), visible=0),
            _obj("EE2", "02", LensId.BACKSIDE, (100, 100), visible=3),
        ))]
        sy = [GroundTruthFrame(1, (
            _obj("EE1", "01", LensId.BACKSIDE, (530, 525)),
            _obj("EE2", "02", LensId.BACKSIDE, (104, 103)),
        ))]
        result = compare(gt, sy, min_visible=1)
        assert "EE1" not in result.series  # gated out
        assert result.series["EE2"].entries[0].distance == 5.0
        assert result.unmatched_system == 1  # the EE1 system output

    def test_visibility_gate_monotone(self):
        rng = np.random.default_rng(114)
        frames = []
        for number in range(10):
            objs = []
            for i, name in enumerate(["EE1", "EE2", "EE3"]):
                objs.append(_obj(name, f"{i:02d}", LensId.BACKSIDE,
                                 (100 + 50 * i, 200),
                                 visible=int(rng.integers(0, 6))))
            frames.append(GroundTruthFrame(number, tuple(objs)))
        counts = []
        for gate in range(0, 7):
            result = compare(frames, frames, min_visible=gate)
            counts.append(sum(s.matched + s.missing
                              for s in result.series.values()))
        assert all(b <= a for a, b in zip(counts, counts[1:]))

    def test_distance_symmetric_in_roles(self):
        gt = [GroundTruthFrame(1, (_obj("EE1", "01", LensId.BACKSIDE, (530, 525)),))]
        sy = [GroundTruthFrame(1, (_obj("EE1", "01", LensId.BACKSIDE, (533, 529)),))]
        a = compare(gt, sy).series["EE1"].entries[0].distance
        b = compare(sy, gt).series["EE1"].entries[0].distance
        assert a == b == 5.0

    def test_id_mismatch_warning(self):
        gt = [GroundTruthFrame(1, (_obj("EE1", "01", LensId.BACKSIDE, (530, 525)),))]
        sy = [GroundTruthFrame(1, (_obj("EE1", "07", LensId.BACKSIDE, (530, 525)),))]
        result = compare(gt, sy)
        assert result.series["EE1"].entries[0].distance == 0.0
        assert len(result.warnings) == 1
        assert "07" in result.warnings[0]

    def test_system_frames_absent_from_gt_are_unmatched(self):
        gt = [GroundTruthFrame(1, (_obj("EE1", "01", LensId.BACKSIDE, (530, 525)),))]
        sy = [GroundTruthFrame(2, (_obj("EE1", "01", LensId.BACKSIDE, (530, 525)),))]
        result = compare(gt, sy)
        assert result.unmatched_system == 1


class TestEmission:
    def test_summary_table_shape(self, synth_intrinsics):
        rng = np.random.default_rng(115)
        pose = pose_looking((0, 0, 1), (0, 0, 0))
        left = reprojection_errors(
            make_training_set(synth_intrinsics, pose, 30, rng, noise=3.0),
            synth_intrinsics, pose)
        right = reprojection_errors(
            make_training_set(synth_intrinsics, pose, 21, rng, noise=2.0),
            synth_intrinsics, pose)
        text = summary_table([("Left lens", left), ("Right lens", right)])
        lines = text.splitlines()
        assert "mean (pixels)" in lines[0]
        assert "sigma (pixels)" in lines[0]
        assert "Points" in lines[0]
        assert lines[1].startswith("Left lens")
        assert lines[1].rstrip().endswith("30")
        assert lines[2].startswith("Right lens")
        assert lines[2].rstrip().endswith("21")

    def test_comparison_csv_missing_is_empty_field(self):
        gt = [GroundTruthFrame(1, (_obj("EE1", "01", LensId.BACKSIDE, (530, 525)),)),
              GroundTruthFrame(2, (_obj("EE1", "01", LensId.BACKSIDE, (530, 525)),))]
        sy = [GroundTruthFrame(1, (_obj("EE1", "01", LensId.BACKSIDE, (533, 529)),))]
        data = comparison_csv(compare(gt, sy)).decode()
        lines = data.splitlines()
        assert lines[0] == "object,frame,distance"
        assert lines[1] == "EE1,1,5.0"
        assert lines[2] == "EE1,2,"

    def test_error_map_csv(self, synth_intrinsics):
        rng = np.random.default_rng(116)
        pose = pose_looking((0, 0, 1), (0, 0, 0))
        ts = make_training_set(synth_intrinsics, pose, 5, rng, noise=1.0)
        report = reprojection_errors(ts, synth_intrinsics, pose)
        lines = error_map_csv(report).decode().splitlines()
        assert lines[0] == "u,v,error"
        assert len(lines) == 6

    def test_comparison_summary_text(self):
        gt = [GroundTruthFrame(1, (_obj("EE1", "01", LensId.BACKSIDE, (530, 525)),))]
        text = comparison_summary(compare(gt, gt))
        assert "EE1" in text
        assert "unmatched system objects: 0" in text
