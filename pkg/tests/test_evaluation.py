from __future__ import annotations

import json

import numpy as np
import pytest

from extremeforge import (
    BBox,
    Dataset,
    Detection,
    EvalReport,
    MatchResult,
    average_precision,
    evaluate,
    iou,
    match_detections,
    robustness_report,
)
from extremeforge.core import AnnotatedImage
from extremeforge.errors import UnknownImageIdError, UnknownLabelError
from extremeforge.evaluation import (
    COCO_THRESHOLDS,
    format_report_table,
    format_robustness,
    pool_matches,
)

from conftest import jittered_detection, random_box
from reference_eval import ref_ap, ref_evaluate


def synthetic_fixture(rng, max_images=10, max_boxes=20, n_classes=3):
    """Random images with GT boxes, with detections that are a mix of
    jittered copies, duplicates, and pure noise."""
    from pathlib import Path

    items = []
    detections = {}
    n_images = int(rng.integers(1, max_images + 1))
    for i in range(n_images):
        image_id = f"im{i}"
        n_boxes = int(rng.integers(0, max_boxes + 1))
        boxes = tuple(random_box(rng, n_classes=n_classes) for _ in range(n_boxes))
        dets = []
        for b in boxes:
            if rng.random() < 0.8:
                dets.append(jittered_detection(rng, b))
            if rng.random() < 0.3:
                dets.append(jittered_detection(rng, b))  # duplicate hit
        for _ in range(int(rng.integers(0, 5))):
            dets.append(Detection(random_box(rng, n_classes=n_classes), float(rng.uniform(0.05, 1.0))))
        # occasional shared-confidence ties
        if len(dets) >= 2 and rng.random() < 0.5:
            tied = dets[0].confidence
            dets[1] = Detection(dets[1].box, tied)
        items.append(AnnotatedImage(image_id, Path(f"/nonexistent/{image_id}.png"), boxes))
        detections[image_id] = dets
    names = tuple(f"c{k}" for k in range(n_classes))
    return Dataset(Path("/nonexistent"), tuple(items), names), detections


class TestIou:
    def test_identical(self):
        b = BBox(0, 0.5, 0.5, 0.2, 0.3)
        assert iou(b, b) == 1.0

    def test_disjoint(self):
        assert iou(BBox(0, 0.2, 0.2, 0.2, 0.2), BBox(0, 0.8, 0.8, 0.2, 0.2)) == 0.0

    def test_one_third_case(self):
        # corner boxes (0,0)-(2,2) and (1,0)-(3,2), normalized by 4:
        # intersection 2, union 6
        a = BBox(0, 0.25, 0.25, 0.5, 0.5)
        b = BBox(0, 0.5, 0.25, 0.5, 0.5)
        assert iou(a, b) == pytest.approx(1 / 3, abs=1e-15)

    def test_symmetry(self, rng):
        for _ in range(20):
            a, b = random_box(rng), random_box(rng)
            assert iou(a, b) == iou(b, a)
            assert 0.0 <= iou(a, b) <= 1.0


class TestMatching:
    def test_single_perfect_match(self):
        gt = BBox(0, 0.5, 0.5, 0.2, 0.2)
        m = match_detections([Detection(gt, 0.9)], [gt], 0.5, 0)
        assert m.flags == (True,) and m.n_gt == 1

    def test_single_gt_matched_once(self):
        gt = BBox(0, 0.5, 0.5, 0.2, 0.2)
        d1 = Detection(BBox(0, 0.5, 0.5, 0.2, 0.2), 0.9)
        d2 = Detection(BBox(0, 0.52, 0.5, 0.2, 0.2), 0.8)
        m = match_detections([d2, d1], [gt], 0.5, 0)
        # sorted by confidence: d1 wins, d2 left unmatched
        assert m.flags == (True, False)
        assert m.confidences == (0.9, 0.8)

    def test_below_threshold_is_fp(self):
        gt = BBox(0, 0.5, 0.5, 0.2, 0.2)
        det = Detection(BBox(0, 0.6, 0.5, 0.2, 0.2), 0.9)  # IoU = 1/3
        assert match_detections([det], [gt], 0.5, 0).flags == (False,)
        assert match_detections([det], [gt], 0.3, 0).flags == (True,)

    def test_ties_break_by_input_order(self):
        gt = BBox(0, 0.5, 0.5, 0.2, 0.2)
        far = Detection(BBox(0, 0.55, 0.5, 0.2, 0.2), 0.7)
        near = Detection(BBox(0, 0.5, 0.5, 0.2, 0.2), 0.7)
        # equal confidence: the first listed is matched first
        m = match_detections([far, near], [gt], 0.5, 0)
        assert m.flags == (True, False)

    def test_highest_iou_gt_preferred(self):
        g_near = BBox(0, 0.5, 0.5, 0.2, 0.2)
        g_far = BBox(0, 0.56, 0.5, 0.2, 0.2)
        det = Detection(BBox(0, 0.5, 0.5, 0.2, 0.2), 0.9)
        m = match_detections([det, Detection(g_far, 0.8)], [g_far, g_near], 0.5, 0)
        # first det takes the exact-overlap gt, second still matches the other
        assert m.flags == (True, True)

    def test_other_classes_ignored(self):
        gt = BBox(1, 0.5, 0.5, 0.2, 0.2)
        det = Detection(BBox(0, 0.5, 0.5, 0.2, 0.2), 0.9)
        m = match_detections([det], [gt], 0.5, 0)
        assert m.flags == (False,) and m.n_gt == 0

    def test_threshold_bounds(self):
        with pytest.raises(ValueError):
            match_detections([], [], 0.0, 0)
        with pytest.raises(ValueError):
            match_detections([], [], 1.0, 0)

    def test_invariant_tp_bounded(self):
        with pytest.raises(ValueError):
            MatchResult((True, True), (0.9, 0.8), 1)


class TestAveragePrecision:
    def test_perfect(self):
        m = MatchResult((True, True), (0.9, 0.8), 2)
        assert average_precision(m) == pytest.approx(1.0, abs=1e-12)

    def test_no_detections(self):
        assert average_precision(MatchResult((), (), 3)) == 0.0

    def test_worked_case(self):
        m = MatchResult((True, False, True), (0.9, 0.8, 0.7), 2)
        expected = (51 * 1.0 + 50 * (2 / 3)) / 101
        assert average_precision(m) == pytest.approx(expected, abs=1e-9)

    def test_zero_gt_with_detections_scores_zero(self):
        assert average_precision(MatchResult((False,), (0.4,), 0)) == 0.0

    def test_zero_gt_no_detections_excluded(self):
        assert average_precision(MatchResult((), (), 0)) is None

    def test_matches_brute_force_on_random_flag_patterns(self, rng):
        for _ in range(200):
            n = int(rng.integers(0, 15))
            n_gt = int(rng.integers(0, 8))
            flags = []
            tp_left = n_gt
            for _ in range(n):
                hit = bool(rng.random() < 0.5) and tp_left > 0
                tp_left -= int(hit)
                flags.append(hit)
            confs = tuple(sorted((float(rng.random()) for _ in range(n)), reverse=True))
            got = average_precision(MatchResult(tuple(flags), confs, n_gt))
            want = ref_ap(flags, n_gt)
            if want is None:
                assert got is None
            else:
                assert got == pytest.approx(want, abs=1e-12)

    def test_low_confidence_fp_never_raises_ap(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 10))
            n_gt = int(rng.integers(1, 6))
            flags, tp_left = [], n_gt
            for _ in range(n):
                hit = bool(rng.random() < 0.6) and tp_left > 0
                tp_left -= int(hit)
                flags.append(hit)
            confs = tuple(np.sort(rng.uniform(0.2, 1.0, n))[::-1])
            base = average_precision(MatchResult(tuple(flags), confs, n_gt))
            worse = average_precision(MatchResult(tuple(flags) + (False,), confs + (0.1,), n_gt))
            assert worse <= base + 1e-12

    def test_top_confidence_tp_never_lowers_ap(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 10))
            n_gt = int(rng.integers(2, 6))
            flags, tp_left = [], n_gt - 1
            for _ in range(n):
                hit = bool(rng.random() < 0.5) and tp_left > 0
                tp_left -= int(hit)
                flags.append(hit)
            confs = tuple(np.sort(rng.uniform(0.0, 0.9, n))[::-1])
            base = average_precision(MatchResult(tuple(flags), confs, n_gt))
            better = average_precision(MatchResult((True,) + tuple(flags), (0.95,) + confs, n_gt))
            assert better >= base - 1e-12


class TestEvaluate:
    def test_perfect_detections(self, rng):
        dataset, _ = synthetic_fixture(rng, max_images=4, max_boxes=5)
        detections = {
            item.image_id: [Detection(b, 1.0) for b in item.boxes] for item in dataset.items
        }
        report = evaluate(dataset, detections)
        included = [v for v in report.ap50 if v is not None]
        assert included and all(v == pytest.approx(1.0, abs=1e-9) for v in included)
        assert report.map50 == pytest.approx(1.0, abs=1e-9)
        assert report.map5095 == pytest.approx(1.0, abs=1e-9)

    def test_empty_detections(self, rng):
        dataset, _ = synthetic_fixture(rng, max_images=4, max_boxes=5)
        report = evaluate(dataset, {})
        assert all(v in (0.0, None) for v in report.ap50)
        classes_with_gts = {
            b.class_id for item in dataset.items for b in item.boxes
        }
        for cid in classes_with_gts:
            assert report.ap50[cid] == 0.0

    def test_unknown_image_id(self, rng):
        dataset, detections = synthetic_fixture(rng, max_images=2)
        detections["ghost"] = []
        with pytest.raises(UnknownImageIdError):
            evaluate(dataset, detections)

    def test_matches_reference_on_random_fixtures(self, rng):
        for _ in range(40):
            dataset, detections = synthetic_fixture(rng)
            report = evaluate(dataset, detections)
            items = [(item.image_id, list(item.boxes)) for item in dataset.items]
            r50, r5095, rmap50, rmap5095 = ref_evaluate(items, detections, 3, COCO_THRESHOLDS)
            for got, want in zip(report.ap50, r50):
                assert (got is None) == (want is None)
                if want is not None:
                    assert got == pytest.approx(want, abs=1e-9)
            for got, want in zip(report.ap5095, r5095):
                if want is not None:
                    assert got == pytest.approx(want, abs=1e-9)
            assert report.map50 == pytest.approx(rmap50, abs=1e-9)
            assert report.map5095 == pytest.approx(rmap5095, abs=1e-9)

    def test_partition_irrelevance(self, rng):
        # boxes confined to disjoint quadrants: splitting them across images
        # must not change pooled AP
        from pathlib import Path

        quadrants = [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)]
        all_boxes, all_dets = [], []
        per_quadrant = []
        for cx, cy in quadrants:
            boxes = [
                BBox(0, cx + float(rng.uniform(-0.1, 0.1)), cy + float(rng.uniform(-0.1, 0.1)), 0.08, 0.08)
                for _ in range(3)
            ]
            dets = [jittered_detection(rng, b, max_shift=0.3) for b in boxes]
            per_quadrant.append((boxes, dets))
            all_boxes.extend(boxes)
            all_dets.extend(dets)
        one = Dataset(
            Path("/nx"),
            (AnnotatedImage("whole", Path("/nx/whole.png"), tuple(all_boxes)),),
            ("c0",),
        )
        many = Dataset(
            Path("/nx"),
            tuple(
                AnnotatedImage(f"q{i}", Path(f"/nx/q{i}.png"), tuple(boxes))
                for i, (boxes, _) in enumerate(per_quadrant)
            ),
            ("c0",),
        )
        rep_one = evaluate(one, {"whole": all_dets})
        rep_many = evaluate(many, {f"q{i}": dets for i, (_, dets) in enumerate(per_quadrant)})
        assert rep_one.ap50[0] == pytest.approx(rep_many.ap50[0], abs=1e-12)
        assert rep_one.ap5095[0] == pytest.approx(rep_many.ap5095[0], abs=1e-12)

    def test_pool_matches_concatenates(self):
        a = MatchResult((True,), (0.9,), 1)
        b = MatchResult((False, True), (0.95, 0.5), 2)
        pooled = pool_matches([a, b])
        assert pooled.n_gt == 3
        assert pooled.confidences == (0.95, 0.9, 0.5)
        assert pooled.flags == (False, True, True)


class TestReports:
    def test_report_invariant_checked(self):
        with pytest.raises(ValueError):
            EvalReport(("a", "b"), (1.0, 0.5), (0.9, 0.4), 0.9, 0.65, 1, 2, 2)

    def test_report_json_round_trip(self, rng):
        dataset, detections = synthetic_fixture(rng, max_images=3)
        report = evaluate(dataset, detections)
        back = EvalReport.from_json(json.loads(json.dumps(report.to_json())))
        assert back == report

    def test_robustness_deltas_exact(self):
        base = EvalReport((), (), (), 0.832, 0.491, 0, 0, 0)
        scpt = EvalReport((), (), (), 0.508, 0.278, 0, 0, 0)
        rr = robustness_report({"CPT": base, "SCPT": scpt}, [("CPT", "SCPT")])
        (delta,) = rr.deltas
        assert delta["map50_delta"] == 0.832 - 0.508
        assert delta["map5095_delta"] == 0.491 - 0.278

    def test_unknown_label(self):
        base = EvalReport((), (), (), 0.5, 0.4, 0, 0, 0)
        with pytest.raises(UnknownLabelError):
            robustness_report({"A": base}, [("A", "B")])

    def test_table_rendering(self, rng):
        dataset, detections = synthetic_fixture(rng, max_images=2)
        report = evaluate(dataset, detections)
        text = format_report_table(report, "CPT")
        assert "101-point" in text.splitlines()[0]
        assert "AP@0.50" in text and "AP@0.50:0.95" in text
        rr = robustness_report({"A": report, "B": report}, [("A", "B")])
        rendered = format_robustness(rr)
        assert "A - B" in rendered and "+0.000" in rendered
