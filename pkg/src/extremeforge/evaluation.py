"""COCO-style detector scoring and robustness deltas.

Matching is greedy per image: detections in descending confidence order each
claim the unmatched ground truth with the highest IoU at or above the
threshold.  Average precision uses 101-point interpolation, detections pooled
across images per class.  No area ranges, no detection caps, no crowd
regions; those simplifications are stated in every rendered report header.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import BBox, Dataset, Detection
from .errors import UnknownImageIdError, UnknownLabelError

COCO_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))
# k/100 rounds each decimal grid value once; linspace's k*0.01 lands an ulp
# high at some k and would misclassify recalls like 7/10.
RECALL_GRID = np.arange(101) / 100.0

REPORT_HEADER = (
    "COCO-style 101-point interpolated AP; greedy highest-IoU matching; "
    "no area/maxDet stratification; crowd regions unsupported."
)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union on normalized corner coordinates."""
    ax1, ay1, ax2, ay2 = a.corners()
    bx1, by1, bx2, by2 = b.corners()
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return inter / union


@dataclass(frozen=True)
class MatchResult:
    """TP/FP flags in descending-confidence order, plus the GT count."""

    flags: tuple[bool, ...]
    confidences: tuple[float, ...]
    n_gt: int

    def __post_init__(self):
        if len(self.flags) != len(self.confidences):
            raise ValueError("flags and confidences must align")
        if sum(self.flags) > self.n_gt:
            raise ValueError("more true positives than ground truths")


def match_detections(
    dets: Sequence[Detection], gts: Sequence[BBox], iou_thr: float, class_id: int
) -> MatchResult:
    """Match one image's detections of a class against its ground truths."""
    if not (0.0 < iou_thr < 1.0):
        raise ValueError(f"IoU threshold must be in (0, 1), got {iou_thr}")
    class_dets = [d for d in dets if d.box.class_id == class_id]
    class_dets.sort(key=lambda d: -d.confidence)  # stable: ties keep input order
    class_gts = [g for g in gts if g.class_id == class_id]
    taken = [False] * len(class_gts)
    flags = []
    for det in class_dets:
        best_iou, best_idx = iou_thr, -1
        for gi, gt in enumerate(class_gts):
            if taken[gi]:
                continue
            v = iou(det.box, gt)
            if v > best_iou or (v == best_iou and v >= iou_thr and best_idx < 0):
                best_iou, best_idx = v, gi
        if best_idx >= 0:
            taken[best_idx] = True
            flags.append(True)
        else:
            flags.append(False)
    return MatchResult(tuple(flags), tuple(d.confidence for d in class_dets), len(class_gts))


def pool_matches(matches: Iterable[MatchResult]) -> MatchResult:
    """Merge per-image matches into one confidence-ordered result."""
    pairs: list[tuple[float, bool]] = []
    n_gt = 0
    for m in matches:
        pairs.extend(zip(m.confidences, m.flags))
        n_gt += m.n_gt
    pairs.sort(key=lambda cf: -cf[0])  # stable: cross-image ties keep pool order
    return MatchResult(tuple(f for _, f in pairs), tuple(c for c, _ in pairs), n_gt)


def average_precision(match: MatchResult) -> float | None:
    """101-point interpolated AP.

    Returns None (class excluded from the mean) when there are neither ground
    truths nor detections; 0.0 when detections exist against zero GTs.
    """
    if match.n_gt == 0:
        return None if not match.flags else 0.0
    if not match.flags:
        return 0.0
    tp = np.cumsum(np.asarray(match.flags, dtype=np.float64))
    ranks = np.arange(1, len(match.flags) + 1, dtype=np.float64)
    precision = tp / ranks
    recall = tp / match.n_gt
    # Right-to-left envelope: best precision achievable at recall >= r.
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_GRID, side="left")
    attained = idx < len(recall)
    return float(np.sum(envelope[idx[attained]]) / len(RECALL_GRID))


@dataclass(frozen=True)
class EvalReport:
    """Per-class and mean AP at IoU 0.5 and averaged 0.5:0.95."""

    class_names: tuple[str, ...]
    ap50: tuple[float | None, ...]
    ap5095: tuple[float | None, ...]
    map50: float
    map5095: float
    n_images: int
    n_gts: int
    n_dets: int

    def __post_init__(self):
        if not (len(self.class_names) == len(self.ap50) == len(self.ap5095)):
            raise ValueError("per-class fields must align with class_names")
        for name, values in (("ap50", self.ap50), ("ap5095", self.ap5095)):
            for v in values:
                if v is not None and not (0.0 <= v <= 1.0):
                    raise ValueError(f"{name} value {v} outside [0, 1]")
        included = [v for v in self.ap50 if v is not None]
        if included and abs(self.map50 - sum(included) / len(included)) > 1e-9:
            raise ValueError("map50 is not the mean of included per-class ap50")

    def to_json(self) -> dict:
        return {
            "per_class": [
                {"name": n, "ap50": a, "ap5095": b}
                for n, a, b in zip(self.class_names, self.ap50, self.ap5095)
            ],
            "map50": self.map50,
            "map5095": self.map5095,
            "counts": {"images": self.n_images, "gts": self.n_gts, "dets": self.n_dets},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvalReport":
        rows = obj.get("per_class", [])
        counts = obj.get("counts", {})
        return cls(
            tuple(r["name"] for r in rows),
            tuple(r["ap50"] for r in rows),
            tuple(r["ap5095"] for r in rows),
            float(obj["map50"]),
            float(obj["map5095"]),
            int(counts.get("images", 0)),
            int(counts.get("gts", 0)),
            int(counts.get("dets", 0)),
        )


def _mean_or_zero(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def evaluate(
    dataset: Dataset,
    detections: Mapping[str, Sequence[Detection]],
    thresholds: Sequence[float] | None = None,
) -> EvalReport:
    """Score detections against a dataset.

    ``detections`` maps image id to that image's detection list; missing ids
    mean no detections.  ``thresholds`` is the IoU set averaged into ap5095
    (default 0.50:0.05:0.95); ap50 is always computed at IoU 0.5.
    """
    thresholds = tuple(thresholds) if thresholds is not None else COCO_THRESHOLDS
    known = set(dataset.ids())
    for image_id in detections:
        if image_id not in known:
            raise UnknownImageIdError(f"detections reference unknown image id {image_id!r}")

    def pooled_ap(class_id: int, thr: float) -> float | None:
        return average_precision(
            pool_matches(
                match_detections(detections.get(item.image_id, ()), item.boxes, thr, class_id)
                for item in dataset.items
            )
        )

    ap50: list[float | None] = []
    ap5095: list[float | None] = []
    for class_id in range(len(dataset.class_names)):
        ap50.append(pooled_ap(class_id, 0.5))
        per_thr = [pooled_ap(class_id, t) for t in thresholds]
        ap5095.append(None if per_thr[0] is None else _mean_or_zero([v for v in per_thr if v is not None]))
    report = EvalReport(
        dataset.class_names,
        tuple(ap50),
        tuple(ap5095),
        _mean_or_zero([v for v in ap50 if v is not None]),
        _mean_or_zero([v for v in ap5095 if v is not None]),
        len(dataset.items),
        sum(len(item.boxes) for item in dataset.items),
        sum(len(v) for v in detections.values()),
    )
    return report


@dataclass(frozen=True)
class RobustnessReport:
    """Labeled reports plus exact metric differences between report pairs."""

    reports: tuple[tuple[str, EvalReport], ...]
    deltas: tuple[dict, ...]

    def to_json(self) -> dict:
        return {
            "reports": {label: rep.to_json() for label, rep in self.reports},
            "deltas": list(self.deltas),
        }


def robustness_report(
    reports: Mapping[str, EvalReport], pairs: Sequence[tuple[str, str]]
) -> RobustnessReport:
    """Differences (minuend minus subtrahend) between labeled reports."""
    for pair in pairs:
        for label in pair:
            if label not in reports:
                raise UnknownLabelError(f"no report labeled {label!r}")
    deltas = tuple(
        {
            "minuend": a,
            "subtrahend": b,
            "map50_delta": reports[a].map50 - reports[b].map50,
            "map5095_delta": reports[a].map5095 - reports[b].map5095,
        }
        for a, b in pairs
    )
    return RobustnessReport(tuple(reports.items()), deltas)


def _fmt(value: float | None) -> str:
    return "   --" if value is None else f"{value:5.3f}"


def format_report_table(report: EvalReport, label: str = "") -> str:
    """Fixed-width text table: metric rows, per-class columns, mAP last."""
    lines = [REPORT_HEADER]
    if label:
        lines.append(f"[{label}]  images={report.n_images} gts={report.n_gts} dets={report.n_dets}")
    width = max([len("metric")] + [len(n) for n in report.class_names])
    header = "metric".ljust(14) + "  ".join(n.rjust(max(5, width)) for n in report.class_names)
    lines.append(header + "  |   mAP")
    for name, values, mean in (
        ("AP@0.50", report.ap50, report.map50),
        ("AP@0.50:0.95", report.ap5095, report.map5095),
    ):
        row = name.ljust(14) + "  ".join(_fmt(v).rjust(max(5, width)) for v in values)
        lines.append(row + f"  | {mean:5.3f}")
    return "\n".join(lines)


def format_robustness(rr: RobustnessReport) -> str:
    blocks = [format_report_table(rep, label) for label, rep in rr.reports]
    lines = ["deltas (minuend - subtrahend):"]
    for d in rr.deltas:
        lines.append(
            f"  {d['minuend']} - {d['subtrahend']}: "
            f"mAP@0.50 {d['map50_delta']:+.3f}, mAP@0.50:0.95 {d['map5095_delta']:+.3f}"
        )
    return "\n\n".join(blocks + ["\n".join(lines)])
