"""CLEAR-MOT evaluation: IoU-gated per-frame matching and metric accumulation.

Per frame, matches carried over from the previous frame are kept while they
stay above the IoU threshold; the remaining candidates are matched by the
Hungarian method maximizing total IoU. Accumulated counts feed MOTA, MOTP,
MOTAL, recall, precision, FAR and the trajectory-coverage statistics
(MT / PT / ML / FM). Id switches are counted when a ground-truth trajectory
re-matches under a different hypothesis id than its last known match.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import InstanceMask
from .errors import EmptyGroundTruthError
from .io import MotEntry

GtEntry = MotEntry
HypEntry = MotEntry

MT_THRESHOLD = 0.8
ML_THRESHOLD = 0.2


@dataclass(frozen=True)
class ClearMotReport:
    """Accumulated tracking-quality metrics.

    Percentages: mota, motp, motal, rcll, prcn (0..100, mota/motal may go
    negative); far is false positives per frame. Counts: gt is the number of
    ground-truth trajectories and mt + pt + ml == gt.
    """

    mota: float
    motp: float
    motal: float
    rcll: float
    prcn: float
    far: float
    gt: int
    mt: int
    pt: int
    ml: int
    fp: int
    fn: int
    ids: int
    fm: int
    tp: int
    frames: int

    _COLUMNS = (
        "Rcll", "Prcn", "FAR", "GT", "MT", "PT", "ML",
        "FP", "FN", "IDs", "FM", "MOTA", "MOTP", "MOTAL",
    )

    def as_dict(self) -> dict:
        return {
            "Rcll": self.rcll, "Prcn": self.prcn, "FAR": self.far,
            "GT": self.gt, "MT": self.mt, "PT": self.pt, "ML": self.ml,
            "FP": self.fp, "FN": self.fn, "IDs": self.ids, "FM": self.fm,
            "MOTA": self.mota, "MOTP": self.motp, "MOTAL": self.motal,
        }

    def as_text(self) -> str:
        """Two aligned rows, header and values, in benchmark column order."""
        values = self.as_dict()
        cells = []
        for name in self._COLUMNS:
            v = values[name]
            cells.append(f"{v:.2f}" if name == "FAR" else (f"{v:.1f}" if isinstance(v, float) else str(v)))
        widths = [max(len(n), len(c)) for n, c in zip(self._COLUMNS, cells)]
        head = "  ".join(n.rjust(w) for n, w in zip(self._COLUMNS, widths))
        row = "  ".join(c.rjust(w) for c, w in zip(cells, widths))
        return head + "\n" + row + "\n"

    def as_kv_text(self) -> str:
        """Machine-readable key=value lines, one metric per line."""
        lines = []
        for name, v in self.as_dict().items():
            lines.append(f"{name}={v:.6f}" if isinstance(v, float) else f"{name}={v}")
        return "\n".join(lines) + "\n"


def iou_box(a: tuple[float, float, float, float], b: tuple[float, float, float, float]) -> float:
    """IoU of two (left, top, width, height) boxes."""
    iw = min(a[0] + a[2], b[0] + b[2]) - max(a[0], b[0])
    ih = min(a[1] + a[3], b[1] + b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a[2] * a[3] + b[2] * b[3] - inter)


def iou_mask(a: InstanceMask, b: InstanceMask) -> float:
    inter = int((a.bitmap & b.bitmap).sum())
    if inter == 0:
        return 0.0
    return inter / int((a.bitmap | b.bitmap).sum())


def trajectory_stats(
    gt: list[GtEntry], matches: set[tuple[int, int]]
) -> tuple[int, int, int, int]:
    """Classify GT trajectories by tracked ratio and count fragmentations.

    matches holds (frame, gt_id) pairs produced by the per-frame pass. A
    trajectory is MT when its matched ratio is >= 0.8 of its present frames,
    ML when <= 0.2, PT otherwise. FM counts matched-to-unmatched transitions
    along each trajectory's presence span.
    """
    presence: dict[int, set[int]] = {}
    for e in gt:
        presence.setdefault(e.track_id, set()).add(e.frame)
    mt = pt = ml = fm = 0
    for gt_id, frames in presence.items():
        ordered = sorted(frames)
        status = [(f, gt_id) in matches for f in ordered]
        ratio = sum(status) / len(status)
        if ratio >= MT_THRESHOLD:
            mt += 1
        elif ratio <= ML_THRESHOLD:
            ml += 1
        else:
            pt += 1
        for prev, cur in zip(status, status[1:]):
            if prev and not cur:
                fm += 1
    return mt, pt, ml, fm


def _index_by_frame(entries):
    by_frame: dict[int, dict[int, object]] = {}
    for e in entries:
        by_frame.setdefault(e[0], {})[e[1]] = e[2]
    return by_frame


def _accumulate(gt_rows, hyp_rows, iou_fn, threshold):
    """Shared per-frame matching over (frame, id, payload) rows."""
    gt_by_frame = _index_by_frame(gt_rows)
    hyp_by_frame = _index_by_frame(hyp_rows)
    all_frames = set(gt_by_frame) | set(hyp_by_frame)
    lo, hi = min(all_frames), max(all_frames)

    tp = fp = fn = ids = 0
    iou_sum = 0.0
    matched: set[tuple[int, int]] = set()
    prev: dict[int, int] = {}  # gt id -> hyp id matched in the previous frame
    last_match: dict[int, int] = {}  # gt id -> last hyp id it was ever matched to

    for frame in range(lo, hi + 1):
        gts = gt_by_frame.get(frame, {})
        hyps = hyp_by_frame.get(frame, {})
        pairs: dict[int, int] = {}

        # continuity rule: keep yesterday's pairs while they stay above gate
        for g, h in prev.items():
            if g in gts and h in hyps and iou_fn(gts[g], hyps[h]) >= threshold:
                pairs[g] = h

        free_g = [g for g in gts if g not in pairs]
        used_h = set(pairs.values())
        free_h = [h for h in hyps if h not in used_h]
        if free_g and free_h:
            scores = np.zeros((len(free_g), len(free_h)))
            for i, g in enumerate(free_g):
                for j, h in enumerate(free_h):
                    v = iou_fn(gts[g], hyps[h])
                    scores[i, j] = v if v >= threshold else 0.0
            rows, cols = linear_sum_assignment(scores, maximize=True)
            for r, c in zip(rows, cols):
                if scores[r, c] >= threshold:
                    pairs[free_g[r]] = free_h[c]

        for g, h in pairs.items():
            tp += 1
            iou_sum += iou_fn(gts[g], hyps[h])
            matched.add((frame, g))
            if g in last_match and last_match[g] != h:
                ids += 1
            last_match[g] = h
        fn += len(gts) - len(pairs)
        fp += len(hyps) - len(pairs)
        prev = pairs

    return {
        "tp": tp, "fp": fp, "fn": fn, "ids": ids,
        "iou_sum": iou_sum, "matched": matched,
        "frames": hi - lo + 1,
    }


def _report(gt_entries, acc) -> ClearMotReport:
    gt_total = len(gt_entries)
    tp, fp, fn, ids = acc["tp"], acc["fp"], acc["fn"], acc["ids"]
    mt, pt, ml, fm = trajectory_stats(gt_entries, acc["matched"])
    mota = (1.0 - (fn + fp + ids) / gt_total) * 100.0
    motal = (1.0 - (fn + fp + math.log10(ids + 1)) / gt_total) * 100.0
    motp = (acc["iou_sum"] / tp) * 100.0 if tp else 0.0
    rcll = tp / (tp + fn) * 100.0
    prcn = tp / (tp + fp) * 100.0 if tp + fp else 100.0
    far = fp / acc["frames"]
    return ClearMotReport(
        mota=mota, motp=motp, motal=motal, rcll=rcll, prcn=prcn, far=far,
        gt=len({e.track_id for e in gt_entries}), mt=mt, pt=pt, ml=ml,
        fp=fp, fn=fn, ids=ids, fm=fm, tp=tp, frames=acc["frames"],
    )


def evaluate(
    gt: list[GtEntry],
    hyp: list[HypEntry],
    iou_threshold: float = 0.5,
    fps: float = 30.0,
) -> ClearMotReport:
    """Evaluate MOT hypothesis rows against ground truth with box IoU gating.

    gt and hyp are MOT rows with any consistent frame base. fps is carried
    for interface parity with frame-rate-aware front ends; FAR is reported as
    false positives per frame, following the benchmark convention.

    Raises EmptyGroundTruthError when gt is empty. Duplicate (frame, id)
    rows are undefined input; the last row wins.
    """
    del fps
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError("iou_threshold must be in (0, 1]")
    if not gt:
        raise EmptyGroundTruthError("ground truth has no entries")
    gt_rows = [(e.frame, e.track_id, (e.left, e.top, e.width, e.height)) for e in gt]
    hyp_rows = [(e.frame, e.track_id, (e.left, e.top, e.width, e.height)) for e in hyp]
    acc = _accumulate(gt_rows, hyp_rows, iou_box, iou_threshold)
    return _report(gt, acc)


def evaluate_masks(
    gt: list[tuple[int, int, InstanceMask]],
    hyp: list[tuple[int, int, InstanceMask]],
    iou_threshold: float = 0.5,
) -> ClearMotReport:
    """Mask-IoU variant of evaluate for synthetic pixel-level tests.

    gt and hyp are (frame, id, mask) triples.
    """
    if not gt:
        raise EmptyGroundTruthError("ground truth has no entries")
    acc = _accumulate(gt, hyp, iou_mask, iou_threshold)
    gt_entries = [
        MotEntry(frame, gt_id, 0.0, 0.0, 1.0, 1.0) for frame, gt_id, _ in gt
    ]
    return _report(gt_entries, acc)
