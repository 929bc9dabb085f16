"""Prediction/detection affinity matrix and Hungarian assignment.

The affinity between predicted instance i and detected instance j is the raw
pixel count of their intersection. The assignment maximizes total affinity;
pairs whose affinity is zero are demoted to unmatched afterwards, so tracks
never continue through a zero-overlap "match".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import InstanceMask, require_same_dims
from .flowops import PredictedMask


@dataclass(frozen=True)
class AffinityMatrix:
    """Non-negative integer overlap counts, rows = predictions, cols = detections."""

    rows: int
    cols: int
    entries: np.ndarray  # int64, shape (rows, cols)

    def __post_init__(self):
        if self.entries.shape != (self.rows, self.cols):
            raise ValueError("entries shape must be (rows, cols)")
        if self.entries.size and (self.entries < 0).any():
            raise ValueError("affinity entries must be non-negative")


@dataclass(frozen=True)
class Matching:
    """One-to-one assignment plus the leftovers on both sides."""

    pairs: list[tuple[int, int]]
    unmatched_rows: list[int]
    unmatched_cols: list[int]


def affinity(
    predictions: list[PredictedMask], detections: list[InstanceMask]
) -> AffinityMatrix:
    """Exact pairwise intersection counts between predictions and detections."""
    dims = None
    for m in list(predictions) + list(detections):
        if dims is None:
            dims = m.dims
        else:
            require_same_dims(dims, m.dims)
    n_i, n_j = len(predictions), len(detections)
    entries = np.zeros((n_i, n_j), dtype=np.int64)
    if n_i and n_j:
        preds = np.stack([p.bitmap for p in predictions]).astype(np.int64)
        dets = np.stack([d.bitmap for d in detections]).astype(np.int64)
        entries = np.einsum("phw,dhw->pd", preds, dets)
    return AffinityMatrix(n_i, n_j, entries)


def solve_assignment(a: AffinityMatrix) -> Matching:
    """Maximum-total-affinity one-to-one assignment with zero pairs demoted.

    Handles empty and rectangular matrices. The underlying Hungarian solve is
    deterministic for identical input; among equal-total assignments only the
    total is contracted, not the particular pairing.
    """
    if a.rows == 0 or a.cols == 0:
        return Matching([], list(range(a.rows)), list(range(a.cols)))
    rows, cols = linear_sum_assignment(a.entries, maximize=True)
    pairs = []
    for r, c in zip(rows, cols):
        if a.entries[r, c] > 0:
            pairs.append((int(r), int(c)))
    matched_r = {r for r, _ in pairs}
    matched_c = {c for _, c in pairs}
    return Matching(
        pairs,
        [r for r in range(a.rows) if r not in matched_r],
        [c for c in range(a.cols) if c not in matched_c],
    )
