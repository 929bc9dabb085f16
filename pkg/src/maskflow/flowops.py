"""From raw flow fields to dense predicted masks.

The prediction pipeline per instance is: select the flow samples that fall on
the instance and are valid, interpolate them to every instance pixel
(piecewise-linear inside the convex hull of the samples, nearest-neighbor
outside), displace the pixels, then repair interpolation holes with a
morphological closing. A self-contained block-matching estimator is included
so the pipeline can run without an external flow engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator
from scipy.spatial import QhullError

from .core import (
    FlowField,
    GridDims,
    InstanceMask,
    PixelPos,
    _frozen,
    require_same_dims,
)
from .errors import NoSamplesError


@dataclass(frozen=True)
class SparseFlowSample:
    """One valid flow measurement: position (x, y) and displacement (dx, dy)."""

    pos: PixelPos
    vec: tuple[float, float]


@dataclass(frozen=True)
class PredictedMask:
    """Pixel set of one instance transported into the target frame.

    May be empty: every source pixel can leave the frame. Out-of-frame
    predictions are dropped rather than clamped, so border pixels never
    accumulate spurious mass.
    """

    dims: GridDims
    source: int
    frame: int
    bitmap: np.ndarray  # bool, shape (height, width), read-only

    @property
    def area(self) -> int:
        return int(self.bitmap.sum())

    @property
    def empty(self) -> bool:
        return not self.bitmap.any()

    def positions(self) -> list[PixelPos]:
        ys, xs = np.nonzero(self.bitmap)
        return [PixelPos(int(x), int(y)) for x, y in zip(xs, ys)]


@dataclass(frozen=True)
class GrayImage:
    """Single-channel intensity image with values in [0, 1]."""

    dims: GridDims
    intensity: np.ndarray  # float64, shape (height, width)

    @staticmethod
    def from_array(arr: np.ndarray) -> "GrayImage":
        a = np.ascontiguousarray(arr, dtype=np.float64).copy()
        return GrayImage(GridDims(a.shape[1], a.shape[0]), _frozen(a))


def valid_instance_flow(mask: InstanceMask, flow: FlowField) -> list[SparseFlowSample]:
    """Flow samples at pixels that are both in the mask and flagged valid."""
    require_same_dims(mask.dims, flow.dims)
    sel = mask.bitmap & flow.valid
    ys, xs = np.nonzero(sel)
    vecs = flow.vectors[ys, xs].astype(np.float64)
    return [
        SparseFlowSample(PixelPos(int(x), int(y)), (float(v[0]), float(v[1])))
        for x, y, v in zip(xs, ys, vecs)
    ]


def interpolate_instance_flow(
    mask: InstanceMask, samples: list[SparseFlowSample]
) -> np.ndarray:
    """Interpolate sparse per-instance flow to every pixel of the mask.

    Returns an (n, 2) float array of (dx, dy) rows aligned with
    mask.pixel_array() order. Pixels inside the convex hull of the sample
    positions get barycentric (Delaunay) interpolation; pixels outside the
    hull, or all pixels when the samples are too few or collinear, get the
    displacement of the nearest sample.

    Raises NoSamplesError when samples is empty; the caller must treat the
    instance as unpredictable.
    """
    if not samples:
        raise NoSamplesError("instance has no valid flow samples")
    pts = np.array([[s.pos.x, s.pos.y] for s in samples], dtype=np.float64)
    vals = np.array([s.vec for s in samples], dtype=np.float64)
    targets = mask.pixel_array().astype(np.float64)

    out = np.full((targets.shape[0], 2), np.nan)
    if len(samples) >= 3:
        try:
            out = LinearNDInterpolator(pts, vals)(targets)
        except QhullError:
            pass  # collinear sample set, fall through to nearest-neighbor
    gaps = np.isnan(out).any(axis=1)
    if gaps.any():
        out[gaps] = NearestNDInterpolator(pts, vals)(targets[gaps])
    return out


def _round_half_away(v: np.ndarray) -> np.ndarray:
    # np.round would round halves to even; the contract is half away from zero
    return np.copysign(np.floor(np.abs(v) + 0.5), v)


def predict_mask(mask: InstanceMask, dense_flow: np.ndarray, dims: GridDims) -> PredictedMask:
    """Displace every mask pixel by its interpolated flow vector.

    dense_flow is the (n, 2) array produced by interpolate_instance_flow,
    aligned with mask.pixel_array(). Each pixel (x, y) lands on
    (round(x + dx), round(y + dy)) with halves rounded away from zero;
    targets outside dims are dropped and duplicates collapse.
    """
    src = mask.pixel_array().astype(np.float64)
    if dense_flow.shape != src.shape:
        raise ValueError("dense_flow must be aligned with the mask pixels, shape (n, 2)")
    tgt = _round_half_away(src + dense_flow).astype(np.int64)
    keep = (
        (tgt[:, 0] >= 0)
        & (tgt[:, 0] < dims.width)
        & (tgt[:, 1] >= 0)
        & (tgt[:, 1] < dims.height)
    )
    bitmap = np.zeros(dims.shape, dtype=np.bool_)
    bitmap[tgt[keep, 1], tgt[keep, 0]] = True
    return PredictedMask(dims, mask.instance, mask.frame + 1, _frozen(bitmap))


def close_bitmap(bitmap: np.ndarray, radius: int) -> np.ndarray:
    """Binary closing with a square structuring element of side 2*radius + 1.

    Dilation treats everything outside the grid as background and the
    erosion treats it as foreground, so the closing is clipped to the grid
    and remains extensive (never removes input pixels). radius 0 is the
    identity.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0 or not bitmap.any():
        return bitmap.copy()
    se = np.ones((2 * radius + 1, 2 * radius + 1), dtype=np.bool_)
    dilated = ndimage.binary_dilation(bitmap, structure=se, border_value=0)
    return ndimage.binary_erosion(dilated, structure=se, border_value=1)


def close_mask(pixels: set[PixelPos], radius: int, dims: GridDims) -> set[PixelPos]:
    """Set-level wrapper around close_bitmap."""
    bitmap = np.zeros(dims.shape, dtype=np.bool_)
    for x, y in pixels:
        bitmap[y, x] = True
    closed = close_bitmap(bitmap, radius)
    ys, xs = np.nonzero(closed)
    return {PixelPos(int(x), int(y)) for x, y in zip(xs, ys)}


def dense_predict(
    mask: InstanceMask, flow: FlowField, radius: int, source: int | None = None
) -> PredictedMask:
    """Full prediction of one instance into the next frame.

    Composes valid-sample selection, per-instance interpolation, pixel
    displacement and morphological closing. This is the canonical prediction
    the tracker uses. Raises NoSamplesError when the instance has zero valid
    flow pixels; the result may be empty when all pixels leave the frame.
    """
    require_same_dims(mask.dims, flow.dims)
    samples = valid_instance_flow(mask, flow)
    dense = interpolate_instance_flow(mask, samples)
    predicted = predict_mask(mask, dense, mask.dims)
    closed = close_bitmap(predicted.bitmap, radius)
    src = mask.instance if source is None else source
    return PredictedMask(mask.dims, src, mask.frame + 1, _frozen(closed))


def identity_predict(mask: InstanceMask, source: int | None = None) -> PredictedMask:
    """Prediction under the zero-flow ablation: the mask itself, unshifted."""
    src = mask.instance if source is None else source
    return PredictedMask(mask.dims, src, mask.frame + 1, mask.bitmap)


# ---------------------------------------------------------------------------
# Block-matching flow estimator
# ---------------------------------------------------------------------------


def block_match_flow(
    prev: GrayImage,
    next: GrayImage,
    block: int = 9,
    search: int = 12,
    min_texture: float = 1e-4,
) -> FlowField:
    """Estimate integer flow on a stride grid by SSD block matching.

    For each block center on a regular grid (stride = block size) the integer
    displacement in [-search, search]^2 minimizing the sum of squared
    intensity differences is selected; ties go to the smallest displacement.
    A center is marked valid only when its source block has intensity
    variance >= min_texture and its whole search window fits inside the
    image; a border block whose true displacement could fall outside the
    frame would otherwise report a confidently wrong vector. All other pixels
    are invalid, which deliberately leaves the field sparse and exercises the
    interpolation path downstream.
    """
    require_same_dims(prev.dims, next.dims)
    if block < 1 or block % 2 == 0:
        raise ValueError("block must be odd and >= 1")
    if search < 0:
        raise ValueError("search must be >= 0")

    h, w = prev.dims.shape
    half = block // 2
    vectors = np.zeros((h, w, 2), dtype=np.float32)
    valid = np.zeros((h, w), dtype=np.bool_)

    # candidate displacements, nearest first so the zero shift wins SSD ties
    cand = [
        (dx, dy)
        for dy in range(-search, search + 1)
        for dx in range(-search, search + 1)
    ]
    cand.sort(key=lambda d: (d[0] * d[0] + d[1] * d[1], d[1], d[0]))

    pv = prev.intensity
    nx = next.intensity
    margin = half + search
    for cy in range(half, h - half, block):
        for cx in range(half, w - half, block):
            if cx < margin or cx >= w - margin or cy < margin or cy >= h - margin:
                continue
            ref = pv[cy - half : cy + half + 1, cx - half : cx + half + 1]
            if ref.var() < min_texture:
                continue
            best = None
            best_ssd = np.inf
            for dx, dy in cand:
                patch = nx[cy + dy - half : cy + dy + half + 1, cx + dx - half : cx + dx + half + 1]
                ssd = float(((ref - patch) ** 2).sum())
                if ssd < best_ssd:
                    best_ssd = ssd
                    best = (dx, dy)
            if best is not None:
                vectors[cy, cx] = best
                valid[cy, cx] = True

    return FlowField.create(vectors, valid)
