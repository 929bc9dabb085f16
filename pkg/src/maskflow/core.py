"""Core domain types: pixel grids, instance masks, flow fields, track state.

All types here are plain values. Masks and flow fields wrap read-only numpy
arrays so they can be shared freely; the tracker module owns the only mutable
state (its track list). Pixel indexing is 0-based with x = column, y = row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DimsMismatchError, EmptyMaskError, OutOfBoundsError

UNKNOWN_FLOW = 1e10
"""Sentinel stored in flow vectors at invalid pixels (Middlebury convention)."""

FLOW_VALID_LIMIT = 1e9
"""Vectors with any component beyond this magnitude are treated as invalid."""


class PixelPos(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class GridDims:
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid dims must be positive, got {self.width}x{self.height}")

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape (height, width) for row-major storage."""
        return (self.height, self.width)

    def contains(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class InstanceMask:
    """Set of occupied pixel positions of one segmented instance in one frame.

    Stored as a boolean bitmap over the full grid, which gives O(1) membership
    and linear-time intersection counts (the association stage computes many
    pairwise overlaps per frame).
    """

    dims: GridDims
    frame: int
    instance: int
    category: int
    bitmap: np.ndarray  # bool, shape (height, width), read-only

    def __post_init__(self):
        if self.bitmap.shape != self.dims.shape or self.bitmap.dtype != np.bool_:
            raise ValueError("bitmap must be a bool array of shape (height, width)")
        if not self.bitmap.any():
            raise EmptyMaskError("instance mask must contain at least one pixel")

    @property
    def area(self) -> int:
        return int(self.bitmap.sum())

    def positions(self) -> list[PixelPos]:
        """Pixels as (x, y) in row-major order."""
        ys, xs = np.nonzero(self.bitmap)
        return [PixelPos(int(x), int(y)) for x, y in zip(xs, ys)]

    def pixel_array(self) -> np.ndarray:
        """Pixels as an (n, 2) int array of (x, y) rows, row-major order."""
        ys, xs = np.nonzero(self.bitmap)
        return np.stack([xs, ys], axis=1).astype(np.int64)

    def contains(self, pos: PixelPos) -> bool:
        x, y = pos
        return self.dims.contains(x, y) and bool(self.bitmap[y, x])


def mask_from_positions(
    positions: Iterable[tuple[int, int]],
    dims: GridDims,
    frame: int = 0,
    instance: int = 0,
    category: int = 1,
) -> InstanceMask:
    """Build an InstanceMask from (x, y) positions, deduplicating on the way.

    Raises EmptyMaskError for empty input and OutOfBoundsError if any position
    falls outside the grid.
    """
    positions = list(positions)
    if not positions:
        raise EmptyMaskError("cannot build a mask from zero positions")
    bitmap = np.zeros(dims.shape, dtype=np.bool_)
    for x, y in positions:
        if not dims.contains(x, y):
            raise OutOfBoundsError(f"position ({x}, {y}) outside {dims.width}x{dims.height} grid")
        bitmap[y, x] = True
    return InstanceMask(dims, frame, instance, category, _frozen(bitmap))


def mask_from_bitmap(
    bitmap: np.ndarray,
    frame: int = 0,
    instance: int = 0,
    category: int = 1,
) -> InstanceMask:
    """Wrap an (h, w) boolean array as an InstanceMask (copies, then freezes)."""
    bitmap = np.ascontiguousarray(bitmap, dtype=np.bool_).copy()
    dims = GridDims(bitmap.shape[1], bitmap.shape[0])
    return InstanceMask(dims, frame, instance, category, _frozen(bitmap))


def bbox_of(mask: InstanceMask) -> tuple[int, int, int, int]:
    """Tightest axis-aligned box (left, top, width, height) around a mask."""
    ys, xs = np.nonzero(mask.bitmap)
    left, top = int(xs.min()), int(ys.min())
    return (left, top, int(xs.max()) - left + 1, int(ys.max()) - top + 1)


@dataclass(frozen=True)
class FlowField:
    """Per-pixel 2D displacement field with a validity mask.

    vectors[y, x] = (dx, dy) in pixels; read it only where valid[y, x]. The
    raw values at invalid pixels are preserved so a file read back from disk
    can be re-serialized byte-identically.
    """

    dims: GridDims
    vectors: np.ndarray  # float32, shape (height, width, 2), read-only
    valid: np.ndarray  # bool, shape (height, width), read-only

    def __post_init__(self):
        if self.vectors.shape != self.dims.shape + (2,):
            raise ValueError("vectors must have shape (height, width, 2)")
        if self.valid.shape != self.dims.shape:
            raise ValueError("valid must have shape (height, width)")

    @staticmethod
    def create(vectors: np.ndarray, valid: np.ndarray | None = None) -> "FlowField":
        """Build a field from arrays, writing UNKNOWN_FLOW at invalid pixels."""
        vecs = np.ascontiguousarray(vectors, dtype=np.float32).copy()
        dims = GridDims(vecs.shape[1], vecs.shape[0])
        if valid is None:
            valid_arr = np.ones(dims.shape, dtype=np.bool_)
        else:
            valid_arr = np.ascontiguousarray(valid, dtype=np.bool_).copy()
        vecs[~valid_arr] = UNKNOWN_FLOW
        return FlowField(dims, _frozen(vecs), _frozen(valid_arr))

    @staticmethod
    def zero(dims: GridDims) -> "FlowField":
        """All-zero flow, valid everywhere (the ablation field)."""
        return FlowField.create(np.zeros(dims.shape + (2,), dtype=np.float32))


def require_same_dims(a: GridDims, b: GridDims) -> None:
    if a != b:
        raise DimsMismatchError(f"grid dims differ: {a.width}x{a.height} vs {b.width}x{b.height}")


@dataclass
class TrackerConfig:
    """Knobs of the online tracker.

    md is the missed-detection budget: a track survives at most md consecutive
    unmatched frames by coasting on its own dense prediction. md = 0 disables
    coasting entirely.
    """

    md: int = 1
    closing_radius: int = 1
    zero_flow: bool = False
    emit_coasted: bool = True
    min_mask_area: int = 1

    def __post_init__(self):
        if self.md < 0:
            raise ValueError("md must be >= 0")
        if self.closing_radius < 0:
            raise ValueError("closing_radius must be >= 0")
        if self.min_mask_area < 0:
            raise ValueError("min_mask_area must be >= 0")


@dataclass
class Track:
    """One persistent identity: current mask, unique id, missed counter."""

    id: int
    mask: InstanceMask
    missed: int = 0
    born: int = 0
    last_matched: int = 0


@dataclass
class TrackerState:
    tracks: list[Track] = field(default_factory=list)
    next_id: int = 1
    frame: int = 0
    config: TrackerConfig = field(default_factory=TrackerConfig)

    def live_ids(self) -> list[int]:
        return [t.id for t in self.tracks]
