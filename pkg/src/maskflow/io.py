"""File formats: instance label maps, Middlebury .flo flow, MOT-Challenge text.

Conventions: all multi-byte binary values little-endian except 16-bit PGM
payloads (big-endian per Netpbm); text files ASCII with \\n newlines; frame
numbers and box coordinates are 1-based on disk and 0-based in memory. Frame
files are named with zero-padded 6-digit numbers; the flow file numbered t
describes motion from frame t to frame t+1.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .core import (
    FLOW_VALID_LIMIT,
    FlowField,
    GridDims,
    InstanceMask,
    _frozen,
    bbox_of,
)
from .errors import (
    BadMagicError,
    CorruptFileError,
    ParseError,
    TruncatedFileError,
    UnsupportedFormatError,
)
from .tracker import FrameOutput

FLO_MAGIC = 202021.25


@dataclass(frozen=True)
class LabelMap:
    """Per-pixel instance labels; 0 is background, v > 0 is instance index v."""

    dims: GridDims
    labels: np.ndarray  # uint16, shape (height, width), read-only

    @staticmethod
    def from_array(arr: np.ndarray) -> "LabelMap":
        a = np.ascontiguousarray(arr)
        if a.min() < 0 or a.max() > 0xFFFF:
            raise ValueError("labels must fit in 16 bits")
        a = a.astype(np.uint16)
        return LabelMap(GridDims(a.shape[1], a.shape[0]), _frozen(a))


# ---------------------------------------------------------------------------
# Label maps (16-bit PNG / binary PGM)
# ---------------------------------------------------------------------------


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    if not data.startswith(b"P5"):
        raise UnsupportedFormatError(f"{path}: not a binary (P5) PGM")
    # header: magic, width, height, maxval; '#' comments allowed between tokens
    tokens = []
    pos = 2
    while len(tokens) < 3:
        m = re.match(rb"(\s+(#[^\n]*\n)*)*(\d+)", data[pos:])
        if not m:
            raise CorruptFileError(f"{path}: malformed PGM header")
        tokens.append(int(m.group(3)))
        pos += m.end()
    width, height, maxval = tokens
    if maxval > 65535:
        raise UnsupportedFormatError(f"{path}: PGM maxval {maxval} exceeds 16 bits")
    pos += 1  # single whitespace byte terminates the header
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    payload = data[pos : pos + expected]
    if len(payload) < expected:
        raise TruncatedFileError(f"{path}: PGM payload short by {expected - len(payload)} bytes")
    return np.frombuffer(payload, dtype=dtype).reshape(height, width).astype(np.uint16)


def read_label_map(path) -> LabelMap:
    """Read a label map from a 16-bit/8-bit grayscale PNG or binary PGM.

    Values are exact integers; 8-bit inputs are widened losslessly.
    """
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return LabelMap.from_array(_read_pgm(path))
    try:
        img = Image.open(path)
        img.load()
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise CorruptFileError(f"{path}: {exc}") from exc
    if img.mode not in ("L", "I", "I;16", "I;16B", "I;16L"):
        raise UnsupportedFormatError(
            f"{path}: unsupported image mode {img.mode}, need single-channel grayscale"
        )
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise UnsupportedFormatError(f"{path}: label map must be single-channel")
    return LabelMap.from_array(arr)


def write_label_map(label_map: LabelMap, path) -> None:
    """Write a label map as 16-bit PNG (.png) or binary PGM (.pgm)."""
    path = Path(path)
    labels = np.ascontiguousarray(label_map.labels)
    if path.suffix.lower() == ".pgm":
        maxval = 65535 if int(labels.max(initial=0)) > 255 else 255
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        header = f"P5\n{label_map.dims.width} {label_map.dims.height}\n{maxval}\n"
        path.write_bytes(header.encode("ascii") + labels.astype(dtype).tobytes())
    else:
        Image.fromarray(labels).save(path, format="PNG")


def extract_instances(label_map: LabelMap, frame: int = 0, category: int = 1) -> list[InstanceMask]:
    """One mask per distinct nonzero label, ordered by label value."""
    masks = []
    for value in np.unique(label_map.labels):
        if value == 0:
            continue
        bitmap = label_map.labels == value
        masks.append(
            InstanceMask(label_map.dims, frame, int(value), category, _frozen(bitmap))
        )
    return masks


def read_gray_image(path):
    """Read an 8/16-bit grayscale image as intensities in [0, 1]."""
    from .flowops import GrayImage

    path = Path(path)
    if path.suffix.lower() == ".pgm":
        arr = _read_pgm(path)
        return GrayImage.from_array(arr / float(max(arr.max(initial=1), 255)))
    img = Image.open(path)
    img.load()
    if img.mode == "L":
        return GrayImage.from_array(np.asarray(img) / 255.0)
    if img.mode in ("I", "I;16", "I;16B", "I;16L"):
        return GrayImage.from_array(np.asarray(img) / 65535.0)
    raise UnsupportedFormatError(f"{path}: unsupported image mode {img.mode}")


# ---------------------------------------------------------------------------
# Middlebury .flo flow files
# ---------------------------------------------------------------------------


def read_flo(path) -> FlowField:
    """Read a little-endian Middlebury .flo file.

    Vectors with either component's magnitude beyond 1e9 are flagged invalid
    (the UNKNOWN convention); raw values are preserved so a re-write is
    byte-identical.
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 12:
        raise TruncatedFileError(f"{path}: shorter than the 12-byte header")
    magic = np.frombuffer(data, dtype="<f4", count=1)[0]
    if magic != np.float32(FLO_MAGIC):
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {FLO_MAGIC}")
    width, height = (int(v) for v in np.frombuffer(data, dtype="<i4", count=2, offset=4))
    if width < 1 or height < 1:
        raise CorruptFileError(f"{path}: nonsensical dims {width}x{height}")
    expected = 12 + width * height * 8
    if len(data) < expected:
        raise TruncatedFileError(f"{path}: payload short by {expected - len(data)} bytes")
    if len(data) > expected:
        raise CorruptFileError(f"{path}: {len(data) - expected} trailing bytes")
    vectors = (
        np.frombuffer(data, dtype="<f4", count=width * height * 2, offset=12)
        .reshape(height, width, 2)
        .copy()
    )
    valid = (np.abs(vectors) <= FLOW_VALID_LIMIT).all(axis=2) & np.isfinite(vectors).all(axis=2)
    return FlowField(GridDims(width, height), _frozen(vectors), _frozen(valid))


def write_flo(field: FlowField, path) -> None:
    """Write a flow field as little-endian Middlebury .flo, vectors verbatim."""
    path = Path(path)
    header = np.array([FLO_MAGIC], dtype="<f4").tobytes()
    header += np.array([field.dims.width, field.dims.height], dtype="<i4").tobytes()
    path.write_bytes(header + field.vectors.astype("<f4", copy=False).tobytes())


# ---------------------------------------------------------------------------
# MOT-Challenge text rows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MotEntry:
    """One MOT-Challenge row in file convention (frame and coords 1-based)."""

    frame: int
    track_id: int
    left: float
    top: float
    width: float
    height: float
    conf: float = 1.0


def _format_num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else f"{v:g}"


def write_mot_entries(entries: list[MotEntry], path) -> None:
    lines = [
        f"{e.frame},{e.track_id},{_format_num(e.left)},{_format_num(e.top)},"
        f"{_format_num(e.width)},{_format_num(e.height)},{e.conf:.1f},-1,-1,-1"
        for e in entries
    ]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="ascii")


def write_mot(outputs: list[FrameOutput], path) -> None:
    """Serialize tracker outputs as MOT rows, one line per emitted track.

    Internal 0-based frames and pixel coordinates are written 1-based.
    Matched records carry conf 1.0 and coasted ones 0.5, so an evaluator can
    include or exclude coasted output by thresholding.
    """
    entries = []
    for out in outputs:
        for rec in out.records:
            left, top, w, h = bbox_of(rec.mask)
            entries.append(
                MotEntry(
                    frame=out.frame + 1,
                    track_id=rec.track_id,
                    left=left + 1,
                    top=top + 1,
                    width=w,
                    height=h,
                    conf=0.5 if rec.coasted else 1.0,
                )
            )
    write_mot_entries(entries, path)


def read_mot(path) -> list[MotEntry]:
    """Parse MOT rows; trailing fields are ignored, any conf is accepted."""
    entries = []
    path = Path(path)
    for lineno, line in enumerate(path.read_text(encoding="ascii").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) < 6:
            raise ParseError(f"{path}:{lineno}: expected at least 6 fields", lineno)
        try:
            frame = int(float(parts[0]))
            track_id = int(float(parts[1]))
            left, top, width, height = (float(p) for p in parts[2:6])
            conf = float(parts[6]) if len(parts) > 6 else 1.0
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}", lineno) from exc
        entries.append(MotEntry(frame, track_id, left, top, width, height, conf))
    return entries


# ---------------------------------------------------------------------------
# Frame file naming
# ---------------------------------------------------------------------------


def frame_filename(frame: int, ext: str) -> str:
    """Zero-padded 6-digit name for an internal (0-based) frame index."""
    return f"{frame + 1:06d}{ext}"


def list_frame_files(directory, exts=(".png", ".pgm")) -> list[Path]:
    directory = Path(directory)
    files = [p for p in directory.iterdir() if p.suffix.lower() in exts]
    return sorted(files, key=lambda p: p.name)
