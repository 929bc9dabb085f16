"""Command-line front end: track, eval, synth, flow, render.

The flow file numbered t describes motion from frame t to frame t+1; passing
a reversed flow directory is the most common user error, so the convention is
also spelled out in the track subcommand help. Exactly one of --flow,
--images or --zero-flow supplies motion information to track.
"""

from __future__ import annotations

import argparse
import colorsys
import logging
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import tracker
from .core import FlowField, TrackerConfig, bbox_of
from .errors import MaskflowError
from .flowops import block_match_flow
from .io import (
    extract_instances,
    frame_filename,
    list_frame_files,
    read_flo,
    read_gray_image,
    read_label_map,
    read_mot,
    write_flo,
    write_mot,
)
from .metrics import evaluate, iou_box
from .synth import generate, kitti13_proxy, spec_from_json, spec_to_json, write_scene

log = logging.getLogger("maskflow")


# ---------------------------------------------------------------------------
# config file: `key = value` lines mirroring the long flags
# ---------------------------------------------------------------------------


def _coerce(value: str):
    low = value.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value


def load_config_file(path) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MaskflowError(f"{path}:{lineno}: expected `key = value`")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = _coerce(value.strip())
    return values


def _require(args, *names) -> None:
    for name in names:
        if getattr(args, name) in (None, ""):
            raise MaskflowError(f"--{name.replace('_', '-')} is required (flag or config file)")


# ---------------------------------------------------------------------------
# track
# ---------------------------------------------------------------------------


def _sibling(directory, stem: str) -> Path:
    for ext in (".png", ".pgm"):
        p = Path(directory) / (stem + ext)
        if p.exists():
            return p
    raise MaskflowError(f"missing image file: {Path(directory) / (stem + '.png')}")


def _flow_for_pair(args, mask_files, t, dims) -> FlowField:
    """Flow mapping frame t onto frame t+1, per the selected motion source."""
    if args.zero_flow:
        return FlowField.zero(dims)
    if args.flow:
        path = Path(args.flow) / (mask_files[t].stem + ".flo")
        if not path.exists():
            raise MaskflowError(f"missing flow file: {path}")
        return read_flo(path)
    return block_match_flow(
        read_gray_image(_sibling(args.images, mask_files[t].stem)),
        read_gray_image(_sibling(args.images, mask_files[t + 1].stem)),
        block=args.block,
        search=args.search,
        min_texture=args.min_texture,
    )


def cmd_track(args) -> int:
    _require(args, "masks", "output")
    sources = [bool(args.flow), bool(args.images), bool(args.zero_flow)]
    if sum(sources) != 1:
        raise MaskflowError("exactly one of --flow, --images, --zero-flow must be given")
    mask_files = list_frame_files(args.masks)
    if not mask_files:
        raise MaskflowError(f"no label maps found in {args.masks}")
    config = TrackerConfig(
        md=args.md,
        closing_radius=args.closing_radius,
        zero_flow=bool(args.zero_flow),
        emit_coasted=not args.no_emit_coasted,
        min_mask_area=args.min_mask_area,
    )
    first_map = read_label_map(mask_files[0])
    first = extract_instances(first_map, frame=0)

    def frame_inputs():
        for t in range(1, len(mask_files)):
            label_map = read_label_map(mask_files[t])
            detections = extract_instances(label_map, frame=t)
            flow = _flow_for_pair(args, mask_files, t - 1, label_map.dims)
            yield tracker.FrameInput(t, detections, flow)

    outputs = tracker.run(frame_inputs(), first, config)
    write_mot(outputs, args.output)
    for out in outputs:
        matched = sum(1 for r in out.records if not r.coasted)
        coasted = sum(1 for r in out.records if r.coasted)
        log.info(
            "frame %d: %d tracks (%d matched, %d coasted)",
            out.frame, len(out.records), matched, coasted,
        )
    log.info("wrote %s", args.output)
    return 0


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def cmd_eval(args) -> int:
    gt = read_mot(args.gt)
    hyp = read_mot(args.result)
    report = evaluate(gt, hyp, iou_threshold=args.iou, fps=args.fps)
    sys.stdout.write(report.as_text())
    if args.kv:
        Path(args.kv).write_text(report.as_kv_text())
        log.info("wrote %s", args.kv)
    return 0


# ---------------------------------------------------------------------------
# synth / flow / render
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    if args.spec:
        spec = spec_from_json(Path(args.spec).read_text())
    else:
        spec = kitti13_proxy(seed=args.seed, jolt=not args.no_jolt)
    data = generate(spec, seed=args.seed)
    out = Path(args.output)
    write_scene(data, out)
    (out / "spec.json").write_text(spec_to_json(spec))
    log.info("wrote %d frames to %s", spec.frames, out)
    return 0


def cmd_flow(args) -> int:
    image_files = list_frame_files(args.images, exts=(".png", ".pgm"))
    if len(image_files) < 2:
        raise MaskflowError(f"need at least two images in {args.images}")
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for t in range(len(image_files) - 1):
        field = block_match_flow(
            read_gray_image(image_files[t]),
            read_gray_image(image_files[t + 1]),
            block=args.block,
            search=args.search,
            min_texture=args.min_texture,
        )
        write_flo(field, out / (image_files[t].stem + ".flo"))
    log.info("wrote %d flow fields to %s", len(image_files) - 1, out)
    return 0


def track_color(track_id: int) -> tuple[int, int, int]:
    """Deterministic distinct-ish color per track id (golden-angle hue)."""
    hue = (track_id * 0.6180339887498949) % 1.0
    r, g, b = colorsys.hsv_to_rgb(hue, 0.75, 1.0)
    return (int(r * 255), int(g * 255), int(b * 255))


def _draw_box(canvas: np.ndarray, box, color) -> None:
    h, w, _ = canvas.shape
    left, top, bw, bh = (int(round(v)) for v in box)
    right, bottom = left + bw - 1, top + bh - 1
    xs = slice(max(left, 0), min(right, w - 1) + 1)
    ys = slice(max(top, 0), min(bottom, h - 1) + 1)
    if 0 <= top < h:
        canvas[top, xs] = color
    if 0 <= bottom < h:
        canvas[bottom, xs] = color
    if 0 <= left < w:
        canvas[ys, left] = color
    if 0 <= right < w:
        canvas[ys, right] = color


def cmd_render(args) -> int:
    mask_files = list_frame_files(args.masks)
    if not mask_files:
        raise MaskflowError(f"no label maps found in {args.masks}")
    by_frame: dict[int, list] = {}
    for e in read_mot(args.result):
        by_frame.setdefault(e.frame - 1, []).append(e)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)

    for t, mask_path in enumerate(mask_files):
        label_map = read_label_map(mask_path)
        h, w = label_map.dims.shape
        if args.images:
            img = read_gray_image(_sibling(args.images, mask_path.stem))
            canvas = np.repeat((img.intensity * 255).astype(np.uint8)[:, :, None], 3, axis=2)
        else:
            canvas = np.zeros((h, w, 3), dtype=np.uint8)
        instances = extract_instances(label_map, frame=t)
        inst_boxes = []
        for m in instances:
            left, top, bw, bh = bbox_of(m)
            inst_boxes.append((left + 1.0, top + 1.0, float(bw), float(bh)))
        for e in by_frame.get(t, []):
            color = track_color(e.track_id)
            box = (e.left, e.top, e.width, e.height)
            best, best_iou = None, 0.0
            for m, ib in zip(instances, inst_boxes):
                v = iou_box(box, ib)
                if v > best_iou:
                    best, best_iou = m, v
            if best is not None:
                ys, xs = np.nonzero(best.bitmap)
                canvas[ys, xs] = color
            else:
                # no matching instance (a coasted record): draw the box outline
                _draw_box(canvas, (e.left - 1, e.top - 1, e.width, e.height), color)
        Image.fromarray(canvas, mode="RGB").save(out / frame_filename(t, ".png"), format="PNG")
    log.info("rendered %d frames to %s", len(mask_files), out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="maskflow",
        description="Segmentation-mask multi-object tracking via optical-flow prediction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    p = subparsers["track"] = sub.add_parser(
        "track", help="run the tracker over a label-map sequence"
    )
    p.add_argument("--masks", help="directory of per-frame label maps")
    p.add_argument("--flow", help="directory of .flo files; file t maps frame t onto t+1")
    p.add_argument("--images", help="directory of gray images; flow is estimated by block matching")
    p.add_argument("--zero-flow", action="store_true", default=None,
                   help="ablation: predict with identity motion")
    p.add_argument("-o", "--output", help="MOT result file to write")
    p.add_argument("--md", type=int, default=1, help="missed-detection budget (default 1)")
    p.add_argument("--closing-radius", type=int, default=1)
    p.add_argument("--min-mask-area", type=int, default=1)
    p.add_argument("--no-emit-coasted", action="store_true", default=False,
                   help="omit coasted tracks from output")
    p.add_argument("--block", type=int, default=9, help="block-matching window (odd)")
    p.add_argument("--search", type=int, default=12, help="block-matching search radius")
    p.add_argument("--min-texture", type=float, default=1e-4)
    p.add_argument("--config", help="key = value file mirroring the flags above")
    p.set_defaults(func=cmd_track)

    p = subparsers["eval"] = sub.add_parser(
        "eval", help="CLEAR-MOT evaluation of a result against ground truth"
    )
    p.add_argument("--gt", required=True)
    p.add_argument("--result", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--kv", help="also write the report as key=value lines")
    p.set_defaults(func=cmd_eval)

    p = subparsers["synth"] = sub.add_parser(
        "synth", help="generate a synthetic dataset with exact ground truth"
    )
    p.add_argument("--spec", help="scene spec JSON (default: built-in high-motion preset)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-jolt", action="store_true", help="preset only: drop the camera jolts")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = subparsers["flow"] = sub.add_parser(
        "flow", help="estimate block-matching flow for an image sequence"
    )
    p.add_argument("--images", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--block", type=int, default=9)
    p.add_argument("--search", type=int, default=12)
    p.add_argument("--min-texture", type=float, default=1e-4)
    p.set_defaults(func=cmd_flow)

    p = subparsers["render"] = sub.add_parser(
        "render", help="write per-frame overlays colored by track id"
    )
    p.add_argument("--masks", required=True)
    p.add_argument("--result", required=True)
    p.add_argument("--images", help="optional gray images used as background")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_render)

    return parser, subparsers


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    parser, subparsers = build_parser()
    try:
        args, _ = parser.parse_known_args(argv)
        if getattr(args, "config", None):
            defaults = load_config_file(args.config)
            sp = subparsers[args.command]
            known = {a.dest for a in sp._actions}
            unknown = set(defaults) - known
            if unknown:
                raise MaskflowError(f"unknown config keys: {', '.join(sorted(unknown))}")
            sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
        return args.func(args)
    except MaskflowError as exc:
        log.error("error: %s", exc)
        return 1
    except FileNotFoundError as exc:
        log.error("error: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
