"""Synthetic scenes with exact ground truth: label maps, flow, images, MOT GT.

Every generated quantity is exact by construction, which makes these scenes
usable as end-to-end oracles: the label map holds each live object's true
pixel set (later-listed objects occlude earlier ones), the flow at an object
pixel is that object's true displacement to the next frame (plus optional
truncated Gaussian noise), and the ground-truth boxes are tight boxes of each
object's own in-frame extent regardless of occlusion or segmentation
dropouts.

A "dropout" removes an object from the label map for a frame while keeping it
in the image, the flow and the ground truth. That mimics a segmenter missing
a visible object for one frame, which is exactly the situation the
missed-detection budget exists for.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .core import FlowField, GridDims
from .errors import SpecError
from .flowops import GrayImage
from .io import (
    LabelMap,
    MotEntry,
    frame_filename,
    write_flo,
    write_label_map,
    write_mot_entries,
)

RECTANGLE = "rectangle"
DISK = "disk"


@dataclass(frozen=True)
class ObjectSpec:
    """One moving object: shape, per-frame anchor positions, lifetime."""

    shape: str
    size: int
    positions: list[tuple[int, int]]  # top-left anchor of the shape's bounding box
    appear: int = 0
    disappear: int | None = None  # first frame the object no longer exists
    dropouts: frozenset[int] = frozenset()  # frames missing from the label map
    texture_seed: int = 0

    def alive(self, t: int, frames: int) -> bool:
        end = self.disappear if self.disappear is not None else frames
        return self.appear <= t < end


@dataclass(frozen=True)
class SceneSpec:
    dims: GridDims
    frames: int
    objects: list[ObjectSpec]
    noise: float = 0.0  # flow perturbation stddev in pixels, truncated at 3 sigma
    flow_validity: float = 1.0  # fraction of each object's pixels given valid flow


@dataclass(frozen=True)
class SceneData:
    spec: SceneSpec
    label_maps: list[LabelMap]
    flows: list[FlowField]  # flows[t] maps frame t onto frame t+1
    images: list[GrayImage]
    gt: list[MotEntry]  # MOT file convention, frames and coords 1-based


def linear_positions(start: tuple[int, int], velocity: tuple[int, int], frames: int) -> list[tuple[int, int]]:
    """Constant-velocity trajectory helper."""
    return [(start[0] + t * velocity[0], start[1] + t * velocity[1]) for t in range(frames)]


def _validate(spec: SceneSpec) -> None:
    if spec.frames < 1:
        raise SpecError("scene needs at least one frame")
    if not 0.0 < spec.flow_validity <= 1.0:
        raise SpecError("flow_validity must be in (0, 1]")
    if spec.noise < 0:
        raise SpecError("noise stddev must be >= 0")
    for k, obj in enumerate(spec.objects):
        if obj.shape not in (RECTANGLE, DISK):
            raise SpecError(f"object {k}: unknown shape {obj.shape!r}")
        if obj.size < 1:
            raise SpecError(f"object {k}: size must be >= 1")
        if len(obj.positions) != spec.frames:
            raise SpecError(
                f"object {k}: expected {spec.frames} positions, got {len(obj.positions)}"
            )
        end = obj.disappear if obj.disappear is not None else spec.frames
        if not 0 <= obj.appear < end:
            raise SpecError(f"object {k}: appear/disappear window is empty")


def _local_offsets(obj: ObjectSpec) -> np.ndarray:
    """Shape pixels as (n, 2) offsets from the anchor, row-major."""
    s = obj.size
    jj, ii = np.mgrid[0:s, 0:s]
    if obj.shape == RECTANGLE:
        keep = np.ones((s, s), dtype=bool)
    else:
        c = (s - 1) / 2.0
        keep = (ii - c) ** 2 + (jj - c) ** 2 <= (s / 2.0) ** 2
    return np.stack([ii[keep], jj[keep]], axis=1)


def _world_pixels(offsets: np.ndarray, pos: tuple[int, int], dims: GridDims):
    """In-frame world pixels plus the local offsets they came from."""
    world = offsets + np.array(pos)
    inside = (
        (world[:, 0] >= 0)
        & (world[:, 0] < dims.width)
        & (world[:, 1] >= 0)
        & (world[:, 1] < dims.height)
    )
    return world[inside], offsets[inside]


def generate(spec: SceneSpec, seed: int = 0) -> SceneData:
    """Render a scene: label maps, exact flow fields, images, MOT ground truth.

    Deterministic per (spec, seed); per-frame randomness comes from
    seed-derived substreams so frames could be generated independently.
    """
    _validate(spec)
    dims = spec.dims
    h, w = dims.shape

    offsets = [_local_offsets(obj) for obj in spec.objects]
    textures = [
        0.3 + 0.7 * np.random.default_rng([seed, 7000 + k, obj.texture_seed]).random((obj.size, obj.size))
        for k, obj in enumerate(spec.objects)
    ]
    background = 0.25 * np.random.default_rng([seed, 4242]).random((h, w))

    label_maps: list[LabelMap] = []
    images: list[GrayImage] = []
    flows: list[FlowField] = []
    gt: list[MotEntry] = []

    for t in range(spec.frames):
        labels = np.zeros((h, w), dtype=np.uint16)
        image = background.copy()
        for k, obj in enumerate(spec.objects):
            if not obj.alive(t, spec.frames):
                continue
            world, local = _world_pixels(offsets[k], obj.positions[t], dims)
            if world.size == 0:
                continue  # fully out of frame this frame
            image[world[:, 1], world[:, 0]] = textures[k][local[:, 1], local[:, 0]]
            if t not in obj.dropouts:
                labels[world[:, 1], world[:, 0]] = k + 1
            left, top = world[:, 0].min(), world[:, 1].min()
            gt.append(
                MotEntry(
                    frame=t + 1,
                    track_id=k + 1,
                    left=float(left + 1),
                    top=float(top + 1),
                    width=float(world[:, 0].max() - left + 1),
                    height=float(world[:, 1].max() - top + 1),
                    conf=1.0,
                )
            )
        label_maps.append(LabelMap.from_array(labels))
        images.append(GrayImage.from_array(image))

    for t in range(spec.frames - 1):
        rng = np.random.default_rng([seed, 31, t])
        vectors = np.zeros((h, w, 2), dtype=np.float64)
        valid = np.ones((h, w), dtype=np.bool_)
        for k, obj in enumerate(spec.objects):
            if not obj.alive(t, spec.frames):
                continue
            world, _ = _world_pixels(offsets[k], obj.positions[t], dims)
            if world.size == 0:
                continue
            if not obj.alive(t + 1, spec.frames):
                # the object ceases to exist: no correspondence in t+1
                valid[world[:, 1], world[:, 0]] = False
                continue
            d = np.array(obj.positions[t + 1]) - np.array(obj.positions[t])
            vecs = np.broadcast_to(d.astype(np.float64), (world.shape[0], 2)).copy()
            if spec.noise > 0:
                lim = 3.0 * spec.noise
                vecs += np.clip(rng.normal(0.0, spec.noise, vecs.shape), -lim, lim)
            vectors[world[:, 1], world[:, 0]] = vecs
            valid[world[:, 1], world[:, 0]] = False
            n_keep = max(1, int(round(spec.flow_validity * world.shape[0])))
            keep = rng.choice(world.shape[0], size=n_keep, replace=False)
            valid[world[keep, 1], world[keep, 0]] = True
        flows.append(FlowField.create(vectors, valid))

    return SceneData(spec, label_maps, flows, images, gt)


def kitti13_proxy(seed: int = 0, jolt: bool = True) -> SceneSpec:
    """Multi-object scene with global camera shake and abrupt vertical jolts.

    All trajectories share an additive camera offset; midway through, the
    camera jumps 8 pixels down and later 8 pixels back up, so on two frames
    the global shift exceeds the object size. With jolt=False the shared
    offset reduces to mild jitter and the scene becomes a plain slow
    multi-object sequence.
    """
    rng = np.random.default_rng([seed, 99])
    frames = 10
    dims = GridDims(128, 96)
    size = 7
    starts = [(28, 20), (92, 20), (28, 62), (92, 62)]
    shapes = [RECTANGLE, DISK, DISK, RECTANGLE]

    jitter = rng.integers(-1, 2, size=(frames, 2))
    jolt_cum = np.zeros((frames, 2), dtype=np.int64)
    if jolt:
        jolt_cum[5:, 1] += 8  # camera drops between frames 4 and 5
        jolt_cum[8:, 1] -= 8  # and recovers between frames 7 and 8
        jitter[5] = jitter[4]  # shake pauses across the jolts so the global
        jitter[8] = jitter[7]  # per-frame shift is exactly the jolt
    global_offset = jitter + jolt_cum

    objects = []
    for k, (start, shape) in enumerate(zip(starts, shapes)):
        vel = rng.integers(-1, 2, size=2)
        own = np.array(linear_positions(start, (int(vel[0]), int(vel[1])), frames))
        pos = own + global_offset
        objects.append(
            ObjectSpec(
                shape=shape,
                size=size,
                positions=[(int(x), int(y)) for x, y in pos],
                texture_seed=k,
            )
        )
    return SceneSpec(dims=dims, frames=frames, objects=objects, noise=0.2, flow_validity=0.6)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def write_scene(data: SceneData, out_dir) -> None:
    """Write a scene as masks/, flow/, images/ and gt.txt under out_dir."""
    out = Path(out_dir)
    masks = out / "masks"
    flow = out / "flow"
    images = out / "images"
    for d in (masks, flow, images):
        d.mkdir(parents=True, exist_ok=True)
    for t, lm in enumerate(data.label_maps):
        write_label_map(lm, masks / frame_filename(t, ".png"))
    for t, ff in enumerate(data.flows):
        write_flo(ff, flow / frame_filename(t, ".flo"))
    for t, img in enumerate(data.images):
        arr = np.clip(np.round(img.intensity * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(arr, mode="L").save(images / frame_filename(t, ".png"), format="PNG")
    write_mot_entries(data.gt, out / "gt.txt")


def spec_to_json(spec: SceneSpec) -> str:
    doc = {
        "width": spec.dims.width,
        "height": spec.dims.height,
        "frames": spec.frames,
        "noise": spec.noise,
        "flow_validity": spec.flow_validity,
        "objects": [
            {
                "shape": o.shape,
                "size": o.size,
                "positions": [list(p) for p in o.positions],
                "appear": o.appear,
                "disappear": o.disappear,
                "dropouts": sorted(o.dropouts),
                "texture_seed": o.texture_seed,
            }
            for o in spec.objects
        ],
    }
    return json.dumps(doc, indent=2)


def spec_from_json(text: str) -> SceneSpec:
    """Parse a scene spec document.

    Objects give either an explicit "positions" list or a parametric
    {"start": [x, y], "velocity": [vx, vy]} pair expanded over the frame
    count.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"scene spec is not valid JSON: {exc}") from exc
    try:
        frames = int(doc["frames"])
        dims = GridDims(int(doc["width"]), int(doc["height"]))
        objects = []
        for o in doc["objects"]:
            if "positions" in o:
                positions = [(int(x), int(y)) for x, y in o["positions"]]
            else:
                positions = linear_positions(
                    tuple(o["start"]), tuple(o.get("velocity", (0, 0))), frames
                )
            objects.append(
                ObjectSpec(
                    shape=o.get("shape", RECTANGLE),
                    size=int(o["size"]),
                    positions=positions,
                    appear=int(o.get("appear", 0)),
                    disappear=None if o.get("disappear") is None else int(o["disappear"]),
                    dropouts=frozenset(int(t) for t in o.get("dropouts", ())),
                    texture_seed=int(o.get("texture_seed", 0)),
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed scene spec: {exc}") from exc
    return SceneSpec(
        dims=dims,
        frames=frames,
        objects=objects,
        noise=float(doc.get("noise", 0.0)),
        flow_validity=float(doc.get("flow_validity", 1.0)),
    )
