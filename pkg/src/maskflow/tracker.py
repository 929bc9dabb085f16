"""Online tracking loop: predict, associate, propagate, birth, coast, kill.

Per frame, every live track's mask is transported to the current frame by its
dense flow prediction (or kept in place under the zero-flow ablation), the
prediction/detection overlap matrix is solved by the Hungarian method, and
track state is updated:

  matched track      -> adopts the detection's pixels, missed counter resets
  unmatched detection -> becomes a new track immediately (no confirmation)
  unmatched track    -> missed += 1; dies when missed > md, otherwise coasts
                        on its own prediction

Coasted tracks appear in the frame output when emit_coasted is set, so the
false-negative / false-positive trade-off of the missed-detection budget is
visible to the evaluator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .association import affinity, solve_assignment
from .core import (
    FlowField,
    InstanceMask,
    Track,
    TrackerConfig,
    TrackerState,
)
from .errors import FrameOrderViolationError, NoSamplesError
from .flowops import PredictedMask, dense_predict, identity_predict


@dataclass(frozen=True)
class FrameInput:
    """Detections of frame t+1 and the flow that maps frame t onto it."""

    frame: int
    detections: list[InstanceMask]
    flow: FlowField


@dataclass(frozen=True)
class TrackRecord:
    track_id: int
    mask: InstanceMask
    coasted: bool


@dataclass(frozen=True)
class TrackEvent:
    kind: str  # "birth" or "death"
    track_id: int
    frame: int


@dataclass(frozen=True)
class FrameOutput:
    frame: int
    records: list[TrackRecord] = field(default_factory=list)
    events: list[TrackEvent] = field(default_factory=list)


def _usable(detections: list[InstanceMask], config: TrackerConfig) -> list[InstanceMask]:
    return [d for d in detections if d.area >= config.min_mask_area]


def init(
    first_detections: list[InstanceMask],
    config: TrackerConfig | None = None,
    frame: int = 0,
) -> TrackerState:
    """Seed the tracker with the first frame's detections (possibly none)."""
    config = config if config is not None else TrackerConfig()
    state = TrackerState(next_id=1, frame=frame, config=config)
    for det in _usable(first_detections, config):
        state.tracks.append(
            Track(id=state.next_id, mask=det, missed=0, born=frame, last_matched=frame)
        )
        state.next_id += 1
    return state


def _predict(track: Track, flow: FlowField, config: TrackerConfig) -> tuple[PredictedMask, bool]:
    """Predict one track; returns (prediction, matchable)."""
    if config.zero_flow:
        return identity_predict(track.mask, source=track.id), True
    try:
        return dense_predict(track.mask, flow, config.closing_radius, source=track.id), True
    except NoSamplesError:
        # no valid flow on the instance: keep the mask in place and sit out
        # the association round
        return identity_predict(track.mask, source=track.id), False


def step(state: TrackerState, input: FrameInput) -> tuple[TrackerState, FrameOutput]:
    """Advance the tracker by one frame. Mutates and returns the same state."""
    if input.frame != state.frame + 1:
        raise FrameOrderViolationError(
            f"expected frame {state.frame + 1}, got {input.frame}"
        )
    config = state.config
    detections = _usable(input.detections, config)

    predictions: list[PredictedMask] = []
    matchable: list[bool] = []
    for track in state.tracks:
        pred, ok = _predict(track, input.flow, config)
        predictions.append(pred)
        matchable.append(ok)

    candidates = [i for i, ok in enumerate(matchable) if ok]
    matrix = affinity([predictions[i] for i in candidates], detections)
    matching = solve_assignment(matrix)

    matched_track = {candidates[r]: c for r, c in matching.pairs}
    matched_det = set(matched_track.values())

    records: list[TrackRecord] = []
    events: list[TrackEvent] = []
    survivors: list[Track] = []

    for idx, track in enumerate(state.tracks):
        if idx in matched_track:
            det = detections[matched_track[idx]]
            track.mask = det
            track.missed = 0
            track.last_matched = input.frame
            survivors.append(track)
            records.append(TrackRecord(track.id, det, coasted=False))
            continue
        track.missed += 1
        prediction = predictions[idx]
        if track.missed > config.md or prediction.empty:
            # budget exhausted, or every predicted pixel left the frame;
            # an empty mask could never match again anyway
            events.append(TrackEvent("death", track.id, input.frame))
            continue
        coasted = InstanceMask(
            track.mask.dims,
            input.frame,
            track.mask.instance,
            track.mask.category,
            prediction.bitmap,
        )
        track.mask = coasted
        survivors.append(track)
        if config.emit_coasted:
            records.append(TrackRecord(track.id, coasted, coasted=True))

    for j, det in enumerate(detections):
        if j in matched_det:
            continue
        track = Track(
            id=state.next_id,
            mask=det,
            missed=0,
            born=input.frame,
            last_matched=input.frame,
        )
        state.next_id += 1
        survivors.append(track)
        records.append(TrackRecord(track.id, det, coasted=False))
        events.append(TrackEvent("birth", track.id, input.frame))

    state.tracks = survivors
    state.frame = input.frame
    records.sort(key=lambda r: r.track_id)
    return state, FrameOutput(input.frame, records, events)


def run(
    sequence,
    first_detections: list[InstanceMask],
    config: TrackerConfig | None = None,
    start_frame: int = 0,
) -> list[FrameOutput]:
    """Drive the tracker over an iterable of FrameInput.

    The first output covers the init frame (every initial detection becomes a
    track and a birth event); subsequent outputs come from step. Deterministic
    for identical inputs.
    """
    state = init(first_detections, config, frame=start_frame)
    first = FrameOutput(
        start_frame,
        [TrackRecord(t.id, t.mask, coasted=False) for t in state.tracks],
        [TrackEvent("birth", t.id, start_frame) for t in state.tracks],
    )
    outputs = [first]
    for frame_input in sequence:
        state, out = step(state, frame_input)
        outputs.append(out)
    return outputs
