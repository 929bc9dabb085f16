"""Multi-object tracking on instance segmentation masks with optical flow.

Per frame, every tracked instance's pixel mask is transported into the next
frame by interpolated per-instance flow, predicted and detected masks are
associated by Hungarian assignment on their pixel-overlap affinity matrix,
and identities are maintained online with a missed-detection budget. Includes
readers/writers for label maps, Middlebury .flo and MOT text files, a
CLEAR-MOT evaluator, a block-matching flow estimator and a synthetic scene
generator with exact ground truth.
"""

from .association import AffinityMatrix, Matching, affinity, solve_assignment
from .core import (
    FlowField,
    GridDims,
    InstanceMask,
    PixelPos,
    Track,
    TrackerConfig,
    TrackerState,
    bbox_of,
    mask_from_bitmap,
    mask_from_positions,
)
from .flowops import (
    GrayImage,
    PredictedMask,
    SparseFlowSample,
    block_match_flow,
    close_mask,
    dense_predict,
    interpolate_instance_flow,
    predict_mask,
    valid_instance_flow,
)
from .metrics import ClearMotReport, evaluate, evaluate_masks, trajectory_stats
from .synth import ObjectSpec, SceneSpec, generate, kitti13_proxy
from .tracker import FrameInput, FrameOutput, TrackRecord, init, run, step

__version__ = "0.1.0"

__all__ = [
    "AffinityMatrix",
    "ClearMotReport",
    "FlowField",
    "FrameInput",
    "FrameOutput",
    "GrayImage",
    "GridDims",
    "InstanceMask",
    "Matching",
    "ObjectSpec",
    "PixelPos",
    "PredictedMask",
    "SceneSpec",
    "SparseFlowSample",
    "Track",
    "TrackRecord",
    "TrackerConfig",
    "TrackerState",
    "affinity",
    "bbox_of",
    "block_match_flow",
    "close_mask",
    "dense_predict",
    "evaluate",
    "evaluate_masks",
    "generate",
    "init",
    "interpolate_instance_flow",
    "kitti13_proxy",
    "mask_from_bitmap",
    "mask_from_positions",
    "predict_mask",
    "run",
    "solve_assignment",
    "step",
    "trajectory_stats",
    "valid_instance_flow",
]
