"""Trajectory-guided transition planning between adjacent clips.

The entry point for most callers is :func:`cinepipe.transition.engine.plan_transition`,
which takes a merged bidirectional track set and produces truncation cuts,
per-point boundary states, and a control field for a guided interpolation
model.
"""

from cinepipe.transition.engine import (
    BoundaryState,
    ControlField,
    TransitionParams,
    TransitionPlan,
    build_control_field,
    detect_truncation,
    estimate_boundary_state,
    hermite_position,
    hermite_velocity,
    plan_transition,
    stitch_timeline,
)
from cinepipe.transition.tracks import (
    MotionProfile,
    PointTrack,
    TrackError,
    TrackSample,
    TrackSet,
    ingest_tracks,
    merge_bidirectional,
    synth_tracks,
)

__all__ = [
    "BoundaryState",
    "ControlField",
    "MotionProfile",
    "PointTrack",
    "TrackError",
    "TrackSample",
    "TrackSet",
    "TransitionParams",
    "TransitionPlan",
    "build_control_field",
    "detect_truncation",
    "estimate_boundary_state",
    "hermite_position",
    "hermite_velocity",
    "ingest_tracks",
    "merge_bidirectional",
    "plan_transition",
    "stitch_timeline",
    "synth_tracks",
]
