"""Truncation, boundary states, Hermite control fields, and stitching.

Generated clips routinely go still near their endpoints: the last frames
of clip A and the first frames of clip B hover on the shared keyframe
instead of moving through it. The engine finds those frozen margins,
truncates them, estimates where each tracked point is and how fast it is
moving at the truncated boundaries, and bridges the gap with per-point
cubic Hermite trajectories that a guided interpolation model can follow.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass

import numpy as np

from cinepipe.transition.tracks import TrackSet

__all__ = [
    "TransitionError",
    "TransitionParams",
    "BoundaryState",
    "ControlField",
    "TransitionPlan",
    "CutList",
    "detect_truncation",
    "estimate_boundary_state",
    "hermite_position",
    "hermite_velocity",
    "build_control_field",
    "plan_transition",
    "stitch_timeline",
]


class TransitionError(ValueError):
    """Raised when transition planning preconditions are violated."""


@dataclass(frozen=True)
class TransitionParams:
    """Tuning knobs for truncation and control-field construction.

    freeze_threshold is in pixels of median displacement from the anchor;
    window caps how many frames on each side of the junction are scanned.
    velocity_fit_frames is the number of samples in the boundary velocity
    fit, transition_frames the length T of the synthesized bridge, and
    control_points the number K of tracked points promoted to guidance.
    """

    window: int = 30
    freeze_threshold: float = 1.0
    velocity_fit_frames: int = 5
    transition_frames: int = 16
    control_points: int = 16

    def __post_init__(self) -> None:
        if self.window < 1 or self.window > 30:
            raise TransitionError("window must be in [1, 30]")
        if self.freeze_threshold <= 0:
            raise TransitionError("freeze_threshold must be positive")
        if self.velocity_fit_frames < 2:
            raise TransitionError("velocity_fit_frames must be at least 2")
        if self.transition_frames < 2:
            raise TransitionError("transition_frames must be at least 2")
        if self.control_points < 1:
            raise TransitionError("control_points must be at least 1")


@dataclass(frozen=True)
class BoundaryState:
    """Position and tangent of one point at a truncated clip boundary.

    ``velocity`` is expressed per unit of normalized transition time:
    the per-frame pixel velocity at the boundary multiplied by the
    transition length T, ready to drop into the Hermite basis.
    """

    position: tuple[float, float]
    velocity: tuple[float, float]

    def __post_init__(self) -> None:
        values = (*self.position, *self.velocity)
        if not all(np.isfinite(v) for v in values):
            raise TransitionError(f"non-finite boundary state: {values}")


@dataclass(frozen=True)
class TruncationDecision:
    """Frozen-margin lengths on each side of the junction.

    Unpacks as ``cut_a, cut_b = detect_truncation(...)``; warnings ride
    along as an attribute.
    """

    cut_a: int
    cut_b: int
    warnings: tuple[str, ...] = ()

    def __iter__(self):
        return iter((self.cut_a, self.cut_b))


def _median_displacement(ts: TrackSet, offset: int) -> float:
    """Median over visible points of |position(offset) - position(0)|."""
    displacements: list[float] = []
    for track in ts.tracks:
        anchor = track.anchor()
        if not anchor.visible:
            continue
        s = track.sample_at(offset)
        if s is None or not s.visible:
            continue
        displacements.append(
            float(np.hypot(s.x - anchor.x, s.y - anchor.y))
        )
    if not displacements:
        raise TransitionError(
            f"no visible points at merged frame {offset}; cannot scan for "
            "frozen margins"
        )
    return statistics.median(displacements)


def detect_truncation(
    ts: TrackSet, params: TransitionParams
) -> TruncationDecision:
    """Count frozen frames adjacent to the junction on each side.

    A frame offset is frozen when the median displacement from the
    anchor over visible points is below the freeze threshold. The cut is
    the number of consecutive frozen offsets starting at offset 1; the
    scan never looks past ``params.window`` frames.
    """
    window = params.window
    if window > ts.clip_a_len - 1 or window > ts.clip_b_len - 1:
        raise TransitionError(
            f"window {window} exceeds a clip length "
            f"({ts.clip_a_len}, {ts.clip_b_len}); not enough frames to scan"
        )
    warnings: list[str] = []
    cuts: dict[str, int] = {}
    for side, sign in (("a", -1), ("b", 1)):
        cut = 0
        for offset in range(1, window + 1):
            if _median_displacement(ts, sign * offset) < params.freeze_threshold:
                cut += 1
            else:
                break
        if cut == window:
            warnings.append(
                f"side {side}: every scanned frame is frozen; cutting the "
                f"full window of {window} frames"
            )
        cuts[side] = cut
    return TruncationDecision(
        cut_a=cuts["a"], cut_b=cuts["b"], warnings=tuple(warnings)
    )


def estimate_boundary_state(
    ts: TrackSet,
    side: str,
    cuts: tuple[int, int],
    params: TransitionParams,
) -> tuple[dict[int, BoundaryState], list[str]]:
    """Fit per-point position and tangent at one truncated boundary.

    For side "a" the boundary frame is ``-cut_a`` and the fit runs over
    the nearest visible samples at frames <= the boundary; for side "b"
    it is ``+cut_b`` with samples >= the boundary. The tangent is the
    least-squares slope (pixels per frame) over ``velocity_fit_frames``
    samples, scaled by ``transition_frames`` into normalized time.

    Points without a visible sample exactly at the boundary frame, or
    with fewer than ``velocity_fit_frames`` visible samples on the
    approach, are excluded with a warning.
    """
    if side not in ("a", "b"):
        raise TransitionError(f"side must be 'a' or 'b', got {side!r}")
    cut_a, cut_b = cuts
    boundary = -cut_a if side == "a" else cut_b
    k = params.velocity_fit_frames
    states: dict[int, BoundaryState] = {}
    warnings: list[str] = []
    for track in ts.tracks:
        if not track.anchor().visible:
            # a point nobody saw at the junction has no trustworthy identity
            warnings.append(
                f"point {track.point_id}: invisible at the anchor, dropped"
            )
            continue
        if side == "a":
            window = [s for s in track.samples if s.visible and s.frame <= boundary]
            window = window[-k:]
        else:
            window = [s for s in track.samples if s.visible and s.frame >= boundary]
            window = window[:k]
        at_boundary = next((s for s in window if s.frame == boundary), None)
        if at_boundary is None:
            warnings.append(
                f"point {track.point_id}: not visible at boundary frame "
                f"{boundary} (side {side}), excluded"
            )
            continue
        if len(window) < k:
            warnings.append(
                f"point {track.point_id}: only {len(window)} visible samples "
                f"near boundary frame {boundary} (side {side}), need {k}, "
                "excluded"
            )
            continue
        frames = np.array([s.frame for s in window], dtype=float)
        xs = np.array([s.x for s in window], dtype=float)
        ys = np.array([s.y for s in window], dtype=float)
        design = np.stack([frames, np.ones_like(frames)], axis=1)
        (slope_x, _), _, _, _ = np.linalg.lstsq(design, xs, rcond=None)
        (slope_y, _), _, _, _ = np.linalg.lstsq(design, ys, rcond=None)
        t_scale = float(params.transition_frames)
        states[track.point_id] = BoundaryState(
            position=(at_boundary.x, at_boundary.y),
            velocity=(float(slope_x) * t_scale, float(slope_y) * t_scale),
        )
    return states, warnings


def _hermite_terms(t: np.ndarray) -> tuple[np.ndarray, ...]:
    t2 = t * t
    t3 = t2 * t
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = t3 - 2.0 * t2 + t
    h01 = -2.0 * t3 + 3.0 * t2
    h11 = t3 - t2
    return h00, h10, h01, h11


def hermite_eval(
    p0: np.ndarray,
    v0: np.ndarray,
    p1: np.ndarray,
    v1: np.ndarray,
    t: np.ndarray | float,
) -> np.ndarray:
    """Vectorized cubic Hermite position; inputs broadcast over points."""
    h00, h10, h01, h11 = _hermite_terms(np.asarray(t, dtype=float))
    return h00 * p0 + h10 * v0 + h01 * p1 + h11 * v1


def hermite_velocity_eval(
    p0: np.ndarray,
    v0: np.ndarray,
    p1: np.ndarray,
    v1: np.ndarray,
    t: np.ndarray | float,
) -> np.ndarray:
    """Vectorized derivative of the cubic Hermite with respect to t."""
    t = np.asarray(t, dtype=float)
    t2 = t * t
    d00 = 6.0 * t2 - 6.0 * t
    d10 = 3.0 * t2 - 4.0 * t + 1.0
    d01 = -6.0 * t2 + 6.0 * t
    d11 = 3.0 * t2 - 2.0 * t
    return d00 * p0 + d10 * v0 + d01 * p1 + d11 * v1


def _check_t(t: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise TransitionError(f"t must be in [0, 1], got {t}")


def hermite_position(
    start: BoundaryState, end: BoundaryState, t: float
) -> tuple[float, float]:
    """Cubic Hermite position between two boundary states at t in [0, 1].

    At t=0 the curve sits exactly on the start position; at t=1 exactly
    on the end position. Tangents are interpreted in normalized time, as
    stored on :class:`BoundaryState`.
    """
    _check_t(t)
    out = hermite_eval(
        np.asarray(start.position),
        np.asarray(start.velocity),
        np.asarray(end.position),
        np.asarray(end.velocity),
        t,
    )
    return float(out[0]), float(out[1])


def hermite_velocity(
    start: BoundaryState, end: BoundaryState, t: float
) -> tuple[float, float]:
    """Derivative of :func:`hermite_position` with respect to t.

    By construction the value at t=0 is exactly the start tangent and at
    t=1 exactly the end tangent, with no floating-point drift: the basis
    coefficients cancel symbolically at the endpoints.
    """
    _check_t(t)
    out = hermite_velocity_eval(
        np.asarray(start.position),
        np.asarray(start.velocity),
        np.asarray(end.position),
        np.asarray(end.velocity),
        t,
    )
    return float(out[0]), float(out[1])


def farthest_point_sample(
    positions: dict[int, tuple[float, float]], k: int
) -> list[int]:
    """Pick k spatially spread point ids by farthest-point sampling.

    The seed is the point farthest from the centroid; each next pick
    maximizes the distance to the nearest already-selected point. Ties
    break toward the smaller id so the selection is deterministic.
    """
    if k < 1:
        raise TransitionError("k must be at least 1")
    if not positions:
        raise TransitionError("no candidate points to sample from")
    ids = sorted(positions)
    pts = {i: np.asarray(positions[i], dtype=float) for i in ids}
    centroid = np.mean([pts[i] for i in ids], axis=0)
    seed = max(ids, key=lambda i: (float(np.linalg.norm(pts[i] - centroid)), -i))
    selected = [seed]
    while len(selected) < min(k, len(ids)):
        best = max(
            (i for i in ids if i not in selected),
            key=lambda i: (
                min(float(np.linalg.norm(pts[i] - pts[s])) for s in selected),
                -i,
            ),
        )
        selected.append(best)
    return selected


@dataclass(frozen=True)
class ControlField:
    """Per-point guidance trajectories for the transition window.

    Each trajectory holds exactly ``transition_frames`` positions,
    sampled at t = i / (T - 1), clamped to the frame bounds. Frame index
    0 corresponds to the truncated end of clip A, frame T-1 to the
    truncated start of clip B.
    """

    transition_frames: int
    width: int
    height: int
    trajectories: dict[int, tuple[tuple[float, float], ...]]

    def to_dict(self) -> dict:
        return {
            "transition_frames": self.transition_frames,
            "width": self.width,
            "height": self.height,
            "points": [
                {
                    "id": pid,
                    "trajectory": [
                        {"f": i, "x": x, "y": y}
                        for i, (x, y) in enumerate(self.trajectories[pid])
                    ],
                }
                for pid in sorted(self.trajectories)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def build_control_field(
    states: dict[int, tuple[BoundaryState, BoundaryState]],
    params: TransitionParams,
    *,
    width: int,
    height: int,
    anchor_positions: dict[int, tuple[float, float]] | None = None,
) -> tuple[ControlField, list[str]]:
    """Sample Hermite trajectories for K spatially spread points.

    ``states`` maps point id to its (side A, side B) boundary states;
    only points with both are eligible. Selection runs farthest-point
    sampling on the anchor positions when provided, else on the side A
    boundary positions. Positions outside the frame are clamped with a
    warning so the guidance never points off-screen.
    """
    if not states:
        raise TransitionError(
            "no points carry boundary states on both sides; cannot build a "
            "control field"
        )
    basis = anchor_positions or {
        pid: pair[0].position for pid, pair in states.items()
    }
    basis = {pid: basis[pid] for pid in states if pid in basis}
    if not basis:
        raise TransitionError("no anchor positions for the stated points")
    chosen = farthest_point_sample(basis, params.control_points)

    T = params.transition_frames
    ts = np.arange(T, dtype=float) / (T - 1)
    warnings: list[str] = []
    trajectories: dict[int, tuple[tuple[float, float], ...]] = {}
    for pid in chosen:
        start, end = states[pid]
        xs = hermite_eval(
            start.position[0], start.velocity[0], end.position[0], end.velocity[0], ts
        )
        ys = hermite_eval(
            start.position[1], start.velocity[1], end.position[1], end.velocity[1], ts
        )
        clamped_x = np.clip(xs, 0.0, float(width))
        clamped_y = np.clip(ys, 0.0, float(height))
        if not (np.array_equal(clamped_x, xs) and np.array_equal(clamped_y, ys)):
            warnings.append(
                f"point {pid}: trajectory left the frame and was clamped"
            )
        trajectories[pid] = tuple(
            (float(x), float(y)) for x, y in zip(clamped_x, clamped_y)
        )
    return (
        ControlField(
            transition_frames=T,
            width=width,
            height=height,
            trajectories=trajectories,
        ),
        warnings,
    )


@dataclass(frozen=True)
class TransitionPlan:
    """Everything needed to synthesize and splice one transition."""

    cut_a: int
    cut_b: int
    states: dict[int, tuple[BoundaryState, BoundaryState]]
    field: ControlField
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "cut_a": self.cut_a,
            "cut_b": self.cut_b,
            "states": [
                {
                    "id": pid,
                    "a": {"position": list(a.position), "velocity": list(a.velocity)},
                    "b": {"position": list(b.position), "velocity": list(b.velocity)},
                }
                for pid, (a, b) in sorted(self.states.items())
            ],
            "field": self.field.to_dict(),
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> TransitionPlan:
        states = {
            int(rec["id"]): (
                BoundaryState(
                    position=tuple(rec["a"]["position"]),
                    velocity=tuple(rec["a"]["velocity"]),
                ),
                BoundaryState(
                    position=tuple(rec["b"]["position"]),
                    velocity=tuple(rec["b"]["velocity"]),
                ),
            )
            for rec in doc["states"]
        }
        f = doc["field"]
        field_obj = ControlField(
            transition_frames=int(f["transition_frames"]),
            width=int(f["width"]),
            height=int(f["height"]),
            trajectories={
                int(p["id"]): tuple(
                    (float(s["x"]), float(s["y"])) for s in p["trajectory"]
                )
                for p in f["points"]
            },
        )
        return cls(
            cut_a=int(doc["cut_a"]),
            cut_b=int(doc["cut_b"]),
            states=states,
            field=field_obj,
            warnings=tuple(doc.get("warnings", ())),
        )


def plan_transition(ts: TrackSet, params: TransitionParams) -> TransitionPlan:
    """Run the full planning pass on one merged track set.

    Detects frozen margins, fits boundary states on both sides, keeps
    the points that survived both fits, and builds the control field.
    All stage warnings are collected onto the plan.
    """
    decision = detect_truncation(ts, params)
    cuts = (decision.cut_a, decision.cut_b)
    states_a, warn_a = estimate_boundary_state(ts, "a", cuts, params)
    states_b, warn_b = estimate_boundary_state(ts, "b", cuts, params)
    paired = {
        pid: (states_a[pid], states_b[pid])
        for pid in states_a.keys() & states_b.keys()
    }
    anchors = {
        pid: pos for pid, pos in ts.anchor_positions().items() if pid in paired
    }
    field_obj, warn_f = build_control_field(
        paired,
        params,
        width=ts.width,
        height=ts.height,
        anchor_positions=anchors,
    )
    return TransitionPlan(
        cut_a=decision.cut_a,
        cut_b=decision.cut_b,
        states=paired,
        field=field_obj,
        warnings=tuple([*decision.warnings, *warn_a, *warn_b, *warn_f]),
    )


@dataclass(frozen=True)
class Segment:
    """One contiguous frame range lifted from a source clip."""

    source: str
    ref: str
    start: int
    end: int  # inclusive

    @property
    def frames(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class CutList:
    """Ordered segments composing the final spliced timeline."""

    segments: tuple[Segment, ...]

    @property
    def total_frames(self) -> int:
        return sum(s.frames for s in self.segments)

    def to_dict(self) -> dict:
        return {
            "segments": [
                {
                    "source": s.source,
                    "ref": s.ref,
                    "start": s.start,
                    "end": s.end,
                    "frames": s.frames,
                }
                for s in self.segments
            ],
            "total_frames": self.total_frames,
        }


def stitch_timeline(
    plan: TransitionPlan,
    clip_a: tuple[str, int],
    transition: tuple[str, int],
    clip_b: tuple[str, int],
) -> CutList:
    """Splice clip A, the synthesized transition, and clip B.

    Each clip argument is a ``(ref, frame_count)`` pair. Clip A keeps
    frames [0, len_a - 1 - cut_a], the transition contributes all of its
    frames, and clip B keeps [cut_b, len_b - 1]. The transition clip must
    be exactly ``transition_frames`` long.
    """
    ref_a, len_a = clip_a
    ref_t, len_t = transition
    ref_b, len_b = clip_b
    if len_t != plan.field.transition_frames:
        raise TransitionError(
            f"transition clip is {len_t} frames, plan calls for "
            f"{plan.field.transition_frames}"
        )
    if plan.cut_a >= len_a:
        raise TransitionError(
            f"cut_a {plan.cut_a} would consume all {len_a} frames of clip A"
        )
    if plan.cut_b >= len_b:
        raise TransitionError(
            f"cut_b {plan.cut_b} would consume all {len_b} frames of clip B"
        )
    segments = (
        Segment(source="clip_a", ref=ref_a, start=0, end=len_a - 1 - plan.cut_a),
        Segment(source="transition", ref=ref_t, start=0, end=len_t - 1),
        Segment(source="clip_b", ref=ref_b, start=plan.cut_b, end=len_b - 1),
    )
    return CutList(segments=segments)
