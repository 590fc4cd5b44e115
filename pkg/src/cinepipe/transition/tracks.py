"""Point track containers, ingest, bidirectional merging, and synthesis.

Tracks live on a merged timeline centred on the junction between two
clips: frame 0 is the last frame of clip A and simultaneously the first
frame of clip B (the shared anchor image), negative frames reach back
into clip A, positive frames reach forward into clip B.

Trackers only run forward, so clip A is tracked on the reversed clip and
its frame indices are negated during the merge.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

__all__ = [
    "TrackError",
    "TrackSample",
    "PointTrack",
    "TrackSet",
    "ingest_tracks",
    "merge_bidirectional",
    "MotionProfile",
    "SynthTruth",
    "synth_tracks",
]


class TrackError(ValueError):
    """Raised for malformed or inconsistent track data."""


@dataclass(frozen=True)
class TrackSample:
    """One observation of one point: merged frame index, position, visibility."""

    frame: int
    x: float
    y: float
    visible: bool = True


@dataclass(frozen=True)
class PointTrack:
    """All samples for a single tracked point, frames strictly increasing."""

    point_id: int
    samples: tuple[TrackSample, ...]

    def __post_init__(self) -> None:
        frames = [s.frame for s in self.samples]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise TrackError(
                f"point {self.point_id}: frames must be strictly increasing"
            )

    def sample_at(self, frame: int) -> TrackSample | None:
        for s in self.samples:
            if s.frame == frame:
                return s
        return None

    def anchor(self) -> TrackSample:
        s = self.sample_at(0)
        if s is None:
            raise TrackError(f"point {self.point_id}: no sample at anchor frame 0")
        return s


@dataclass(frozen=True)
class TrackSet:
    """Merged point tracks for one clip junction.

    Clip A contributes frames in [-(clip_a_len - 1), 0], clip B frames in
    [0, clip_b_len - 1]. Every track must carry a sample at frame 0 and
    visible samples must fall inside the frame bounds.
    """

    width: int
    height: int
    fps: float
    clip_a_len: int
    clip_b_len: int
    tracks: tuple[PointTrack, ...]
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise TrackError("frame dimensions must be positive")
        if self.fps <= 0:
            raise TrackError("fps must be positive")
        if self.clip_a_len < 1 or self.clip_b_len < 1:
            raise TrackError("clip lengths must be at least 1 frame")
        seen: set[int] = set()
        for track in self.tracks:
            if track.point_id in seen:
                raise TrackError(f"duplicate point id {track.point_id}")
            seen.add(track.point_id)
            track.anchor()  # raises when the anchor sample is missing
            lo = -(self.clip_a_len - 1)
            hi = self.clip_b_len - 1
            for s in track.samples:
                if not (lo <= s.frame <= hi):
                    raise TrackError(
                        f"point {track.point_id}: frame {s.frame} outside "
                        f"[{lo}, {hi}]"
                    )
                if s.visible and not (
                    0.0 <= s.x <= self.width and 0.0 <= s.y <= self.height
                ):
                    raise TrackError(
                        f"point {track.point_id}: visible sample at frame "
                        f"{s.frame} out of bounds ({s.x}, {s.y})"
                    )

    @property
    def anchor_frame(self) -> int:
        """The merged timeline is always centred on frame 0."""
        return 0

    def track(self, point_id: int) -> PointTrack:
        for t in self.tracks:
            if t.point_id == point_id:
                return t
        raise KeyError(point_id)

    def anchor_positions(self) -> dict[int, tuple[float, float]]:
        return {t.point_id: (t.anchor().x, t.anchor().y) for t in self.tracks}

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "fps": self.fps,
            "clip_a_len": self.clip_a_len,
            "clip_b_len": self.clip_b_len,
            "points": [
                {
                    "id": t.point_id,
                    "frames": [
                        {"f": s.frame, "x": s.x, "y": s.y, "visible": s.visible}
                        for s in t.samples
                    ],
                }
                for t in self.tracks
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _parse_track(record: dict) -> PointTrack:
    try:
        point_id = int(record["id"])
        samples = tuple(
            TrackSample(
                frame=int(f["f"]),
                x=float(f["x"]),
                y=float(f["y"]),
                visible=bool(f.get("visible", True)),
            )
            for f in record["frames"]
        )
    except (KeyError, TypeError) as exc:
        raise TrackError(f"malformed track record: {exc}") from exc
    return PointTrack(point_id=point_id, samples=samples)


def ingest_tracks(document: dict | str) -> TrackSet:
    """Parse a merged track document (dict or JSON text) into a TrackSet.

    The document layout is the same one :meth:`TrackSet.to_dict` emits:
    width, height, fps, clip_a_len, clip_b_len, and a ``points`` list of
    ``{id, frames: [{f, x, y, visible}]}`` records.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise TrackError(f"track document is not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise TrackError("track document must be a JSON object")
    try:
        width = int(document["width"])
        height = int(document["height"])
        fps = float(document["fps"])
        clip_a_len = int(document["clip_a_len"])
        clip_b_len = int(document["clip_b_len"])
        points = document["points"]
    except (KeyError, TypeError) as exc:
        raise TrackError(f"track document missing field: {exc}") from exc
    return TrackSet(
        width=width,
        height=height,
        fps=fps,
        clip_a_len=clip_a_len,
        clip_b_len=clip_b_len,
        tracks=tuple(_parse_track(r) for r in points),
    )


def merge_bidirectional(
    back: list[PointTrack] | tuple[PointTrack, ...],
    fwd: list[PointTrack] | tuple[PointTrack, ...],
    *,
    width: int,
    height: int,
    fps: float,
    clip_a_len: int | None = None,
    clip_b_len: int | None = None,
    anchor_epsilon: float = 0.5,
) -> TrackSet:
    """Fuse two one-directional track runs into one merged TrackSet.

    ``back`` is the tracker output on the reversed clip A, ``fwd`` the
    output on clip B; both start at the shared anchor image as their
    frame 0. A back sample at reversed frame j lands at merged frame -j.

    Points present in only one direction are dropped with a warning.
    Points whose two anchor observations disagree by more than
    ``anchor_epsilon`` pixels indicate a tracker correspondence failure
    and raise :class:`TrackError`.
    """
    back_by_id = {t.point_id: t for t in back}
    fwd_by_id = {t.point_id: t for t in fwd}
    if len(back_by_id) != len(back) or len(fwd_by_id) != len(fwd):
        raise TrackError("duplicate point ids within one direction")

    warnings: list[str] = []
    merged: list[PointTrack] = []
    for point_id in sorted(back_by_id.keys() | fwd_by_id.keys()):
        b = back_by_id.get(point_id)
        f = fwd_by_id.get(point_id)
        if b is None or f is None:
            side = "back" if f is None else "fwd"
            warnings.append(
                f"point {point_id}: only tracked in the {side} direction, dropped"
            )
            continue
        b_anchor = b.anchor()
        f_anchor = f.anchor()
        drift = math.hypot(b_anchor.x - f_anchor.x, b_anchor.y - f_anchor.y)
        if drift > anchor_epsilon:
            raise TrackError(
                f"point {point_id}: anchor positions disagree by {drift:.3f}px "
                f"(limit {anchor_epsilon})"
            )
        negated = [
            TrackSample(frame=-s.frame, x=s.x, y=s.y, visible=s.visible)
            for s in b.samples
            if s.frame != 0
        ]
        samples = tuple(sorted(negated, key=lambda s: s.frame)) + f.samples
        merged.append(PointTrack(point_id=point_id, samples=samples))

    if clip_a_len is None:
        clip_a_len = 1 + max(
            (max(s.frame for s in t.samples) for t in back), default=0
        )
    if clip_b_len is None:
        clip_b_len = 1 + max(
            (max(s.frame for s in t.samples) for t in fwd), default=0
        )
    return TrackSet(
        width=width,
        height=height,
        fps=fps,
        clip_a_len=clip_a_len,
        clip_b_len=clip_b_len,
        tracks=tuple(merged),
        warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class MotionProfile:
    """Scripted motion for synthetic tracks around one junction.

    Each clip side moves its points rigidly at ``velocity`` pixels per
    frame, with an optional per-point parallax scale, and holds them
    still for ``stall`` frames adjacent to the anchor. ``ease_frames``
    ramps speed near the stall from ``ease_floor`` up to full speed.

    The generator does not know the freeze threshold the detector will
    use. For the stall lengths to be recoverable, pick per-frame speeds
    comfortably above that threshold and ``jitter`` comfortably below
    half of it.
    """

    velocity_a: tuple[float, float] = (-3.0, 0.0)
    velocity_b: tuple[float, float] = (2.5, 1.0)
    stall_a: int = 0
    stall_b: int = 0
    jitter: float = 0.0
    parallax: float = 0.0
    ease_frames: int = 0
    ease_floor: float = 0.8

    def __post_init__(self) -> None:
        if self.stall_a < 0 or self.stall_b < 0:
            raise ValueError("stall lengths must be non-negative")
        if self.jitter < 0:
            raise ValueError("jitter must be non-negative")
        if not 0.0 <= self.parallax < 1.0:
            raise ValueError("parallax must be in [0, 1)")
        if not 0.0 < self.ease_floor <= 1.0:
            raise ValueError("ease_floor must be in (0, 1]")


@dataclass(frozen=True)
class SynthTruth:
    """Ground truth recorded by :func:`synth_tracks`.

    ``velocity_a``/``velocity_b`` are base per-frame velocities at the
    stall boundaries (before parallax scaling); per-point values carry
    the applied scale.
    """

    stall_a: int
    stall_b: int
    velocity_a: tuple[float, float]
    velocity_b: tuple[float, float]
    point_scale: dict[int, float] = field(default_factory=dict)


def synth_tracks(
    profile: MotionProfile,
    *,
    n_points: int = 24,
    clip_a_len: int = 49,
    clip_b_len: int = 49,
    width: int = 960,
    height: int = 540,
    fps: float = 16.0,
    seed: int = 0,
) -> tuple[TrackSet, SynthTruth]:
    """Generate a merged TrackSet with known stalls and velocities.

    Anchor positions are drawn uniformly inside a margin; positions are
    clamped to the frame so every sample stays in bounds. The stall
    frames adjacent to the anchor move only by jitter; outside them the
    points travel at the profile velocity (parallax-scaled per point,
    ease-ramped near the stall).
    """
    if n_points < 1:
        raise ValueError("n_points must be at least 1")
    if profile.stall_a > clip_a_len - 1 or profile.stall_b > clip_b_len - 1:
        raise ValueError("stall longer than the clip it sits in")
    rng = random.Random(seed)
    margin_x = width * 0.25
    margin_y = height * 0.25

    def ease(moving_index: int) -> float:
        # moving_index counts frames since (or until) the stall, starting at 1
        if profile.ease_frames <= 0 or moving_index > profile.ease_frames:
            return 1.0
        span = 1.0 - profile.ease_floor
        return profile.ease_floor + span * (moving_index - 1) / profile.ease_frames

    tracks: list[PointTrack] = []
    scales: dict[int, float] = {}
    for point_id in range(n_points):
        ax = rng.uniform(margin_x, width - margin_x)
        ay = rng.uniform(margin_y, height - margin_y)
        scale = 1.0 + (rng.uniform(-1.0, 1.0) * profile.parallax)
        scales[point_id] = scale

        def jit() -> tuple[float, float]:
            if profile.jitter == 0.0:
                return 0.0, 0.0
            return (
                rng.uniform(-profile.jitter, profile.jitter),
                rng.uniform(-profile.jitter, profile.jitter),
            )

        positions: dict[int, tuple[float, float]] = {0: (ax, ay)}
        # clip B: walk forward from the anchor
        x, y = ax, ay
        for f in range(1, clip_b_len):
            if f > profile.stall_b:
                step = ease(f - profile.stall_b)
                x += profile.velocity_b[0] * scale * step
                y += profile.velocity_b[1] * scale * step
            jx, jy = jit()
            positions[f] = (x + jx, y + jy)
        # clip A: walk backward from the anchor; approaching the anchor the
        # point moves at velocity_a, so stepping back in time subtracts it
        x, y = ax, ay
        for f in range(-1, -clip_a_len, -1):
            if -f > profile.stall_a:
                step = ease(-f - profile.stall_a)
                x -= profile.velocity_a[0] * scale * step
                y -= profile.velocity_a[1] * scale * step
            jx, jy = jit()
            positions[f] = (x + jx, y + jy)

        samples = tuple(
            TrackSample(
                frame=f,
                x=min(max(px, 0.0), float(width)),
                y=min(max(py, 0.0), float(height)),
            )
            for f, (px, py) in sorted(positions.items())
        )
        tracks.append(PointTrack(point_id=point_id, samples=samples))

    track_set = TrackSet(
        width=width,
        height=height,
        fps=fps,
        clip_a_len=clip_a_len,
        clip_b_len=clip_b_len,
        tracks=tuple(tracks),
    )
    truth = SynthTruth(
        stall_a=profile.stall_a,
        stall_b=profile.stall_b,
        velocity_a=profile.velocity_a,
        velocity_b=profile.velocity_b,
        point_scale=scales,
    )
    return track_set, truth
