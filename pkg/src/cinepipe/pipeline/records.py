"""Run state: stage progression, human gates, and manifest rows.

A run's checkpoint truth is its artifact map: a stage counts as complete
exactly when its payload is recorded. The ``stage`` pointer is derived
bookkeeping (or "failed"), so a crash between save and advance can never
invent progress.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

from ..planner import ControlSignals

__all__ = [
    "GATEABLE_STAGES",
    "GATE_STATES",
    "ManifestEntry",
    "PipelineError",
    "RunRecord",
    "STAGES",
    "StageConflict",
    "utc_now",
]

STAGES = ("planned", "screenplay", "storyboard", "clips", "transitions", "final")
GATE_STATES = ("auto", "awaiting_approval", "approved", "rejected")
# stages a human can be asked to sign off on
GATEABLE_STAGES = ("screenplay", "storyboard")


class PipelineError(ValueError):
    """Raised for invalid run state, bad config, or unknown runs."""


class StageConflict(PipelineError):
    """Raised when a gate mutation races or repeats (HTTP 409 upstream)."""


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


@dataclass
class RunRecord:
    """Checkpointed state of one sample's trip through the pipeline."""

    run_id: str
    signals: ControlSignals
    stage: str = "planned"
    gate_states: dict[str, str] = field(default_factory=dict)
    artifacts: dict[str, dict] = field(default_factory=dict)
    error: str | None = None
    failed_stage: str | None = None
    revision: int = 0
    created_at: str = field(default_factory=utc_now)
    updated_at: str = field(default_factory=utc_now)

    def __post_init__(self) -> None:
        if self.stage not in STAGES and self.stage != "failed":
            raise PipelineError(f"unknown stage {self.stage!r}")
        for stage_name, state in self.gate_states.items():
            if stage_name not in GATEABLE_STAGES:
                raise PipelineError(f"stage {stage_name!r} cannot carry a gate")
            if state not in GATE_STATES:
                raise PipelineError(f"unknown gate state {state!r}")

    def gate_state(self, stage: str) -> str:
        return self.gate_states.get(stage, "auto")

    def completed_stages(self) -> tuple[str, ...]:
        """Longest stage prefix whose artifacts are all present."""
        done = ["planned"]
        for name in STAGES[1:]:
            if name not in self.artifacts:
                break
            done.append(name)
        return tuple(done)

    def next_stage(self) -> str | None:
        done = self.completed_stages()
        return None if done[-1] == "final" else STAGES[len(done)]

    def advance(self, stage: str, payload: dict) -> None:
        """Record a completed stage; only the immediate next one is legal."""
        expected = self.next_stage()
        if stage != expected:
            raise PipelineError(
                f"cannot advance to {stage!r}; next stage is {expected!r}"
            )
        self.artifacts[stage] = payload
        self.stage = stage
        self.error = None
        self.failed_stage = None

    def mark_failed(self, stage: str, cause: str) -> None:
        self.stage = "failed"
        self.failed_stage = stage
        self.error = cause

    def drop_from(self, stage: str) -> list[str]:
        """Remove a completed stage and everything after it (for re-runs)."""
        if stage not in self.artifacts:
            raise PipelineError(f"stage {stage!r} has no artifacts to drop")
        dropped = [s for s in STAGES if s in self.artifacts and STAGES.index(s) >= STAGES.index(stage)]
        for name in dropped:
            del self.artifacts[name]
            self.gate_states.pop(name, None)
        done = self.completed_stages()
        self.stage = done[-1]
        self.error = None
        self.failed_stage = None
        return dropped

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "signals": self.signals.to_dict(),
            "stage": self.stage,
            "gate_states": dict(self.gate_states),
            "artifacts": self.artifacts,
            "error": self.error,
            "failed_stage": self.failed_stage,
            "revision": self.revision,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> RunRecord:
        try:
            return cls(
                run_id=doc["run_id"],
                signals=ControlSignals.from_dict(doc["signals"]),
                stage=doc["stage"],
                gate_states=dict(doc.get("gate_states", {})),
                artifacts=dict(doc.get("artifacts", {})),
                error=doc.get("error"),
                failed_stage=doc.get("failed_stage"),
                revision=int(doc.get("revision", 0)),
                created_at=doc.get("created_at", utc_now()),
                updated_at=doc.get("updated_at", utc_now()),
            )
        except (KeyError, TypeError) as exc:
            raise PipelineError(f"corrupt checkpoint: {exc}") from None


_MANIFEST_TEXT_FIELDS = (
    "run_id",
    "video_ref",
    "scene_description",
    "genre",
    "subject_count",
    "dynamicity",
)


@dataclass(frozen=True)
class ManifestEntry:
    """One finished sample as the exported dataset describes it."""

    run_id: str
    video_ref: str
    scene_description: str
    camera_instructions: tuple[str, ...]
    shots: tuple[dict, ...]
    genre: str
    subject_count: str
    dynamicity: str
    shot_count: int
    keyframe_refs: tuple[str, ...]
    transition_warnings: tuple[str, ...]
    total_frames: int

    def __post_init__(self) -> None:
        for name in _MANIFEST_TEXT_FIELDS:
            if not getattr(self, name):
                raise PipelineError(f"manifest entry missing {name}")
        if self.shot_count < 1:
            raise PipelineError("manifest entry needs shot_count >= 1")
        if len(self.camera_instructions) != self.shot_count:
            raise PipelineError("one camera instruction per shot required")
        if len(self.keyframe_refs) != self.shot_count + 1:
            raise PipelineError(
                f"{len(self.keyframe_refs)} keyframes for {self.shot_count} shots"
            )

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "video_ref": self.video_ref,
            "scene_description": self.scene_description,
            "camera_instructions": list(self.camera_instructions),
            "shots": list(self.shots),
            "genre": self.genre,
            "subject_count": self.subject_count,
            "dynamicity": self.dynamicity,
            "shot_count": self.shot_count,
            "keyframe_refs": list(self.keyframe_refs),
            "transition_warnings": list(self.transition_warnings),
            "total_frames": self.total_frames,
        }
