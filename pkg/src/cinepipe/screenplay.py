"""Scene records and chained shot triplets.

Two LLM roles build the screenplay for one sample: a storyteller expands
the control signals into a structured scene record, then a cinematographer
walks the planned camera movements, each shot opening on exactly the view
the previous shot closed on. That exact-string chaining is what later lets
storyboard keyframes double as shot boundaries.
"""

from __future__ import annotations

import json
import statistics
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .planner import ControlSignals
from .taxonomy import Taxonomy, TaxonomyError, load_taxonomy

__all__ = [
    "AUDIT_FIELDS",
    "ENVIRONMENT_REF",
    "RetrievalAudit",
    "SceneAction",
    "SceneRecord",
    "Screenplay",
    "ScreenplayError",
    "ShotTriplet",
    "Subject",
    "audit_screenplay",
    "build_screenplay",
    "compose_scene",
    "opening_view",
    "parse_scene_record",
    "render_screenplay",
    "translate_movement",
]

# control fields a retrieval audit checks, in report order
AUDIT_FIELDS = ("genre", "subject_count", "dynamicity", "shot_count")

# actions in a zero-subject scene attach to this pseudo-subject
ENVIRONMENT_REF = "environment"

_TEXT_FIELDS = ("lighting", "location", "subject_positions", "crowd_level", "scenario")
_RECORD_FIELDS = (
    "lighting",
    "location",
    "subjects",
    "actions",
    "subject_positions",
    "crowd_level",
    "scenario",
)


class ScreenplayError(ValueError):
    """Raised for unparseable model output or a malformed screenplay."""


@lru_cache(maxsize=None)
def _template(name: str) -> str:
    return (
        resources.files("cinepipe").joinpath("prompts").joinpath(name)
        .read_text(encoding="utf-8")
    )


def _render_prompt(template_name: str, payload: dict) -> str:
    # machine inputs travel as one JSON line the mock can parse back out
    return _template(template_name).format(
        payload_json=json.dumps(payload, sort_keys=True)
    )


@dataclass(frozen=True)
class Subject:
    identity: str
    visual_attributes: str

    def __post_init__(self) -> None:
        if not self.identity.strip():
            raise ScreenplayError("subject identity must be non-empty")
        if not self.visual_attributes.strip():
            raise ScreenplayError(
                f"subject {self.identity!r} needs visual attributes"
            )


@dataclass(frozen=True)
class SceneAction:
    subject_ref: str
    verb_phrase: str

    def __post_init__(self) -> None:
        if not self.subject_ref.strip():
            raise ScreenplayError("action subject_ref must be non-empty")
        if not self.verb_phrase.strip():
            raise ScreenplayError(
                f"action for {self.subject_ref!r} needs a verb phrase"
            )


@dataclass(frozen=True)
class SceneRecord:
    """Structured scene description produced by the storyteller."""

    lighting: str
    location: str
    subjects: tuple[Subject, ...]
    actions: tuple[SceneAction, ...]
    subject_positions: str
    crowd_level: str
    scenario: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "subjects", tuple(self.subjects))
        object.__setattr__(self, "actions", tuple(self.actions))
        for name in _TEXT_FIELDS:
            value = getattr(self, name)
            if not isinstance(value, str) or not value.strip():
                raise ScreenplayError(f"field {name} must be non-empty text")
        if not self.actions:
            raise ScreenplayError("a scene needs at least one action")
        identities = {s.identity for s in self.subjects}
        for action in self.actions:
            if action.subject_ref not in identities and action.subject_ref != ENVIRONMENT_REF:
                raise ScreenplayError(
                    f"action references undeclared subject {action.subject_ref!r}"
                )

    def validate_against(self, signals: ControlSignals) -> None:
        """Check subject cardinality against the planned subject count."""
        n = len(self.subjects)
        want = signals.subject_count
        if want == "zero" and n != 0:
            raise ScreenplayError(
                f"subject list must be empty for a zero-subject scene, got {n}"
            )
        if want == "single" and n != 1:
            raise ScreenplayError(f"single-subject scene declares {n} subjects")
        if want == "multiple" and n < 2:
            raise ScreenplayError(f"multiple-subject scene declares only {n}")

    def to_dict(self) -> dict:
        return {
            "lighting": self.lighting,
            "location": self.location,
            "subjects": [
                {"identity": s.identity, "visual_attributes": s.visual_attributes}
                for s in self.subjects
            ],
            "actions": [
                {"subject_ref": a.subject_ref, "verb_phrase": a.verb_phrase}
                for a in self.actions
            ],
            "subject_positions": self.subject_positions,
            "crowd_level": self.crowd_level,
            "scenario": self.scenario,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> SceneRecord:
        if not isinstance(doc, dict):
            raise ScreenplayError("scene record must be a JSON object")
        missing = [name for name in _RECORD_FIELDS if name not in doc]
        if missing:
            raise ScreenplayError(f"missing field {missing[0]}")
        extra = [name for name in doc if name not in _RECORD_FIELDS]
        if extra:
            raise ScreenplayError(f"unexpected field {extra[0]}")
        for list_name in ("subjects", "actions"):
            if not isinstance(doc[list_name], list):
                raise ScreenplayError(f"field {list_name} must be a list")
        try:
            subjects = tuple(
                Subject(str(s["identity"]), str(s["visual_attributes"]))
                for s in doc["subjects"]
            )
            actions = tuple(
                SceneAction(str(a["subject_ref"]), str(a["verb_phrase"]))
                for a in doc["actions"]
            )
        except (TypeError, KeyError) as exc:
            raise ScreenplayError(f"malformed subject or action entry: {exc}") from None
        return cls(
            lighting=doc["lighting"] if isinstance(doc["lighting"], str) else "",
            location=doc["location"] if isinstance(doc["location"], str) else "",
            subjects=subjects,
            actions=actions,
            subject_positions=(
                doc["subject_positions"]
                if isinstance(doc["subject_positions"], str)
                else ""
            ),
            crowd_level=doc["crowd_level"] if isinstance(doc["crowd_level"], str) else "",
            scenario=doc["scenario"] if isinstance(doc["scenario"], str) else "",
        )


@dataclass(frozen=True)
class ShotTriplet:
    """One shot as its boundary views plus the movement between them."""

    shot_init: str
    movement: str
    shot_end: str

    def __post_init__(self) -> None:
        if not self.shot_init.strip():
            raise ScreenplayError("shot_init must be non-empty")
        if not self.shot_end.strip():
            raise ScreenplayError("shot_end must be non-empty")
        if not self.movement.strip():
            raise ScreenplayError("movement must be non-empty")

    def to_dict(self) -> dict:
        return {
            "shot_init": self.shot_init,
            "movement": self.movement,
            "shot_end": self.shot_end,
        }


@dataclass(frozen=True)
class Screenplay:
    signals: ControlSignals
    scene: SceneRecord
    triplets: tuple[ShotTriplet, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "triplets", tuple(self.triplets))
        if len(self.triplets) != self.signals.shot_count:
            raise ScreenplayError(
                f"{len(self.triplets)} triplets for shot_count "
                f"{self.signals.shot_count}"
            )
        for i, triplet in enumerate(self.triplets):
            if triplet.movement != self.signals.movements[i]:
                raise ScreenplayError(
                    f"triplet {i} movement {triplet.movement!r} does not match "
                    f"planned {self.signals.movements[i]!r}"
                )
        for i in range(1, len(self.triplets)):
            if self.triplets[i].shot_init != self.triplets[i - 1].shot_end:
                raise ScreenplayError(
                    f"shot {i + 1} does not open on shot {i}'s closing view"
                )

    def to_dict(self) -> dict:
        return {
            "signals": self.signals.to_dict(),
            "scene": self.scene.to_dict(),
            "triplets": [t.to_dict() for t in self.triplets],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> Screenplay:
        try:
            signals = ControlSignals.from_dict(doc["signals"])
            scene = SceneRecord.from_dict(doc["scene"])
            triplets = tuple(
                ShotTriplet(t["shot_init"], t["movement"], t["shot_end"])
                for t in doc["triplets"]
            )
        except (TypeError, KeyError) as exc:
            raise ScreenplayError(f"malformed screenplay document: {exc}") from None
        return cls(signals=signals, scene=scene, triplets=triplets)


@dataclass(frozen=True)
class RetrievalAudit:
    """One sample's control-field retrieval result under a judge panel.

    per_field maps each audited field to its majority-vote accuracy for
    this sample (0.0 or 1.0) and the dispersion of individual judge
    correctness. Abstentions (empty or "unknown" replies) are excluded
    from the vote but counted.
    """

    per_field: dict[str, dict[str, float]]
    judge_count: int
    abstentions: dict[str, int] = field(default_factory=dict)
    votes: dict[str, tuple[str | None, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.judge_count < 1:
            raise ScreenplayError("audit needs at least one judge")
        for name, stats in self.per_field.items():
            if not 0.0 <= stats["accuracy"] <= 1.0:
                raise ScreenplayError(f"accuracy out of range for field {name}")
            if stats["variance"] < 0.0:
                raise ScreenplayError(f"negative variance for field {name}")

    def to_dict(self) -> dict:
        return {
            "per_field": {k: dict(v) for k, v in self.per_field.items()},
            "judge_count": self.judge_count,
            "abstentions": dict(self.abstentions),
            "votes": {k: list(v) for k, v in self.votes.items()},
        }


def parse_scene_record(text: str, signals: ControlSignals) -> SceneRecord:
    """Parse and schema-check a storyteller reply."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        # salvage a fenced or prose-wrapped object before giving up
        start, end = text.find("{"), text.rfind("}")
        if start == -1 or end <= start:
            raise ScreenplayError("reply is not valid JSON") from None
        try:
            doc = json.loads(text[start : end + 1])
        except json.JSONDecodeError:
            raise ScreenplayError("reply is not valid JSON") from None
    if not isinstance(doc, dict):
        raise ScreenplayError("reply is not a JSON object")
    record = SceneRecord.from_dict(doc)
    record.validate_against(signals)
    return record


def compose_scene(
    signals: ControlSignals,
    storyteller,
    *,
    seed: int = 0,
    max_reprompts: int = 3,
) -> SceneRecord:
    """Ask the storyteller for a scene record, re-prompting on violations.

    Each rejected reply earns one re-prompt carrying the violation, up to
    max_reprompts; the raw replies stay in the artifact store either way.
    """
    brief = {
        "genre": signals.genre,
        "subject_count": signals.subject_count,
        "dynamicity": signals.dynamicity,
        "shot_count": signals.shot_count,
    }
    base = _render_prompt("storyteller_scene.txt", brief)
    violation: str | None = None
    attempts = 1 + max_reprompts
    for attempt in range(1, attempts + 1):
        prompt = base
        if violation is not None:
            prompt = (
                f"{base}\nYour previous reply (attempt {attempt - 1}) was "
                f"rejected: {violation}\n"
                "Reply again with only the corrected JSON object."
            )
        reply = storyteller.llm_complete(prompt, "scene_record", seed)
        try:
            return parse_scene_record(reply, signals)
        except ScreenplayError as exc:
            violation = str(exc)
    raise ScreenplayError(
        f"storyteller output rejected after {attempts} attempts: {violation}"
    )


def translate_movement(
    init_desc: str,
    movement: str,
    scene: SceneRecord,
    cinematographer,
    *,
    seed: int = 0,
    taxonomy: Taxonomy | None = None,
) -> str:
    """Terminal view after one camera movement from the given view.

    A static shot keeps its framing, so the initial view is returned
    verbatim without a model call; everything else asks the
    cinematographer and insists on a real description.
    """
    taxonomy = taxonomy if taxonomy is not None else load_taxonomy()
    if movement not in taxonomy.movement_families:
        raise TaxonomyError(f"unknown movement: {movement!r}")
    if not init_desc.strip():
        raise ScreenplayError("initial view description is empty")
    if taxonomy.family_of(movement) == "static":
        return init_desc
    payload = {"init": init_desc, "movement": movement, "location": scene.location}
    prompt = _render_prompt("cinematographer_move.txt", payload)
    reply = cinematographer.llm_complete(prompt, "terminal_view", seed).strip()
    if not reply:
        raise ScreenplayError(f"cinematographer returned an empty reply for {movement!r}")
    if reply.lower() == movement.lower():
        raise ScreenplayError(
            f"cinematographer replied with the bare movement label {movement!r}"
        )
    return reply


def opening_view(scene: SceneRecord) -> str:
    """Deterministic establishing framing derived from the scene record."""
    return (
        f"An establishing view of {scene.location}, {scene.lighting}; "
        f"{scene.subject_positions}."
    )


def build_screenplay(
    scene: SceneRecord,
    signals: ControlSignals,
    cinematographer,
    *,
    seed: int = 0,
    taxonomy: Taxonomy | None = None,
) -> Screenplay:
    """Chain one shot triplet per planned movement across the scene."""
    taxonomy = taxonomy if taxonomy is not None else load_taxonomy()
    view = opening_view(scene)
    triplets = []
    for movement in signals.movements:
        end = translate_movement(
            view, movement, scene, cinematographer, seed=seed, taxonomy=taxonomy
        )
        triplets.append(ShotTriplet(shot_init=view, movement=movement, shot_end=end))
        view = end
    return Screenplay(signals=signals, scene=scene, triplets=tuple(triplets))


def render_screenplay(screenplay: Screenplay) -> str:
    """Flatten a screenplay to the text document judges and exports read."""
    signals = screenplay.signals
    scene = screenplay.scene
    lines = [
        f"SAMPLE: {signals.sample_id}",
        f"GENRE: {signals.genre}",
        f"SHOTS: {signals.shot_count}",
        f"SUBJECT COUNT: {signals.subject_count}",
        f"DYNAMICITY: {signals.dynamicity}",
        "",
        f"LIGHTING: {scene.lighting}",
        f"LOCATION: {scene.location}",
        f"CROWD: {scene.crowd_level}",
        f"POSITIONS: {scene.subject_positions}",
    ]
    if scene.subjects:
        lines.append("CAST:")
        lines.extend(
            f"- {s.identity}: {s.visual_attributes}" for s in scene.subjects
        )
    else:
        lines.append("CAST: none")
    lines.append("ACTION:")
    lines.extend(f"- {a.subject_ref}: {a.verb_phrase}" for a in scene.actions)
    lines += ["", f"SCENE: {scene.scenario}", ""]
    total = len(screenplay.triplets)
    for i, triplet in enumerate(screenplay.triplets, start=1):
        lines += [
            f"SHOT {i} OF {total}",
            f"INIT: {triplet.shot_init}",
            f"MOVE: {triplet.movement}",
            f"END: {triplet.shot_end}",
            "",
        ]
    return "\n".join(lines)


def _majority(cast: list[str]) -> str | None:
    """Unique modal label, or None when the top count ties."""
    if not cast:
        return None
    ranked = Counter(cast).most_common()
    if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        return None
    return ranked[0][0]


def audit_screenplay(
    screenplay: Screenplay,
    signals: ControlSignals,
    judges: list,
    *,
    seed: int = 0,
) -> RetrievalAudit:
    """Have each judge retrieve every control field from the rendered text.

    A field scores 1.0 when the unique majority label matches the planned
    value; tied or fully abstained votes score 0.0. Variance is the
    population variance of individual judge correctness over cast votes.
    """
    judges = list(judges)
    if not judges:
        raise ScreenplayError("audit needs at least one judge")
    text = render_screenplay(screenplay)
    truth = {
        "genre": signals.genre,
        "subject_count": signals.subject_count,
        "dynamicity": signals.dynamicity,
        "shot_count": str(signals.shot_count),
    }
    per_field: dict[str, dict[str, float]] = {}
    abstentions: dict[str, int] = {}
    votes_by_field: dict[str, tuple[str | None, ...]] = {}
    for name in AUDIT_FIELDS:
        expected = truth[name].strip().lower()
        votes: list[str | None] = []
        for judge in judges:
            prompt = _render_prompt(
                "judge_retrieve.txt", {"text": text, "field": name}
            )
            reply = judge.llm_complete(prompt, "retrieve_field", seed).strip().lower()
            votes.append(None if not reply or reply == "unknown" else reply)
        cast = [v for v in votes if v is not None]
        winner = _majority(cast)
        correctness = [1.0 if v == expected else 0.0 for v in cast]
        per_field[name] = {
            "accuracy": 1.0 if winner == expected else 0.0,
            "variance": statistics.pvariance(correctness) if correctness else 0.0,
        }
        abstentions[name] = len(votes) - len(cast)
        votes_by_field[name] = tuple(votes)
    return RetrievalAudit(
        per_field=per_field,
        judge_count=len(judges),
        abstentions=abstentions,
        votes=votes_by_field,
    )
