"""Benchmark-driven model routing and keyframe storyboard synthesis.

No single image-edit model handles all camera movements well, so each
movement family routes to the model that scored best for it on the shipped
benchmark matrix. The storyboard itself is a chain: frame 0 comes from
text-to-image on the scene, every later frame edits its predecessor under
the next shot's closing view.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable

from .screenplay import Screenplay
from .taxonomy import Taxonomy, load_taxonomy

__all__ = [
    "Keyframe",
    "RoutingTable",
    "ScoreMatrix",
    "Storyboard",
    "StoryboardError",
    "build_routing",
    "family_of",
    "generate_storyboard",
    "load_score_matrix",
]


class StoryboardError(ValueError):
    """Raised for malformed score matrices, routing gaps, or bad boards."""


@dataclass(frozen=True)
class ScoreMatrix:
    """Per-model benchmark scores over the movement families.

    ``models`` keeps declaration order; that order is the final tie-break
    when both camera adherence and the policy score tie.
    """

    models: tuple[str, ...]
    families: tuple[str, ...]
    camera_adherence: dict[tuple[str, str], float]
    scene_preservation: dict[str, float]
    narration_adherence: dict[str, float]

    def __post_init__(self) -> None:
        if not self.models:
            raise StoryboardError("score matrix has an empty model list")
        if len(set(self.models)) != len(self.models):
            raise StoryboardError("duplicate model id in score matrix")
        if not self.families:
            raise StoryboardError("score matrix has no families")
        for model in self.models:
            for family in self.families:
                if (model, family) not in self.camera_adherence:
                    raise StoryboardError(
                        f"missing camera_adherence cell ({model}, {family})"
                    )
            for table_name, table in (
                ("scene_preservation", self.scene_preservation),
                ("narration_adherence", self.narration_adherence),
            ):
                if model not in table:
                    raise StoryboardError(f"missing {table_name} for {model}")
        for score in (
            *self.camera_adherence.values(),
            *self.scene_preservation.values(),
            *self.narration_adherence.values(),
        ):
            if not 0.0 <= float(score) <= 10.0:
                raise StoryboardError(f"score {score} outside [0, 10]")

    def camera_score(self, model: str, family: str) -> float:
        try:
            return self.camera_adherence[(model, family)]
        except KeyError:
            raise StoryboardError(
                f"no camera_adherence cell ({model}, {family})"
            ) from None


def load_score_matrix(source: dict | str | Path | None = None) -> ScoreMatrix:
    """Read a score matrix from a mapping, a JSON file, or the shipped one."""
    if source is None:
        doc = json.loads(
            resources.files("cinepipe")
            .joinpath("data")
            .joinpath("i2i_benchmark.json")
            .read_text(encoding="utf-8")
        )
    elif isinstance(source, dict):
        doc = source
    else:
        doc = json.loads(Path(source).read_text(encoding="utf-8"))
    try:
        families = tuple(doc["families"])
        models = tuple(entry["model_id"] for entry in doc["models"])
        camera = {
            (entry["model_id"], family): float(entry["camera_adherence"][family])
            for entry in doc["models"]
            for family in entry["camera_adherence"]
        }
        scene = {
            entry["model_id"]: float(entry["scene_preservation"])
            for entry in doc["models"]
        }
        narration = {
            entry["model_id"]: float(entry["narration_adherence"])
            for entry in doc["models"]
        }
    except (KeyError, TypeError) as exc:
        raise StoryboardError(f"malformed score matrix document: {exc}") from None
    return ScoreMatrix(
        models=models,
        families=families,
        camera_adherence=camera,
        scene_preservation=scene,
        narration_adherence=narration,
    )


@dataclass(frozen=True)
class RoutingTable:
    """Winning model per movement family, with the full ranked candidates."""

    assignment: dict[str, str]
    tie_break_trace: dict[str, tuple[str, ...]]

    def model_for(self, family: str) -> str:
        try:
            return self.assignment[family]
        except KeyError:
            raise StoryboardError(f"no route for movement family {family!r}") from None


# policy(scores, family, model) -> ascending sort key applied after camera score
TieBreakPolicy = Callable[[ScoreMatrix, str, str], tuple]


def _scene_preservation_policy(
    scores: ScoreMatrix, family: str, model: str
) -> tuple:
    return (-scores.scene_preservation[model], scores.models.index(model))


def build_routing(
    scores: ScoreMatrix, policy: TieBreakPolicy | None = None
) -> RoutingTable:
    """Assign each family the model with the best camera adherence.

    Ties fall to the policy; the default prefers higher scene preservation
    and then declaration order, so the result is total and deterministic.
    """
    policy = policy or _scene_preservation_policy
    assignment: dict[str, str] = {}
    trace: dict[str, tuple[str, ...]] = {}
    for family in scores.families:
        ranked = sorted(
            scores.models,
            key=lambda m: (
                -scores.camera_score(m, family),
                *policy(scores, family, m),
                scores.models.index(m),
            ),
        )
        assignment[family] = ranked[0]
        trace[family] = tuple(ranked)
    return RoutingTable(assignment=assignment, tie_break_trace=trace)


def family_of(movement: str, taxonomy: Taxonomy | None = None) -> str:
    """Movement family for a movement label ("pan left" -> "pan")."""
    taxonomy = taxonomy if taxonomy is not None else load_taxonomy()
    return taxonomy.family_of(movement)


@dataclass(frozen=True)
class Keyframe:
    """One storyboard image plus how it was generated."""

    index: int
    ref: str
    model_id: str
    prompt: str
    seed: int
    source_ref: str | None = None

    def __post_init__(self) -> None:
        if self.index < 0:
            raise StoryboardError("keyframe index must be >= 0")
        if not self.ref:
            raise StoryboardError("keyframe needs an artifact ref")
        if not self.model_id:
            raise StoryboardError("keyframe needs its generating model id")

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "ref": self.ref,
            "model_id": self.model_id,
            "prompt": self.prompt,
            "seed": self.seed,
            "source_ref": self.source_ref,
        }


@dataclass(frozen=True)
class Storyboard:
    keyframes: tuple[Keyframe, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "keyframes", tuple(self.keyframes))
        if not self.keyframes:
            raise StoryboardError("storyboard has no keyframes")
        for i, frame in enumerate(self.keyframes):
            if frame.index != i:
                raise StoryboardError(
                    f"keyframe at position {i} carries index {frame.index}"
                )
        if self.keyframes[0].source_ref is not None:
            raise StoryboardError("keyframe 0 must not condition on an image")
        for i in range(1, len(self.keyframes)):
            if self.keyframes[i].source_ref != self.keyframes[i - 1].ref:
                raise StoryboardError(
                    f"keyframe {i} does not condition on keyframe {i - 1}"
                )

    @property
    def refs(self) -> tuple[str, ...]:
        return tuple(frame.ref for frame in self.keyframes)

    def to_dict(self) -> dict:
        return {"keyframes": [frame.to_dict() for frame in self.keyframes]}

    @classmethod
    def from_dict(cls, doc: dict) -> Storyboard:
        try:
            frames = tuple(
                Keyframe(
                    index=int(f["index"]),
                    ref=f["ref"],
                    model_id=f["model_id"],
                    prompt=f["prompt"],
                    seed=int(f["seed"]),
                    source_ref=f.get("source_ref"),
                )
                for f in doc["keyframes"]
            )
        except (KeyError, TypeError) as exc:
            raise StoryboardError(f"malformed storyboard document: {exc}") from None
        return cls(keyframes=frames)


def generate_storyboard(
    screenplay: Screenplay,
    routing: RoutingTable,
    t2i,
    i2i_pool: dict,
    *,
    seed: int = 0,
    taxonomy: Taxonomy | None = None,
) -> Storyboard:
    """Synthesize the shot-boundary keyframes for one screenplay.

    Every needed route and client is checked up front so a gap fails the
    whole board before a single image is generated.
    """
    taxonomy = taxonomy if taxonomy is not None else load_taxonomy()
    plan: list[tuple[str, object]] = []
    for triplet in screenplay.triplets:
        family = taxonomy.family_of(triplet.movement)
        model_id = routing.model_for(family)
        if model_id not in i2i_pool:
            raise StoryboardError(
                f"no client for routed model {model_id!r} (family {family!r})"
            )
        plan.append((model_id, i2i_pool[model_id]))

    opening = screenplay.triplets[0].shot_init
    prompt = f"{screenplay.scene.scenario} Opening framing: {opening}"
    result = t2i.image_generate(prompt, seed=seed)
    frames = [
        Keyframe(
            index=0,
            ref=result.ref,
            model_id=t2i.endpoint.model_id,
            prompt=prompt,
            seed=seed,
            source_ref=None,
        )
    ]
    for i, triplet in enumerate(screenplay.triplets):
        model_id, client = plan[i]
        prompt = (
            f"Perform a {triplet.movement}. "
            f"The resulting view: {triplet.shot_end}"
        )
        result = client.image_edit(frames[-1].ref, prompt, seed=seed)
        frames.append(
            Keyframe(
                index=i + 1,
                ref=result.ref,
                model_id=model_id,
                prompt=prompt,
                seed=seed,
                source_ref=frames[-1].ref,
            )
        )
    return Storyboard(keyframes=tuple(frames))
