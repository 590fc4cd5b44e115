"""Pipeline configuration: endpoints per role, gating, and stage knobs.

A config file (JSON or YAML) overrides any subset of the defaults; the
default configuration is fully mocked, so ``load_config(None)`` always
yields something runnable offline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..clients.base import ModelEndpoint
from ..storyboard import load_score_matrix
from ..taxonomy import Taxonomy, load_taxonomy
from ..transition.engine import TransitionParams
from .records import GATEABLE_STAGES, PipelineError

__all__ = ["PipelineConfig", "load_config"]

# single-endpoint roles; i2i is a pool keyed by model id
ROLES = ("storyteller", "cinematographer", "t2i", "flf2v", "interpolator", "tracker")


@dataclass
class PipelineConfig:
    seed: int = 0
    parallelism: int = 2
    clip_frames: int = 49
    mock: bool = True
    gating: dict[str, bool] = field(default_factory=dict)
    transition: TransitionParams = field(default_factory=TransitionParams)
    taxonomy: Taxonomy = field(default_factory=load_taxonomy)
    endpoints: dict[str, ModelEndpoint] = field(default_factory=dict)
    i2i_endpoints: dict[str, ModelEndpoint] = field(default_factory=dict)
    judge_endpoints: tuple[ModelEndpoint, ...] = ()
    benchmark: str | None = None

    def __post_init__(self) -> None:
        if self.parallelism < 1:
            raise PipelineError("parallelism must be >= 1")
        if self.clip_frames < 2:
            raise PipelineError("clip_frames must be >= 2")
        for stage_name in self.gating:
            if stage_name not in GATEABLE_STAGES:
                raise PipelineError(
                    f"stage {stage_name!r} cannot be gated "
                    f"(gateable: {', '.join(GATEABLE_STAGES)})"
                )
        for role in ROLES:
            if role not in self.endpoints:
                raise PipelineError(f"missing endpoint for role {role!r}")
        if not self.i2i_endpoints:
            raise PipelineError("config declares no image-edit endpoints")
        if not self.mock:
            placeholders = [
                ep.model_id
                for ep in (
                    *self.endpoints.values(),
                    *self.i2i_endpoints.values(),
                    *self.judge_endpoints,
                )
                if ep.base_url.startswith("mock://")
            ]
            if placeholders:
                raise PipelineError(
                    f"non-mock config needs real base_url for: {placeholders}"
                )

    def gated(self, stage: str) -> bool:
        return bool(self.gating.get(stage, False))


def _endpoint(doc: dict | ModelEndpoint, fallback_id: str) -> ModelEndpoint:
    if isinstance(doc, ModelEndpoint):
        return doc
    return ModelEndpoint(
        model_id=doc.get("model_id", fallback_id),
        base_url=doc.get("base_url", "mock://local"),
        auth_ref=doc.get("auth_ref"),
        rate_limit=float(doc.get("rate_limit", 600.0)),
        timeout=float(doc.get("timeout", 60.0)),
    )


def load_config(source: dict | str | Path | None = None) -> PipelineConfig:
    """Build a validated config from a mapping or a JSON/YAML file."""
    if source is None:
        doc: dict = {}
    elif isinstance(source, dict):
        doc = dict(source)
    else:
        path = Path(source)
        text = path.read_text(encoding="utf-8")
        if path.suffix.lower() in (".yaml", ".yml"):
            doc = yaml.safe_load(text) or {}
        else:
            doc = json.loads(text)
        if not isinstance(doc, dict):
            raise PipelineError("config document must be a mapping")

    endpoint_docs = dict(doc.get("endpoints", {}))
    endpoints = {
        role: _endpoint(endpoint_docs.get(role, {}), f"mock-{role}")
        for role in ROLES
    }

    i2i_docs = endpoint_docs.get("i2i")
    if i2i_docs is None:
        # default pool: one mock client per benchmarked model
        matrix = load_score_matrix(doc.get("benchmark"))
        i2i_endpoints = {m: ModelEndpoint(model_id=m) for m in matrix.models}
    else:
        i2i_endpoints = {}
        for entry in i2i_docs:
            ep = _endpoint(entry, entry.get("model_id", ""))
            if ep.model_id in i2i_endpoints:
                raise PipelineError(f"duplicate i2i endpoint {ep.model_id!r}")
            i2i_endpoints[ep.model_id] = ep

    judges = tuple(
        _endpoint(entry, f"mock-judge-{i}")
        for i, entry in enumerate(endpoint_docs.get("judges", []))
    )

    transition_doc = doc.get("transition", {})
    transition = TransitionParams(
        window=int(transition_doc.get("window", 30)),
        freeze_threshold=float(transition_doc.get("freeze_threshold", 1.0)),
        velocity_fit_frames=int(transition_doc.get("velocity_fit_frames", 5)),
        transition_frames=int(transition_doc.get("transition_frames", 16)),
        control_points=int(transition_doc.get("control_points", 16)),
    )

    return PipelineConfig(
        seed=int(doc.get("seed", 0)),
        parallelism=int(doc.get("parallelism", 2)),
        clip_frames=int(doc.get("clip_frames", 49)),
        mock=bool(doc.get("mock", True)),
        gating={k: bool(v) for k, v in dict(doc.get("gating", {})).items()},
        transition=transition,
        taxonomy=load_taxonomy(doc.get("taxonomy")),
        endpoints=endpoints,
        i2i_endpoints=i2i_endpoints,
        judge_endpoints=judges,
        benchmark=doc.get("benchmark"),
    )
