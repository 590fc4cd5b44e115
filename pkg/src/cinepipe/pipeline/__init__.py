"""Checkpointed orchestration: run records, persistence, stages, HTTP API."""

from .config import PipelineConfig, load_config
from .records import (
    GATE_STATES,
    GATEABLE_STAGES,
    STAGES,
    ManifestEntry,
    PipelineError,
    RunRecord,
    StageConflict,
    utc_now,
)
from .runner import PipelineService, export_manifest, sample_seed
from .runstore import RunStore
from .server import create_app

__all__ = [
    "GATEABLE_STAGES",
    "GATE_STATES",
    "ManifestEntry",
    "PipelineConfig",
    "PipelineError",
    "PipelineService",
    "RunRecord",
    "RunStore",
    "STAGES",
    "StageConflict",
    "create_app",
    "export_manifest",
    "load_config",
    "sample_seed",
    "utc_now",
]
