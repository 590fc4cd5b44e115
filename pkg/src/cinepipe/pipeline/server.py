"""HTTP review surface over a run store.

Read endpoints project checkpoint records; mutations go through the
service's gate operations so every decision lands in the provenance log.
With ``auto_continue`` the service resumes a run in the same request once
a gate opens, so a fast mock pipeline finishes before the response.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import APIRouter, Depends, FastAPI, HTTPException, Request, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..clients.store import StoreError
from .records import GATEABLE_STAGES, PipelineError, RunRecord, StageConflict
from .runner import PipelineService

__all__ = ["create_app"]


class RejectBody(BaseModel):
    edited_scenario: str | None = None
    regenerate: bool = False


def _http_error(exc: Exception) -> HTTPException:
    if isinstance(exc, StageConflict):
        return HTTPException(status_code=409, detail=str(exc))
    if isinstance(exc, PipelineError) and str(exc).startswith("unknown run"):
        return HTTPException(status_code=404, detail=str(exc))
    return HTTPException(status_code=400, detail=str(exc))


def _awaiting(record: RunRecord) -> str | None:
    for stage in GATEABLE_STAGES:
        if record.gate_state(stage) == "awaiting_approval":
            return stage
    return None


def _summary(record: RunRecord) -> dict:
    storyboard = record.artifacts.get("storyboard", {})
    transitions = record.artifacts.get("transitions", {}).get("transitions", [])
    return {
        "run_id": record.run_id,
        "stage": record.stage,
        "gate_states": dict(record.gate_states),
        "awaiting": _awaiting(record),
        "error": record.error,
        "failed_stage": record.failed_stage,
        "revision": record.revision,
        "shot_count": record.signals.shot_count,
        "thumbnail_refs": list(storyboard.get("keyframe_refs", [])),
        "warnings_count": sum(len(t["warnings"]) for t in transitions),
        "updated_at": record.updated_at,
    }


def _detail(record: RunRecord) -> dict:
    doc = record.to_dict()
    doc["awaiting"] = _awaiting(record)
    screenplay = record.artifacts.get("screenplay", {})
    doc["rendered_screenplay"] = screenplay.get("rendered")
    doc["keyframe_refs"] = list(
        record.artifacts.get("storyboard", {}).get("keyframe_refs", [])
    )
    return doc


def create_app(
    service: PipelineService,
    *,
    token: str | None = None,
    auto_continue: bool = True,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="pipeline review", docs_url=None, redoc_url=None)
    store = service.runstore

    def check_token(request: Request) -> None:
        if token is not None and request.headers.get("x-api-token") != token:
            raise HTTPException(status_code=401, detail="missing or bad api token")

    api = APIRouter(prefix="/api", dependencies=[Depends(check_token)])

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok", "runs": len(store.run_ids())}

    @api.get("/runs")
    def list_runs(stage: str | None = None, gate: str | None = None) -> dict:
        rows = []
        for run_id in store.run_ids():
            record = store.load(run_id)
            if stage is not None and record.stage != stage:
                continue
            if gate is not None and gate not in record.gate_states.values():
                continue
            rows.append(_summary(record))
        return {"runs": rows, "count": len(rows)}

    @api.get("/runs/{run_id}")
    def run_detail(run_id: str) -> dict:
        try:
            return _detail(store.load(run_id))
        except PipelineError as exc:
            raise _http_error(exc) from None

    @api.get("/runs/{run_id}/events")
    def run_events(run_id: str) -> dict:
        if not store.exists(run_id):
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        return {"events": store.events(run_id)}

    def _continued(run_id: str) -> dict:
        record = service.resume(run_id) if auto_continue else store.load(run_id)
        return _detail(record)

    @api.post("/runs/{run_id}/stages/{stage}/approve")
    def approve(run_id: str, stage: str) -> dict:
        try:
            service.approve(run_id, stage)
        except (PipelineError, ValueError) as exc:
            raise _http_error(exc) from None
        return _continued(run_id)

    @api.post("/runs/{run_id}/stages/{stage}/reject")
    def reject(run_id: str, stage: str, body: RejectBody | None = None) -> dict:
        body = body or RejectBody()
        try:
            record = service.reject(
                run_id,
                stage,
                edited_scenario=body.edited_scenario,
                regenerate=body.regenerate,
            )
        except (PipelineError, ValueError) as exc:
            raise _http_error(exc) from None
        if record.gate_state(stage) == "rejected":
            return _detail(record)  # held for an operator; nothing to resume
        return _continued(run_id)

    @api.post("/runs/{run_id}/stages/{stage}/regenerate")
    def regenerate(run_id: str, stage: str) -> dict:
        try:
            service.regenerate(run_id, stage)
        except (PipelineError, ValueError) as exc:
            raise _http_error(exc) from None
        return _continued(run_id)

    @api.get("/artifacts/{ref}")
    def artifact(ref: str) -> Response:
        try:
            info = store.artifacts.info(ref)
            content = store.artifacts.get(ref)
        except StoreError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        return Response(content=content, media_type=info["media_type"])

    app.include_router(api)
    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
