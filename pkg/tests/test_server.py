"""HTTP review surface: auth, listing, gate actions, artifact serving."""

from __future__ import annotations

from types import SimpleNamespace

import pytest
from fastapi.testclient import TestClient

from cinepipe.pipeline import PipelineService, RunStore, create_app, load_config
from cinepipe.planner import ControlSignals

TOKEN = "sesame"


def sig(
    sample_id,
    movements=("pan left", "dolly in", "crane up"),
    genre="western",
    subjects="single",
    dynamicity="dynamic",
):
    movements = tuple(movements)
    return ControlSignals(
        sample_id=sample_id,
        genre=genre,
        shot_count=len(movements),
        movements=movements,
        subject_count=subjects,
        dynamicity=dynamicity,
    )


@pytest.fixture()
def ctx(tmp_path):
    """One gated run paused at its screenplay gate plus one finished run."""
    store = RunStore(tmp_path / "rs")
    service = PipelineService(
        store,
        load_config({"gating": {"screenplay": True, "storyboard": True}}),
    )
    service.run_sample(sig("s-gated"))
    PipelineService(store).run_sample(
        sig("s-done", movements=("zoom in",), genre="comedy",
            subjects="multiple", dynamicity="dynamic")
    )
    app = create_app(service, token=TOKEN)
    anon = TestClient(app)
    client = TestClient(app)
    client.headers["x-api-token"] = TOKEN
    return SimpleNamespace(
        client=client, anon=anon, store=store, service=service
    )


class TestAuth:
    def test_health_needs_no_token(self, ctx):
        response = ctx.anon.get("/api/health")
        assert response.status_code == 200
        assert response.json() == {"status": "ok", "runs": 2}

    def test_missing_token_rejected(self, ctx):
        response = ctx.anon.get("/api/runs")
        assert response.status_code == 401
        assert response.json()["detail"] == "missing or bad api token"

    def test_wrong_token_rejected(self, ctx):
        response = ctx.anon.get("/api/runs", headers={"x-api-token": "nope"})
        assert response.status_code == 401

    def test_good_token_accepted(self, ctx):
        assert ctx.client.get("/api/runs").status_code == 200

    def test_tokenless_app_is_open(self, ctx):
        open_app = create_app(ctx.service)
        assert TestClient(open_app).get("/api/runs").status_code == 200


class TestListing:
    def test_lists_every_run(self, ctx):
        body = ctx.client.get("/api/runs").json()
        assert body["count"] == 2
        assert [r["run_id"] for r in body["runs"]] == ["s-done", "s-gated"]

    def test_summary_shape(self, ctx):
        rows = {r["run_id"]: r for r in ctx.client.get("/api/runs").json()["runs"]}
        gated = rows["s-gated"]
        assert gated["stage"] == "screenplay"
        assert gated["awaiting"] == "screenplay"
        assert gated["gate_states"] == {"screenplay": "awaiting_approval"}
        assert gated["shot_count"] == 3
        assert gated["thumbnail_refs"] == []  # storyboard has not run yet
        assert gated["warnings_count"] == 0
        done = rows["s-done"]
        assert done["stage"] == "final"
        assert done["awaiting"] is None
        assert len(done["thumbnail_refs"]) == 2

    def test_stage_filter(self, ctx):
        body = ctx.client.get("/api/runs", params={"stage": "final"}).json()
        assert [r["run_id"] for r in body["runs"]] == ["s-done"]

    def test_gate_filter(self, ctx):
        body = ctx.client.get(
            "/api/runs", params={"gate": "awaiting_approval"}
        ).json()
        assert [r["run_id"] for r in body["runs"]] == ["s-gated"]

    def test_filters_can_empty_the_list(self, ctx):
        body = ctx.client.get("/api/runs", params={"stage": "clips"}).json()
        assert body == {"runs": [], "count": 0}


class TestDetail:
    def test_detail_carries_review_material(self, ctx):
        body = ctx.client.get("/api/runs/s-done").json()
        assert body["stage"] == "final"
        assert body["awaiting"] is None
        assert body["rendered_screenplay"].startswith("SAMPLE: s-done")
        assert len(body["keyframe_refs"]) == 2
        assert body["artifacts"]["final"]["total_frames"] == 49

    def test_unknown_run_is_404(self, ctx):
        assert ctx.client.get("/api/runs/ghost").status_code == 404

    def test_events_feed(self, ctx):
        body = ctx.client.get("/api/runs/s-done/events").json()
        kinds = [e["event"] for e in body["events"]]
        assert kinds[0] == "created"
        assert "stage_complete" in kinds
        assert "request" in kinds

    def test_events_unknown_run_is_404(self, ctx):
        assert ctx.client.get("/api/runs/ghost/events").status_code == 404


class TestApprove:
    def test_approve_continues_to_next_gate(self, ctx):
        body = ctx.client.post(
            "/api/runs/s-gated/stages/screenplay/approve"
        ).json()
        assert body["stage"] == "storyboard"
        assert body["awaiting"] == "storyboard"
        assert body["gate_states"]["screenplay"] == "approved"
        assert len(body["keyframe_refs"]) == 4

    def test_full_approval_chain_reaches_final(self, ctx):
        ctx.client.post("/api/runs/s-gated/stages/screenplay/approve")
        body = ctx.client.post(
            "/api/runs/s-gated/stages/storyboard/approve"
        ).json()
        assert body["stage"] == "final"
        assert body["awaiting"] is None
        assert "final" in body["artifacts"]

    def test_double_approve_conflicts(self, ctx):
        ctx.client.post("/api/runs/s-gated/stages/screenplay/approve")
        response = ctx.client.post("/api/runs/s-gated/stages/screenplay/approve")
        assert response.status_code == 409
        assert "not awaiting approval" in response.json()["detail"]

    def test_unarmed_gate_conflicts(self, ctx):
        response = ctx.client.post("/api/runs/s-gated/stages/storyboard/approve")
        assert response.status_code == 409

    def test_ungateable_stage_is_400(self, ctx):
        response = ctx.client.post("/api/runs/s-gated/stages/clips/approve")
        assert response.status_code == 400
        assert "cannot carry a gate" in response.json()["detail"]

    def test_unknown_run_is_404(self, ctx):
        response = ctx.client.post("/api/runs/ghost/stages/screenplay/approve")
        assert response.status_code == 404


class TestReject:
    def test_plain_reject_holds(self, ctx):
        body = ctx.client.post("/api/runs/s-gated/stages/screenplay/reject").json()
        assert body["stage"] == "screenplay"
        assert body["gate_states"]["screenplay"] == "rejected"
        assert body["awaiting"] is None
        # held runs refuse approval until an operator intervenes
        response = ctx.client.post("/api/runs/s-gated/stages/screenplay/approve")
        assert response.status_code == 409

    def test_reject_with_edit_persists_and_continues(self, ctx):
        text = "A drifter walks into an abandoned mining town at dawn."
        body = ctx.client.post(
            "/api/runs/s-gated/stages/screenplay/reject",
            json={"edited_scenario": text},
        ).json()
        assert body["gate_states"]["screenplay"] == "approved"
        assert body["stage"] == "storyboard"  # auto-continued into the next gate
        assert body["artifacts"]["screenplay"]["screenplay"]["scene"]["scenario"] == text
        assert text in body["rendered_screenplay"]
        events = ctx.client.get("/api/runs/s-gated/events").json()["events"]
        assert "edited" in [e["event"] for e in events]
        # a refetch sees the same edit: it was checkpointed, not just echoed
        again = ctx.client.get("/api/runs/s-gated").json()
        assert again["artifacts"]["screenplay"]["screenplay"]["scene"]["scenario"] == text

    def test_blank_edit_is_400_and_gate_survives(self, ctx):
        response = ctx.client.post(
            "/api/runs/s-gated/stages/screenplay/reject",
            json={"edited_scenario": "   "},
        )
        assert response.status_code == 400
        body = ctx.client.get("/api/runs/s-gated").json()
        assert body["gate_states"]["screenplay"] == "awaiting_approval"

    def test_edit_on_storyboard_gate_is_400(self, ctx):
        ctx.client.post("/api/runs/s-gated/stages/screenplay/approve")
        response = ctx.client.post(
            "/api/runs/s-gated/stages/storyboard/reject",
            json={"edited_scenario": "new text"},
        )
        assert response.status_code == 400
        assert "screenplay" in response.json()["detail"]

    def test_reject_regenerate_rearms_the_gate(self, ctx):
        first = ctx.client.get("/api/runs/s-gated").json()["rendered_screenplay"]
        body = ctx.client.post(
            "/api/runs/s-gated/stages/screenplay/reject",
            json={"regenerate": True},
        ).json()
        assert body["revision"] == 1
        assert body["stage"] == "screenplay"
        assert body["awaiting"] == "screenplay"
        assert body["rendered_screenplay"] != first


class TestRegenerate:
    def test_regenerate_finished_stage_runs_to_final(self, ctx):
        client = TestClient(create_app(PipelineService(ctx.store)))
        before = client.get("/api/runs/s-done").json()["keyframe_refs"]
        body = client.post("/api/runs/s-done/stages/storyboard/regenerate").json()
        assert body["stage"] == "final"
        assert body["revision"] == 1
        assert body["keyframe_refs"] != before

    def test_regenerate_under_a_gated_service_rearms_gates(self, ctx):
        body = ctx.client.post(
            "/api/runs/s-done/stages/storyboard/regenerate"
        ).json()
        assert body["stage"] == "storyboard"
        assert body["awaiting"] == "storyboard"

    def test_regenerate_missing_stage_conflicts(self, ctx):
        response = ctx.client.post(
            "/api/runs/s-gated/stages/storyboard/regenerate"
        )
        assert response.status_code == 409


class TestArtifacts:
    def test_serves_keyframe_bytes(self, ctx):
        ref = ctx.client.get("/api/runs/s-done").json()["keyframe_refs"][0]
        response = ctx.client.get(f"/api/artifacts/{ref}")
        assert response.status_code == 200
        assert response.headers["content-type"] == "image/png"
        assert response.content.startswith(b"\x89PNG")

    def test_unknown_ref_is_404(self, ctx):
        assert ctx.client.get("/api/artifacts/" + "0" * 64).status_code == 404


class TestManualContinue:
    def test_approve_without_auto_continue_only_flips_the_gate(self, ctx):
        app = create_app(ctx.service, auto_continue=False)
        client = TestClient(app)
        body = client.post("/api/runs/s-gated/stages/screenplay/approve").json()
        assert body["stage"] == "screenplay"
        assert body["gate_states"]["screenplay"] == "approved"
        assert body["keyframe_refs"] == []
        # an external worker picks the run up later
        record = ctx.service.resume("s-gated")
        assert record.stage == "storyboard"


class TestStaticUi:
    def test_ui_mount_serves_index_and_keeps_api(self, ctx, tmp_path):
        ui = tmp_path / "ui"
        ui.mkdir()
        (ui / "index.html").write_text("<h1>review console</h1>")
        app = create_app(ctx.service, ui_dir=ui)
        client = TestClient(app)
        page = client.get("/")
        assert page.status_code == 200
        assert "review console" in page.text
        assert client.get("/api/health").status_code == 200
