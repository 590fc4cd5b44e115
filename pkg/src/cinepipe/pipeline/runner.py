"""Stage execution, checkpoint resume, gating, and batch orchestration.

Each stage reads only recorded artifacts from the stages before it, so a
resumed run picks up exactly where the checkpoint left off, and identical
seeds replay identical artifacts through the request cache.
"""

from __future__ import annotations

import hashlib
import json
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed

import numpy as np

from ..clients.base import GenClient, ModelEndpoint, TokenBucket
from ..clients.http import HttpTransport
from ..clients.media import clip_frame_png, clip_from_bytes, clip_to_bytes
from ..clients.mock import MockTransport
from ..planner import BalancePlan, ControlSignals, _dimension_categories, balance_report
from ..screenplay import Screenplay, build_screenplay, compose_scene, render_screenplay
from ..storyboard import build_routing, generate_storyboard, load_score_matrix
from ..taxonomy import Taxonomy
from ..transition.engine import CutList, Segment, plan_transition
from ..transition.tracks import ingest_tracks
from .config import PipelineConfig, load_config
from .records import GATEABLE_STAGES, ManifestEntry, PipelineError, RunRecord, StageConflict
from .runstore import RunStore

__all__ = ["PipelineService", "export_manifest", "sample_seed"]


def sample_seed(base: int, sample_id: str, revision: int = 0) -> int:
    """Stable per-sample seed; a revision bump reshuffles everything downstream."""
    digest = hashlib.sha256(f"{base}:{sample_id}:{revision}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


class PipelineService:
    """Drives samples through the stage machine against one run store."""

    def __init__(self, runstore: RunStore, config: PipelineConfig | None = None):
        self.runstore = runstore
        self.config = config if config is not None else load_config(None)
        self.taxonomy: Taxonomy = self.config.taxonomy
        self.matrix = load_score_matrix(self.config.benchmark)
        self.routing = build_routing(self.matrix)
        self._transport = (
            MockTransport(runstore.artifacts) if self.config.mock else HttpTransport()
        )
        # rate limits are per endpoint, so buckets are shared across runs
        self._buckets: dict[str, TokenBucket] = {}
        self._buckets_guard = threading.Lock()

    # client plumbing ------------------------------------------------------

    def _bucket(self, endpoint: ModelEndpoint) -> TokenBucket:
        with self._buckets_guard:
            if endpoint.model_id not in self._buckets:
                self._buckets[endpoint.model_id] = TokenBucket(endpoint.rate_limit)
            return self._buckets[endpoint.model_id]

    def _client(self, endpoint: ModelEndpoint, run_id: str) -> GenClient:
        def log(entry: dict) -> None:
            self.runstore.append_event(run_id, {"event": "request", **entry})

        return GenClient(
            endpoint,
            self._transport,
            self.runstore.artifacts,
            bucket=self._bucket(endpoint),
            transcript=log,
        )

    def _clients(self, run_id: str) -> dict:
        made: dict = {
            role: self._client(endpoint, run_id)
            for role, endpoint in self.config.endpoints.items()
        }
        made["i2i"] = {
            model_id: self._client(endpoint, run_id)
            for model_id, endpoint in self.config.i2i_endpoints.items()
        }
        return made

    # run entry points -----------------------------------------------------

    def run_sample(self, signals: ControlSignals) -> RunRecord:
        """Create (or pick up) the run for one sample and push it forward."""
        signals.validate(self.taxonomy)
        run_id = signals.sample_id
        with self.runstore.lock(run_id):
            if self.runstore.exists(run_id):
                record = self.runstore.load(run_id)
                if record.signals != signals:
                    raise PipelineError(
                        f"run {run_id!r} already exists with different signals"
                    )
            else:
                record = RunRecord(run_id=run_id, signals=signals)
                self.runstore.save(record)
                self.runstore.append_event(
                    run_id, {"event": "created", "signals": signals.to_dict()}
                )
            return self._advance(record)

    def resume(self, run_id: str) -> RunRecord:
        with self.runstore.lock(run_id):
            record = self.runstore.load(run_id)
            return self._advance(record)

    def _advance(self, record: RunRecord) -> RunRecord:
        if record.stage == "failed":
            # retrying: the failed stage never recorded artifacts, so the
            # pointer just falls back to the last completed stage
            record.stage = record.completed_stages()[-1]
        clients: dict | None = None
        while True:
            done = record.completed_stages()[-1]
            if record.gate_state(done) in ("awaiting_approval", "rejected"):
                return record
            stage = record.next_stage()
            if stage is None:
                return record
            if clients is None:
                clients = self._clients(record.run_id)
            executor = _EXECUTORS[stage]
            try:
                payload = executor(self, record, clients)
            except Exception as exc:  # any stage fault becomes a checkpoint
                record.mark_failed(stage, f"{type(exc).__name__}: {exc}")
                self.runstore.save(record)
                self.runstore.append_event(
                    record.run_id,
                    {"event": "stage_failed", "stage": stage, "cause": record.error},
                )
                return record
            record.advance(stage, payload)
            if self.config.gated(stage):
                record.gate_states[stage] = "awaiting_approval"
            self.runstore.save(record)
            self.runstore.append_event(
                record.run_id, {"event": "stage_complete", "stage": stage}
            )
            if record.gate_state(stage) == "awaiting_approval":
                self.runstore.append_event(
                    record.run_id, {"event": "gate_armed", "stage": stage}
                )
                return record

    def run_batch(self, plan: BalancePlan, parallelism: int | None = None) -> dict:
        """Execute every sample in the plan, at most `parallelism` in flight."""
        workers = parallelism if parallelism is not None else self.config.parallelism
        if workers < 1:
            raise PipelineError("parallelism must be >= 1")
        outcomes: dict[str, str] = {}
        if plan.entries:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = {
                    pool.submit(self.run_sample, entry): entry.sample_id
                    for entry in plan.entries
                }
                for future in as_completed(futures):
                    try:
                        outcomes[futures[future]] = future.result().stage
                    except ValueError:
                        # bad signals or a clashing run id; stage faults are
                        # already checkpointed inside run_sample
                        outcomes[futures[future]] = "failed"
        return {
            "total": len(plan.entries),
            "final": sum(1 for s in outcomes.values() if s == "final"),
            "failed": sum(1 for s in outcomes.values() if s == "failed"),
            "paused": sum(
                1 for s in outcomes.values() if s not in ("final", "failed")
            ),
            "stages": {k: outcomes[k] for k in sorted(outcomes)},
        }

    # gate operations ------------------------------------------------------

    def _require_awaiting(self, record: RunRecord, stage: str) -> None:
        if stage not in GATEABLE_STAGES:
            raise PipelineError(f"stage {stage!r} cannot carry a gate")
        state = record.gate_state(stage)
        if state != "awaiting_approval":
            raise StageConflict(
                f"stage {stage!r} of run {record.run_id!r} is {state!r}, "
                "not awaiting approval"
            )

    def approve(self, run_id: str, stage: str) -> RunRecord:
        with self.runstore.lock(run_id):
            record = self.runstore.load(run_id)
            self._require_awaiting(record, stage)
            record.gate_states[stage] = "approved"
            self.runstore.save(record)
            self.runstore.append_event(
                run_id, {"event": "approved", "stage": stage}
            )
            return record

    def reject(
        self,
        run_id: str,
        stage: str,
        *,
        edited_scenario: str | None = None,
        regenerate: bool = False,
    ) -> RunRecord:
        """Turn a gate down, optionally repairing in place or re-running.

        An edited scenario replaces the screenplay's scene description and
        counts as approval of the repaired artifact; regenerate drops the
        stage and bumps the revision so the re-run draws fresh seeds.
        """
        with self.runstore.lock(run_id):
            record = self.runstore.load(run_id)
            self._require_awaiting(record, stage)
            if edited_scenario is not None:
                if stage != "screenplay":
                    raise PipelineError(
                        "scenario edits only apply to the screenplay stage"
                    )
                self._apply_scenario_edit(record, edited_scenario)
                record.gate_states[stage] = "approved"
                self.runstore.save(record)
                self.runstore.append_event(
                    run_id,
                    {"event": "rejected", "stage": stage, "resolution": "edited"},
                )
                self.runstore.append_event(
                    run_id,
                    {"event": "edited", "stage": stage, "scenario": edited_scenario},
                )
                return record
            if regenerate:
                record.drop_from(stage)
                record.revision += 1
                self.runstore.save(record)
                self.runstore.append_event(
                    run_id,
                    {
                        "event": "rejected",
                        "stage": stage,
                        "resolution": "regenerate",
                        "revision": record.revision,
                    },
                )
                return record
            record.gate_states[stage] = "rejected"
            self.runstore.save(record)
            self.runstore.append_event(
                run_id, {"event": "rejected", "stage": stage, "resolution": "hold"}
            )
            return record

    def regenerate(self, run_id: str, stage: str) -> RunRecord:
        """Drop a completed stage (and everything after) for a fresh re-run."""
        with self.runstore.lock(run_id):
            record = self.runstore.load(run_id)
            if stage not in record.artifacts:
                raise StageConflict(
                    f"stage {stage!r} of run {run_id!r} has no artifacts "
                    "to regenerate"
                )
            record.drop_from(stage)
            record.revision += 1
            self.runstore.save(record)
            self.runstore.append_event(
                run_id,
                {"event": "regenerate", "stage": stage, "revision": record.revision},
            )
            return record

    def _apply_scenario_edit(self, record: RunRecord, scenario: str) -> None:
        doc = record.artifacts["screenplay"]["screenplay"]
        doc["scene"]["scenario"] = scenario
        screenplay = Screenplay.from_dict(doc)  # revalidates the edit
        record.artifacts["screenplay"]["rendered"] = render_screenplay(screenplay)

    # stage executors ------------------------------------------------------

    def _seed(self, record: RunRecord) -> int:
        return sample_seed(self.config.seed, record.run_id, record.revision)

    def _stage_screenplay(self, record: RunRecord, clients: dict) -> dict:
        seed = self._seed(record)
        scene = compose_scene(record.signals, clients["storyteller"], seed=seed)
        screenplay = build_screenplay(
            scene,
            record.signals,
            clients["cinematographer"],
            seed=seed,
            taxonomy=self.taxonomy,
        )
        return {
            "screenplay": screenplay.to_dict(),
            "rendered": render_screenplay(screenplay),
        }

    def _stage_storyboard(self, record: RunRecord, clients: dict) -> dict:
        screenplay = Screenplay.from_dict(
            record.artifacts["screenplay"]["screenplay"]
        )
        board = generate_storyboard(
            screenplay,
            self.routing,
            clients["t2i"],
            clients["i2i"],
            seed=self._seed(record),
            taxonomy=self.taxonomy,
        )
        return {"storyboard": board.to_dict(), "keyframe_refs": list(board.refs)}

    def _stage_clips(self, record: RunRecord, clients: dict) -> dict:
        seed = self._seed(record)
        screenplay = Screenplay.from_dict(
            record.artifacts["screenplay"]["screenplay"]
        )
        refs = record.artifacts["storyboard"]["keyframe_refs"]
        clips = []
        for i, triplet in enumerate(screenplay.triplets):
            prompt = f"{triplet.shot_init} [{triplet.movement}] {triplet.shot_end}"
            result = clients["flf2v"].video_flf2v(
                refs[i], refs[i + 1], prompt, seed,
                frames=self.config.clip_frames,
            )
            clips.append(
                {
                    "shot": i,
                    "ref": result.ref,
                    "frames": self.config.clip_frames,
                    "first_ref": refs[i],
                    "last_ref": refs[i + 1],
                }
            )
        return {"clips": clips}

    def _stage_transitions(self, record: RunRecord, clients: dict) -> dict:
        seed = self._seed(record)
        clips = record.artifacts["clips"]["clips"]
        store = self.runstore.artifacts
        params = self.config.transition
        entries = []
        for i in range(len(clips) - 1):
            clip_a, clip_b = clips[i], clips[i + 1]
            tracked = clients["tracker"].track_clips(clip_a["ref"], clip_b["ref"], seed)
            track_set = ingest_tracks(store.get(tracked.ref).decode())
            plan = plan_transition(track_set, params)
            plan_ref = store.put(plan.to_json().encode(), "application/json")
            control_ref = store.put(
                json.dumps(plan.field.to_dict(), indent=2).encode(),
                "application/json",
            )
            # interpolate between the kept boundary frames, not the raw ends
            first_ref = store.put(
                clip_frame_png(store.get(clip_a["ref"]), clip_a["frames"] - 1 - plan.cut_a),
                "image/png",
            )
            last_ref = store.put(
                clip_frame_png(store.get(clip_b["ref"]), plan.cut_b),
                "image/png",
            )
            result = clients["interpolator"].guided_interpolate(
                first_ref, last_ref, control_ref, seed
            )
            entries.append(
                {
                    "pair": [i, i + 1],
                    "tracks_ref": tracked.ref,
                    "plan_ref": plan_ref,
                    "control_ref": control_ref,
                    "clip_ref": result.ref,
                    "cut_a": plan.cut_a,
                    "cut_b": plan.cut_b,
                    "frames": params.transition_frames,
                    "warnings": list(plan.warnings),
                }
            )
        return {"transitions": entries}

    def _stage_final(self, record: RunRecord, clients: dict) -> dict:
        clips = record.artifacts["clips"]["clips"]
        transitions = record.artifacts["transitions"]["transitions"]
        store = self.runstore.artifacts

        segments: list[Segment] = []
        head = 0
        for i, clip in enumerate(clips):
            tail = transitions[i]["cut_a"] if i < len(transitions) else 0
            if head + tail >= clip["frames"]:
                raise PipelineError(f"cuts consume every frame of clip {i}")
            segments.append(
                Segment(
                    source=f"clip_{i}",
                    ref=clip["ref"],
                    start=head,
                    end=clip["frames"] - 1 - tail,
                )
            )
            if i < len(transitions):
                bridge = transitions[i]
                segments.append(
                    Segment(
                        source=f"transition_{i}",
                        ref=bridge["clip_ref"],
                        start=0,
                        end=bridge["frames"] - 1,
                    )
                )
                head = bridge["cut_b"]
        cuts = CutList(segments=tuple(segments))

        video = np.concatenate(
            [
                clip_from_bytes(store.get(s.ref))[s.start : s.end + 1]
                for s in cuts.segments
            ],
            axis=0,
        )
        video_ref = store.put(
            clip_to_bytes(video),
            "video/x-raw-frames",
            provenance={"run_id": record.run_id, "kind": "final_video"},
        )
        return {
            "edl": cuts.to_dict(),
            "video_ref": video_ref,
            "total_frames": cuts.total_frames,
        }


_EXECUTORS = {
    "screenplay": PipelineService._stage_screenplay,
    "storyboard": PipelineService._stage_storyboard,
    "clips": PipelineService._stage_clips,
    "transitions": PipelineService._stage_transitions,
    "final": PipelineService._stage_final,
}


def export_manifest(runstore: RunStore, taxonomy: Taxonomy | None = None) -> dict:
    """One manifest row per finished run, plus balance statistics."""
    entries: list[dict] = []
    finished: list[ControlSignals] = []
    for run_id in runstore.run_ids():
        record = runstore.load(run_id)
        if record.completed_stages()[-1] != "final":
            continue
        screenplay = Screenplay.from_dict(
            record.artifacts["screenplay"]["screenplay"]
        )
        transitions = record.artifacts["transitions"]["transitions"]
        entry = ManifestEntry(
            run_id=run_id,
            video_ref=record.artifacts["final"]["video_ref"],
            scene_description=screenplay.scene.scenario,
            camera_instructions=tuple(t.movement for t in screenplay.triplets),
            shots=tuple(t.to_dict() for t in screenplay.triplets),
            genre=record.signals.genre,
            subject_count=record.signals.subject_count,
            dynamicity=record.signals.dynamicity,
            shot_count=record.signals.shot_count,
            keyframe_refs=tuple(record.artifacts["storyboard"]["keyframe_refs"]),
            transition_warnings=tuple(
                w for t in transitions for w in t["warnings"]
            ),
            total_frames=record.artifacts["final"]["total_frames"],
        )
        entries.append(entry.to_dict())
        finished.append(record.signals)
    plan = BalancePlan(
        entries=finished,
        seed=0,
        categories=_dimension_categories(taxonomy) if taxonomy else {},
    )
    return {
        "count": len(entries),
        "entries": entries,
        "balance": balance_report(plan),
    }
