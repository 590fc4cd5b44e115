"""Command line: plan batches, run samples, inspect transitions, serve review."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import click

from .evaluation import (
    aggregate_ratings,
    binary_accuracy,
    format_table,
    read_jsonl,
    round1,
    summarize_llm_audit,
    win_rate,
)
from .pipeline import (
    PipelineService,
    RunStore,
    create_app,
    export_manifest,
    load_config,
)
from .planner import BalancePlan, ControlSignals, generate_plan
from .taxonomy import load_taxonomy
from .transition.engine import TransitionParams, plan_transition, stitch_timeline
from .transition.tracks import MotionProfile, ingest_tracks, synth_tracks


def _service(store_dir: str, config_path: str | None) -> PipelineService:
    return PipelineService(RunStore(store_dir), load_config(config_path))


def _write_or_echo(text: str, out: str) -> None:
    if out == "-":
        click.echo(text, nl=text.endswith("\n") is False)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _report_run(record) -> None:
    click.echo(f"run {record.run_id}: stage={record.stage}")
    for stage in ("storyboard", "clips", "transitions"):
        payload = record.artifacts.get(stage)
        if not payload:
            continue
        if stage == "storyboard":
            click.echo(f"  keyframes: {len(payload['keyframe_refs'])}")
        elif stage == "clips":
            click.echo(f"  clips: {len(payload['clips'])}")
        else:
            click.echo(f"  transitions: {len(payload['transitions'])}")
    if "final" in record.artifacts:
        final = record.artifacts["final"]
        click.echo(
            f"  final: {final['total_frames']} frames -> {final['video_ref']}"
        )
    if record.stage == "failed":
        raise click.ClickException(
            f"failed at {record.failed_stage}: {record.error}"
        )


@click.group()
def main() -> None:
    """Staged cinematic video generation pipeline."""


@main.command("plan")
@click.option("--size", "-n", type=int, required=True, help="Number of samples.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--taxonomy", "taxonomy_path", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default="-", show_default=True)
def plan_cmd(size: int, seed: int, taxonomy_path: str | None, out: str) -> None:
    """Generate a balanced batch plan as JSONL."""
    try:
        taxonomy = load_taxonomy(taxonomy_path)
        built = generate_plan(size, taxonomy, seed)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    _write_or_echo(built.to_jsonl(), out)
    for dim, rep in built.report.items():
        click.echo(f"# {dim}: max deviation {rep['max_deviation']}", err=True)


@main.command("run")
@click.option("--store", "store_dir", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--sample-id", required=True)
@click.option("--genre", required=True)
@click.option("--movements", required=True, help="Comma-separated, one per shot.")
@click.option("--subjects", "subject_count", required=True)
@click.option("--dynamicity", required=True)
def run_cmd(
    store_dir: str,
    config_path: str | None,
    sample_id: str,
    genre: str,
    movements: str,
    subject_count: str,
    dynamicity: str,
) -> None:
    """Run one sample through every stage."""
    moves = tuple(m.strip() for m in movements.split(",") if m.strip())
    try:
        service = _service(store_dir, config_path)
        signals = ControlSignals(
            sample_id=sample_id,
            genre=genre,
            shot_count=len(moves),
            movements=moves,
            subject_count=subject_count,
            dynamicity=dynamicity,
        )
        record = service.run_sample(signals)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    _report_run(record)


@main.command("resume")
@click.argument("run_id")
@click.option("--store", "store_dir", type=click.Path(exists=True), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True))
def resume_cmd(run_id: str, store_dir: str, config_path: str | None) -> None:
    """Continue a run from its last completed stage."""
    try:
        record = _service(store_dir, config_path).resume(run_id)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    _report_run(record)


@main.command("batch")
@click.option("--plan", "plan_path", type=click.Path(exists=True), required=True)
@click.option("--store", "store_dir", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--parallelism", type=int, default=None, help="Override config.")
def batch_cmd(
    plan_path: str,
    store_dir: str,
    config_path: str | None,
    parallelism: int | None,
) -> None:
    """Run every sample in a plan file."""
    try:
        service = _service(store_dir, config_path)
        batch = BalancePlan.from_jsonl(
            Path(plan_path).read_text(encoding="utf-8"), service.taxonomy
        )
        report = service.run_batch(batch, parallelism)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(json.dumps(report, indent=2))
    if report["failed"]:
        raise click.ClickException(f"{report['failed']} samples failed")


@main.command("transition")
@click.argument("tracks", type=click.Path(exists=True), required=False)
@click.option("--out-dir", type=click.Path(), default=".", show_default=True)
@click.option("--window", type=int, default=30, show_default=True)
@click.option("--freeze-threshold", type=float, default=1.0, show_default=True)
@click.option("--velocity-fit-frames", type=int, default=5, show_default=True)
@click.option("--transition-frames", type=int, default=16, show_default=True)
@click.option("--control-points", type=int, default=16, show_default=True)
def transition_cmd(
    tracks: str | None,
    out_dir: str,
    window: int,
    freeze_threshold: float,
    velocity_fit_frames: int,
    transition_frames: int,
    control_points: int,
) -> None:
    """Plan one transition from a merged track document.

    Reads TRACKS (a track JSON file; a packaged example is used when
    omitted), then writes transition_plan.json, control_field.json, and
    cutlist.json into --out-dir.
    """
    if tracks is None:
        text = (
            resources.files("cinepipe")
            .joinpath("data")
            .joinpath("example_tracks.json")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(tracks).read_text(encoding="utf-8")
    try:
        params = TransitionParams(
            window=window,
            freeze_threshold=freeze_threshold,
            velocity_fit_frames=velocity_fit_frames,
            transition_frames=transition_frames,
            control_points=control_points,
        )
        track_set = ingest_tracks(text)
        plan = plan_transition(track_set, params)
        cuts = stitch_timeline(
            plan,
            ("clip_a", track_set.clip_a_len),
            ("transition", params.transition_frames),
            ("clip_b", track_set.clip_b_len),
        )
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None

    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    (target / "transition_plan.json").write_text(plan.to_json(), encoding="utf-8")
    (target / "control_field.json").write_text(
        json.dumps(plan.field.to_dict(), indent=2), encoding="utf-8"
    )
    (target / "cutlist.json").write_text(
        json.dumps(cuts.to_dict(), indent=2), encoding="utf-8"
    )

    click.echo(
        f"cut_a={plan.cut_a} cut_b={plan.cut_b} "
        f"transition_frames={plan.field.transition_frames} "
        f"control_points={len(plan.field.trajectories)}"
    )
    for segment in cuts.segments:
        click.echo(
            f"  {segment.source}: frames {segment.start}..{segment.end} "
            f"({segment.frames})"
        )
    click.echo(f"total timeline frames: {cuts.total_frames}")
    if plan.warnings:
        click.echo(f"warnings: {len(plan.warnings)}", err=True)
        for warning in plan.warnings:
            click.echo(f"  {warning}", err=True)


@main.command("eval")
@click.option("--ratings", type=click.Path(exists=True))
@click.option("--binary", "binary_path", type=click.Path(exists=True))
@click.option("--rankings", type=click.Path(exists=True))
@click.option("--audits", type=click.Path(exists=True))
def eval_cmd(
    ratings: str | None,
    binary_path: str | None,
    rankings: str | None,
    audits: str | None,
) -> None:
    """Aggregate evaluation records (JSONL) into report tables."""
    if not any((ratings, binary_path, rankings, audits)):
        raise click.ClickException(
            "nothing to do: pass --ratings, --binary, --rankings, or --audits"
        )
    try:
        if ratings:
            cells = aggregate_ratings(
                read_jsonl(Path(ratings).read_text(encoding="utf-8"))
            )
            rows = [
                [
                    c.method_id,
                    c.metric_id,
                    f"{round1(c.mean):.1f}",
                    f"{round1(c.std_sample):.1f}",
                    f"{round1(c.std_population):.1f}",
                    str(c.count),
                ]
                for c in cells.values()
            ]
            click.echo(
                format_table(
                    ["method", "metric", "mean", "std (sample)",
                     "std (population)", "n"],
                    rows,
                )
            )
        if binary_path:
            checks = binary_accuracy(
                read_jsonl(Path(binary_path).read_text(encoding="utf-8"))
            )
            rows = [
                [s.field, f"{round1(s.percent):.1f}", f"{s.correct}/{s.total}"]
                for s in checks.values()
            ]
            click.echo(format_table(["field", "accuracy %", "correct"], rows))
        if rankings:
            wins = win_rate(read_jsonl(Path(rankings).read_text(encoding="utf-8")))
            rows = [
                [method, f"{round1(pct):.1f}"] for method, pct in wins.items()
            ]
            click.echo(format_table(["method", "ranked first %"], rows))
        if audits:
            summary = summarize_llm_audit(
                read_jsonl(Path(audits).read_text(encoding="utf-8"))
            )
            rows = [
                [
                    f.field,
                    f"{round1(f.percent):.1f}",
                    f"{f.judge_variance:.3f}",
                    str(f.samples),
                ]
                for f in summary.fields
            ]
            click.echo(
                format_table(
                    ["field", "accuracy %", "variance (population)", "samples"],
                    rows,
                )
            )
            click.echo(f"row average: {round1(summary.average_percent):.1f}")
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None


@main.command("export")
@click.option("--store", "store_dir", type=click.Path(exists=True), required=True)
@click.option("--taxonomy", "taxonomy_path", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default="-", show_default=True)
def export_cmd(store_dir: str, taxonomy_path: str | None, out: str) -> None:
    """Export the dataset manifest for finished runs, with balance stats."""
    try:
        manifest = export_manifest(
            RunStore(store_dir), load_taxonomy(taxonomy_path)
        )
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    _write_or_echo(json.dumps(manifest, indent=2), out)
    click.echo(f"# {manifest['count']} finished runs", err=True)


@main.command("serve")
@click.option("--store", "store_dir", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8300, show_default=True)
@click.option(
    "--token", envvar="CINEPIPE_API_TOKEN",
    help="Shared API token; unset leaves the API open.",
)
@click.option("--ui-dir", type=click.Path(exists=True, file_okay=False))
@click.option(
    "--no-auto-continue", is_flag=True,
    help="Approvals only flip the gate; runs resume via the CLI.",
)
def serve_cmd(
    store_dir: str,
    config_path: str | None,
    host: str,
    port: int,
    token: str | None,
    ui_dir: str | None,
    no_auto_continue: bool,
) -> None:
    """Serve the review API (and optionally a static UI bundle)."""
    import uvicorn

    app = create_app(
        _service(store_dir, config_path),
        token=token,
        auto_continue=not no_auto_continue,
        ui_dir=ui_dir,
    )
    uvicorn.run(app, host=host, port=port)


@main.group("mock-gen")
def mock_gen() -> None:
    """Synthetic inputs and seeded stores for development."""


@mock_gen.command("tracks")
@click.option("--stall-a", type=int, default=6, show_default=True)
@click.option("--stall-b", type=int, default=2, show_default=True)
@click.option("--points", type=int, default=24, show_default=True)
@click.option("--clip-frames", type=int, default=49, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--out", type=click.Path(), default="-", show_default=True)
def mock_tracks_cmd(
    stall_a: int,
    stall_b: int,
    points: int,
    clip_frames: int,
    seed: int,
    out: str,
) -> None:
    """Write a synthetic merged track document with known stalls."""
    profile = MotionProfile(
        velocity_a=(-3.0, 0.5),
        velocity_b=(2.5, -1.0),
        stall_a=stall_a,
        stall_b=stall_b,
        jitter=0.2,
    )
    track_set, truth = synth_tracks(
        profile,
        n_points=points,
        clip_a_len=clip_frames,
        clip_b_len=clip_frames,
        seed=seed,
    )
    _write_or_echo(track_set.to_json(), out)
    click.echo(f"# stalls: a={truth.stall_a} b={truth.stall_b}", err=True)


@mock_gen.command("store")
@click.option("--store", "store_dir", type=click.Path(), required=True)
@click.option("--finished", type=int, default=2, show_default=True)
@click.option("--gated", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def mock_store_cmd(store_dir: str, finished: int, gated: int, seed: int) -> None:
    """Seed a run store with finished and gate-paused mock runs."""
    try:
        taxonomy = load_taxonomy()
        batch = generate_plan(finished + gated, taxonomy, seed)
        runstore = RunStore(store_dir)
        open_service = PipelineService(runstore, load_config({"seed": seed}))
        gated_service = PipelineService(
            runstore,
            load_config({"seed": seed, "gating": {"screenplay": True}}),
        )
        for i, signals in enumerate(batch.entries):
            service = open_service if i < finished else gated_service
            record = service.run_sample(signals)
            click.echo(f"{record.run_id}: {record.stage}")
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None


if __name__ == "__main__":
    main()
