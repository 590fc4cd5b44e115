"""Crash-safe persistence for runs.

Layout under one root:

    runs/<run_id>/record.json       atomic snapshot (write temp, rename)
    runs/<run_id>/provenance.jsonl  append-only event log
    store/                          shared content-addressed artifacts

Records are only ever replaced whole via os.replace, so a reader never
sees a torn checkpoint; the provenance log is strictly appended.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from pathlib import Path

from ..clients.store import ArtifactStore
from .records import PipelineError, RunRecord, utc_now

__all__ = ["RunStore"]


class RunStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.runs_dir = self.root / "runs"
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self.artifacts = ArtifactStore(self.root / "store")
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, run_id: str) -> threading.Lock:
        """Per-run mutation lock (created on first use)."""
        with self._locks_guard:
            return self._locks.setdefault(run_id, threading.Lock())

    def run_dir(self, run_id: str) -> Path:
        return self.runs_dir / run_id

    def exists(self, run_id: str) -> bool:
        return (self.run_dir(run_id) / "record.json").is_file()

    def run_ids(self) -> list[str]:
        return sorted(
            p.name for p in self.runs_dir.iterdir() if (p / "record.json").is_file()
        )

    def save(self, record: RunRecord) -> None:
        record.updated_at = utc_now()
        run_dir = self.run_dir(record.run_id)
        run_dir.mkdir(parents=True, exist_ok=True)
        payload = json.dumps(record.to_dict(), indent=2).encode()
        fd, tmp = tempfile.mkstemp(dir=run_dir, prefix=".record-", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(payload)
            os.replace(tmp, run_dir / "record.json")
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)

    def load(self, run_id: str) -> RunRecord:
        path = self.run_dir(run_id) / "record.json"
        if not path.is_file():
            raise PipelineError(f"unknown run {run_id!r}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise PipelineError(f"corrupt checkpoint for {run_id!r}: {exc}") from None
        return RunRecord.from_dict(doc)

    def append_event(self, run_id: str, event: dict) -> None:
        run_dir = self.run_dir(run_id)
        run_dir.mkdir(parents=True, exist_ok=True)
        entry = {"ts": utc_now(), **event}
        with open(run_dir / "provenance.jsonl", "a", encoding="utf-8") as handle:
            handle.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def events(self, run_id: str) -> list[dict]:
        path = self.run_dir(run_id) / "provenance.jsonl"
        if not path.is_file():
            return []
        return [
            json.loads(line)
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
