"""Content-addressed artifact store with provenance sidecars.

Artifacts live at ``objects/<sha[:2]>/<sha><ext>`` keyed by the sha256 of
their bytes; next to each sits ``<sha>.meta.json`` recording where the
bytes came from. A flat ``cache/`` directory maps request keys to refs.

Writes claim their final path with a hard link from a temp file, so
concurrent writers of the same key race safely: the first writer wins
and everyone else reads the winner back.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import os
import tempfile
from pathlib import Path

__all__ = ["StoreError", "ArtifactStore", "MEDIA_EXTENSIONS"]

MEDIA_EXTENSIONS = {
    "text/plain": ".txt",
    "application/json": ".json",
    "image/png": ".png",
    "video/x-raw-frames": ".npy",
    "application/octet-stream": ".bin",
}


class StoreError(Exception):
    """Raised for missing refs or malformed store state."""


def _atomic_claim(content: bytes, target: Path) -> bool:
    """Write ``content`` to ``target`` unless it already exists.

    Returns True when this call created the file. Uses link-from-temp so
    a partially written file can never appear under the final name.
    """
    if target.exists():
        return False
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(content)
        try:
            os.link(tmp, target)
            return True
        except FileExistsError:
            return False
    finally:
        os.unlink(tmp)


class ArtifactStore:
    """Immutable blob store addressed by content hash."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "objects").mkdir(parents=True, exist_ok=True)
        (self.root / "cache").mkdir(parents=True, exist_ok=True)

    def _bucket(self, ref: str) -> Path:
        return self.root / "objects" / ref[:2]

    def _sidecar_path(self, ref: str) -> Path:
        return self._bucket(ref) / f"{ref}.meta.json"

    def put(
        self, content: bytes, media_type: str, provenance: dict | None = None
    ) -> str:
        """Store bytes, returning their sha256 ref.

        The sidecar is written once, by whichever writer lands first; a
        re-put of identical bytes is a no-op that returns the same ref.
        """
        if media_type not in MEDIA_EXTENSIONS:
            raise StoreError(f"unknown media type {media_type!r}")
        ref = hashlib.sha256(content).hexdigest()
        bucket = self._bucket(ref)
        bucket.mkdir(parents=True, exist_ok=True)
        _atomic_claim(content, bucket / f"{ref}{MEDIA_EXTENSIONS[media_type]}")
        sidecar = {
            "media_type": media_type,
            "size": len(content),
            "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            **(provenance or {}),
        }
        _atomic_claim(
            json.dumps(sidecar, sort_keys=True, indent=2).encode(),
            self._sidecar_path(ref),
        )
        return ref

    def info(self, ref: str) -> dict:
        path = self._sidecar_path(ref)
        if not path.exists():
            raise StoreError(f"unknown artifact {ref!r}")
        return json.loads(path.read_text())

    def path(self, ref: str) -> Path:
        ext = MEDIA_EXTENSIONS[self.info(ref)["media_type"]]
        path = self._bucket(ref) / f"{ref}{ext}"
        if not path.exists():
            raise StoreError(f"artifact {ref!r} has a sidecar but no bytes")
        return path

    def get(self, ref: str) -> bytes:
        return self.path(ref).read_bytes()

    def exists(self, ref: str) -> bool:
        try:
            self.path(ref)
            return True
        except StoreError:
            return False

    def refs(self) -> list[str]:
        out = []
        for sidecar in sorted((self.root / "objects").glob("*/*.meta.json")):
            out.append(sidecar.name.removesuffix(".meta.json"))
        return out

    # request cache -----------------------------------------------------

    def cache_get(self, key: str) -> str | None:
        path = self.root / "cache" / key
        if not path.exists():
            return None
        ref = json.loads(path.read_text())["ref"]
        if not self.exists(ref):
            raise StoreError(f"cache entry {key} points at missing artifact {ref}")
        return ref

    def cache_put(self, key: str, ref: str) -> str:
        """Record key → ref; returns the winning ref on a race."""
        if not self.exists(ref):
            raise StoreError(f"cannot cache unknown artifact {ref!r}")
        path = self.root / "cache" / key
        created = _atomic_claim(json.dumps({"ref": ref}).encode(), path)
        if created:
            return ref
        winner = json.loads(path.read_text())["ref"]
        return winner
