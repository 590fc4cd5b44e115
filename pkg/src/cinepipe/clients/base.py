"""Endpoints, request shapes, retries, rate limiting, and the client.

Every generative call funnels through :class:`GenClient.request`: rate
limit, cache lookup, transport submit with bounded retries, artifact
persistence, cache fill. Kind-specific wrappers (``llm_complete``,
``image_generate``, ...) only shape payloads; they share one contract.
"""

from __future__ import annotations

import hashlib
import json
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol

from cinepipe.clients.store import ArtifactStore

__all__ = [
    "GenError",
    "RetryableError",
    "ModelEndpoint",
    "EndpointRegistry",
    "GenRequest",
    "GenResult",
    "TokenBucket",
    "Transport",
    "GenClient",
    "request_key",
    "REQUEST_KINDS",
]

REQUEST_KINDS = ("llm", "t2i", "i2i", "flf2v", "guided_interp", "track")


class GenError(Exception):
    """Terminal client failure (validation, exhausted retries)."""


class RetryableError(GenError):
    """Transient transport failure worth another attempt."""


@dataclass(frozen=True)
class ModelEndpoint:
    """Connection descriptor for one hosted model.

    ``auth_ref`` names an environment variable holding the secret, never
    the secret itself, so configs are safe to commit.
    """

    model_id: str
    base_url: str = "mock://local"
    auth_ref: str | None = None
    rate_limit: float = 600.0  # requests per minute
    timeout: float = 60.0

    def __post_init__(self) -> None:
        if not self.model_id:
            raise GenError("model_id must be non-empty")
        if self.timeout <= 0:
            raise GenError("timeout must be positive")
        if self.rate_limit <= 0:
            raise GenError("rate_limit must be positive")


class EndpointRegistry:
    """Uniquely named endpoints, typically loaded from config."""

    def __init__(self, endpoints: list[ModelEndpoint] | None = None):
        self._by_id: dict[str, ModelEndpoint] = {}
        for endpoint in endpoints or []:
            self.add(endpoint)

    def add(self, endpoint: ModelEndpoint) -> None:
        if endpoint.model_id in self._by_id:
            raise GenError(f"duplicate endpoint {endpoint.model_id!r}")
        self._by_id[endpoint.model_id] = endpoint

    def get(self, model_id: str) -> ModelEndpoint:
        try:
            return self._by_id[model_id]
        except KeyError:
            raise GenError(f"unknown endpoint {model_id!r}") from None

    def ids(self) -> list[str]:
        return sorted(self._by_id)


@dataclass(frozen=True)
class GenRequest:
    """One generation call: kind, structured payload, seed."""

    kind: str
    payload: dict
    seed: int

    def __post_init__(self) -> None:
        if self.kind not in REQUEST_KINDS:
            raise GenError(f"unknown request kind {self.kind!r}")


@dataclass(frozen=True)
class GenResult:
    """Outcome of a generation call, always store-backed."""

    ref: str
    media_type: str
    cached: bool
    attempts: int
    latency: float
    meta: dict = field(default_factory=dict)


def canonical_payload(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def request_key(model_id: str, kind: str, payload: dict, seed: int) -> str:
    """Stable cache key over (model, kind, canonical payload, seed)."""
    body = canonical_payload(
        {"model_id": model_id, "kind": kind, "payload": payload, "seed": seed}
    )
    return hashlib.sha256(body.encode()).hexdigest()


class TokenBucket:
    """Thread-safe token bucket; callers sleep for the returned wait."""

    def __init__(
        self,
        rate_per_minute: float,
        burst: float | None = None,
        clock: Callable[[], float] = time.monotonic,
    ):
        if rate_per_minute <= 0:
            raise GenError("rate must be positive")
        self.rate = rate_per_minute / 60.0
        self.capacity = burst if burst is not None else max(1.0, self.rate)
        self._tokens = self.capacity
        self._clock = clock
        self._last = clock()
        self._lock = threading.Lock()

    def take(self) -> float:
        """Consume one token, returning seconds to wait before proceeding."""
        with self._lock:
            now = self._clock()
            self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
            self._last = now
            if self._tokens >= 1.0:
                self._tokens -= 1.0
                return 0.0
            deficit = 1.0 - self._tokens
            self._tokens = 0.0
            return deficit / self.rate


class Transport(Protocol):
    """Wire adapter: turns a request into response bytes."""

    def submit(
        self, endpoint: ModelEndpoint, request: GenRequest
    ) -> tuple[str, bytes, dict]:
        """Returns (media_type, content, meta); raises RetryableError to retry."""
        ...


class GenClient:
    """One endpoint bound to a transport, a store, and retry policy."""

    def __init__(
        self,
        endpoint: ModelEndpoint,
        transport: Transport,
        store: ArtifactStore,
        *,
        max_attempts: int = 3,
        backoff_base: float = 0.25,
        backoff_factor: float = 2.0,
        jitter: float = 0.25,
        bucket: TokenBucket | None = None,
        sleep: Callable[[float], None] = time.sleep,
        transcript: Callable[[dict], None] | None = None,
    ):
        if max_attempts < 1:
            raise GenError("max_attempts must be at least 1")
        self.endpoint = endpoint
        self.transport = transport
        self.store = store
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_factor = backoff_factor
        self.jitter = jitter
        self.bucket = bucket or TokenBucket(endpoint.rate_limit)
        self.sleep = sleep
        self.transcript = transcript

    def _log(self, entry: dict) -> None:
        if self.transcript is not None:
            self.transcript(entry)

    def _backoff(self, key: str, attempt: int) -> float:
        base = self.backoff_base * self.backoff_factor ** (attempt - 1)
        # deterministic jitter: reruns of the same request sleep identically
        u = random.Random(f"{key}:{attempt}").uniform(-1.0, 1.0)
        return max(0.0, base * (1.0 + self.jitter * u))

    def request(self, kind: str, payload: dict, seed: int) -> GenResult:
        """Cache-or-generate; the artifact ref is the durable handle."""
        req = GenRequest(kind=kind, payload=payload, seed=seed)
        key = request_key(self.endpoint.model_id, kind, payload, seed)
        cached_ref = self.store.cache_get(key)
        if cached_ref is not None:
            info = self.store.info(cached_ref)
            self._log(
                {"model_id": self.endpoint.model_id, "kind": kind, "seed": seed,
                 "request_key": key, "cached": True, "attempts": 0, "ref": cached_ref}
            )
            return GenResult(
                ref=cached_ref, media_type=info["media_type"],
                cached=True, attempts=0, latency=0.0,
            )

        last_error: Exception | None = None
        started = time.monotonic()
        for attempt in range(1, self.max_attempts + 1):
            wait = self.bucket.take()
            if wait > 0:
                self.sleep(wait)
            try:
                media_type, content, meta = self.transport.submit(self.endpoint, req)
            except RetryableError as exc:
                last_error = exc
                if attempt < self.max_attempts:
                    self.sleep(self._backoff(key, attempt))
                continue
            latency = time.monotonic() - started
            ref = self.store.put(
                content,
                media_type,
                provenance={
                    "model_id": self.endpoint.model_id,
                    "kind": kind,
                    "payload_hash": hashlib.sha256(
                        canonical_payload(payload).encode()
                    ).hexdigest(),
                    "seed": seed,
                },
            )
            winner = self.store.cache_put(key, ref)
            self._log(
                {"model_id": self.endpoint.model_id, "kind": kind, "seed": seed,
                 "request_key": key, "cached": False, "attempts": attempt,
                 "ref": winner}
            )
            return GenResult(
                ref=winner, media_type=media_type, cached=False,
                attempts=attempt, latency=latency, meta=meta,
            )
        raise GenError(
            f"{kind} request to {self.endpoint.model_id} failed after "
            f"{self.max_attempts} attempts: {last_error}"
        )

    # payload shapers ----------------------------------------------------

    def _require(self, *refs: str) -> None:
        for ref in refs:
            if not self.store.exists(ref):
                raise GenError(f"referenced artifact {ref!r} does not exist")

    def llm_complete(self, prompt: str, schema_hint: str, seed: int) -> str:
        result = self.request(
            "llm", {"prompt": prompt, "schema_hint": schema_hint}, seed
        )
        return self.store.get(result.ref).decode()

    def llm_complete_result(
        self, prompt: str, schema_hint: str, seed: int
    ) -> GenResult:
        return self.request(
            "llm", {"prompt": prompt, "schema_hint": schema_hint}, seed
        )

    def image_generate(self, prompt: str, seed: int) -> GenResult:
        return self.request("t2i", {"prompt": prompt}, seed)

    def image_edit(self, source_ref: str, prompt: str, seed: int) -> GenResult:
        self._require(source_ref)
        return self.request("i2i", {"source_ref": source_ref, "prompt": prompt}, seed)

    def video_flf2v(
        self, first_ref: str, last_ref: str, prompt: str, seed: int, *,
        frames: int = 49,
    ) -> GenResult:
        self._require(first_ref, last_ref)
        return self.request(
            "flf2v",
            {"first_ref": first_ref, "last_ref": last_ref, "prompt": prompt,
             "frames": frames},
            seed,
        )

    def guided_interpolate(
        self, first_ref: str, last_ref: str, control_ref: str, seed: int
    ) -> GenResult:
        self._require(first_ref, last_ref, control_ref)
        return self.request(
            "guided_interp",
            {"first_ref": first_ref, "last_ref": last_ref,
             "control_ref": control_ref},
            seed,
        )

    def track_clips(self, clip_a_ref: str, clip_b_ref: str, seed: int) -> GenResult:
        self._require(clip_a_ref, clip_b_ref)
        return self.request(
            "track", {"clip_a_ref": clip_a_ref, "clip_b_ref": clip_b_ref}, seed
        )
