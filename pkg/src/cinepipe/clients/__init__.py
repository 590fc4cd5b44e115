"""Client layer for generative services: store, transports, retries, mocks."""

from cinepipe.clients.base import (
    EndpointRegistry,
    GenClient,
    GenError,
    GenRequest,
    GenResult,
    ModelEndpoint,
    RetryableError,
    TokenBucket,
    request_key,
)
from cinepipe.clients.mock import MockTransport
from cinepipe.clients.store import ArtifactStore, StoreError

__all__ = [
    "ArtifactStore",
    "EndpointRegistry",
    "GenClient",
    "GenError",
    "GenRequest",
    "GenResult",
    "MockTransport",
    "ModelEndpoint",
    "RetryableError",
    "StoreError",
    "TokenBucket",
    "request_key",
]
