"""Generic JSON-over-HTTP transport.

Vendor-specific wire schemas live behind per-vendor adapters at
deployment time; this transport covers the common shape: POST the
payload and seed to ``{base_url}/{kind}``, bearer token from the
environment variable named by the endpoint's ``auth_ref``, response body
is the artifact bytes with its content type.
"""

from __future__ import annotations

import os

import httpx

from cinepipe.clients.base import GenError, GenRequest, ModelEndpoint, RetryableError
from cinepipe.clients.store import MEDIA_EXTENSIONS

__all__ = ["HttpTransport"]


class HttpTransport:
    def __init__(self, client: httpx.Client | None = None):
        self._client = client or httpx.Client()

    def submit(
        self, endpoint: ModelEndpoint, request: GenRequest
    ) -> tuple[str, bytes, dict]:
        headers = {}
        if endpoint.auth_ref:
            secret = os.environ.get(endpoint.auth_ref)
            if not secret:
                raise GenError(
                    f"endpoint {endpoint.model_id} needs secret "
                    f"{endpoint.auth_ref!r} in the environment"
                )
            headers["Authorization"] = f"Bearer {secret}"
        url = f"{endpoint.base_url.rstrip('/')}/{request.kind}"
        try:
            response = self._client.post(
                url,
                json={"payload": request.payload, "seed": request.seed},
                headers=headers,
                timeout=endpoint.timeout,
            )
        except httpx.TimeoutException as exc:
            raise RetryableError(f"timeout talking to {endpoint.model_id}") from exc
        except httpx.TransportError as exc:
            raise RetryableError(f"transport failure: {exc}") from exc
        if response.status_code >= 500:
            raise RetryableError(
                f"{endpoint.model_id} returned {response.status_code}"
            )
        if response.status_code >= 400:
            raise GenError(
                f"{endpoint.model_id} rejected the request: "
                f"{response.status_code} {response.text[:200]}"
            )
        media_type = response.headers.get("content-type", "").split(";")[0].strip()
        if media_type not in MEDIA_EXTENSIONS:
            media_type = "application/octet-stream"
        return media_type, response.content, {"status": response.status_code}
