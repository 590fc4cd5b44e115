"""Store, client, transport, and mock generator tests."""

from __future__ import annotations

import hashlib
import json
import threading

import httpx
import numpy as np
import pytest

from cinepipe.clients.base import (
    EndpointRegistry,
    GenClient,
    GenError,
    GenRequest,
    ModelEndpoint,
    TokenBucket,
    request_key,
)
from cinepipe.clients.http import HttpTransport
from cinepipe.clients.media import (
    MediaError,
    array_to_png,
    clip_frame_png,
    clip_from_bytes,
    clip_to_bytes,
    png_to_array,
)
from cinepipe.clients.mock import FlakyTransport, MockTransport, ScriptedLLMTransport
from cinepipe.clients.store import ArtifactStore, StoreError
from cinepipe.transition.tracks import ingest_tracks


@pytest.fixture
def store(tmp_path):
    return ArtifactStore(tmp_path / "store")


@pytest.fixture
def endpoint():
    return ModelEndpoint(model_id="mock-model")


def make_client(store, endpoint, transport, **kwargs):
    kwargs.setdefault("bucket", TokenBucket(6_000_000))
    kwargs.setdefault("sleep", lambda s: None)
    return GenClient(endpoint, transport, store, **kwargs)


class TestArtifactStore:
    def test_put_get_roundtrip_and_ref_is_content_hash(self, store):
        ref = store.put(b"hello", "text/plain")
        assert ref == hashlib.sha256(b"hello").hexdigest()
        assert store.get(ref) == b"hello"
        assert store.path(ref).suffix == ".txt"

    def test_sidecar_provenance(self, store):
        ref = store.put(b"x", "text/plain", {"model_id": "m", "seed": 3})
        info = store.info(ref)
        assert info["model_id"] == "m"
        assert info["seed"] == 3
        assert info["size"] == 1
        assert "created_at" in info

    def test_reput_is_idempotent(self, store):
        ref1 = store.put(b"same", "text/plain", {"model_id": "first"})
        ref2 = store.put(b"same", "text/plain", {"model_id": "second"})
        assert ref1 == ref2
        # first writer's sidecar survives
        assert store.info(ref1)["model_id"] == "first"

    def test_unknown_media_type_and_missing_ref(self, store):
        with pytest.raises(StoreError, match="unknown media type"):
            store.put(b"x", "audio/wav")
        with pytest.raises(StoreError, match="unknown artifact"):
            store.get("0" * 64)
        assert not store.exists("0" * 64)

    def test_refs_lists_everything(self, store):
        a = store.put(b"a", "text/plain")
        b = store.put(b"b", "text/plain")
        assert set(store.refs()) == {a, b}

    def test_cache_first_writer_wins(self, store):
        r1 = store.put(b"one", "text/plain")
        r2 = store.put(b"two", "text/plain")
        assert store.cache_put("k", r1) == r1
        assert store.cache_put("k", r2) == r1
        assert store.cache_get("k") == r1

    def test_cache_rejects_unknown_ref_and_misses_return_none(self, store):
        assert store.cache_get("nope") is None
        with pytest.raises(StoreError, match="cannot cache unknown"):
            store.cache_put("k", "0" * 64)

    def test_concurrent_cache_put_single_winner(self, store):
        refs = [store.put(f"c{i}".encode(), "text/plain") for i in range(8)]
        winners = []
        barrier = threading.Barrier(8)

        def race(ref):
            barrier.wait()
            winners.append(store.cache_put("shared", ref))

        threads = [threading.Thread(target=race, args=(r,)) for r in refs]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(set(winners)) == 1
        assert store.cache_get("shared") == winners[0]


class TestTokenBucket:
    def test_waits_accumulate_at_configured_rate(self):
        now = [0.0]
        bucket = TokenBucket(60.0, burst=1.0, clock=lambda: now[0])
        assert bucket.take() == 0.0
        wait = bucket.take()
        assert wait == pytest.approx(1.0)
        now[0] += 5.0
        assert bucket.take() == 0.0

    def test_rejects_bad_rate(self):
        with pytest.raises(GenError, match="rate must be positive"):
            TokenBucket(0)


class TestGenClient:
    def test_identical_request_hits_cache(self, store, endpoint):
        inner = MockTransport(store)
        calls = []

        class Counting:
            def submit(self, ep, req):
                calls.append(req.kind)
                return inner.submit(ep, req)

        client = make_client(store, endpoint, Counting())
        first = client.image_generate("a street", seed=1)
        second = client.image_generate("a street", seed=1)
        assert calls == ["t2i"]
        assert second.cached and not first.cached
        assert second.ref == first.ref
        assert store.get(second.ref) == store.get(first.ref)

    def test_failure_burns_exactly_the_retry_budget(self, store, endpoint):
        flaky = FlakyTransport(None)
        sleeps = []
        client = make_client(store, endpoint, flaky, sleep=sleeps.append)
        with pytest.raises(GenError, match="failed after 3 attempts"):
            client.image_generate("x", seed=0)
        assert flaky.submissions == 3
        # two backoff sleeps between three attempts, growing geometrically
        assert len(sleeps) == 2
        assert 0 < sleeps[0] < sleeps[1]

    def test_recovers_when_failures_stop(self, store, endpoint):
        flaky = FlakyTransport(MockTransport(store), failures=1)
        client = make_client(store, endpoint, flaky)
        result = client.image_generate("x", seed=0)
        assert result.attempts == 2
        assert store.exists(result.ref)

    def test_backoff_is_deterministic_per_request(self, store, endpoint, tmp_path):
        def run():
            flaky = FlakyTransport(None)
            sleeps = []
            client = make_client(
                store, endpoint, flaky, sleep=sleeps.append
            )
            with pytest.raises(GenError):
                client.image_generate("x", seed=9)
            return sleeps

        assert run() == run()

    def test_transcript_records_cache_state(self, store, endpoint):
        log = []
        client = make_client(
            store, endpoint, MockTransport(store), transcript=log.append
        )
        client.llm_complete("hi\n" + json.dumps({"genre": "war"}), "scene_record", 5)
        client.llm_complete("hi\n" + json.dumps({"genre": "war"}), "scene_record", 5)
        assert [e["cached"] for e in log] == [False, True]
        assert log[0]["model_id"] == "mock-model"
        assert log[0]["attempts"] == 1

    def test_source_refs_must_exist(self, store, endpoint):
        client = make_client(store, endpoint, MockTransport(store))
        with pytest.raises(GenError, match="does not exist"):
            client.image_edit("0" * 64, "tighter", seed=1)

    def test_provenance_sidecar_is_complete(self, store, endpoint):
        client = make_client(store, endpoint, MockTransport(store))
        result = client.image_generate("prompt", seed=7)
        info = store.info(result.ref)
        assert info["model_id"] == "mock-model"
        assert info["kind"] == "t2i"
        assert info["seed"] == 7
        assert len(info["payload_hash"]) == 64
        assert "created_at" in info

    def test_request_key_stability(self):
        a = request_key("m", "llm", {"b": 1, "a": 2}, 3)
        b = request_key("m", "llm", {"a": 2, "b": 1}, 3)
        c = request_key("m", "llm", {"a": 2, "b": 1}, 4)
        assert a == b != c

    def test_registry_and_endpoint_validation(self):
        registry = EndpointRegistry([ModelEndpoint(model_id="a")])
        with pytest.raises(GenError, match="duplicate endpoint"):
            registry.add(ModelEndpoint(model_id="a"))
        with pytest.raises(GenError, match="unknown endpoint"):
            registry.get("zz")
        with pytest.raises(GenError, match="timeout"):
            ModelEndpoint(model_id="x", timeout=0)
        with pytest.raises(GenError, match="unknown request kind"):
            GenRequest(kind="paint", payload={}, seed=0)


class TestMockLLM:
    def scene(self, store, endpoint, signals, seed=0):
        client = make_client(store, endpoint, MockTransport(store))
        prompt = "Write the scene.\n" + json.dumps(signals)
        return json.loads(client.llm_complete(prompt, "scene_record", seed))

    def test_subject_counts(self, store, endpoint):
        zero = self.scene(store, endpoint, {"genre": "western", "subject_count": "zero"})
        one = self.scene(store, endpoint, {"genre": "western", "subject_count": "single"})
        many = self.scene(store, endpoint, {"genre": "western", "subject_count": "multiple"})
        assert zero["subjects"] == []
        assert len(one["subjects"]) == 1
        assert len(many["subjects"]) >= 2
        for record in (zero, one, many):
            for name in ("lighting", "location", "subject_positions", "crowd_level", "scenario"):
                assert record[name]
        assert "western" in one["scenario"]

    def test_determinism_and_seed_sensitivity(self, store, endpoint):
        a = self.scene(store, endpoint, {"genre": "drama"}, seed=1)
        b = self.scene(store, endpoint, {"genre": "drama"}, seed=1)
        c = self.scene(store, endpoint, {"genre": "drama"}, seed=2)
        assert a == b
        assert a != c

    def test_static_terminal_view_preserves_init(self, store, endpoint):
        client = make_client(store, endpoint, MockTransport(store))
        body = json.dumps({"init": "a wide street view", "movement": "static"})
        out = client.llm_complete("Describe.\n" + body, "terminal_view", 0)
        assert out == "a wide street view"

    def test_moving_terminal_view_mentions_movement(self, store, endpoint):
        client = make_client(store, endpoint, MockTransport(store))
        body = json.dumps({"init": "a wide street view", "movement": "dolly in"})
        out = client.llm_complete("Describe.\n" + body, "terminal_view", 0)
        assert "dolly in" in out
        assert out != "a wide street view"

    def test_retrieve_field_reads_markers(self, store, endpoint):
        client = make_client(store, endpoint, MockTransport(store))
        doc = "GENRE: war\nSHOTS: 2\nMOVE: pan left\nMOVE: tilt up\n"

        def ask(field):
            body = json.dumps({"text": doc, "field": field})
            return client.llm_complete("Extract.\n" + body, "retrieve_field", 0)

        assert ask("genre") == "war"
        assert ask("shot_count") == "2"
        assert ask("movements") == "pan left, tilt up"
        assert ask("bogus") == "unknown"

    def test_unknown_schema_hint_rejected(self, store, endpoint):
        client = make_client(store, endpoint, MockTransport(store))
        with pytest.raises(GenError, match="no template"):
            client.llm_complete("x", "haiku", 0)


class TestMockMedia:
    def test_t2i_decodes_to_configured_size(self, store, endpoint):
        client = make_client(store, endpoint, MockTransport(store))
        result = client.image_generate("street", seed=3)
        frame = png_to_array(store.get(result.ref))
        assert frame.shape == (180, 320, 3)

    def test_i2i_edits_preserve_shape_and_change_pixels(self, store, endpoint):
        client = make_client(store, endpoint, MockTransport(store))
        src = client.image_generate("street", seed=3)
        edited = client.image_edit(src.ref, "tighter framing", seed=4)
        a = png_to_array(store.get(src.ref))
        b = png_to_array(store.get(edited.ref))
        assert a.shape == b.shape
        assert (a != b).any()

    def test_flf2v_endpoints_are_byte_exact(self, store, endpoint):
        client = make_client(store, endpoint, MockTransport(store))
        first = client.image_generate("start", seed=1)
        last = client.image_generate("end", seed=2)
        clip_ref = client.video_flf2v(first.ref, last.ref, "dolly in", seed=3, frames=17)
        clip = clip_from_bytes(store.get(clip_ref.ref))
        assert clip.shape[0] == 17
        assert np.array_equal(clip[0], png_to_array(store.get(first.ref)))
        assert np.array_equal(clip[-1], png_to_array(store.get(last.ref)))

    def test_guided_interp_honors_control_length(self, store, endpoint):
        client = make_client(store, endpoint, MockTransport(store))
        first = client.image_generate("a", seed=1)
        last = client.image_generate("b", seed=2)
        control = {"transition_frames": 9, "width": 320, "height": 180, "points": []}
        control_ref = store.put(
            json.dumps(control).encode(), "application/json"
        )
        result = client.guided_interpolate(first.ref, last.ref, control_ref, seed=0)
        clip = clip_from_bytes(store.get(result.ref))
        assert clip.shape[0] == 9
        assert result.meta["frames"] == 9

    def test_mock_tracker_output_is_ingestible(self, store, endpoint):
        client = make_client(store, endpoint, MockTransport(store))
        first = client.image_generate("a", seed=1)
        last = client.image_generate("b", seed=2)
        clip_a = client.video_flf2v(first.ref, last.ref, "pan", seed=3)
        clip_b = client.video_flf2v(last.ref, first.ref, "tilt", seed=4)
        tracks = client.track_clips(clip_a.ref, clip_b.ref, seed=5)
        ts = ingest_tracks(store.get(tracks.ref).decode())
        assert ts.clip_a_len == 49
        assert ts.clip_b_len == 49
        assert ts.width == 320 and ts.height == 180
        assert len(ts.tracks) == 16


class TestScriptedTransport:
    def test_replays_in_order(self, store, endpoint):
        scripted = ScriptedLLMTransport(["first", "second"])
        client = make_client(store, endpoint, scripted)
        assert client.llm_complete("p1", "scene_record", 0) == "first"
        assert client.llm_complete("p2", "scene_record", 0) == "second"
        with pytest.raises(GenError, match="ran out of replies"):
            client.llm_complete("p3", "scene_record", 0)


class TestMediaCodecs:
    def test_png_roundtrip(self):
        frame = np.arange(48, dtype=np.uint8).reshape(4, 4, 3)
        assert np.array_equal(png_to_array(array_to_png(frame)), frame)

    def test_clip_roundtrip_and_frame_extraction(self):
        clip = np.random.default_rng(0).integers(0, 255, (5, 4, 6, 3), dtype=np.uint8)
        data = clip_to_bytes(clip)
        assert np.array_equal(clip_from_bytes(data), clip)
        assert np.array_equal(png_to_array(clip_frame_png(data, -1)), clip[-1])

    def test_rejects_bad_shapes(self):
        with pytest.raises(MediaError, match="frame"):
            array_to_png(np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(MediaError, match="clip"):
            clip_to_bytes(np.zeros((4, 4, 3), dtype=np.uint8))
        with pytest.raises(MediaError, match="not a decodable image"):
            png_to_array(b"nope")
        clip = np.zeros((2, 4, 4, 3), dtype=np.uint8)
        with pytest.raises(MediaError, match="out of range"):
            clip_frame_png(clip_to_bytes(clip), 5)


class TestHttpTransport:
    def make(self, handler):
        return HttpTransport(httpx.Client(transport=httpx.MockTransport(handler)))

    def test_success_maps_content_type(self, endpoint):
        def handler(request):
            assert request.url.path.endswith("/t2i")
            return httpx.Response(200, content=b"imgdata", headers={"content-type": "image/png"})

        transport = self.make(handler)
        media, content, meta = transport.submit(
            ModelEndpoint(model_id="m", base_url="http://api.example"),
            GenRequest(kind="t2i", payload={"prompt": "x"}, seed=1),
        )
        assert media == "image/png"
        assert content == b"imgdata"
        assert meta["status"] == 200

    def test_server_errors_are_retryable(self):
        from cinepipe.clients.base import RetryableError

        transport = self.make(lambda r: httpx.Response(503))
        with pytest.raises(RetryableError, match="503"):
            transport.submit(
                ModelEndpoint(model_id="m", base_url="http://api.example"),
                GenRequest(kind="llm", payload={}, seed=0),
            )

    def test_client_errors_are_terminal(self):
        transport = self.make(lambda r: httpx.Response(404, text="missing"))
        with pytest.raises(GenError, match="404"):
            transport.submit(
                ModelEndpoint(model_id="m", base_url="http://api.example"),
                GenRequest(kind="llm", payload={}, seed=0),
            )

    def test_auth_header_from_environment(self, monkeypatch):
        seen = {}

        def handler(request):
            seen["auth"] = request.headers.get("authorization")
            return httpx.Response(200, content=b"ok", headers={"content-type": "text/plain"})

        monkeypatch.setenv("API_TOKEN", "s3cret")
        transport = self.make(handler)
        transport.submit(
            ModelEndpoint(model_id="m", base_url="http://api.example", auth_ref="API_TOKEN"),
            GenRequest(kind="llm", payload={}, seed=0),
        )
        assert seen["auth"] == "Bearer s3cret"

    def test_missing_secret_is_terminal(self, monkeypatch):
        monkeypatch.delenv("NO_SUCH_TOKEN", raising=False)
        transport = self.make(lambda r: httpx.Response(200))
        with pytest.raises(GenError, match="needs secret"):
            transport.submit(
                ModelEndpoint(model_id="m", base_url="http://x", auth_ref="NO_SUCH_TOKEN"),
                GenRequest(kind="llm", payload={}, seed=0),
            )
