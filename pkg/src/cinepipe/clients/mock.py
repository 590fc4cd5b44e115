"""Deterministic stand-ins for every generative service.

Each mock is a pure function of (payload, seed): text comes from word
banks indexed by a payload-keyed RNG, images are procedurally rendered
with fiducial markers, clips are linear cross-fades whose endpoint
frames equal their inputs byte-for-byte. That last property is what lets
pipeline tests assert keyframe identity through FLF2V without any model.
"""

from __future__ import annotations

import hashlib
import json
import random

import numpy as np
from PIL import Image, ImageDraw

from cinepipe.clients.base import (
    GenError,
    GenRequest,
    ModelEndpoint,
    RetryableError,
    canonical_payload,
)
from cinepipe.clients.media import (
    array_to_png,
    clip_from_bytes,
    clip_to_bytes,
    png_to_array,
)
from cinepipe.clients.store import ArtifactStore
from cinepipe.transition.tracks import MotionProfile, synth_tracks

__all__ = ["MockTransport", "FlakyTransport", "ScriptedLLMTransport"]

_LIGHTING = (
    "low golden hour sun raking across the scene",
    "flat overcast daylight with soft shadows",
    "hard noon light, deep short shadows",
    "cool blue pre-dawn glow",
    "practical lamps against a dark interior",
    "flickering firelight on nearby surfaces",
    "neon spill from signage, wet reflections",
    "diffuse window light, gentle falloff",
)

_LOCATIONS = (
    "a dusty main street lined with clapboard facades",
    "a cramped workshop crowded with tools",
    "a windswept clifftop over a grey sea",
    "a narrow alley strung with laundry lines",
    "an open prairie broken by a lone fence line",
    "a cavernous train station concourse",
    "a quiet orchard in early bloom",
    "a rain-slicked rooftop above the city grid",
)

_IDENTITIES = (
    "a weathered rancher",
    "a young courier",
    "an old lighthouse keeper",
    "a wiry mechanic",
    "a street musician",
    "a uniformed stationmaster",
    "a market vendor",
    "a lone hiker",
)

_ATTRIBUTES = (
    "sun-creased face, long dust-colored coat",
    "bright windbreaker, scuffed boots",
    "heavy knit sweater, silver beard",
    "rolled sleeves, oil-stained hands",
    "patched jacket, battered instrument case",
    "crisp cap, polished brass buttons",
    "layered aprons, quick deliberate hands",
    "faded pack, trekking poles",
)

_VERBS = (
    "crosses the frame at a steady walk",
    "pauses to scan the horizon",
    "works intently, ignoring the camera",
    "turns slowly toward the light",
    "gestures broadly while speaking",
    "kneels to inspect something on the ground",
)

_POSITIONS = (
    "centered in the midground with clear space left and right",
    "offset to frame-left, facing frame-right",
    "in the foreground third, backs of shoulders visible",
    "small in the distance along the leading line",
)

_CROWDS = (
    "empty apart from the principals, no bystanders",
    "a sparse scattering of three or four passersby",
    "a moderate crowd of a dozen drifting through",
    "a dense crowd of several dozen filling the edges",
)

_ENVIRONMENT_MOTION = (
    "dust devils twist across the open ground",
    "laundry lines sway in a passing gust",
    "rain chases ripples across standing water",
    "grass bends in long waves under the wind",
)

_FRAMINGS = (
    "a tight close-up isolating fine detail",
    "a medium shot holding the subject waist-up",
    "a wide establishing view with full context",
    "an over-the-shoulder view into the action",
    "a low-angle view emphasizing scale",
    "a high vantage looking down the scene's axis",
)


def _payload_rng(payload: dict, seed: int) -> random.Random:
    digest = hashlib.sha256(
        f"{canonical_payload(payload)}:{seed}".encode()
    ).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _embedded_json(prompt: str) -> dict:
    """Pull the structured block out of a rendered prompt.

    Prompt templates stay human-readable and carry their machine inputs
    as one JSON object line; the last such line wins.
    """
    body: dict = {}
    for line in prompt.splitlines():
        line = line.strip()
        if line.startswith("{") and line.endswith("}"):
            try:
                candidate = json.loads(line)
            except json.JSONDecodeError:
                continue
            if isinstance(candidate, dict):
                body = candidate
    return body


def _movement_phrase(movement: str) -> str:
    # terminal-view semantics per movement family, keyed by label prefix
    table = {
        "static": "the framing holds exactly as before",
        "pan": "the view has swept sideways to new action at the frame edge",
        "tilt": "the view has pivoted vertically, revealing what was cropped",
        "dolly in": "the camera has closed distance; the subject fills more of the frame",
        "dolly out": "the camera has fallen back; surrounding context now frames the subject",
        "dolly": "the camera has translated along its axis, changing subject scale",
        "truck": "the camera has slid laterally, shifting the parallax of fore and background",
        "pedestal": "the camera has risen or dropped bodily, changing the horizon line",
        "zoom in": "the lens has tightened; compression flattens the subject against its background",
        "zoom out": "the lens has widened; the subject shrinks into fuller context",
        "zoom": "the focal length has changed, rescaling the subject without parallax",
        "crane": "the camera has swept through a vertical arc above the scene",
        "arc": "the camera has orbited; the background has rotated behind the subject",
    }
    for prefix in sorted(table, key=len, reverse=True):
        if movement.startswith(prefix):
            return table[prefix]
    return "the camera has completed the scripted move"


class MockTransport:
    """Offline transport implementing every request kind."""

    def __init__(self, store: ArtifactStore, image_size: tuple[int, int] = (320, 180)):
        self.store = store
        self.image_size = image_size

    def submit(
        self, endpoint: ModelEndpoint, request: GenRequest
    ) -> tuple[str, bytes, dict]:
        handler = {
            "llm": self._llm,
            "t2i": self._t2i,
            "i2i": self._i2i,
            "flf2v": self._flf2v,
            "guided_interp": self._guided_interp,
            "track": self._track,
        }[request.kind]
        return handler(request.payload, request.seed)

    # --- llm ------------------------------------------------------------

    def _llm(self, payload: dict, seed: int) -> tuple[str, bytes, dict]:
        task = payload.get("schema_hint", "")
        if task == "scene_record":
            text = self._scene_record(payload, seed)
        elif task == "terminal_view":
            text = self._terminal_view(payload, seed)
        elif task == "retrieve_field":
            text = self._retrieve_field(payload)
        else:
            raise GenError(f"mock llm has no template for schema hint {task!r}")
        return "text/plain", text.encode(), {"task": task}

    def _scene_record(self, payload: dict, seed: int) -> str:
        rng = _payload_rng(payload, seed)
        signals = _embedded_json(payload.get("prompt", ""))
        genre = signals.get("genre", "drama")
        subject_count = signals.get("subject_count", "single")
        dynamicity = str(signals.get("dynamicity", "dynamic")).lower()

        n_subjects = {"zero": 0, "single": 1, "multiple": 2 + rng.randrange(2)}.get(
            subject_count, 1
        )
        identities = rng.sample(_IDENTITIES, k=max(n_subjects, 1))[:n_subjects]
        subjects = [
            {"identity": identity, "visual_attributes": rng.choice(_ATTRIBUTES)}
            for identity in identities
        ]
        if subjects:
            actions = [
                {"subject_ref": s["identity"], "verb_phrase": rng.choice(_VERBS)}
                for s in subjects
            ]
            positions = rng.choice(_POSITIONS)
        else:
            actions = [
                {"subject_ref": "environment", "verb_phrase": rng.choice(_ENVIRONMENT_MOTION)}
            ]
            positions = "no subjects; composition rests on the environment itself"
        location = rng.choice(_LOCATIONS)
        motion_clause = (
            "the scene surges with motion"
            if dynamicity == "dynamic"
            else "the scene holds nearly still"
        )
        scenario = (
            f"A {genre} scene set in {location}. "
            + (
                " ".join(
                    f"{s['identity'].capitalize()} ({s['visual_attributes']}) "
                    f"{a['verb_phrase']}."
                    for s, a in zip(subjects, actions)
                )
                if subjects
                else f"No figures appear; {actions[0]['verb_phrase']}."
            )
            + f" Throughout, {motion_clause}."
        )
        record = {
            "lighting": rng.choice(_LIGHTING),
            "location": location,
            "subjects": subjects,
            "actions": actions,
            "subject_positions": positions,
            "crowd_level": rng.choice(_CROWDS),
            "scenario": scenario,
        }
        return json.dumps(record, indent=2)

    def _terminal_view(self, payload: dict, seed: int) -> str:
        rng = _payload_rng(payload, seed)
        body = _embedded_json(payload.get("prompt", ""))
        movement = body.get("movement", "")
        init = body.get("init", "")
        if movement == "static":
            return init
        framing = rng.choice(_FRAMINGS)
        return (
            f"After the {movement}, {_movement_phrase(movement)}; "
            f"the resulting composition is {framing}."
        )

    def _retrieve_field(self, payload: dict) -> str:
        body = _embedded_json(payload.get("prompt", ""))
        text = body.get("text", "")
        field = body.get("field", "")
        marker = {
            "genre": "GENRE:",
            "shot_count": "SHOTS:",
            "subject_count": "SUBJECT COUNT:",
            "dynamicity": "DYNAMICITY:",
            "movements": "MOVE:",
        }.get(field)
        if marker is None:
            return "unknown"
        found = [
            line.split(":", 1)[1].strip()
            for line in text.splitlines()
            if line.strip().startswith(marker)
        ]
        if not found:
            return "unknown"
        return ", ".join(found) if field == "movements" else found[0]

    # --- images ----------------------------------------------------------

    def _fiducial_image(self, label: str, payload: dict, seed: int) -> np.ndarray:
        rng = _payload_rng(payload, seed)
        w, h = self.image_size
        base = np.zeros((h, w, 3), dtype=np.uint8)
        base[:, :] = (rng.randrange(40, 216), rng.randrange(40, 216), rng.randrange(40, 216))
        image = Image.fromarray(base, mode="RGB")
        draw = ImageDraw.Draw(image)
        accent = (rng.randrange(256), rng.randrange(256), rng.randrange(256))
        for _ in range(4):
            x0, y0 = rng.randrange(w - 40), rng.randrange(h - 40)
            draw.rectangle([x0, y0, x0 + 36, y0 + 36], outline=accent, width=3)
        digest = hashlib.sha256(
            f"{canonical_payload(payload)}:{seed}".encode()
        ).hexdigest()[:16]
        draw.text((8, 8), f"{label} {digest}", fill=(255, 255, 255))
        return np.asarray(image, dtype=np.uint8)

    def _t2i(self, payload: dict, seed: int) -> tuple[str, bytes, dict]:
        frame = self._fiducial_image("T2I", payload, seed)
        return "image/png", array_to_png(frame), {}

    def _i2i(self, payload: dict, seed: int) -> tuple[str, bytes, dict]:
        source = png_to_array(self.store.get(payload["source_ref"]))
        rng = _payload_rng(payload, seed)
        # visible but source-preserving edit: channel roll plus a band
        edited = np.roll(source, shift=rng.randrange(1, 3), axis=2).copy()
        band_y = rng.randrange(edited.shape[0] - 12)
        edited[band_y : band_y + 12, :] = 255 - edited[band_y : band_y + 12, :]
        image = Image.fromarray(edited, mode="RGB")
        draw = ImageDraw.Draw(image)
        digest = hashlib.sha256(
            f"{canonical_payload(payload)}:{seed}".encode()
        ).hexdigest()[:16]
        draw.text((8, edited.shape[0] - 18), f"I2I {digest}", fill=(0, 0, 0))
        return "image/png", array_to_png(np.asarray(image, dtype=np.uint8)), {}

    # --- clips -----------------------------------------------------------

    def _crossfade(self, first: np.ndarray, last: np.ndarray, frames: int) -> np.ndarray:
        if first.shape != last.shape:
            raise GenError(
                f"endpoint frames disagree in shape: {first.shape} vs {last.shape}"
            )
        if frames < 2:
            raise GenError("a clip needs at least 2 frames")
        ts = np.linspace(0.0, 1.0, frames)[:, None, None, None]
        blend = (first[None].astype(np.float32) * (1 - ts)
                 + last[None].astype(np.float32) * ts)
        clip = np.rint(blend).astype(np.uint8)
        clip[0] = first  # exact endpoints, no rounding residue
        clip[-1] = last
        return clip

    def _flf2v(self, payload: dict, seed: int) -> tuple[str, bytes, dict]:
        first = png_to_array(self.store.get(payload["first_ref"]))
        last = png_to_array(self.store.get(payload["last_ref"]))
        frames = int(payload.get("frames", 49))
        clip = self._crossfade(first, last, frames)
        return "video/x-raw-frames", clip_to_bytes(clip), {"frames": frames}

    def _guided_interp(self, payload: dict, seed: int) -> tuple[str, bytes, dict]:
        first = png_to_array(self.store.get(payload["first_ref"]))
        last = png_to_array(self.store.get(payload["last_ref"]))
        control = json.loads(self.store.get(payload["control_ref"]).decode())
        frames = int(control["transition_frames"])
        clip = self._crossfade(first, last, frames)
        meta = {"frames": frames, "control_points": len(control.get("points", []))}
        return "video/x-raw-frames", clip_to_bytes(clip), meta

    # --- tracking ---------------------------------------------------------

    def _track(self, payload: dict, seed: int) -> tuple[str, bytes, dict]:
        clip_a = clip_from_bytes(self.store.get(payload["clip_a_ref"]))
        clip_b = clip_from_bytes(self.store.get(payload["clip_b_ref"]))
        rng = _payload_rng(payload, seed)
        height, width = clip_a.shape[1], clip_a.shape[2]
        profile = MotionProfile(
            velocity_a=(rng.uniform(-3.0, 3.0), rng.uniform(-1.5, 1.5)),
            velocity_b=(rng.uniform(-3.0, 3.0), rng.uniform(-1.5, 1.5)),
            stall_a=rng.randrange(0, 5),
            stall_b=rng.randrange(0, 5),
            jitter=0.1,
        )
        track_set, _ = synth_tracks(
            profile,
            n_points=16,
            clip_a_len=clip_a.shape[0],
            clip_b_len=clip_b.shape[0],
            width=width,
            height=height,
            fps=16.0,
            seed=rng.randrange(2**31),
        )
        return "application/json", track_set.to_json().encode(), {}


class FlakyTransport:
    """Wraps a transport, failing the first ``failures`` submissions.

    ``failures=None`` fails forever; used to pin the retry budget.
    """

    def __init__(self, inner: MockTransport | None, failures: int | None = None):
        self.inner = inner
        self.failures = failures
        self.submissions = 0

    def submit(self, endpoint: ModelEndpoint, request: GenRequest):
        self.submissions += 1
        if self.failures is None or self.submissions <= self.failures:
            raise RetryableError(f"injected failure #{self.submissions}")
        assert self.inner is not None
        return self.inner.submit(endpoint, request)


class ScriptedLLMTransport:
    """Replies from a fixed script; used to drive parse-retry paths."""

    def __init__(self, replies: list[str]):
        self.replies = list(replies)
        self.submissions = 0

    def submit(self, endpoint: ModelEndpoint, request: GenRequest):
        if request.kind != "llm":
            raise GenError("scripted transport only answers llm requests")
        if not self.replies:
            raise GenError("scripted transport ran out of replies")
        self.submissions += 1
        return "text/plain", self.replies.pop(0).encode(), {}
