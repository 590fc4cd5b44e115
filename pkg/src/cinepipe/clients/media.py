"""Byte-level codecs for mock media: PNG images and raw frame clips.

Clips are uint8 arrays of shape (frames, height, width, 3) serialized
with numpy's own format. Array serialization carries no timestamps, so
identical frames produce identical bytes, which the content-addressed
store and the determinism tests rely on.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

__all__ = [
    "MediaError",
    "array_to_png",
    "png_to_array",
    "clip_to_bytes",
    "clip_from_bytes",
    "clip_frame_png",
]


class MediaError(Exception):
    """Raised for malformed media payloads."""


def array_to_png(frame: np.ndarray) -> bytes:
    if frame.ndim != 3 or frame.shape[2] != 3 or frame.dtype != np.uint8:
        raise MediaError(f"expected uint8 (H, W, 3) frame, got {frame.shape} {frame.dtype}")
    buf = io.BytesIO()
    Image.fromarray(frame, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def png_to_array(data: bytes) -> np.ndarray:
    try:
        image = Image.open(io.BytesIO(data))
    except Exception as exc:
        raise MediaError(f"not a decodable image: {exc}") from exc
    return np.asarray(image.convert("RGB"), dtype=np.uint8)


def clip_to_bytes(frames: np.ndarray) -> bytes:
    if frames.ndim != 4 or frames.shape[3] != 3 or frames.dtype != np.uint8:
        raise MediaError(
            f"expected uint8 (T, H, W, 3) clip, got {frames.shape} {frames.dtype}"
        )
    buf = io.BytesIO()
    np.save(buf, frames, allow_pickle=False)
    return buf.getvalue()


def clip_from_bytes(data: bytes) -> np.ndarray:
    try:
        frames = np.load(io.BytesIO(data), allow_pickle=False)
    except Exception as exc:
        raise MediaError(f"not a raw frame clip: {exc}") from exc
    if frames.ndim != 4 or frames.shape[3] != 3:
        raise MediaError(f"clip has unexpected shape {frames.shape}")
    return frames


def clip_frame_png(data: bytes, index: int) -> bytes:
    """Extract one frame of a serialized clip as PNG; negatives count from the end."""
    frames = clip_from_bytes(data)
    try:
        frame = frames[index]
    except IndexError:
        raise MediaError(
            f"frame {index} out of range for clip of {frames.shape[0]}"
        ) from None
    return array_to_png(np.ascontiguousarray(frame))
