"""Caption and embedding backends.

Two families: a deterministic stub for pipeline work and tests (no model
weights, seeded, byte-reproducible), and pretrained models behind the
``hf`` name (see :mod:`caprunner.hf`). Backends only produce content;
readability checks, counting, and file writing live in the runners.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import RunnerError


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    category: str
    image_path: str | None = None


def digest_int(*parts) -> int:
    joined = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(joined.encode("utf-8")).digest()[:8], "big")


_ADJECTIVES = (
    "small", "large", "wooden", "metal", "white", "black", "red", "blue",
    "modern", "round", "soft", "glossy",
)
_SETTINGS = (
    "on a white background", "in a bright room", "on a wooden floor",
    "against a plain wall", "on a table", "in a studio photo",
)
_OPENERS = ("a photo of", "an image of", "a picture of", "a close up of")


class DeterministicCaptionBackend:
    """Seeded template captions; distinct, stable across runs and machines."""

    name = "deterministic-stub-captioner"
    version = "1.0"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def captions(self, image: ImageRecord, beam_width: int, num: int) -> list[str]:
        subject = " ".join(image.category.split()) or "product"
        out: list[str] = []
        salt = 0
        while len(out) < num:
            rng = np.random.default_rng(
                digest_int(self.seed, image.image_id, beam_width, salt)
            )
            candidate = " ".join(
                (
                    _OPENERS[rng.integers(len(_OPENERS))],
                    "a",
                    _ADJECTIVES[rng.integers(len(_ADJECTIVES))],
                    subject,
                    _SETTINGS[rng.integers(len(_SETTINGS))],
                )
            )
            if candidate not in out:
                out.append(candidate)
            salt += 1
            if salt > 100 * num:
                raise RunnerError(
                    f"cannot produce {num} distinct captions for {image.image_id!r}"
                )
        return out


class DeterministicEmbeddingBackend:
    """Seeded unit vectors keyed by (kind, key); text and image share a dim."""

    name = "deterministic-stub-encoder"
    version = "1.0"

    def __init__(self, seed: int = 0, dim: int = 32):
        if dim < 2:
            raise RunnerError(f"embedding dim must be >= 2, got {dim}")
        self.seed = seed
        self.dim = dim

    def _vector(self, kind: str, key: str) -> list[float]:
        rng = np.random.default_rng(digest_int(self.seed, kind, key))
        v = rng.normal(size=self.dim)
        return (v / np.linalg.norm(v)).tolist()

    def embed_text(self, text: str) -> list[float]:
        return self._vector("text", text)

    def embed_image(self, image: ImageRecord) -> list[float]:
        return self._vector("image", image.image_id)


def make_backends(backend: str, seed: int = 0, dim: int = 32):
    """Return (caption_backend, embedding_backend) for a backend name."""
    if backend == "toy":
        return (
            DeterministicCaptionBackend(seed=seed),
            DeterministicEmbeddingBackend(seed=seed, dim=dim),
        )
    if backend == "hf":
        from . import hf

        return hf.HFCaptionBackend(), hf.HFEmbeddingBackend()
    raise RunnerError(f"unknown backend {backend!r} (expected 'toy' or 'hf')")
