"""Joint embedding extraction: one vector per vocabulary key and per image."""

from __future__ import annotations

import json
import logging
from pathlib import Path

from . import RunnerError
from .backends import ImageRecord
from .files import image_readable, write_lines_atomic
from .manifest import RunnerManifest

logger = logging.getLogger(__name__)


def extract_embeddings(
    vocab: list[str],
    images: list[ImageRecord],
    embedding_backend,
    out_dir: str | Path,
    seed: int | None = None,
) -> RunnerManifest:
    """Write ``embeddings_text.jsonl`` and ``embeddings_image.jsonl``.

    Keys are already-normalized label strings (deduped upstream) and
    image ids; both files share the backend's dimension and carry a
    header line first.
    """
    if not vocab:
        raise RunnerError("vocabulary is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunnerManifest(
        command="embed",
        backend_name=embedding_backend.name,
        backend_version=embedding_backend.version,
        seed=seed,
    )

    dim: int | None = None

    def check_dim(key, vector):
        nonlocal dim
        if dim is None:
            dim = len(vector)
        elif len(vector) != dim:
            raise RunnerError(
                f"backend dim drifted at {key!r}: {len(vector)} vs {dim}"
            )
        return vector

    text_lines = []
    for key in vocab:
        vector = check_dim(key, embedding_backend.embed_text(key))
        text_lines.append(json.dumps({"key": key, "vector": vector}))

    image_lines = []
    for image in images:
        ok, reason = image_readable(image)
        if not ok:
            logger.warning("skipping %s: %s", image.image_id, reason)
            manifest.skip(image.image_id, reason)
            continue
        vector = check_dim(image.image_id, embedding_backend.embed_image(image))
        image_lines.append(json.dumps({"key": image.image_id, "vector": vector}))
    if not image_lines:
        raise RunnerError("no readable images to embed")

    header = lambda kind: json.dumps({"kind": kind, "dim": dim})  # noqa: E731
    text_path = out_dir / "embeddings_text.jsonl"
    image_path = out_dir / "embeddings_image.jsonl"
    write_lines_atomic(text_path, [header("text")] + text_lines)
    write_lines_atomic(image_path, [header("image")] + image_lines)
    manifest.embedding_dim = dim
    manifest.add_file(text_path)
    manifest.add_file(image_path)
    manifest.write(out_dir / "manifest.json")
    return manifest
