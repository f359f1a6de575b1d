"""Canonical file readers for caption corpora and joint embeddings.

Captions and embeddings are file-based inputs produced offline by a
model runner; scoring never touches a model or the network. An optional
HTTP client can materialize an embedding table from a remote encoder
service ahead of scoring, against the same schema.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import requests

from . import textnorm
from .errors import SchemaError
from .textnorm import TokenSeq

logger = logging.getLogger(__name__)

EMBEDDING_KINDS = ("text", "image")


@dataclass(frozen=True)
class CaptionCorpus:
    """Generated visual-description sentences for one image.

    ``sentences`` hold the normalized token forms used for matching;
    the original strings are retained for audit.
    """

    image_id: str
    sentences: tuple[TokenSeq, ...]
    texts: tuple[str, ...]


@dataclass(frozen=True)
class EmbeddingTable:
    """Unit-comparable float vectors keyed by label text or image id."""

    kind: str
    dim: int
    vectors: Mapping[str, np.ndarray]

    def __contains__(self, key: str) -> bool:
        return key in self.vectors

    def get(self, key: str) -> np.ndarray | None:
        return self.vectors.get(key)


@dataclass(frozen=True)
class CoverageGap:
    image_id: str
    label: str
    missing: tuple[str, ...]  # subset of {"captions", "text_embedding", "image_embedding"}


def load_captions(
    path: str | Path, duplicate_policy: str = "strict"
) -> dict[str, CaptionCorpus]:
    """Load ``captions.jsonl`` into normalized per-image corpora.

    Images with zero usable captions are excluded and logged; a repeated
    image_id aborts under ``strict`` and merges under ``union``.
    """
    if duplicate_policy not in ("strict", "union"):
        raise SchemaError(f"unknown duplicate_policy {duplicate_policy!r}")
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"captions file not found: {path}")

    texts_by_image: dict[str, list[str]] = {}
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{line_no}: malformed JSON ({exc.msg})")
            image_id = obj.get("image_id")
            captions = obj.get("captions")
            if not isinstance(image_id, str) or not image_id:
                raise SchemaError(f"{path}:{line_no}: bad image_id")
            if not isinstance(captions, list) or not all(
                isinstance(c, str) for c in captions
            ):
                raise SchemaError(f"{path}:{line_no}: captions must be a list of strings")
            if image_id in texts_by_image:
                if duplicate_policy == "strict":
                    raise SchemaError(
                        f"{path}:{line_no}: duplicate image_id {image_id!r}"
                    )
                texts_by_image[image_id].extend(captions)
            else:
                texts_by_image[image_id] = list(captions)

    corpora: dict[str, CaptionCorpus] = {}
    empty = 0
    for image_id, texts in texts_by_image.items():
        normalized = [(t, textnorm.normalize(t)) for t in texts]
        usable = [(t, toks) for t, toks in normalized if toks]
        dropped = len(normalized) - len(usable)
        if dropped:
            logger.info("image %r: dropped %d caption(s) empty after normalization", image_id, dropped)
        if not usable:
            empty += 1
            logger.warning("image %r excluded: no usable captions", image_id)
            continue
        corpora[image_id] = CaptionCorpus(
            image_id=image_id,
            sentences=tuple(toks for _, toks in usable),
            texts=tuple(t for t, _ in usable),
        )
    if empty:
        logger.warning("%d image(s) excluded for having no usable captions", empty)
    if corpora:
        counts = sorted(len(c.sentences) for c in corpora.values())
        logger.info(
            "loaded %d caption corpora; sentences per image min/median/max = %d/%d/%d",
            len(corpora),
            counts[0],
            counts[len(counts) // 2],
            counts[-1],
        )
    return corpora


def _check_vector(key: str, raw, dim: int, line_no: int, path: Path) -> np.ndarray:
    if not isinstance(raw, list) or not raw:
        raise SchemaError(f"{path}:{line_no}: vector for {key!r} must be a non-empty list")
    vec = np.asarray(raw, dtype=np.float64)
    if vec.ndim != 1 or vec.size != dim:
        raise SchemaError(
            f"{path}:{line_no}: vector for {key!r} has dim {vec.size}, expected {dim}"
        )
    if not np.isfinite(vec).all():
        raise SchemaError(f"{path}:{line_no}: vector for {key!r} contains NaN or Inf")
    return vec


def load_embeddings(path: str | Path, expected_kind: str) -> EmbeddingTable:
    """Load an embedding table, validating kind, dims, and finiteness.

    The first line is a header ``{"kind": ..., "dim": ...}``; every entry
    must match it. Text keys must already be in normalized joined form so
    that identical labels share one vector.
    """
    if expected_kind not in EMBEDDING_KINDS:
        raise SchemaError(f"unknown embedding kind {expected_kind!r}")
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"embeddings file not found: {path}")

    vectors: dict[str, np.ndarray] = {}
    kind: str | None = None
    dim: int | None = None
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{line_no}: malformed JSON ({exc.msg})")
            if kind is None:
                kind = obj.get("kind")
                dim = obj.get("dim")
                if kind not in EMBEDDING_KINDS or not isinstance(dim, int) or dim <= 0:
                    raise SchemaError(f"{path}:1: bad or missing header line")
                if kind != expected_kind:
                    raise SchemaError(
                        f"{path}: kind mismatch: file is {kind!r}, expected {expected_kind!r}"
                    )
                continue
            key = obj.get("key")
            if not isinstance(key, str) or not key:
                raise SchemaError(f"{path}:{line_no}: bad key")
            if key in vectors:
                raise SchemaError(f"{path}:{line_no}: duplicate key {key!r}")
            if kind == "text" and textnorm.join(textnorm.normalize(key)) != key:
                raise SchemaError(
                    f"{path}:{line_no}: text key {key!r} is not in normalized form"
                )
            vectors[key] = _check_vector(key, obj.get("vector"), dim, line_no, path)
    if kind is None:
        raise SchemaError(f"{path}: empty embeddings file")
    return EmbeddingTable(kind=kind, dim=dim, vectors=vectors)


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    """Write a table in the canonical schema (header first, full float precision)."""
    lines = [json.dumps({"kind": table.kind, "dim": table.dim})]
    for key in table.vectors:
        vec = [float(v) for v in table.vectors[key]]
        lines.append(json.dumps({"key": key, "vector": vec}))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def coverage_gaps(
    labels,
    captions: Mapping[str, CaptionCorpus] | None = None,
    text_embeddings: EmbeddingTable | None = None,
    image_embeddings: EmbeddingTable | None = None,
) -> list[CoverageGap]:
    """Exact list of (image, label) pairs missing captions or embeddings.

    Scorers never skip silently: callers either abort on a non-empty gap
    list or knowingly downgrade to pairwise deletion.
    """
    gaps: list[CoverageGap] = []
    for rec in labels.records:
        missing: list[str] = []
        if captions is not None and rec.image_id not in captions:
            missing.append("captions")
        if text_embeddings is not None and textnorm.join(rec.norm_label) not in text_embeddings:
            missing.append("text_embedding")
        if image_embeddings is not None and rec.image_id not in image_embeddings:
            missing.append("image_embedding")
        if missing:
            gaps.append(
                CoverageGap(
                    image_id=rec.image_id,
                    label=rec.raw_label,
                    missing=tuple(missing),
                )
            )
    return gaps


class EmbeddingServiceClient:
    """Client for the optional remote encoder service.

    Protocol: HTTP POST of ``{"kind": "text"|"image", "payload": str}``
    returning ``{"vector": [float]}``. The client materializes a complete
    :class:`EmbeddingTable` before any scoring happens; scorers never
    call the network themselves.
    """

    def __init__(self, url: str, timeout: float = 30.0, max_workers: int = 4):
        self.url = url
        self.timeout = timeout
        self.max_workers = max_workers

    def _fetch_one(self, kind: str, payload: str) -> np.ndarray:
        resp = requests.post(
            self.url, json={"kind": kind, "payload": payload}, timeout=self.timeout
        )
        resp.raise_for_status()
        body = resp.json()
        vector = body.get("vector")
        if not isinstance(vector, list) or not vector:
            raise SchemaError(f"service returned no vector for {payload!r}")
        vec = np.asarray(vector, dtype=np.float64)
        if not np.isfinite(vec).all():
            raise SchemaError(f"service vector for {payload!r} contains NaN or Inf")
        return vec

    def fetch_table(self, kind: str, payloads: Sequence[str]) -> EmbeddingTable:
        if kind not in EMBEDDING_KINDS:
            raise SchemaError(f"unknown embedding kind {kind!r}")
        keys = list(dict.fromkeys(payloads))  # dedupe, keep order
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            vecs = list(pool.map(lambda k: self._fetch_one(kind, k), keys))
        dims = {v.size for v in vecs}
        if len(dims) > 1:
            raise SchemaError(f"service returned mixed dims {sorted(dims)}")
        if not vecs:
            raise SchemaError("no payloads to fetch")
        return EmbeddingTable(kind=kind, dim=vecs[0].size, vectors=dict(zip(keys, vecs)))
