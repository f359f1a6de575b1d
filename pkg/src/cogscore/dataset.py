"""Elicited-label dataset: ingestion, validation, statistics, agreement subsets.

The on-disk form is ``labels.jsonl`` (one object per line with the label,
its per-rater 0-4 complexity ratings, and the image/category it belongs
to) plus an optional ``images.jsonl`` manifest. Loading validates every
record; records violating invariants land in a rejection report with
their line numbers instead of aborting the run.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from . import stats, textnorm
from .errors import DegenerateDataError, SchemaError
from .textnorm import TokenSeq

logger = logging.getLogger(__name__)

RATING_MIN = 0
RATING_MAX = 4

# Elicitation design collected 5 to 20 labels per image; counts outside
# that range are suspicious but legal in real exports.
EXPECTED_LABELS_PER_IMAGE = (5, 20)


@dataclass(frozen=True)
class ImageStimulus:
    image_id: str
    category: str
    image_path: str | None = None


@dataclass(frozen=True)
class LabelRecord:
    image_id: str
    raw_label: str
    norm_label: TokenSeq
    ratings: tuple[int, ...]
    rater_ids: tuple[str, ...]


@dataclass(frozen=True)
class Rejection:
    line: int
    reason: str


@dataclass(frozen=True)
class CategoryCorpus:
    """Per-category term frequencies of normalized labels, one count per record."""

    category: str
    label_counts: Mapping[str, int]
    total: int


@dataclass(frozen=True)
class StatsRow:
    category: str
    image_count: int
    label_count: int
    vocabulary_size: int
    rating_mean: float
    rating_sd: float


@dataclass(frozen=True)
class StatsTable:
    rows: tuple[StatsRow, ...]  # categories by descending label count, then "all"

    def row(self, category: str) -> StatsRow:
        for r in self.rows:
            if r.category == category:
                return r
        raise SchemaError(f"unknown category {category!r}")


class LabelSet:
    """Immutable, index-backed collection of images and label records."""

    def __init__(
        self,
        images: Mapping[str, ImageStimulus],
        records: Iterable[LabelRecord],
        rejections: Iterable[Rejection] = (),
    ):
        self.images: dict[str, ImageStimulus] = dict(images)
        self.records: tuple[LabelRecord, ...] = tuple(records)
        self.rejections: tuple[Rejection, ...] = tuple(rejections)
        index: dict[str, list[LabelRecord]] = {}
        for rec in self.records:
            if rec.image_id not in self.images:
                raise SchemaError(f"record references unknown image {rec.image_id!r}")
            index.setdefault(rec.image_id, []).append(rec)
        self.index: dict[str, tuple[LabelRecord, ...]] = {
            k: tuple(v) for k, v in index.items()
        }

    def __len__(self) -> int:
        return len(self.records)

    def categories(self) -> list[str]:
        return sorted({img.category for img in self.images.values()})

    def category_of(self, image_id: str) -> str:
        return self.images[image_id].category

    def category_records(self, category: str) -> list[LabelRecord]:
        if category == "all":
            return list(self.records)
        if category not in {img.category for img in self.images.values()}:
            raise SchemaError(f"unknown category {category!r}")
        return [r for r in self.records if self.images[r.image_id].category == category]

    def restrict(self, image_ids: Iterable[str]) -> "LabelSet":
        keep = set(image_ids)
        images = {k: v for k, v in self.images.items() if k in keep}
        records = [r for r in self.records if r.image_id in keep]
        return LabelSet(images, records)


class _RejectLine(Exception):
    def __init__(self, reason: str):
        self.reason = reason


def _require(obj: dict, key: str, types, line_reason: str):
    if key not in obj:
        raise _RejectLine(f"missing field {key!r}")
    value = obj[key]
    if not isinstance(value, types):
        raise _RejectLine(line_reason)
    return value


def load_images(path: str | Path) -> dict[str, ImageStimulus]:
    """Load an ``images.jsonl`` manifest keyed by image_id."""
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"images file not found: {path}")
    images: dict[str, ImageStimulus] = {}
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{line_no}: malformed JSON ({exc.msg})")
            image_id = obj.get("image_id")
            category = obj.get("category")
            if not isinstance(image_id, str) or not image_id:
                raise SchemaError(f"{path}:{line_no}: bad image_id")
            if not isinstance(category, str) or not category:
                raise SchemaError(f"{path}:{line_no}: bad category")
            if image_id in images:
                raise SchemaError(f"{path}:{line_no}: duplicate image_id {image_id!r}")
            images[image_id] = ImageStimulus(
                image_id=image_id,
                category=category,
                image_path=obj.get("image_path"),
            )
    return images


def load_labels(
    labels_path: str | Path,
    ratings_merge_policy: str = "strict",
    images: Mapping[str, ImageStimulus] | None = None,
) -> LabelSet:
    """Load and validate ``labels.jsonl``.

    Records failing invariants are collected into the returned set's
    ``rejections`` (with line numbers). Lines sharing an
    (image_id, raw_label) key merge into one record; a repeated
    (image_id, rater_id, raw_label) triple aborts under ``strict`` and
    merges (first rating wins on conflict) under ``union``. Images are
    synthesized from the label lines unless a manifest is supplied.
    """
    if ratings_merge_policy not in ("strict", "union"):
        raise SchemaError(f"unknown ratings_merge_policy {ratings_merge_policy!r}")
    labels_path = Path(labels_path)
    if not labels_path.is_file():
        raise SchemaError(f"labels file not found: {labels_path}")

    found_images: dict[str, ImageStimulus] = {}
    # (image_id, raw_label) -> ordered rater -> rating
    merged: dict[tuple[str, str], dict[str, int]] = {}
    norm_by_key: dict[tuple[str, str], TokenSeq] = {}
    rejections: list[Rejection] = []

    with labels_path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{labels_path}:{line_no}: malformed JSON ({exc.msg})")
            if not isinstance(obj, dict):
                raise SchemaError(f"{labels_path}:{line_no}: expected an object")
            try:
                _ingest_line(
                    obj,
                    line_no,
                    ratings_merge_policy,
                    images,
                    found_images,
                    merged,
                    norm_by_key,
                )
            except _RejectLine as rej:
                rejections.append(Rejection(line=line_no, reason=rej.reason))

    records = [
        LabelRecord(
            image_id=image_id,
            raw_label=raw_label,
            norm_label=norm_by_key[(image_id, raw_label)],
            ratings=tuple(pairs.values()),
            rater_ids=tuple(pairs.keys()),
        )
        for (image_id, raw_label), pairs in merged.items()
    ]
    if not records:
        raise SchemaError(f"{labels_path}: no valid records")

    label_set = LabelSet(found_images, records, rejections)
    _warn_count_range(label_set)
    if rejections:
        logger.warning("%s: rejected %d line(s)", labels_path, len(rejections))
    return label_set


def _ingest_line(obj, line_no, policy, manifest, found_images, merged, norm_by_key):
    image_id = _require(obj, "image_id", str, "image_id must be a string")
    if not image_id:
        raise _RejectLine("image_id empty")
    category = _require(obj, "category", str, "category must be a string")
    if not category:
        raise _RejectLine("category empty")
    raw_label = _require(obj, "label", str, "label must be a string")
    ratings = _require(obj, "ratings", list, "ratings must be a list")
    rater_ids = _require(obj, "rater_ids", list, "rater_ids must be a list")

    if manifest is not None:
        known = manifest.get(image_id)
        if known is None:
            raise _RejectLine(f"image_id {image_id!r} not in images manifest")
        if known.category != category:
            raise _RejectLine(
                f"category conflict: {category!r} vs manifest {known.category!r}"
            )
    if not ratings:
        raise _RejectLine("ratings empty")
    if len(ratings) != len(rater_ids):
        raise _RejectLine("ratings and rater_ids length mismatch")
    for r in ratings:
        if not isinstance(r, int) or isinstance(r, bool) or not RATING_MIN <= r <= RATING_MAX:
            raise _RejectLine(f"rating out of range [{RATING_MIN},{RATING_MAX}]: {r!r}")
    for rid in rater_ids:
        if not isinstance(rid, str) or not rid:
            raise _RejectLine("rater_ids must be non-empty strings")

    norm_label = textnorm.normalize(raw_label)
    if not norm_label:
        raise _RejectLine("label empty after normalization")

    known = found_images.get(image_id)
    if known is None:
        path = manifest[image_id].image_path if manifest is not None else None
        found_images[image_id] = ImageStimulus(image_id, category, path)
    elif known.category != category:
        raise _RejectLine(
            f"category conflict for image {image_id!r}: "
            f"{category!r} vs {known.category!r}"
        )

    key = (image_id, raw_label)
    pairs = merged.setdefault(key, {})
    norm_by_key[key] = norm_label
    for rid, rating in zip(rater_ids, ratings):
        if rid in pairs:
            if policy == "strict":
                raise SchemaError(
                    f"line {line_no}: duplicate (image_id, rater_id, raw_label) "
                    f"triple ({image_id!r}, {rid!r}, {raw_label!r})"
                )
            if pairs[rid] != rating:
                logger.warning(
                    "line %d: conflicting rating for triple (%r, %r, %r); keeping first",
                    line_no,
                    image_id,
                    rid,
                    raw_label,
                )
            continue  # union: first occurrence wins
        pairs[rid] = rating


def _warn_count_range(labels: LabelSet) -> None:
    lo, hi = EXPECTED_LABELS_PER_IMAGE
    out_of_range = sum(1 for recs in labels.index.values() if not lo <= len(recs) <= hi)
    if out_of_range:
        logger.warning(
            "%d image(s) outside the expected %d-%d labels-per-image range",
            out_of_range,
            lo,
            hi,
        )


def save_labels(
    labels: LabelSet,
    labels_path: str | Path,
    images_path: str | Path | None = None,
) -> None:
    """Write the set back out in canonical form (stable ordering, LF, UTF-8).

    Canonical ordering makes save -> load -> save a byte-exact round trip:
    records sort by (image_id, raw_label) and rater/rating pairs by rater_id.
    """
    lines = []
    for rec in sorted(labels.records, key=lambda r: (r.image_id, r.raw_label)):
        pairs = sorted(zip(rec.rater_ids, rec.ratings))
        obj = {
            "image_id": rec.image_id,
            "category": labels.images[rec.image_id].category,
            "label": rec.raw_label,
            "ratings": [rating for _, rating in pairs],
            "rater_ids": [rid for rid, _ in pairs],
        }
        lines.append(json.dumps(obj, sort_keys=True, ensure_ascii=False))
    Path(labels_path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    if images_path is not None:
        img_lines = []
        for image_id in sorted(labels.images):
            img = labels.images[image_id]
            obj = {
                "image_id": img.image_id,
                "category": img.category,
                "image_path": img.image_path,
            }
            img_lines.append(json.dumps(obj, sort_keys=True, ensure_ascii=False))
        Path(images_path).write_text("\n".join(img_lines) + "\n", encoding="utf-8")


def save_rejections(rejections: Iterable[Rejection], path: str | Path) -> None:
    lines = [
        json.dumps({"line": r.line, "reason": r.reason}, ensure_ascii=False)
        for r in rejections
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def mean_rating(record: LabelRecord) -> float:
    """Arithmetic mean of the record's 0-4 ratings (the scalar human target)."""
    if not record.ratings:
        raise DegenerateDataError(f"record ({record.image_id!r}, {record.raw_label!r}) has no ratings")
    return sum(record.ratings) / len(record.ratings)


def build_category_corpus(labels: LabelSet, category: str) -> CategoryCorpus:
    """Term frequencies of normalized labels within one product category.

    Each record counts once regardless of how many raters rated it, so
    ``total`` equals the number of records in the category.
    """
    records = labels.category_records(category)
    counts: dict[str, int] = {}
    for rec in records:
        key = textnorm.join(rec.norm_label)
        counts[key] = counts.get(key, 0) + 1
    return CategoryCorpus(category=category, label_counts=counts, total=len(records))


def dataset_stats(labels: LabelSet, sample_sd: bool = True) -> StatsTable:
    """Per-category and pooled counts plus rating mean/sd.

    Mean and sd run over all individual ratings, not per-record means.
    ``sample_sd`` selects the n-1 denominator (default); one rating
    yields sd 0.
    """
    def summarize(category: str, records: list[LabelRecord]) -> StatsRow:
        if category == "all":
            image_ids = set(labels.images)
        else:
            image_ids = {
                i for i, img in labels.images.items() if img.category == category
            }
        vocab = {textnorm.join(r.norm_label) for r in records}
        all_ratings = [float(v) for r in records for v in r.ratings]
        n = len(all_ratings)
        mean = sum(all_ratings) / n if n else 0.0
        ddof = 1 if sample_sd else 0
        if n > ddof:
            var = sum((v - mean) ** 2 for v in all_ratings) / (n - ddof)
            sd = math.sqrt(var)
        else:
            sd = 0.0
        return StatsRow(
            category=category,
            image_count=len(image_ids),
            label_count=len(records),
            vocabulary_size=len(vocab),
            rating_mean=mean,
            rating_sd=sd,
        )

    per_category = [
        summarize(cat, labels.category_records(cat)) for cat in labels.categories()
    ]
    per_category.sort(key=lambda row: (-row.label_count, row.category))
    rows = per_category + [summarize("all", list(labels.records))]
    return StatsTable(rows=tuple(rows))


def _pair_spearman(x: list[float], y: list[float]) -> float | None:
    """Spearman for rater pairs; allows n == 2, returns None on zero rank variance."""
    rx = stats.rank_transform(x)
    ry = stats.rank_transform(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx <= 0.0 or syy <= 0.0:
        return None
    return float((dx @ dy) / math.sqrt(sxx * syy))


def mean_pairwise_agreement(records: Iterable[LabelRecord]) -> float | None:
    """Mean pairwise Spearman correlation between raters of one image.

    Raters are paired only on labels both rated; pairs sharing fewer than
    two labels, and pairs where either rating vector is constant, are
    skipped. Returns None when no pair survives.
    """
    by_rater: dict[str, dict[int, float]] = {}
    for idx, rec in enumerate(records):
        for rid, rating in zip(rec.rater_ids, rec.ratings):
            by_rater.setdefault(rid, {})[idx] = float(rating)
    raters = [r for r, rated in by_rater.items() if len(rated) >= 2]
    correlations: list[float] = []
    for i in range(len(raters)):
        for j in range(i + 1, len(raters)):
            a, b = by_rater[raters[i]], by_rater[raters[j]]
            shared = sorted(a.keys() & b.keys())
            if len(shared) < 2:
                continue
            rho = _pair_spearman([a[s] for s in shared], [b[s] for s in shared])
            if rho is not None:
                correlations.append(rho)
    if not correlations:
        return None
    return sum(correlations) / len(correlations)


def agreement_filter(labels: LabelSet, threshold: float) -> LabelSet:
    """Keep images whose raters agree: mean pairwise Spearman > threshold.

    Images with no valid rater pair are dropped and logged. At
    threshold -1 every image with at least one valid pair is retained
    (the mean can never fall below -1).
    """
    if not -1.0 <= threshold <= 1.0:
        raise SchemaError(f"threshold must be in [-1, 1], got {threshold}")
    kept: list[str] = []
    no_pair = 0
    for image_id, records in labels.index.items():
        agreement = mean_pairwise_agreement(records)
        if agreement is None:
            no_pair += 1
            logger.info("image %r dropped: no rater pair shares 2+ rated labels", image_id)
            continue
        if agreement > threshold or threshold <= -1.0:
            kept.append(image_id)
    if no_pair:
        logger.warning("agreement filter dropped %d image(s) with no valid rater pair", no_pair)
    return labels.restrict(kept)
