"""Construct complexity scorers and calibrated weighted combinations.

Each (image, label) record gets four construct scores:

* visibility      ``theta_v = 1 - (sentences containing the label) / (total sentences)``
* semantics       ``theta_s = 1 - cos(text_vector, image_vector)``
* uniqueness      ``theta_u = 1 - count(label) / total`` within the category corpus
* concreteness    ``theta_c = scale_max - concreteness_rating`` from the lexicon

plus an optional word-feature score (label length, disabled by default)
and weighted combinations whose weights come from each construct's own
rank correlation with the human ratings.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import stats, textnorm
from .dataset import CategoryCorpus, LabelSet, build_category_corpus, mean_rating
from .errors import CoverageError, DegenerateDataError, SchemaError
from .providers import CaptionCorpus, EmbeddingTable, coverage_gaps
from .textnorm import TokenSeq

logger = logging.getLogger(__name__)

# Construct letter -> score field. Combinations are named by joining
# letters with "+", e.g. "v+s+u+c".
CONSTRUCT_FIELDS: dict[str, str] = {
    "v": "theta_v",
    "s": "theta_s",
    "u": "theta_u",
    "c": "theta_c",
    "r": "theta_r",
}

DEFAULT_COMBINATIONS: tuple[tuple[str, ...], ...] = (
    ("v", "s"),
    ("v", "s", "u"),
    ("v", "s", "u", "c"),
)

DEFAULT_WORD_FEATURE_CAP = 20.0


def combo_name(parts: Sequence[str]) -> str:
    return "+".join(parts)


@dataclass(frozen=True)
class ConcretenessLexicon:
    """Word -> concreteness rating map with its scale maximum.

    ``scale_max`` is the maximum rating present in the file, so the
    complexity of a maximally concrete word is exactly zero.
    """

    entries: Mapping[str, float]
    scale_max: float

    @classmethod
    def from_tsv(cls, path: str | Path) -> "ConcretenessLexicon":
        """Load ``word<TAB>rating`` lines; an optional header is skipped."""
        path = Path(path)
        if not path.is_file():
            raise SchemaError(f"lexicon file not found: {path}")
        entries: dict[str, float] = {}
        with path.open(encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) < 2:
                    raise SchemaError(f"{path}:{line_no}: expected word<TAB>rating")
                word_raw, rating_raw = parts[0], parts[1]
                try:
                    rating = float(rating_raw)
                except ValueError:
                    if line_no == 1:
                        continue  # header
                    raise SchemaError(f"{path}:{line_no}: bad rating {rating_raw!r}")
                if not math.isfinite(rating) or rating <= 0:
                    raise SchemaError(
                        f"{path}:{line_no}: rating must be finite and > 0, got {rating_raw}"
                    )
                word = textnorm.join(textnorm.normalize(word_raw))
                if not word:
                    logger.info("%s:%d: word empty after normalization, skipped", path, line_no)
                    continue
                if word in entries:
                    logger.info("%s:%d: duplicate word %r, keeping first", path, line_no, word)
                    continue
                entries[word] = rating
        if not entries:
            raise SchemaError(f"{path}: no lexicon entries")
        return cls(entries=entries, scale_max=max(entries.values()))

    def lookup(self, key: str) -> float | None:
        return self.entries.get(key)


def visibility_score(
    label: TokenSeq, corpus: CaptionCorpus, stem_match: bool = True
) -> float:
    """1 minus the fraction of caption sentences containing the label."""
    if not corpus.sentences:
        raise SchemaError(f"empty caption corpus for image {corpus.image_id!r}")
    hits = sum(
        1
        for sentence in corpus.sentences
        if textnorm.contains_label(sentence, label, stem_match=stem_match)
    )
    return 1.0 - hits / len(corpus.sentences)


def semantic_score(label_vec: np.ndarray, image_vec: np.ndarray) -> float:
    """1 minus cosine similarity of the label and image vectors."""
    a = np.asarray(label_vec, dtype=np.float64)
    b = np.asarray(image_vec, dtype=np.float64)
    if a.shape != b.shape:
        raise SchemaError(f"embedding dim mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise DegenerateDataError("semantic_score: zero-norm vector")
    return 1.0 - float(np.dot(a, b) / (na * nb))


def uniqueness_score(
    label: TokenSeq, corpus: CategoryCorpus, unseen_smoothing: bool = True
) -> float:
    """1 minus the label's relative frequency in its category corpus.

    A label never seen in the corpus scores 1 - 1/(total+1) under the
    default add-one-style smoothing: high, but below the supremum.
    """
    if corpus.total <= 0:
        raise SchemaError(f"category corpus {corpus.category!r} is empty")
    count = corpus.label_counts.get(textnorm.join(label), 0)
    if count == 0 and unseen_smoothing:
        return 1.0 - 1.0 / (corpus.total + 1)
    return 1.0 - count / corpus.total


def concreteness_score(label: TokenSeq, lexicon: ConcretenessLexicon) -> float | None:
    """Scale maximum minus the label's concreteness rating; None if out of lexicon.

    Multi-word labels first try the joined phrase as a lexicon key, then
    fall back to the mean over constituent words found in the lexicon.
    """
    if not label:
        raise SchemaError("concreteness_score: label must be non-empty")
    phrase = lexicon.lookup(textnorm.join(label))
    if phrase is not None:
        return lexicon.scale_max - phrase
    if len(label) == 1:
        return None
    word_scores = [
        lexicon.scale_max - rating
        for rating in (lexicon.lookup(tok) for tok in label)
        if rating is not None
    ]
    if not word_scores:
        return None
    return sum(word_scores) / len(word_scores)


def word_feature_score(label: TokenSeq, cap: float = DEFAULT_WORD_FEATURE_CAP) -> float:
    """Label length in characters divided by ``cap``, clamped to [0, 1]."""
    if not label:
        raise SchemaError("word_feature_score: label must be non-empty")
    if cap <= 0:
        raise SchemaError(f"cap must be positive, got {cap}")
    chars = sum(len(tok) for tok in label)
    return min(1.0, chars / cap)


@dataclass
class ScoreSet:
    """Construct scores for one record plus any combined scores."""

    theta_v: float | None = None
    theta_s: float | None = None
    theta_u: float | None = None
    theta_c: float | None = None
    theta_r: float | None = None
    combined: dict[str, float | None] = field(default_factory=dict)

    def value(self, construct: str) -> float | None:
        """Score for a construct letter ("v") or a combination name ("v+s")."""
        if construct in CONSTRUCT_FIELDS:
            return getattr(self, CONSTRUCT_FIELDS[construct])
        if construct in self.combined:
            return self.combined[construct]
        raise SchemaError(f"unknown construct {construct!r}")


@dataclass(frozen=True)
class ScoreRow:
    image_id: str
    label: str  # raw label as elicited; join key back into the LabelSet
    scores: ScoreSet


class ScoreMatrix:
    """Per-(image, label) construct scores for a whole label set."""

    def __init__(self, rows: Iterable[ScoreRow]):
        self.rows: tuple[ScoreRow, ...] = tuple(rows)
        self._by_key = {(r.image_id, r.label): r for r in self.rows}
        if len(self._by_key) != len(self.rows):
            raise SchemaError("duplicate (image_id, label) rows in score matrix")

    def __len__(self) -> int:
        return len(self.rows)

    def get(self, image_id: str, label: str) -> ScoreRow | None:
        return self._by_key.get((image_id, label))

    def column(self, construct: str) -> list[float | None]:
        return [row.scores.value(construct) for row in self.rows]

    def columns(self, constructs: Sequence[str]) -> dict[str, list[float | None]]:
        return {c: self.column(c) for c in constructs}

    def to_jsonl(self) -> str:
        lines = []
        for row in self.rows:
            obj = {
                "image_id": row.image_id,
                "label": row.label,
                "theta_v": row.scores.theta_v,
                "theta_s": row.scores.theta_s,
                "theta_u": row.scores.theta_u,
                "theta_c": row.scores.theta_c,
                "theta_r": row.scores.theta_r,
                "combined": row.scores.combined,
            }
            lines.append(json.dumps(obj, sort_keys=True, ensure_ascii=False))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "ScoreMatrix":
        path = Path(path)
        if not path.is_file():
            raise SchemaError(f"scores file not found: {path}")
        rows = []
        with path.open(encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"{path}:{line_no}: malformed JSON ({exc.msg})")
                rows.append(
                    ScoreRow(
                        image_id=obj["image_id"],
                        label=obj["label"],
                        scores=ScoreSet(
                            theta_v=obj.get("theta_v"),
                            theta_s=obj.get("theta_s"),
                            theta_u=obj.get("theta_u"),
                            theta_c=obj.get("theta_c"),
                            theta_r=obj.get("theta_r"),
                            combined=dict(obj.get("combined") or {}),
                        ),
                    )
                )
        return cls(rows)


@dataclass(frozen=True)
class WeightVector:
    """Nonnegative combination weights, normalized to sum 1.

    ``rho`` keeps the raw correlations the weights were derived from, for
    the evaluation logs.
    """

    weights: Mapping[str, float]
    rho: Mapping[str, float]


def calibrate_weights(
    columns: Mapping[str, Sequence[float | None]],
    targets: Sequence[float],
    constructs: Sequence[str],
) -> WeightVector:
    """Derive combination weights from per-construct Spearman with the targets.

    ``w_i = max(0, rho_i)`` normalized to sum 1; negatively correlated
    constructs are clamped out. Missing scores are excluded pairwise.
    All-zero weights fall back to uniform with a warning.
    """
    targets = [float(t) for t in targets]
    if len(set(targets)) < 2:
        raise DegenerateDataError("calibration targets are constant")
    rho: dict[str, float] = {}
    for name in constructs:
        col = columns[name]
        if len(col) != len(targets):
            raise SchemaError(
                f"construct {name!r} has {len(col)} scores for {len(targets)} targets"
            )
        pairs = [(s, t) for s, t in zip(col, targets) if s is not None]
        if len(pairs) < 3:
            raise DegenerateDataError(
                f"construct {name!r} has only {len(pairs)} scored pairs; need 3"
            )
        xs = [p[0] for p in pairs]
        ys = [p[1] for p in pairs]
        try:
            rho[name] = stats.spearman(xs, ys)
        except DegenerateDataError:
            logger.warning("construct %r degenerate during calibration; weight 0", name)
            rho[name] = 0.0
    clamped = {name: max(0.0, r) for name, r in rho.items()}
    total = sum(clamped.values())
    if total > 0:
        weights = {name: w / total for name, w in clamped.items()}
    else:
        logger.warning("all calibration correlations <= 0; using uniform weights")
        weights = {name: 1.0 / len(constructs) for name in constructs}
    return WeightVector(weights=weights, rho=rho)


def minmax_normalizers(
    columns: Mapping[str, Sequence[float | None]], constructs: Sequence[str]
) -> dict[str, tuple[float, float]]:
    """Per-construct (min, max) over the evaluation set, ignoring missing scores."""
    out: dict[str, tuple[float, float]] = {}
    for name in constructs:
        present = [v for v in columns[name] if v is not None]
        if not present:
            raise DegenerateDataError(f"construct {name!r} has no scores to normalize")
        out[name] = (min(present), max(present))
    return out


def combine(
    scores: ScoreSet,
    weights: WeightVector,
    normalizers: Mapping[str, tuple[float, float]],
) -> float | None:
    """Weighted sum of min-max normalized construct scores.

    Records missing any positively weighted construct get a missing
    combined score rather than an imputed one.
    """
    acc = 0.0
    for name, w in weights.weights.items():
        if w <= 0.0:
            continue
        value = scores.value(name)
        if value is None:
            return None
        lo, hi = normalizers[name]
        if hi == lo:
            raise DegenerateDataError(
                f"construct {name!r} has min == max; cannot normalize"
            )
        acc += w * (value - lo) / (hi - lo)
    return acc


def add_combined_scores(
    matrix: ScoreMatrix,
    targets: Sequence[float],
    combinations: Sequence[Sequence[str]] = DEFAULT_COMBINATIONS,
) -> dict[str, WeightVector]:
    """Calibrate each combination on (matrix, targets) and fill ``combined``.

    Returns the weight vectors used, keyed by combination name. Mutates
    the score sets in place.
    """
    fitted: dict[str, WeightVector] = {}
    for parts in combinations:
        name = combo_name(parts)
        cols = matrix.columns(list(parts))
        try:
            weights = calibrate_weights(cols, targets, list(parts))
            normalizers = minmax_normalizers(cols, list(parts))
        except DegenerateDataError as exc:
            logger.warning("combination %s skipped: %s", name, exc)
            continue
        for row in matrix.rows:
            row.scores.combined[name] = combine(row.scores, weights, normalizers)
        fitted[name] = weights
    return fitted


def score_labelset(
    labels: LabelSet,
    captions: Mapping[str, CaptionCorpus],
    text_embeddings: EmbeddingTable,
    image_embeddings: EmbeddingTable,
    lexicon: ConcretenessLexicon,
    stem_match: bool = True,
    unseen_smoothing: bool = True,
    enable_word_feature: bool = False,
    word_feature_cap: float = DEFAULT_WORD_FEATURE_CAP,
    allow_gaps: bool = False,
    min_coverage: float = 0.0,
) -> ScoreMatrix:
    """Score every record of the label set; one row per (image, label).

    Coverage is strict by default: any record missing captions or
    embeddings aborts with the full gap list. With ``allow_gaps`` the
    gap records are dropped (and counted) as long as coverage stays at or
    above ``min_coverage``.
    """
    if enable_word_feature:
        logger.warning(
            "word-feature score enabled: this scorer is an interpretation "
            "(label length), not a validated construct"
        )
    gaps = coverage_gaps(labels, captions, text_embeddings, image_embeddings)
    if gaps:
        preview = "; ".join(
            f"({g.image_id!r}, {g.label!r}): missing {','.join(g.missing)}"
            for g in gaps[:10]
        )
        more = f" (+{len(gaps) - 10} more)" if len(gaps) > 10 else ""
        if not allow_gaps:
            raise CoverageError(
                f"{len(gaps)} record(s) lack captions or embeddings: {preview}{more}",
                gaps=gaps,
            )
        coverage = 1.0 - len(gaps) / len(labels.records)
        if coverage < min_coverage:
            raise CoverageError(
                f"coverage {coverage:.3f} below required {min_coverage:.3f}: "
                f"{preview}{more}",
                gaps=gaps,
            )
        logger.warning(
            "scoring with %d gap record(s) dropped (coverage %.3f)", len(gaps), coverage
        )
    gap_keys = {(g.image_id, g.label) for g in gaps}

    corpora = {
        category: build_category_corpus(labels, category)
        for category in labels.categories()
    }

    rows: list[ScoreRow] = []
    missing_concreteness = 0
    for rec in labels.records:
        if (rec.image_id, rec.raw_label) in gap_keys:
            continue
        corpus = corpora[labels.category_of(rec.image_id)]
        text_vec = text_embeddings.get(textnorm.join(rec.norm_label))
        image_vec = image_embeddings.get(rec.image_id)
        theta_c = concreteness_score(rec.norm_label, lexicon)
        if theta_c is None:
            missing_concreteness += 1
        rows.append(
            ScoreRow(
                image_id=rec.image_id,
                label=rec.raw_label,
                scores=ScoreSet(
                    theta_v=visibility_score(
                        rec.norm_label, captions[rec.image_id], stem_match=stem_match
                    ),
                    theta_s=semantic_score(text_vec, image_vec),
                    theta_u=uniqueness_score(
                        rec.norm_label, corpus, unseen_smoothing=unseen_smoothing
                    ),
                    theta_c=theta_c,
                    theta_r=(
                        word_feature_score(rec.norm_label, cap=word_feature_cap)
                        if enable_word_feature
                        else None
                    ),
                ),
            )
        )
    logger.info(
        "scored %d record(s); %d missing concreteness; %d coverage gap(s)",
        len(rows),
        missing_concreteness,
        len(gaps),
    )
    return ScoreMatrix(rows)


def matrix_targets(labels: LabelSet, matrix: ScoreMatrix) -> list[float]:
    """Mean human rating aligned with the matrix rows."""
    by_key = {(r.image_id, r.raw_label): r for r in labels.records}
    targets = []
    for row in matrix.rows:
        rec = by_key.get((row.image_id, row.label))
        if rec is None:
            raise SchemaError(
                f"score row ({row.image_id!r}, {row.label!r}) has no matching record"
            )
        targets.append(mean_rating(rec))
    return targets
