"""Evaluation tables and their rendering.

Builds the correlation-with-humans table (full dataset and the
high-rater-agreement subset), the construct partial-correlation matrix,
and the dataset statistics table, and renders any of them to CSV,
Markdown, or JSON. Display values round to 3 decimals; JSON keeps full
precision plus per-cell sample sizes, so tolerance-based checks read the
JSON.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import stats
from .dataset import LabelSet, StatsTable, agreement_filter, mean_rating
from .errors import DegenerateDataError, SchemaError
from .scorers import (
    CONSTRUCT_FIELDS,
    DEFAULT_COMBINATIONS,
    ScoreMatrix,
    ScoreSet,
    WeightVector,
    calibrate_weights,
    combine,
    combo_name,
    minmax_normalizers,
)

logger = logging.getLogger(__name__)

VARIANTS = ("full", "high_agreement")

MISSING_CELL = "—"  # rendered for cells with n < 3 or undefined values


@dataclass(frozen=True)
class Cell:
    value: float | int | str | None
    n: int | None = None


@dataclass(frozen=True)
class TableDoc:
    """Render-ready table: named rows, typed columns, cell sample sizes."""

    name: str
    columns: tuple[str, ...]
    col_kinds: tuple[str, ...]  # per column: "corr" | "int" | "float"
    rows: tuple[tuple[str, tuple[Cell, ...]], ...]
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EvalTable:
    """Construct/combination rows by category columns of Spearman correlations."""

    variant: str
    columns: tuple[str, ...]
    rows: tuple[tuple[str, tuple[Cell, ...]], ...]
    weights: Mapping[str, Mapping[str, float]]
    meta: dict = field(default_factory=dict)

    def cell(self, row_name: str, column: str) -> Cell:
        for name, cells in self.rows:
            if name == row_name:
                return cells[self.columns.index(column)]
        raise SchemaError(f"unknown row {row_name!r}")

    def to_doc(self) -> TableDoc:
        meta = dict(self.meta)
        meta["variant"] = self.variant
        meta["weights"] = {k: dict(v) for k, v in self.weights.items()}
        return TableDoc(
            name=f"correlation_{self.variant}",
            columns=self.columns,
            col_kinds=tuple("corr" for _ in self.columns),
            rows=self.rows,
            meta=meta,
        )


def _spearman_cell(pairs: list[tuple[float, float]]) -> Cell:
    n = len(pairs)
    if n < 3:
        return Cell(value=None, n=n)
    try:
        value = stats.spearman([p[0] for p in pairs], [p[1] for p in pairs])
    except DegenerateDataError:
        logger.info("constant series in a table cell (n=%d); rendered as missing", n)
        return Cell(value=None, n=n)
    return Cell(value=value, n=n)


def correlation_table(
    labels: LabelSet,
    matrix: ScoreMatrix,
    variant: str = "full",
    threshold: float = 0.75,
    combinations: Sequence[Sequence[str]] = DEFAULT_COMBINATIONS,
    per_category_fit: bool = False,
) -> EvalTable:
    """Spearman between each construct/combination score and mean human rating.

    The high_agreement variant applies the rater-agreement filter first
    and recalibrates combination weights on the filtered records. The
    "all" column pools every record; it is not an average of category
    cells. Combination weights are fit once globally per variant unless
    ``per_category_fit`` is set.
    """
    if variant not in VARIANTS:
        raise SchemaError(f"unknown variant {variant!r}")
    eval_labels = (
        agreement_filter(labels, threshold) if variant == "high_agreement" else labels
    )

    by_key = {(r.image_id, r.raw_label): r for r in eval_labels.records}
    kept_rows = [row for row in matrix.rows if (row.image_id, row.label) in by_key]
    unscored = len(by_key) - len(kept_rows)
    if unscored:
        missing = sorted(
            set(by_key) - {(row.image_id, row.label) for row in kept_rows}
        )[:10]
        logger.warning(
            "%d record(s) have no score row (e.g. %s); excluded pairwise",
            unscored,
            missing,
        )

    targets = [mean_rating(by_key[(row.image_id, row.label)]) for row in kept_rows]
    categories = [eval_labels.category_of(row.image_id) for row in kept_rows]
    columns = tuple(eval_labels.categories() + ["all"])

    constructs = ["v", "s", "u", "c"]
    if any(row.scores.theta_r is not None for row in kept_rows):
        constructs.append("r")
    construct_cols = {
        c: [row.scores.value(c) for row in kept_rows] for c in constructs
    }

    # Combination columns, fit on this variant's records.
    combo_cols: dict[str, list[float | None]] = {}
    fitted: dict[str, dict[str, float]] = {}
    for parts in combinations:
        name = combo_name(parts)
        cols = {p: construct_cols[p] for p in parts}
        if per_category_fit:
            values: list[float | None] = [None] * len(kept_rows)
            for category in eval_labels.categories():
                idx = [i for i, cat in enumerate(categories) if cat == category]
                sub_cols = {p: [cols[p][i] for i in idx] for p in parts}
                sub_targets = [targets[i] for i in idx]
                try:
                    wv = calibrate_weights(sub_cols, sub_targets, list(parts))
                    norms = minmax_normalizers(sub_cols, list(parts))
                except DegenerateDataError as exc:
                    logger.warning("category %r: %s; combination skipped", category, exc)
                    continue
                fitted[f"{name}[{category}]"] = dict(wv.weights)
                for i in idx:
                    values[i] = _combine_values(
                        {p: cols[p][i] for p in parts}, wv, norms
                    )
            combo_cols[name] = values
            # The pooled column still needs a global fit.
            wv = calibrate_weights(cols, targets, list(parts))
            fitted[name] = dict(wv.weights)
            norms = minmax_normalizers(cols, list(parts))
            combo_cols[f"{name}@all"] = [
                _combine_values({p: cols[p][i] for p in parts}, wv, norms)
                for i in range(len(kept_rows))
            ]
        else:
            wv = calibrate_weights(cols, targets, list(parts))
            fitted[name] = dict(wv.weights)
            logger.info(
                "variant %s: combination %s weights %s",
                variant,
                name,
                {k: round(w, 4) for k, w in wv.weights.items()},
            )
            norms = minmax_normalizers(cols, list(parts))
            combo_cols[name] = [
                _combine_values({p: cols[p][i] for p in parts}, wv, norms)
                for i in range(len(kept_rows))
            ]

    def cells_for(values: Sequence[float | None], pooled: Sequence[float | None] | None = None) -> tuple[Cell, ...]:
        out = []
        for category in columns:
            if category == "all":
                use = pooled if pooled is not None else values
                pairs = [
                    (v, t) for v, t in zip(use, targets) if v is not None
                ]
            else:
                pairs = [
                    (v, t)
                    for v, t, cat in zip(values, targets, categories)
                    if cat == category and v is not None
                ]
            out.append(_spearman_cell(pairs))
        return tuple(out)

    rows: list[tuple[str, tuple[Cell, ...]]] = []
    for c in constructs:
        rows.append((f"theta_{c}", cells_for(construct_cols[c])))
    for parts in combinations:
        name = combo_name(parts)
        pooled = combo_cols.get(f"{name}@all")
        rows.append((f"theta_{name}", cells_for(combo_cols[name], pooled)))

    meta = {
        "threshold": threshold if variant == "high_agreement" else None,
        "records": len(kept_rows),
        "unscored_records": unscored,
        "per_category_fit": per_category_fit,
    }
    return EvalTable(
        variant=variant,
        columns=columns,
        rows=tuple(rows),
        weights=fitted,
        meta=meta,
    )


def _combine_values(
    values: Mapping[str, float | None],
    weights: WeightVector,
    normalizers: Mapping[str, tuple[float, float]],
):
    score_set = ScoreSet()
    for part, value in values.items():
        setattr(score_set, CONSTRUCT_FIELDS[part], value)
    return combine(score_set, weights, normalizers)


def to_doc(table) -> TableDoc:
    """Convert any table object to the common render form."""
    if isinstance(table, TableDoc):
        return table
    if isinstance(table, EvalTable):
        return table.to_doc()
    if isinstance(table, stats.CorrelationMatrix):
        rows = tuple(
            (
                name,
                tuple(
                    Cell(value=float(table.values[i, j]), n=table.n)
                    for j in range(len(table.names))
                ),
            )
            for i, name in enumerate(table.names)
        )
        return TableDoc(
            name="construct_partial_correlation",
            columns=table.names,
            col_kinds=tuple("corr" for _ in table.names),
            rows=rows,
            meta={"n": table.n},
        )
    if isinstance(table, StatsTable):
        rows = tuple(
            (
                row.category,
                (
                    Cell(row.image_count),
                    Cell(row.label_count),
                    Cell(row.vocabulary_size),
                    Cell(row.rating_mean),
                    Cell(row.rating_sd),
                ),
            )
            for row in table.rows
        )
        return TableDoc(
            name="dataset_stats",
            columns=("images", "labels", "vocabulary", "rating_mean", "rating_sd"),
            col_kinds=("int", "int", "int", "float", "float"),
            rows=rows,
            meta={},
        )
    raise SchemaError(f"cannot render object of type {type(table).__name__}")


def _format_cell(cell: Cell, kind: str) -> str:
    if cell.value is None:
        return MISSING_CELL
    if kind == "int":
        return str(int(cell.value))
    if kind == "corr":
        return f"{cell.value:.3f}"
    return f"{cell.value:.2f}"


def render(table, fmt: str) -> bytes:
    """Serialize a table deterministically to csv, markdown, or json bytes."""
    doc = to_doc(table)
    if fmt == "json":
        payload = {
            "name": doc.name,
            "columns": list(doc.columns),
            "col_kinds": list(doc.col_kinds),
            "rows": [
                {
                    "name": name,
                    "cells": [{"value": c.value, "n": c.n} for c in cells],
                }
                for name, cells in doc.rows
            ],
            "meta": doc.meta,
        }
        return (json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["row", *doc.columns])
        for name, cells in doc.rows:
            writer.writerow(
                [name, *(_format_cell(c, k) for c, k in zip(cells, doc.col_kinds))]
            )
        return buf.getvalue().encode("utf-8")
    if fmt == "markdown":
        lines = ["| row | " + " | ".join(doc.columns) + " |"]
        lines.append("|---" * (len(doc.columns) + 1) + "|")
        for name, cells in doc.rows:
            formatted = [_format_cell(c, k) for c, k in zip(cells, doc.col_kinds)]
            lines.append("| " + " | ".join([name, *formatted]) + " |")
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise SchemaError(f"unknown render format {fmt!r}")


def doc_from_json(data: bytes | str) -> TableDoc:
    """Parse a JSON render back into a TableDoc (exact round trip)."""
    obj = json.loads(data)
    return TableDoc(
        name=obj["name"],
        columns=tuple(obj["columns"]),
        col_kinds=tuple(obj["col_kinds"]),
        rows=tuple(
            (
                row["name"],
                tuple(Cell(value=c["value"], n=c["n"]) for c in row["cells"]),
            )
            for row in obj["rows"]
        ),
        meta=obj["meta"],
    )
