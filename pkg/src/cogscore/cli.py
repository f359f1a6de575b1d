"""Command-line entry point.

``cogscore stats|score|calibrate|evaluate|report`` wires ingestion,
scoring, calibration, evaluation, and table rendering. Every command is
deterministic given identical inputs and config; output files are written
atomically (temp-then-rename). Exit codes: 0 success, 1 internal error,
2 bad input or configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import __version__, dataset, providers, report, scorers, stats
from .config import RunConfig, parse_set_override
from .errors import CogscoreError

logger = logging.getLogger(__name__)

_FORMATS = (("csv", ".csv"), ("markdown", ".md"), ("json", ".json"))


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_table(table, out_dir: Path, stem: str) -> None:
    for fmt, suffix in _FORMATS:
        _atomic_write(out_dir / f"{stem}{suffix}", report.render(table, fmt))


def _load_labels(config: RunConfig) -> dataset.LabelSet:
    labels_path = config.path("paths.labels", required=True)
    images_path = config.path("paths.images")
    images = dataset.load_images(images_path) if images_path else None
    return dataset.load_labels(
        labels_path,
        ratings_merge_policy=config["dataset.ratings_merge_policy"],
        images=images,
    )


def _write_rejections(labels: dataset.LabelSet, out_dir: Path) -> None:
    if labels.rejections:
        dataset.save_rejections(labels.rejections, out_dir / "rejections.jsonl")
        print(f"rejected {len(labels.rejections)} line(s); see rejections.jsonl")


def _score_matrix(config: RunConfig, labels: dataset.LabelSet) -> scorers.ScoreMatrix:
    captions = providers.load_captions(
        config.path("paths.captions", required=True),
        duplicate_policy=config["providers.caption_policy"],
    )
    text_embeddings = providers.load_embeddings(
        config.path("paths.embeddings_text", required=True), "text"
    )
    image_embeddings = providers.load_embeddings(
        config.path("paths.embeddings_image", required=True), "image"
    )
    lexicon = scorers.ConcretenessLexicon.from_tsv(
        config.path("paths.lexicon", required=True)
    )
    matrix = scorers.score_labelset(
        labels,
        captions,
        text_embeddings,
        image_embeddings,
        lexicon,
        stem_match=config["textnorm.stem_match"],
        unseen_smoothing=config["scorers.unseen_label_smoothing"],
        enable_word_feature=config["scorers.enable_word_feature"],
        word_feature_cap=config["scorers.word_feature_cap"],
        allow_gaps=config["score.allow_gaps"],
        min_coverage=config["score.min_coverage"],
    )
    try:
        scorers.add_combined_scores(
            matrix, scorers.matrix_targets(labels, matrix), config.combinations()
        )
    except CogscoreError as exc:
        logger.warning("combined scores skipped: %s", exc)
    return matrix


def cmd_stats(config: RunConfig) -> int:
    labels = _load_labels(config)
    out_dir = config.out_dir()
    _write_rejections(labels, out_dir)
    table = dataset.dataset_stats(labels, sample_sd=config["dataset.sample_sd"])
    _write_table(table, out_dir, "table1")
    all_row = table.row("all")
    print(
        f"table1 written: {all_row.image_count} images, {all_row.label_count} labels, "
        f"{all_row.vocabulary_size} vocabulary, rating {all_row.rating_mean:.2f} "
        f"±{all_row.rating_sd:.2f}"
    )
    return 0


def cmd_score(config: RunConfig) -> int:
    labels = _load_labels(config)
    out_dir = config.out_dir()
    _write_rejections(labels, out_dir)
    matrix = _score_matrix(config, labels)
    _atomic_write(out_dir / "scores.jsonl", matrix.to_jsonl().encode("utf-8"))
    missing_c = sum(1 for row in matrix.rows if row.scores.theta_c is None)
    gaps = len(labels.records) - len(matrix.rows)
    print(
        f"scores.jsonl written: {len(matrix.rows)} record(s), "
        f"{missing_c} missing concreteness, {gaps} coverage gap(s)"
    )
    return 0


def _matrix_for_eval(config: RunConfig, labels: dataset.LabelSet) -> scorers.ScoreMatrix:
    scores_path = config.out_dir() / "scores.jsonl"
    if scores_path.is_file():
        logger.info("reusing %s", scores_path)
        return scorers.ScoreMatrix.from_jsonl(scores_path)
    matrix = _score_matrix(config, labels)
    _atomic_write(scores_path, matrix.to_jsonl().encode("utf-8"))
    return matrix


def _partial_matrix(config: RunConfig, matrix: scorers.ScoreMatrix) -> stats.CorrelationMatrix:
    constructs = ["v", "s", "u", "c"]
    if any(row.scores.theta_r is not None for row in matrix.rows):
        constructs.append("r")
    columns = {f"theta_{c}": matrix.column(c) for c in constructs}
    return stats.construct_partial_matrix(
        columns, on_ranks=config["stats.partial_on_ranks"]
    )


def cmd_evaluate(config: RunConfig) -> int:
    labels = _load_labels(config)
    out_dir = config.out_dir()
    _write_rejections(labels, out_dir)
    matrix = _matrix_for_eval(config, labels)
    threshold = config["eval.agreement_threshold"]
    combos = config.combinations()
    per_category = config["eval.per_category_fit"]

    full = report.correlation_table(
        labels, matrix, "full", threshold, combos, per_category
    )
    high = report.correlation_table(
        labels, matrix, "high_agreement", threshold, combos, per_category
    )
    partial = _partial_matrix(config, matrix)

    _write_table(full, out_dir, "table2")
    _write_table(high, out_dir, "table3")
    _write_table(partial, out_dir, "table4")
    for variant, table in (("full", full), ("high_agreement", high)):
        for name, weights in table.weights.items():
            print(f"{variant} {name} weights: " + json.dumps(weights, sort_keys=True))
    print(f"tables written under {out_dir}")
    return 0


def cmd_calibrate(config: RunConfig) -> int:
    labels = _load_labels(config)
    out_dir = config.out_dir()
    matrix = _matrix_for_eval(config, labels)
    threshold = config["eval.agreement_threshold"]
    result: dict[str, dict] = {}
    for variant in ("full", "high_agreement"):
        eval_labels = (
            dataset.agreement_filter(labels, threshold)
            if variant == "high_agreement"
            else labels
        )
        by_key = {(r.image_id, r.raw_label): r for r in eval_labels.records}
        rows = [row for row in matrix.rows if (row.image_id, row.label) in by_key]
        targets = [
            dataset.mean_rating(by_key[(row.image_id, row.label)]) for row in rows
        ]
        variant_out: dict[str, dict] = {}
        for parts in config.combinations():
            name = scorers.combo_name(parts)
            cols = {p: [row.scores.value(p) for row in rows] for p in parts}
            wv = scorers.calibrate_weights(cols, targets, list(parts))
            variant_out[name] = {
                "weights": dict(wv.weights),
                "rho": dict(wv.rho),
                "n": len(rows),
            }
        result[variant] = variant_out
    payload = (json.dumps(result, sort_keys=True, indent=2) + "\n").encode("utf-8")
    _atomic_write(out_dir / "weights.json", payload)
    print(f"weights.json written under {out_dir}")
    return 0


def cmd_report(config: RunConfig) -> int:
    code = cmd_stats(config)
    if code != 0:
        return code
    return cmd_evaluate(config)


COMMANDS = {
    "stats": cmd_stats,
    "score": cmd_score,
    "calibrate": cmd_calibrate,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cogscore",
        description="Score the cognitive complexity of image-elicited labels "
        "and evaluate the scores against human ratings.",
    )
    parser.add_argument("--version", action="version", version=f"cogscore {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", help="JSON config file with flat dotted keys")
        p.add_argument("--out", help="output directory (paths.out)")
        p.add_argument("--labels", help="labels.jsonl path")
        p.add_argument("--images", help="images.jsonl path")
        p.add_argument("--captions", help="captions.jsonl path")
        p.add_argument("--embeddings-text", help="text embeddings path")
        p.add_argument("--embeddings-image", help="image embeddings path")
        p.add_argument("--lexicon", help="concreteness lexicon TSV path")
        p.add_argument(
            "--allow-gaps",
            action="store_true",
            default=None,
            help="drop records with missing captions/embeddings instead of aborting",
        )
        p.add_argument(
            "--agreement-threshold",
            type=float,
            help="rater agreement threshold for the high-agreement subset",
        )
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override any config key (JSON value or bare string)",
        )
    return parser


def _overrides_from_args(args: argparse.Namespace) -> dict:
    overrides: dict = {}
    for item in args.set:
        key, value = parse_set_override(item)
        overrides[key] = value
    flag_map = {
        "out": "paths.out",
        "labels": "paths.labels",
        "images": "paths.images",
        "captions": "paths.captions",
        "embeddings_text": "paths.embeddings_text",
        "embeddings_image": "paths.embeddings_image",
        "lexicon": "paths.lexicon",
        "allow_gaps": "score.allow_gaps",
        "agreement_threshold": "eval.agreement_threshold",
    }
    for attr, key in flag_map.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    return overrides


def main(argv=None) -> int:
    level = os.environ.get("COGSCORE_LOG", "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig.load(args.config, _overrides_from_args(args))
        return COMMANDS[args.command](config)
    except CogscoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        logger.exception("internal error")
        return 1


if __name__ == "__main__":
    sys.exit(main())
