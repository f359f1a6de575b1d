"""Run configuration: flat dotted keys from a JSON file, overridden by flags.

One config file documents a full reproduction run; command-line flags
win over file values, which win over the defaults below.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import SchemaError
from .scorers import CONSTRUCT_FIELDS

DEFAULTS: dict[str, Any] = {
    "paths.labels": None,
    "paths.images": None,
    "paths.captions": None,
    "paths.embeddings_text": None,
    "paths.embeddings_image": None,
    "paths.lexicon": None,
    "paths.out": "out",
    "dataset.ratings_merge_policy": "strict",
    "dataset.sample_sd": True,
    "providers.caption_policy": "strict",
    "textnorm.stem_match": True,
    "scorers.enable_word_feature": False,
    "scorers.word_feature_cap": 20.0,
    "scorers.unseen_label_smoothing": True,
    "stats.partial_on_ranks": False,
    "eval.agreement_threshold": 0.75,
    "eval.combinations": [["v", "s"], ["v", "s", "u"], ["v", "s", "u", "c"]],
    "eval.per_category_fit": False,
    "score.allow_gaps": False,
    "score.min_coverage": 0.0,
    "seed": 0,
}

_PATH_KEYS = tuple(k for k in DEFAULTS if k.startswith("paths.") and k != "paths.out")


@dataclass
class RunConfig:
    values: dict[str, Any]

    @classmethod
    def load(
        cls,
        config_path: str | Path | None = None,
        overrides: Mapping[str, Any] | None = None,
    ) -> "RunConfig":
        values = dict(DEFAULTS)
        if config_path is not None:
            path = Path(config_path)
            if not path.is_file():
                raise SchemaError(f"config file not found: {path}")
            try:
                loaded = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}: malformed JSON ({exc.msg})")
            if not isinstance(loaded, dict):
                raise SchemaError(f"{path}: config must be a JSON object")
            for key, value in loaded.items():
                if key not in DEFAULTS:
                    raise SchemaError(f"{path}: unknown config key {key!r}")
                values[key] = value
        for key, value in (overrides or {}).items():
            if key not in DEFAULTS:
                raise SchemaError(f"unknown config key {key!r}")
            if value is not None:
                values[key] = value
        config = cls(values=values)
        config._validate()
        return config

    def _validate(self) -> None:
        threshold = self.values["eval.agreement_threshold"]
        if not isinstance(threshold, (int, float)) or not -1.0 <= threshold <= 1.0:
            raise SchemaError(f"eval.agreement_threshold must be in [-1, 1], got {threshold!r}")
        combos = self.values["eval.combinations"]
        if not isinstance(combos, list) or not combos:
            raise SchemaError("eval.combinations must be a non-empty list of lists")
        for combo in combos:
            if not isinstance(combo, list) or not combo:
                raise SchemaError(f"bad combination {combo!r}")
            for part in combo:
                if part not in CONSTRUCT_FIELDS:
                    raise SchemaError(f"unknown construct {part!r} in combination {combo!r}")
        coverage = self.values["score.min_coverage"]
        if not isinstance(coverage, (int, float)) or not 0.0 <= coverage <= 1.0:
            raise SchemaError(f"score.min_coverage must be in [0, 1], got {coverage!r}")
        for key in ("dataset.ratings_merge_policy", "providers.caption_policy"):
            if self.values[key] not in ("strict", "union"):
                raise SchemaError(f"{key} must be 'strict' or 'union'")

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def path(self, key: str, required: bool = False) -> Path | None:
        """Resolve a path key; required paths must be set and exist."""
        raw = self.values.get(key)
        if raw is None:
            if required:
                raise SchemaError(f"required path {key!r} is not configured")
            return None
        path = Path(raw)
        if key in _PATH_KEYS and not path.exists():
            raise SchemaError(f"{key}: path does not exist: {path}")
        return path

    def out_dir(self) -> Path:
        out = Path(self.values["paths.out"])
        out.mkdir(parents=True, exist_ok=True)
        return out

    def combinations(self) -> list[tuple[str, ...]]:
        return [tuple(c) for c in self.values["eval.combinations"]]


def parse_set_override(item: str) -> tuple[str, Any]:
    """Parse one ``--set KEY=VALUE`` item; VALUE is JSON when it parses, else a string."""
    if "=" not in item:
        raise SchemaError(f"--set expects KEY=VALUE, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value
