"""Deterministic text normalization and label-in-sentence matching.

Labels and caption sentences are reduced to lowercase token tuples so
that visibility counting, corpus frequencies, and embedding keys all
agree on one canonical form. Everything here is pure and locale-free.
"""

from __future__ import annotations

import re
import unicodedata

from .errors import SchemaError

# One token sequence: lowercase, no empty tokens, no surrounding whitespace.
TokenSeq = tuple[str, ...]

# Split on anything that is not a word character, plus underscore, so
# punctuation and hyphens become token boundaries ("mid-century" -> mid, century).
_NONWORD = re.compile(r"[\W_]+", re.UNICODE)

# Plural suffixes accepted by the stem-match mode.
_STEM_SUFFIXES = ("s", "es")


def normalize(text: str) -> TokenSeq:
    """Normalize free text to a token tuple.

    Lowercase, Unicode NFC, punctuation stripped to token boundaries,
    whitespace-split; digits are preserved. Deterministic across runs
    and platforms. Empty or whitespace-only input yields ``()``.
    """
    folded = unicodedata.normalize("NFC", text).lower()
    return tuple(tok for tok in _NONWORD.split(folded) if tok)


def join(tokens: TokenSeq) -> str:
    """Canonical string form of a token sequence (space-joined)."""
    return " ".join(tokens)


def tokens_equal(a: str, b: str, stem_match: bool = True) -> bool:
    """Token equality, optionally treating plain plurals as equal.

    In stem-match mode two tokens compare equal when one is the other
    plus an ``s``/``es`` suffix ("chairs" matches "chair", "boxes"
    matches "box"). No other morphology is attempted.
    """
    if a == b:
        return True
    if not stem_match:
        return False
    for suffix in _STEM_SUFFIXES:
        if a == b + suffix or b == a + suffix:
            return True
    return False


def contains_label(sentence: TokenSeq, label: TokenSeq, stem_match: bool = True) -> bool:
    """True iff ``label`` occurs as a contiguous token run inside ``sentence``.

    Multi-word labels must appear adjacently and in order; "coffee table"
    in a caption counts only when the two tokens are neighbors.
    """
    if not label:
        raise SchemaError("contains_label: label must be non-empty")
    k = len(label)
    if k > len(sentence):
        return False
    for start in range(len(sentence) - k + 1):
        if all(
            tokens_equal(sentence[start + i], label[i], stem_match=stem_match)
            for i in range(k)
        ):
            return True
    return False
