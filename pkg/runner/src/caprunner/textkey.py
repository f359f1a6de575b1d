"""Text-key normalization mandated by the embedding file format.

Text embedding keys are normalized label strings: Unicode NFC, lowercase,
punctuation and underscores as token boundaries, single-space joined.
This mirrors the consumer's tokenizer; it is part of the file contract,
not shared code.
"""

import re
import unicodedata

_NONWORD = re.compile(r"[\W_]+", re.UNICODE)


def normalize_key(text: str) -> str:
    folded = unicodedata.normalize("NFC", text).lower()
    return " ".join(tok for tok in _NONWORD.split(folded) if tok)
