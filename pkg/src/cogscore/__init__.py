"""Scoring and evaluation toolkit for the cognitive complexity of text
labels elicited by product images.

Four construct scorers (visibility, semantics, uniqueness, concreteness)
are computed per (image, label) record, combined by correlation-calibrated
weights, and validated against human complexity ratings with rank and
partial correlation analyses.
"""

__version__ = "0.1.0"
