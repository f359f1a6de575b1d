"""Exception hierarchy shared across the toolkit.

All expected failures (bad files, schema violations, degenerate inputs)
derive from :class:`CogscoreError`, which the CLI maps to exit code 2.
Anything else escaping to the CLI is an internal error (exit code 1).
"""


class CogscoreError(Exception):
    """Base class for expected failures caused by inputs or configuration."""


class SchemaError(CogscoreError):
    """A file, record, or argument violates its declared schema or contract."""


class DegenerateDataError(CogscoreError):
    """Data is structurally valid but statistically unusable.

    Raised for constant series, zero variances, zero residual variance,
    and rank-deficient control designs.
    """


class CoverageError(CogscoreError):
    """Scoring inputs do not cover the label set.

    Carries the exact list of gaps so nothing is dropped silently.
    """

    def __init__(self, message, gaps=()):
        super().__init__(message)
        self.gaps = tuple(gaps)
