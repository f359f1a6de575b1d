"""Offline model runner.

Produces the caption corpus and joint text/image embedding files consumed
by the scoring toolkit. The file schema is the only coupling: the runner
writes files and exits, and is never imported by the scoring side.
"""

__version__ = "0.1.0"


class RunnerError(Exception):
    """Expected failure (bad inputs, unavailable backend); CLI exit code 2."""
