"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes (validation -> 2, data -> 3,
training -> 4), so raising the right class matters more than the
message wording.
"""


class CastguardError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CastguardError, ValueError):
    """A value, shape, or configuration violates a documented invariant."""


class DataFormatError(CastguardError):
    """An input file is missing, malformed, truncated, or not ours."""


class TrainingError(CastguardError):
    """Model fitting failed (non-convergence, exploding loss, degenerate data)."""
