"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigurationError -> 2,
DataFormatError -> 3, MethodFailureError (and its subclasses) -> 4.
"""


class NpSimexError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(NpSimexError):
    """Invalid configuration: bad scenario spec, grid, or CLI arguments."""


class DataFormatError(NpSimexError):
    """Malformed input data (CSV schema violations, dimension mismatches)."""


class MethodFailureError(NpSimexError):
    """A statistical procedure failed to produce a usable result."""


class ConvergenceError(MethodFailureError):
    """An iterative fit ran out of iterations."""


class SeparationError(MethodFailureError):
    """Logistic fit detected (quasi-)complete separation."""


class ExtrapolationError(MethodFailureError):
    """Extrapolant fitting failed (too few points, pole in the range)."""
