"""Exception hierarchy shared by all modules."""


class FloatDualError(Exception):
    """Base class for every error raised by this package."""


class OracleFailure(FloatDualError):
    """A body oracle returned a non-finite or otherwise unusable value."""


class UndefinedCurvature(FloatDualError):
    """Gauss curvature requested where it does not exist."""


class UnsupportedOracle(FloatDualError):
    """The body does not provide the requested oracle (e.g. curvature of a grid body)."""


class DomainError(FloatDualError, ValueError):
    """Arguments outside the domain of an operation."""


class AccuracyError(FloatDualError):
    """Quadrature did not reach the requested tolerance.

    ``achieved`` carries the error bound that was actually reached.
    """

    def __init__(self, message, achieved=float("nan")):
        super().__init__(message)
        self.achieved = achieved


class SolverError(FloatDualError):
    """A root finder or minimizer failed; ``bracket`` reports where it gave up."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class ConfigError(FloatDualError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
