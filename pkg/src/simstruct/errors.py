"""Exception types shared across the package."""


class SimStructError(Exception):
    """Base class for all errors raised by simstruct."""


class DomainError(SimStructError, ValueError):
    """A point lies outside the chart of a metric field."""


class RejectedSpectrum(SimStructError):
    """The characteristic polynomial does not have the required root pattern."""

    def __init__(self, message, moduli=None):
        super().__init__(message)
        self.moduli = [] if moduli is None else list(moduli)


class IllConditioned(SimStructError):
    """An eigenproblem residual exceeded the requested tolerance."""


class NotSimilarity(SimStructError):
    """The stable restriction is not a similarity for any positive definite form."""


class ToleranceAmbiguity(SimStructError):
    """A numerical test landed in the gray zone between two verdicts."""

    def __init__(self, message, values=None):
        super().__init__(message)
        self.values = [] if values is None else list(values)


class ConfigError(SimStructError, ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field


class NotVertical(SimStructError):
    """A path drifts in the transverse direction."""


class MarginViolation(SimStructError):
    """A composed germ word breaks one of the epsilon-margin conditions."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class CurvatureVanishes(SimStructError):
    """Curvature is (numerically) zero where a curvature-weighted metric is needed."""


class DegenerateProjection(SimStructError):
    """A lattice generator projects (almost) to zero on the unstable line."""
