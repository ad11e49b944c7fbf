"""Exception types shared across the package."""


class PolarimetryError(Exception):
    """Base class for all errors raised by this package."""


class StateSpecError(PolarimetryError, ValueError):
    """A declarative state description is malformed or inconsistent."""


class StateValidationError(PolarimetryError, ValueError):
    """A stored state violates Hermiticity, trace, weight or positivity bounds."""


class RankDeficiencyError(PolarimetryError, RuntimeError):
    """A moment design matrix does not determine the requested coefficients."""


class FileFormatError(PolarimetryError, ValueError):
    """A data file does not conform to its documented schema."""
