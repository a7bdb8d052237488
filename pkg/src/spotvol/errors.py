"""Exception types raised by spotvol."""


class SpotVolError(Exception):
    """Base class for all package errors."""


class QuadratureFailed(SpotVolError):
    """A numerical integral did not reach its tolerance within budget."""


class SingularSystem(SpotVolError):
    """A linear system was numerically singular."""


class DegenerateWeights(SpotVolError):
    """Kernel weights sum to (numerically) zero at an evaluation point."""


class EmptySide(SpotVolError):
    """A one-sided estimate was requested where that side has no terms."""


class NonpositiveDenominator(SpotVolError):
    """A bandwidth formula has a zero or negative denominator."""


class VolVolDegenerate(SpotVolError):
    """The vol-of-vol estimate is zero, so the plug-in update is undefined."""


class InvalidScales(SpotVolError, ValueError):
    """Two-scale parameters k and b are inconsistent with the sample size."""


class ZeroMass(SpotVolError, ValueError):
    """Step-kernel coefficients sum to zero."""


class EmbeddingNotPSD(SpotVolError):
    """Circulant embedding has materially negative eigenvalues."""


class DataError(SpotVolError, ValueError):
    """Malformed input data (CSV ingestion and similar)."""


class ConfigError(SpotVolError, ValueError):
    """Invalid configuration or command line options."""
