"""Exception types shared across the package."""


class HwaveError(Exception):
    """Base class for all package errors."""


class ConfigurationError(HwaveError, ValueError):
    """Invalid parameters, grids or configuration records."""


class NumericalError(HwaveError, ArithmeticError):
    """Non-finite samples or intermediate values."""


class DomainCoverageError(HwaveError):
    """A resampled field lost more mass than tolerated at the grid edges."""


class SingularScaleError(HwaveError, ValueError):
    """A twisted-wavelet quantity was requested at scale j = 0."""


class DegenerateCandidateError(HwaveError, ValueError):
    """A design candidate has zero norm."""
