"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes (see ``cli.EXIT_CODES``).
"""


class HolsteinKPMError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(HolsteinKPMError):
    """Invalid or inconsistent run configuration; message names the offending key."""


class CapacityError(HolsteinKPMError):
    """Requested problem size exceeds a configured guard (basis size, dense solve, ...)."""


class ConvergenceError(HolsteinKPMError):
    """An iterative solver did not reach its tolerance.

    Carries the best available estimate so callers can inspect or retry.
    """

    def __init__(self, message, best_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate


class NumericalBlowupError(HolsteinKPMError):
    """NaN/Inf or an out-of-bound Chebyshev moment; usually wrong spectral bounds."""


class DegenerateSpectrumError(HolsteinKPMError):
    """Spectral width is zero; the spectrum is a single point (exact delta)."""
