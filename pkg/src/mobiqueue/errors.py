"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter lies outside its admissible range."""


class NumericalError(ArithmeticError):
    """A numerical procedure failed to reach its tolerance.

    Parameters
    ----------
    message : str
        Human-readable description.
    estimate : float, optional
        Best value reached before giving up.
    error : float, optional
        Achieved error estimate for ``estimate``.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class UndefinedSINRError(ArithmeticError):
    """SINR of the form 0/0 (no signal, no interference, no noise)."""


class DegenerateSeriesError(ValueError):
    """A series has zero variance where a normalised statistic is needed."""


class PlotSpecError(ValueError):
    """Plot spec refers to columns the table lacks, or is malformed."""
