"""Queues served through an SINR link amid mobile Poisson interferers."""

from .errors import DegenerateSeriesError, NumericalError, ParameterError, UndefinedSINRError

__version__ = "0.1.0"
