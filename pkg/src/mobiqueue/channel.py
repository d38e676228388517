"""Path-loss laws and fading models."""

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate

from .errors import ParameterError

POWER_LAW, BOUNDED, TABLE = 0, 1, 2


def _check_integrable(l, tail_exponent):
    # numeric confirmation of ∫ r l(r) dr < ∞; tail_exponent > 2 already guarantees it
    head, _ = integrate.quad(lambda r: r * l(r), 0.0, 10.0, limit=200)
    if not (math.isfinite(head) and tail_exponent > 2):
        raise ParameterError("path loss is not integrable against r dr")


@dataclass(frozen=True)
class PowerLaw:
    """Singular power law ``(A r)^-β``, capped at ``r = min_distance``."""

    scale: float = 1.0
    exponent: float = 4.0
    min_distance: float = 1e-6

    def __post_init__(self):
        if self.scale <= 0 or self.min_distance <= 0:
            raise ParameterError("scale and min_distance must be positive")
        if self.exponent <= 2:
            raise ParameterError(f"exponent must exceed 2, got {self.exponent}")

    def __call__(self, r):
        r = np.maximum(np.asarray(r, dtype=float), self.min_distance)
        return (self.scale * r) ** -self.exponent

    def kernel_spec(self):
        return POWER_LAW, np.array([self.scale, self.exponent, self.min_distance])


@dataclass(frozen=True)
class Bounded:
    """Bounded law ``(1 + r)^-β``."""

    exponent: float = 4.0

    def __post_init__(self):
        if self.exponent <= 2:
            raise ParameterError(f"exponent must exceed 2, got {self.exponent}")
        _check_integrable(self, self.exponent)

    def __call__(self, r):
        return (1.0 + np.asarray(r, dtype=float)) ** -self.exponent

    def kernel_spec(self):
        return BOUNDED, np.array([self.exponent])


@dataclass(frozen=True)
class TablePathLoss:
    """Piecewise-linear law through ``(distances, gains)``; zero beyond the table."""

    distances: tuple
    gains: tuple

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=float)
        g = np.asarray(self.gains, dtype=float)
        if d.ndim != 1 or d.shape != g.shape or d.size < 2:
            raise ParameterError("table needs matching 1-D distances and gains, length >= 2")
        if d[0] != 0 or np.any(np.diff(d) <= 0):
            raise ParameterError("table distances must start at 0 and increase strictly")
        if np.any(g < 0) or np.any(np.diff(g) > 0):
            raise ParameterError("table gains must be nonnegative and nonincreasing")
        object.__setattr__(self, "distances", tuple(d))
        object.__setattr__(self, "gains", tuple(g))

    def __call__(self, r):
        return np.interp(np.asarray(r, dtype=float), self.distances, self.gains, right=0.0)

    def kernel_spec(self):
        return TABLE, np.concatenate([self.distances, self.gains])


def path_gain(l, r):
    """Evaluate path loss ``l`` at distance ``r >= 0``."""
    if np.any(np.asarray(r) < 0):
        raise ParameterError("distance must be nonnegative")
    out = l(r)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Rayleigh:
    """Rayleigh fading: exponential power with rate ``rate`` (mean ``1/rate``).

    ``coherence`` is the number of ticks a draw is held before an
    independent redraw.
    """

    rate: float = 1.0
    coherence: int = 1

    def __post_init__(self):
        if self.rate <= 0:
            raise ParameterError(f"rate must be positive, got {self.rate}")
        if int(self.coherence) != self.coherence or self.coherence < 1:
            raise ParameterError("coherence must be a positive whole number of ticks")

    @property
    def mean(self):
        return 1.0 / self.rate

    @property
    def second_moment(self):
        return 2.0 / self.rate ** 2


@dataclass(frozen=True)
class DeterministicUnit:
    """Fade power identically one."""

    coherence: int = 1

    mean = 1.0
    second_moment = 1.0


def sample_fade(model, rng, size=None):
    """Draw fade powers from ``model``."""
    if isinstance(model, Rayleigh):
        return rng.exponential(model.mean, size)
    if size is None:
        return 1.0
    return np.ones(size)


def fade_laplace(model, s):
    """Laplace transform ``E[exp(-s h)]`` of the fade power."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ParameterError("Laplace argument must be nonnegative")
    if isinstance(model, Rayleigh):
        out = model.rate / (model.rate + s)
    else:
        out = np.exp(-s)
    return float(out) if out.ndim == 0 else out
