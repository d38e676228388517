"""Steady-state estimators: batch means, empirical CDFs, autocorrelation, stop-loss order."""

from dataclasses import dataclass
import math

import numpy as np
from scipy import stats

from .errors import DegenerateSeriesError, ParameterError


@dataclass(frozen=True)
class BatchMeanEstimate:
    """Mean with a Student-t confidence half-width from contiguous batches."""

    mean: float
    ci_halfwidth: float
    n_batches: int
    batch_size: int

    @property
    def ci_low(self):
        return self.mean - self.ci_halfwidth

    @property
    def ci_high(self):
        return self.mean + self.ci_halfwidth

    def overlaps(self, other):
        return self.ci_low <= other.ci_high and other.ci_low <= self.ci_high


def batch_means(series, n_batches=30, confidence=0.95):
    """Batch-means estimate of a steady-state mean.

    The series is truncated to ``n_batches * batch_size`` leading values with
    ``batch_size = len(series) // n_batches``.

    Parameters
    ----------
    series : array_like
    n_batches : int
    confidence : float

    Returns
    -------
    BatchMeanEstimate
    """
    x = np.asarray(series, dtype=float)
    if n_batches < 2 or x.size < 2 * n_batches:
        raise ParameterError(f"need at least {2 * n_batches} values for {n_batches} batches")
    b = x.size // n_batches
    x = x[:n_batches * b]
    means = x.reshape(n_batches, b).mean(axis=1)
    t = stats.t.ppf(0.5 + confidence / 2.0, n_batches - 1)
    half = t * means.std(ddof=1) / math.sqrt(n_batches)
    return BatchMeanEstimate(float(x.mean()), float(half), n_batches, b)


class EmpiricalCDF:
    """Right-continuous empirical distribution function of a sample."""

    def __init__(self, samples):
        x = np.sort(np.asarray(samples, dtype=float).ravel())
        if x.size == 0:
            raise ParameterError("empirical CDF needs at least one sample")
        self.samples = x

    def __call__(self, q):
        out = np.searchsorted(self.samples, q, side="right") / self.samples.size
        return float(out) if np.ndim(out) == 0 else out

    def quantile(self, p):
        return float(np.quantile(self.samples, p))

    def steps(self):
        """Distinct values and the CDF just after each."""
        xs, counts = np.unique(self.samples, return_counts=True)
        return xs, np.cumsum(counts) / self.samples.size


def empirical_cdf(samples):
    return EmpiricalCDF(samples)


def autocorrelation(series, max_lag):
    """Biased sample autocorrelation at lags ``0..max_lag``.

    Raises
    ------
    DegenerateSeriesError
        When the series has zero variance.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if max_lag < 0 or max_lag >= n:
        raise ParameterError("max_lag must lie in [0, len(series))")
    x = x - x.mean()
    c0 = float(x @ x) / n
    scale = float(np.abs(np.asarray(series, dtype=float)).max()) if n else 0.0
    if c0 <= (1e-12 * scale) ** 2:
        raise DegenerateSeriesError("series has zero variance")
    size = 1 << int(math.ceil(math.log2(2 * n)))
    spec = np.fft.rfft(x, size)
    acov = np.fft.irfft(spec * np.conj(spec), size)[:max_lag + 1] / n
    return acov / c0


def lag_correlation_ci(series, lag, n_batches=30):
    """Lag-``lag`` autocorrelation with a batch-means 95% half-width.

    Each batch gives its own estimate; the spread of those estimates sets the
    interval.
    """
    x = np.asarray(series, dtype=float)
    whole = float(autocorrelation(x, lag)[lag])
    b = x.size // n_batches
    per = np.array([autocorrelation(x[i * b:(i + 1) * b], lag)[lag] for i in range(n_batches)])
    t = stats.t.ppf(0.975, n_batches - 1)
    return whole, float(t * per.std(ddof=1) / math.sqrt(n_batches))


@dataclass(frozen=True)
class StopLossCurve:
    """``a ↦ mean((X − a)⁺)`` on a grid, with per-threshold 95% half-widths."""

    thresholds: np.ndarray
    values: np.ndarray
    ci_halfwidths: np.ndarray

    @property
    def lower(self):
        return self.values - self.ci_halfwidths

    @property
    def upper(self):
        return self.values + self.ci_halfwidths


def stop_loss_curve(series, thresholds, n_batches=30):
    """Stop-loss transform of a (possibly autocorrelated) series.

    Half-widths come from batch means of ``(X − a)⁺`` at each threshold.
    """
    x = np.asarray(series, dtype=float)
    a = np.asarray(thresholds, dtype=float)
    b = x.size // n_batches
    if b < 1:
        raise ParameterError("series too short for the batch count")
    x = x[:n_batches * b]
    srt = np.sort(x)
    tail = np.concatenate([np.cumsum(srt[::-1])[::-1], [0.0]])
    k = np.searchsorted(srt, a, side="right")
    values = (tail[k] - a * (srt.size - k)) / srt.size
    batches = x.reshape(n_batches, b)
    per = np.empty((n_batches, a.size))
    for i, row in enumerate(batches):
        rs = np.sort(row)
        rt = np.concatenate([np.cumsum(rs[::-1])[::-1], [0.0]])
        kk = np.searchsorted(rs, a, side="right")
        per[i] = (rt[kk] - a * (b - kk)) / b
    t = stats.t.ppf(0.975, n_batches - 1)
    half = t * per.std(axis=0, ddof=1) / math.sqrt(n_batches)
    return StopLossCurve(a, values, half)


@dataclass(frozen=True)
class Dominance:
    verdict: str
    fast: StopLossCurve
    slow: StopLossCurve


def default_thresholds(slow, n=50, quantile=0.995):
    """``n`` thresholds from zero to the given quantile of the slower series."""
    return np.linspace(0.0, float(np.quantile(slow, quantile)), n)


def stop_loss_dominance(fast, slow, thresholds=None, n_batches=30):
    """Compare two series in the increasing convex order via stop-loss curves.

    Returns ``"dominated"`` when the fast curve lies below the slow one with
    separated intervals at every threshold, ``"not-dominated"`` when it lies
    above with separated intervals somewhere, and ``"inconclusive"``
    otherwise.
    """
    a = default_thresholds(slow) if thresholds is None else np.asarray(thresholds, dtype=float)
    cf = stop_loss_curve(fast, a, n_batches)
    cs = stop_loss_curve(slow, a, n_batches)
    if np.any(cf.lower > cs.upper):
        verdict = "not-dominated"
    elif np.all(cf.upper < cs.lower):
        verdict = "dominated"
    else:
        verdict = "inconclusive"
    return Dominance(verdict, cf, cs)


@dataclass(frozen=True)
class GrowthRate:
    slope: float
    ci_halfwidth: float


def growth_rate(series, step=1.0, n_batches=10):
    """Long-run slope of a series per ``step``, with a batch-based 95% half-width.

    The slope is the least-squares fit over the whole series; the interval
    uses the spread of per-batch increments.
    """
    y = np.asarray(series, dtype=float)
    if y.size < 2 * n_batches:
        raise ParameterError("series too short")
    t = np.arange(y.size) * step
    slope = float(np.polyfit(t, y, 1)[0])
    b = y.size // n_batches
    inc = np.array([(y[(i + 1) * b - 1] - y[i * b]) / ((b - 1) * step) for i in range(n_batches)])
    half = stats.t.ppf(0.975, n_batches - 1) * inc.std(ddof=1) / math.sqrt(n_batches)
    return GrowthRate(slope, float(half))
