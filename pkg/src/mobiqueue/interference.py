"""Shot noise and SINR at the receiver placed at the arena origin."""

import csv
from dataclasses import dataclass
import math

import numpy as np

from .errors import ParameterError, UndefinedSINRError
from .geometry import torus_distance


@dataclass(frozen=True)
class Snapshot:
    """Positions, fades and activity of the interferers at one instant.

    ``activity`` defaults to all ones (every interferer transmits).
    """

    config: object
    fades: np.ndarray
    signal_fade: float
    activity: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.config)
        fades = np.asarray(self.fades, dtype=float).reshape(-1)
        act = np.ones(n, dtype=bool) if self.activity is None else np.asarray(self.activity, dtype=bool)
        if fades.size != n or act.size != n:
            raise ParameterError("fades and activity must have one entry per point")
        if np.any(fades < 0) or self.signal_fade < 0:
            raise ParameterError("fades must be nonnegative")
        object.__setattr__(self, "fades", fades)
        object.__setattr__(self, "activity", act)


@dataclass(frozen=True)
class LinkParams:
    """Link distance ``R``, noise power ``γ`` and path loss ``l``."""

    link_distance: float
    noise: float
    path_loss: object

    def __post_init__(self):
        if not self.link_distance > 0:
            raise ParameterError("link distance must be positive")
        if self.noise < 0:
            raise ParameterError("noise must be nonnegative")


def shot_noise(snap, lp):
    """Interference power at the origin, summed in index order without rounding drift."""
    pts = snap.config.points[snap.activity]
    if pts.shape[0] == 0:
        return 0.0
    r = torus_distance(pts, np.zeros(2), snap.config.arena)
    terms = np.atleast_1d(lp.path_loss(r)) * snap.fades[snap.activity]
    return math.fsum(terms)


def sinr(snap, lp):
    """Signal-to-interference-plus-noise ratio at the origin.

    Returns ``inf`` when only the denominator vanishes.

    Raises
    ------
    UndefinedSINRError
        When signal, interference and noise are all zero.
    """
    num = float(lp.path_loss(lp.link_distance)) * snap.signal_fade
    den = shot_noise(snap, lp) + lp.noise
    if den > 0:
        return num / den
    if num > 0:
        return math.inf
    raise UndefinedSINRError("signal, interference and noise are all zero")


def interference_series(config, n_ticks=None, replication=0):
    """Per-tick interference and SINR at the origin for one run of ``config``."""
    from .simulate import interference_series as series
    return series(config, n_ticks, replication)


def write_series_csv(series, path):
    """Write a series dict as CSV with columns tick_index, time, interference, sinr."""
    cols = ("tick_index", "time", "interference", "sinr")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in zip(*(series[c] for c in cols)):
            w.writerow([int(row[0]), repr(float(row[1])), repr(float(row[2])), repr(float(row[3]))])
