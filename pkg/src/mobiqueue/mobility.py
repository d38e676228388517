"""Mobility models: state-advancing dynamics and displacement kernels."""

from dataclasses import dataclass
import math

import numpy as np

from .errors import NumericalError, ParameterError
from .geometry import PointConfiguration

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Static:
    """Interferers never move."""

    velocity = 0.0


@dataclass(frozen=True)
class RandomDirection:
    """Each interferer keeps one uniform heading forever at speed ``velocity``."""

    velocity: float

    def __post_init__(self):
        if self.velocity < 0:
            raise ParameterError("velocity must be nonnegative")


@dataclass(frozen=True)
class RandomWaypoint:
    """Speed ``velocity``; every ``leg_duration`` all headings are redrawn."""

    velocity: float
    leg_duration: float = 1.0

    def __post_init__(self):
        if self.velocity < 0:
            raise ParameterError("velocity must be nonnegative")
        if not self.leg_duration > 0:
            raise ParameterError("leg_duration must be positive")


@dataclass(frozen=True)
class Brownian:
    """Planar Brownian motion; per-axis variance ``sigma**2 * t`` over time ``t``."""

    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ParameterError("sigma must be nonnegative")

    @classmethod
    def from_velocity(cls, velocity, tick):
        """Diffusion whose mean displacement per ``tick`` is ``velocity * tick``."""
        return cls(calibrate_brownian(velocity, tick) / math.sqrt(tick))


MODEL_NAMES = {Static: "static", RandomDirection: "rd", RandomWaypoint: "rwp", Brownian: "bm"}


def calibrate_brownian(velocity, tick):
    """Per-step standard deviation giving mean step length ``velocity * tick``.

    For a planar Gaussian step with per-axis deviation ``s`` the step length is
    Rayleigh with mean ``s * sqrt(pi/2)``.
    """
    if not tick > 0:
        raise ParameterError(f"tick must be positive, got {tick}")
    if velocity < 0:
        raise ParameterError("velocity must be nonnegative")
    return velocity * tick * math.sqrt(2.0 / math.pi)


@dataclass
class MotionState:
    """Per-interferer heading and, for waypoint motion, time until the next redraw."""

    headings: np.ndarray
    timers: np.ndarray | None = None

    def copy(self):
        return MotionState(self.headings.copy(), None if self.timers is None else self.timers.copy())


def init_motion(config, model, rng):
    """Draw initial headings (and timers) for every point of ``config``."""
    n = len(config)
    if isinstance(model, (Static, Brownian)):
        return MotionState(np.empty(0))
    headings = rng.uniform(0.0, TWO_PI, n)
    timers = np.full(n, model.leg_duration) if isinstance(model, RandomWaypoint) else None
    return MotionState(headings, timers)


def advance(config, state, model, dt, rng=None):
    """Move every point for time ``dt`` and wrap back into the arena.

    Returns
    -------
    (PointConfiguration, MotionState)
        New configuration and new state; inputs are not modified.
    """
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if isinstance(model, Static) or len(config) == 0:
        return config, state
    pts = config.points.copy()
    state = state.copy()
    if isinstance(model, RandomDirection):
        if model.velocity == 0:
            return config, state
        step = model.velocity * dt
        pts[:, 0] += step * np.cos(state.headings)
        pts[:, 1] += step * np.sin(state.headings)
    elif isinstance(model, Brownian):
        if model.sigma == 0:
            return config, state
        pts += rng.normal(0.0, model.sigma * math.sqrt(dt), pts.shape)
    elif isinstance(model, RandomWaypoint):
        remaining = np.full(len(config), float(dt))
        eps = 1e-12 * model.leg_duration
        while np.any(remaining > 0):
            step = np.minimum(remaining, state.timers)
            pts[:, 0] += model.velocity * step * np.cos(state.headings)
            pts[:, 1] += model.velocity * step * np.sin(state.headings)
            remaining -= step
            state.timers -= step
            expired = state.timers <= eps
            if np.any(expired):
                state.headings[expired] = rng.uniform(0.0, TWO_PI, expired.sum())
                state.timers[expired] = model.leg_duration
            remaining[remaining <= eps] = 0.0
    else:
        raise ParameterError(f"unknown mobility model {model!r}")
    return config.with_points(config.arena.wrap(pts)), state


@dataclass(frozen=True)
class MobilityKernel:
    """Law of one interferer's displacement over ``horizon``.

    ``phase`` matters only for waypoint motion: ``"aligned"`` starts the
    window at a redraw instant, ``"stationary"`` starts it at a uniformly
    random point of a leg, which is the law seen by a time average.
    """

    model: object
    horizon: float
    phase: str = "stationary"

    def __post_init__(self):
        if self.horizon < 0:
            raise ParameterError("horizon must be nonnegative")
        if self.phase not in ("aligned", "stationary"):
            raise ParameterError(f"unknown phase {self.phase!r}")

    @property
    def is_dirac(self):
        m = self.model
        return (isinstance(m, Static) or self.horizon == 0
                or (isinstance(m, Brownian) and m.sigma == 0)
                or (isinstance(m, (RandomDirection, RandomWaypoint)) and m.velocity == 0))

    @property
    def radius(self):
        """Fixed displacement length of random-direction motion."""
        return self.model.velocity * self.horizon

    @property
    def scale(self):
        """Per-axis standard deviation of Brownian displacement."""
        return self.model.sigma * math.sqrt(self.horizon)

    def leg_lengths(self, n, rng):
        """Durations of successive legs, shape ``(n, n_legs)``, zero-padded."""
        m = self.model
        tau, p = self.horizon, m.leg_duration
        first = np.full(n, p) if self.phase == "aligned" else rng.uniform(0.0, p, n)
        n_legs = int(math.ceil(tau / p)) + 1
        ends = first[:, None] + p * np.arange(n_legs)[None, :]
        ends = np.minimum(ends, tau)
        starts = np.concatenate([np.zeros((n, 1)), ends[:, :-1]], axis=1)
        return ends - starts

    def sample_displacements(self, n, rng):
        """Draw ``n`` displacement vectors, shape ``(n, 2)``."""
        if self.is_dirac:
            return np.zeros((n, 2))
        m = self.model
        if isinstance(m, RandomDirection):
            th = rng.uniform(0.0, TWO_PI, n)
            return self.radius * np.column_stack([np.cos(th), np.sin(th)])
        if isinstance(m, Brownian):
            return rng.normal(0.0, self.scale, (n, 2))
        legs = m.velocity * self.leg_lengths(n, rng)
        th = rng.uniform(0.0, TWO_PI, legs.shape)
        return np.column_stack([(legs * np.cos(th)).sum(1), (legs * np.sin(th)).sum(1)])


def kernel_average(kernel, x, f, tol=1e-8, max_nodes=4096, n_samples=4096, rng=None):
    """Average of ``f`` over the displacement law started at ``x``.

    Parameters
    ----------
    kernel : MobilityKernel
    x : array_like, shape (2,)
    f : callable
        Vectorised field taking an ``(..., 2)`` array of positions.
    tol : float
        Relative tolerance for the deterministic rules.
    max_nodes : int
        Node budget for the deterministic rules.
    n_samples : int
        Sample count for waypoint motion.
    rng : numpy.random.Generator, optional
        Source for waypoint samples; a fixed default keeps the result
        reproducible.

    Returns
    -------
    value, error : float
        Estimate and its error (step difference for quadrature, standard
        error for Monte Carlo, zero when exact).
    """
    x = np.asarray(x, dtype=float)
    if kernel.is_dirac:
        return float(f(x[None, :])[0]), 0.0
    m = kernel.model
    if isinstance(m, RandomDirection):
        def rule(n):
            th = TWO_PI * np.arange(n) / n
            y = x + kernel.radius * np.column_stack([np.cos(th), np.sin(th)])
            return float(np.mean(f(y)))
        n = 16
        return _refine(rule, n, tol, max_nodes)
    if isinstance(m, Brownian):
        def rule(n):
            u, w = np.polynomial.hermite.hermgauss(n)
            gx, gy = np.meshgrid(u, u, indexing="ij")
            y = x + math.sqrt(2.0) * kernel.scale * np.stack([gx.ravel(), gy.ravel()], axis=1)
            return float(np.outer(w, w).ravel() @ f(y) / math.pi)
        return _refine(rule, 8, tol, min(max_nodes, 256))
    rng = np.random.default_rng(0) if rng is None else rng
    vals = f(x + kernel.sample_displacements(n_samples, rng))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples))


def _refine(rule, n, tol, max_nodes):
    prev, err = rule(n), math.inf
    while 2 * n <= max_nodes:
        n *= 2
        cur = rule(n)
        err = abs(cur - prev)
        if err <= tol * max(1.0, abs(cur)):
            return cur, err
        prev = cur
    raise NumericalError(f"kernel quadrature did not converge with {n} nodes", prev, err)
