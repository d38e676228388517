"""Numerical evaluation of level-crossing, stability and heavy-traffic formulas.

Every integral over the plane is reduced to radial form by isotropy. The
displacement kernel enters through the radial profile ``Kφ(r)``, the average
of a radial field ``φ`` over the displacement law started at distance ``r``.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property
import math
from typing import NamedTuple
import warnings

import numpy as np
from scipy import integrate, interpolate, special

from .channel import Bounded, DeterministicUnit, PowerLaw, Rayleigh, fade_laplace
from .errors import NumericalError, ParameterError
from .mobility import Brownian, MobilityKernel, RandomDirection, RandomWaypoint

TWO_PI = 2.0 * math.pi


def _quad(*args, **kw):
    # roundoff warnings are expected near machine precision; errors are tracked explicitly
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(*args, **kw)


class AnalyticResult(NamedTuple):
    value: float
    error: float


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration controls.

    Attributes
    ----------
    r_max : float, optional
        Radial cutoff; chosen from the path-loss tail when omitted.
    rel_tol : float
        Relative tolerance for adaptive quadrature.
    limit : int
        Maximum subintervals per adaptive integral.
    kernel_samples : int
        Displacement samples for waypoint kernels.
    quantiles : int
        Quantile nodes used to average over waypoint displacement lengths.
    domain_side : float, optional
        Integrate over the centred square of this side instead of the plane
        (the wrapped simulation arena seen from the origin).
    point_count : int, optional
        With ``domain_side``, treat the interferers as exactly this many
        uniform points instead of a Poisson number.
    seed : int
        Seed for kernel Monte Carlo.
    """

    r_max: float | None = None
    rel_tol: float = 1e-8
    limit: int = 400
    kernel_samples: int = 4096
    quantiles: int = 64
    domain_side: float | None = None
    point_count: int | None = None
    seed: int = 0


@dataclass(frozen=True)
class SystemParams:
    """Parameters of the link, the interferer field and the traffic.

    ``load``, when positive, fixes the arrival rate as ``load`` times the
    mean slot service.
    """

    intensity: float = 0.1
    link_distance: float = 0.3
    noise: float = 0.0
    signal_rate: float = 1.0
    path_loss: object = field(default_factory=Bounded)
    threshold: float = 8.0
    arrival_rate: float = 0.0
    slot: float = 1.0
    interferer_fade: object = field(default_factory=Rayleigh)
    load: float = 0.0

    def __post_init__(self):
        if self.intensity < 0 or self.noise < 0:
            raise ParameterError("intensity and noise must be nonnegative")
        if self.link_distance <= 0 or self.signal_rate <= 0 or self.threshold <= 0:
            raise ParameterError("link_distance, signal_rate and threshold must be positive")
        if self.slot <= 0:
            raise ParameterError("slot must be positive")

    @classmethod
    def from_config(cls, c):
        return cls(c.intensity, c.link_distance, c.noise, c.signal_rate, c.path_loss_law,
                   c.threshold, c.rate, c.slot, c.interferer_fade, c.load)

    @property
    def signal_gain(self):
        return float(self.path_loss(self.link_distance))

    @property
    def s(self):
        """Laplace argument ``μT / l(R)``."""
        return self.signal_rate * self.threshold / self.signal_gain


def arena_spec(config, **kw):
    """Quadrature spec describing the simulated arena of ``config``."""
    count = config.point_count if config.placement == "fixed" else None
    return QuadratureSpec(domain_side=config.side_length, point_count=count, **kw)


# radial fields ----------------------------------------------------------

def _scalar_path_loss(l):
    if isinstance(l, Bounded):
        b = l.exponent
        return lambda r: (1.0 + r) ** -b
    if isinstance(l, PowerLaw):
        a, b, eps = l.scale, l.exponent, l.min_distance
        return lambda r: (a * max(r, eps)) ** -b
    return lambda r: float(l(r))


def _tail_exponent(l):
    return getattr(l, "exponent", math.inf)


class RadialField:
    """A radial field ``φ(|x|)`` with scalar and vector evaluation.

    ``tail`` bounds ``φ`` from above for large ``r`` by ``c·l(r)``.
    """

    def __init__(self, scalar, vector, path_loss, tail_scale):
        self.scalar = scalar
        self.vector = vector
        self.path_loss = path_loss
        self.tail_scale = tail_scale


def deficit_field(params):
    """``f(r) = 1 − L_h(s·l(r))``: chance that one interferer at ``r`` blocks the link."""
    s = params.s
    lsc = _scalar_path_loss(params.path_loss)
    h = params.interferer_fade
    if isinstance(h, Rayleigh):
        mu = h.rate

        def f(r):
            x = s * lsc(r)
            return x / (mu + x)
    else:
        def f(r):
            return -math.expm1(-s * lsc(r))

    def fv(r):
        x = s * params.path_loss(r)
        if isinstance(h, Rayleigh):
            return x / (h.rate + x)
        return -np.expm1(-x)

    return RadialField(f, fv, params.path_loss, s * h.mean)


def path_loss_field(l):
    return RadialField(_scalar_path_loss(l), l, l, 1.0)


def _tail_mass(fld, r):
    """Upper bound on ``∫_{|x|>r} φ(|x|) dx``."""
    l = fld.path_loss
    if isinstance(l, (Bounded, PowerLaw)):
        val, _ = _quad(lambda u: TWO_PI * u * fld.tail_scale * float(l(u)), r, math.inf)
        return val
    d = np.asarray(getattr(l, "distances", [0.0]))
    return 0.0 if r >= d[-1] else math.inf


def _cutoff(fld, spec, scale=1.0):
    if spec.r_max is not None:
        return spec.r_max
    r = 10.0
    while _tail_mass(fld, r) * scale > 0.1 * spec.rel_tol and r < 1e9:
        r *= 2.0
    return r


def _breakpoints(r_max, extra=()):
    pts = [p for p in (1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6, *extra) if 0 < p < r_max]
    return sorted(set(pts))


def _radial_integral(g, r_max, spec, extra=()):
    """``∫_0^{r_max} g(r) dr`` split at breakpoints; returns (value, error)."""
    edges = [0.0, *_breakpoints(r_max, extra), r_max]
    total = err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        v, e = _quad(g, a, b, epsabs=0.0, epsrel=spec.rel_tol, limit=spec.limit)
        total += v
        err += e
    return total, err


def _square_angle(r, half):
    """Angle measure of the circle of radius ``r`` inside the square ``[-half, half]²``."""
    if r <= half:
        return TWO_PI
    if r >= half * math.sqrt(2.0):
        return 0.0
    return TWO_PI - 8.0 * math.acos(half / r)


def field_mass(fld, spec):
    """``∫ φ(|x|) dx`` over the plane, or over the square of ``spec.domain_side``."""
    if spec.domain_side is not None:
        half = 0.5 * spec.domain_side
        return _radial_integral(lambda r: _square_angle(r, half) * r * fld.scalar(r),
                                half * math.sqrt(2.0), spec, (half,))
    r_max = _cutoff(fld, spec)
    v, e = _radial_integral(lambda r: TWO_PI * r * fld.scalar(r), r_max, spec)
    return v, e + _tail_mass(fld, r_max)


def _require_rayleigh_signal(params):
    if not params.signal_rate > 0:
        raise ParameterError("a Rayleigh signal fade with positive rate is required")


# single-time quantities -------------------------------------------------

def prob_level_crossing(params, spec=QuadratureSpec()):
    """Probability that the SINR exceeds the threshold at one instant.

    Over the plane this is ``exp(−Λ∫f − sγ)``. With ``spec.domain_side`` the
    integral runs over the arena square, and with ``spec.point_count`` the
    Poisson void probability is replaced by its fixed-count analogue
    ``(1 − ∫f / area)^N``.
    """
    _require_rayleigh_signal(params)
    noise = math.exp(-params.s * params.noise)
    if params.intensity == 0:
        return AnalyticResult(noise, 0.0)
    mass, err = field_mass(deficit_field(params), spec)
    if spec.domain_side is not None and spec.point_count is not None:
        area = spec.domain_side ** 2
        n = spec.point_count
        val = noise * (1.0 - mass / area) ** n
        return AnalyticResult(val, val * n * err / (area - mass))
    val = noise * math.exp(-params.intensity * mass)
    return AnalyticResult(val, val * params.intensity * err)


def prob_unstable_static(params, spec=QuadratureSpec()):
    """Probability of instability for static interferers with Rayleigh fades.

    Evaluates ``1 − exp(−γμT/l(R))·exp(−2πΛ∫ u / (1 + l(R)/(T l(u))) du)``
    with ``T = exp(λ/δ) − 1``, the SINR at which a natural-log rate equals
    the arrival rate per unit time.
    """
    _require_rayleigh_signal(params)
    T = math.expm1(params.arrival_rate / params.slot)
    if T == 0:
        return AnalyticResult(0.0, 0.0)
    lR = params.signal_gain
    lsc = _scalar_path_loss(params.path_loss)
    noise = math.exp(-params.noise * params.signal_rate * T / lR)
    if params.intensity == 0:
        return AnalyticResult(1.0 - noise, 0.0)
    fld = RadialField(lambda u: 1.0 / (1.0 + lR / (T * lsc(u))), None, params.path_loss, T / lR)
    r_max = _cutoff(fld, spec)
    mass, err = _radial_integral(lambda u: TWO_PI * u * fld.scalar(u), r_max, spec)
    err += _tail_mass(fld, r_max)
    keep = noise * math.exp(-params.intensity * mass)
    return AnalyticResult(1.0 - keep, keep * params.intensity * err)


def mean_service_rate_shannon(intensity, link_distance, exponent):
    """Mean natural-log Shannon rate with power-law path loss, Rayleigh fades, no noise.

    ``∫_0^∞ exp(−2π²ΛR² v^{2/β} / (β sin(2π/β))) / (1 + v) dv``.
    """
    if exponent <= 2:
        raise ParameterError("exponent must exceed 2 for finite interference")
    if intensity < 0 or link_distance <= 0:
        raise ParameterError("intensity must be nonnegative and link_distance positive")
    if intensity == 0:
        raise NumericalError("mean rate diverges without interference or noise", math.inf, math.inf)
    c = 2.0 * math.pi ** 2 * intensity * link_distance ** 2 / (exponent * math.sin(TWO_PI / exponent))
    g = lambda v: math.exp(-c * v ** (2.0 / exponent)) / (1.0 + v)
    # split where the exponent reaches about one
    knee = c ** (-exponent / 2.0)
    val = err = 0.0
    for a, b in ((0.0, knee), (knee, math.inf)):
        v, e = _quad(g, a, b, limit=400)
        val += v
        err += e
    return AnalyticResult(val, err)


class EmpiricalEstimate(NamedTuple):
    mean: float
    ci_halfwidth: float
    n: int


def snapshot_rates(config, n_snapshots, rng, batch=2000):
    """Service rates at ``n_snapshots`` independent fresh snapshots of ``config``."""
    from .queueing import service_rate
    from .channel import sample_fade

    L, R = config.side_length, config.link_distance
    l = config.path_loss_law
    lR = float(l(R))
    out = np.empty(n_snapshots)
    done = 0
    while done < n_snapshots:
        m = min(batch, n_snapshots - done)
        if config.placement == "fixed":
            counts = np.full(m, config.point_count)
        else:
            counts = rng.poisson(config.intensity * L * L, m)
        pts = rng.random((counts.sum(), 2)) * L
        d = np.minimum(pts, L - pts)
        g = l(np.hypot(d[:, 0], d[:, 1])) * sample_fade(config.interferer_fade, rng, counts.sum())
        owner = np.repeat(np.arange(m), counts)
        interference = np.bincount(owner, weights=g, minlength=m)
        signal = lR * sample_fade(config.signal_fade, rng, m)
        den = interference + config.noise
        with np.errstate(divide="ignore", invalid="ignore"):
            sinr = np.where(den > 0, signal / np.where(den > 0, den, 1.0), np.inf)
        out[done:done + m] = service_rate(config.service_policy, sinr)
        done += m
    return out


def conditional_service_rate(points, config, n_draws, rng):
    """Mean service rate given fixed interferer positions, over fresh fades.

    ``points`` is a :class:`~mobiqueue.geometry.PointConfiguration`; the
    receiver sits at the origin. Returns an :class:`EmpiricalEstimate`.
    """
    from .channel import sample_fade
    from .geometry import torus_distance
    from .queueing import service_rate

    gains = config.path_loss_law(torus_distance(points.points, np.zeros(2), points.arena))
    lR = float(config.path_loss_law(config.link_distance))
    fades = sample_fade(config.interferer_fade, rng, (n_draws, len(points)))
    interference = fades @ np.atleast_1d(gains) if len(points) else np.zeros(n_draws)
    signal = lR * sample_fade(config.signal_fade, rng, n_draws)
    den = interference + config.noise
    with np.errstate(divide="ignore", invalid="ignore"):
        sinr = np.where(den > 0, signal / np.where(den > 0, den, 1.0), np.inf)
    x = service_rate(config.service_policy, sinr)
    half = 1.96 * x.std(ddof=1) / math.sqrt(n_draws) if n_draws > 1 else math.inf
    return EmpiricalEstimate(float(x.mean()), float(half), n_draws)


def mean_service_rate_empirical(config, n_snapshots=None, rng=None):
    """Monte Carlo mean service rate over fresh snapshots, with a 95% CI."""
    from .rng import stream

    n = config.snapshots if n_snapshots is None else int(n_snapshots)
    rng = stream(config.seed, "snapshots") if rng is None else rng
    x = snapshot_rates(config, n, rng)
    half = 1.96 * x.std(ddof=1) / math.sqrt(n) if n > 1 else math.inf
    return EmpiricalEstimate(float(x.mean()), float(half), n)


# kernel profiles ---------------------------------------------------------

# table size for overlaps under displacement-length mixtures
MIXTURE_NODES = 25

def circle_average(phi, r, rho, rel_tol=1e-10, limit=200):
    """Average of radial ``φ`` over the circle of radius ``rho`` centred at distance ``r``."""
    if rho == 0 or r == 0:
        return phi(math.hypot(r, rho))
    rr = r * r + rho * rho
    two = 2.0 * r * rho
    g = lambda psi: phi(math.sqrt(max(rr + two * math.cos(psi), 0.0)))
    v, _ = _quad(g, 0.0, math.pi, epsabs=1e-13, epsrel=rel_tol, limit=limit)
    return v / math.pi


def circle_average_many(phi_vec, r, rhos, rel_tol=1e-10, max_nodes=4096):
    """``circle_average`` for many radii ``rhos`` at once (vectorised ``φ``).

    Gauss–Legendre in ``t`` with ``ψ = π(1 − (1 − t)²)``, which crowds nodes
    towards ``ψ = π`` where the circle passes closest to the origin. The node
    count doubles until the change is below ``rel_tol`` times the largest
    average.
    """
    rhos = np.asarray(rhos, dtype=float)
    rr = (r * r + rhos * rhos)[:, None]
    two = (2.0 * r * rhos)[:, None]

    def rule(n):
        t, w = np.polynomial.legendre.leggauss(n)
        t = 0.5 * (t + 1.0)
        psi = math.pi * (1.0 - (1.0 - t) ** 2)
        jac = 0.5 * w * 2.0 * math.pi * (1.0 - t)
        vals = phi_vec(np.sqrt(np.maximum(rr + two * np.cos(psi), 0.0)))
        return vals @ jac / math.pi

    n = 32
    prev = rule(n)
    while n < max_nodes:
        n *= 2
        cur = rule(n)
        if np.max(np.abs(cur - prev)) <= rel_tol * np.max(np.abs(cur)) + 1e-300:
            return cur
        prev = cur
    raise NumericalError("circle average did not converge", float(np.mean(cur)), float(np.max(np.abs(cur - prev))))


def _rice_average(phi, r, scale, rel_tol, limit):
    if scale == 0:
        return phi(r)
    b = r / scale
    lo = max(0.0, r - 12.0 * scale)
    hi = r + 12.0 * scale

    def g(d):
        x = d / scale
        # Rice density with the Bessel factor kept scaled to avoid overflow
        return phi(d) * x * math.exp(-0.5 * (x - b) ** 2) * special.i0e(x * b) / scale

    pts = [r] if lo < r < hi else None
    v, _ = _quad(g, lo, hi, points=pts, epsabs=0.0, epsrel=rel_tol, limit=limit)
    return v


class KernelProfile:
    """Radial profile ``r ↦ Kφ(r)`` of a field under a displacement kernel.

    For waypoint kernels the displacement length is averaged over quantile
    nodes of a Monte Carlo sample; the profile also returns the averages over
    the even and odd nodes so callers can report a sampling error.
    """

    def __init__(self, kernel, phi, spec, phi_vec=None):
        self.kernel = kernel
        self.phi = phi
        self.phi_vec = phi_vec
        self.spec = spec
        m = kernel.model
        if kernel.is_dirac:
            self.kind, self.reach = "dirac", 0.0
        elif isinstance(m, RandomDirection):
            self.kind, self.reach = "circle", kernel.radius
        elif isinstance(m, Brownian):
            self.kind, self.reach = "rice", 12.0 * kernel.scale
        elif isinstance(m, RandomWaypoint):
            self.kind = "mixture"
            rng = np.random.default_rng(spec.seed)
            d = np.linalg.norm(kernel.sample_displacements(spec.kernel_samples, rng), axis=1)
            q = (np.arange(spec.quantiles) + 0.5) / spec.quantiles
            self.lengths = np.quantile(d, q)
            self.reach = float(d.max())
        else:
            raise ParameterError(f"unsupported mobility model {m!r}")

    def __call__(self, r):
        return self.parts(r)[0]

    def parts(self, r):
        """``(Kφ(r), even-node estimate, odd-node estimate)``."""
        tol = min(1e-10, self.spec.rel_tol * 1e-2)
        if self.kind == "dirac":
            v = self.phi(r)
            return v, v, v
        if self.kind == "circle":
            v = circle_average(self.phi, r, self.kernel.radius, tol)
            return v, v, v
        if self.kind == "rice":
            v = _rice_average(self.phi, r, self.kernel.scale, tol, self.spec.limit)
            return v, v, v
        vals = circle_average_many(self.phi_vec, r, self.lengths, max(tol, 1e-9))
        return float(vals.mean()), float(vals[::2].mean()), float(vals[1::2].mean())


def _overlap(fld, kernel, spec):
    """``∫ φ(x) Kφ(x) dx`` with an error estimate (quadrature plus sampling)."""
    prof = KernelProfile(kernel, fld.scalar, spec, fld.vector)
    if prof.kind == "mixture":
        return _mixture_overlap(fld, prof.lengths, spec)
    r_max = _overlap_cutoff(fld, prof.reach, spec)
    extra = (prof.reach,) if 0 < prof.reach < r_max else ()
    return _radial_integral(lambda r: TWO_PI * r * fld.scalar(r) * prof(r), r_max, spec, extra)


def _circle_overlap(fld, rho, spec):
    """``G(ρ) = ∫ φ(x) φ(x + ρe) dx``, the overlap at a fixed displacement length."""
    return _overlap(fld, MobilityKernel(RandomDirection(rho), 1.0), spec)[0]


def _mixture_overlap(fld, lengths, spec, nodes=MIXTURE_NODES):
    # the overlap depends on the displacement only through its length, so a
    # length mixture is the mixture of G(ρ); G is smooth and is tabulated
    lo, hi = float(lengths.min()), float(lengths.max())
    if hi <= 0:
        return _overlap(fld, MobilityKernel(RandomDirection(0.0), 1.0), spec)
    lo = max(lo, 1e-6 * hi)
    rhos = np.geomspace(lo, hi, nodes)
    g = np.array([_circle_overlap(fld, r, spec) for r in rhos])
    x = np.log(np.clip(lengths, lo, hi))
    full = np.exp(interpolate.PchipInterpolator(np.log(rhos), np.log(g))(x))
    half = np.exp(interpolate.PchipInterpolator(np.log(rhos[::2]), np.log(g[::2]))(x))
    val = float(full.mean())
    err = abs(val - float(half.mean())) + abs(float(full[::2].mean()) - float(full[1::2].mean())) / 2.0
    return val, err


def _overlap_cutoff(fld, reach, spec):
    # beyond R the kernel image is at most φ(R − reach), since φ decreases
    if spec.r_max is not None:
        return spec.r_max
    r = max(10.0, 2.0 * reach)
    while fld.scalar(r - reach) * _tail_mass(fld, r) > 0.1 * spec.rel_tol and r < 1e9:
        r *= 2.0
    return r


def _direct_joint_exponent(fld, kernel, spec):
    """``∫ [1 − (1 − f)(1 − Kf)] dx`` over a disc large enough to hold the kernel's reach.

    Waypoint kernels are too costly to image over that disc; for them the
    kernel's mass preservation ``∫ Kf = ∫ f`` reduces the exponent to
    ``2∫f − ∫f·Kf``.
    """
    prof = KernelProfile(kernel, fld.scalar, spec, fld.vector)
    if prof.kind == "mixture":
        mass, merr = field_mass(fld, spec)
        ov, oerr = _overlap(fld, kernel, spec)
        return 2.0 * mass - ov, 2.0 * merr + oerr
    r_max = _cutoff(fld, spec) + prof.reach
    extra = (prof.reach,) if 0 < prof.reach < r_max else ()

    def g(r):
        f = fld.scalar(r)
        k = prof(r)
        return TWO_PI * r * (f + k - f * k)

    return _radial_integral(g, r_max, spec, extra)


# two-time quantities ----------------------------------------------------

def joint_level_crossing(params, kernel, spec=QuadratureSpec()):
    """Probability that the SINR exceeds the threshold at two instants ``kernel.horizon`` apart.

    Signal and interferer fades at the two instants are independent. With
    noise, each instant contributes a factor ``exp(−sγ)``. With
    ``spec.domain_side`` the interferers live on the wrapped arena, where
    motion preserves mass exactly, so the exponent is ``2∫f − ∫f·Kf`` with
    the first integral over the square; ``spec.point_count`` switches to the
    fixed-count form as in :func:`prob_level_crossing`.
    """
    _require_rayleigh_signal(params)
    noise = math.exp(-2.0 * params.s * params.noise)
    if params.intensity == 0:
        return AnalyticResult(noise, 0.0)
    fld = deficit_field(params)
    if spec.domain_side is not None:
        mass, merr = field_mass(fld, spec)
        ov, oerr = _overlap(fld, kernel, replace(spec, domain_side=None, point_count=None))
        expo, err = 2.0 * mass - ov, 2.0 * merr + oerr
        if spec.point_count is not None:
            area, n = spec.domain_side ** 2, spec.point_count
            val = noise * (1.0 - expo / area) ** n
            return AnalyticResult(val, val * n * err / (area - expo))
        val = noise * math.exp(-params.intensity * expo)
        return AnalyticResult(val, val * params.intensity * err)
    expo, err = _direct_joint_exponent(fld, kernel, spec)
    val = noise * math.exp(-params.intensity * expo)
    return AnalyticResult(val, val * params.intensity * err)


def conditional_gain(params, kernel, spec=QuadratureSpec(), check=True, check_tol=None):
    """Ratio ``P(L_t, L_{t+τ}) / P(L_t)²`` evaluated as ``exp(Λ∫ f·Kf dx)``.

    With ``check`` the value is compared with the direct joint probability
    divided by ``P(L_t)²``; a mismatch beyond the combined error estimates
    (or ``check_tol`` relative) raises ``NumericalError``.
    """
    if params.intensity == 0:
        return AnalyticResult(1.0, 0.0)
    fld = deficit_field(params)
    ov, oerr = _overlap(fld, kernel, spec)
    val = math.exp(params.intensity * ov)
    err = val * params.intensity * oerr
    if check:
        joint = joint_level_crossing(params, kernel, spec)
        p = prob_level_crossing(params, spec)
        other = joint.value / p.value ** 2
        other_err = other * (joint.error / joint.value + 2.0 * p.error / p.value)
        tol = check_tol if check_tol is not None else 10.0 * (err + other_err) + 1e-7 * val
        if abs(other - val) > tol:
            raise NumericalError("conditional gain routes disagree", val, abs(other - val))
    return AnalyticResult(val, err)


def corr_coefficient(kernel, path_loss, second_moment, spec=QuadratureSpec()):
    """Lag correlation of interference: ``∫ l·Kl / (E[h²]·∫ l²)``."""
    if second_moment <= 0:
        raise ParameterError("second moment must be positive")
    fld = path_loss_field(path_loss)
    num, nerr = _overlap(fld, kernel, spec)
    den, derr = _overlap(fld, MobilityKernel(kernel.model, 0.0), spec)
    val = num / (second_moment * den)
    return AnalyticResult(val, val * (nerr / max(num, 1e-300) + derr / den))


class GainTable:
    """Overlap ``G(τ) = ∫ f·K_τ f dx`` tabulated in the lag ``τ``.

    Values between nodes come from monotone interpolation in log–log
    coordinates; past the last node ``G`` is extrapolated by the final slope.
    """

    def __init__(self, params, model, tau_max, spec=QuadratureSpec(), nodes=48, phase="stationary"):
        self.params = params
        self.model = model
        self.spec = spec
        fld = deficit_field(params)
        self.g0, _ = _overlap(fld, MobilityKernel(model, 0.0), spec)
        taus = np.geomspace(1e-4, max(tau_max, 1e-3), nodes)
        vals = np.array([_overlap(fld, MobilityKernel(model, t, phase), spec)[0] for t in taus])
        keep = vals > 1e-300
        self.taus, self.vals = taus[keep], vals[keep]
        self._interp = interpolate.PchipInterpolator(np.log(self.taus), np.log(self.vals))
        if self.taus.size >= 2:
            self._slope = (math.log(self.vals[-1]) - math.log(self.vals[-2])) / (
                math.log(self.taus[-1]) - math.log(self.taus[-2]))
        else:
            self._slope = -np.inf

    def __call__(self, tau):
        t = np.abs(np.atleast_1d(np.asarray(tau, dtype=float)))
        out = np.empty_like(t)
        lo = t < self.taus[0]
        hi = t > self.taus[-1]
        mid = ~(lo | hi)
        # below the first node the overlap is flat to within the first node's change
        frac = np.clip(t[lo] / self.taus[0], 0.0, 1.0)
        out[lo] = self.g0 + frac * (self.vals[0] - self.g0)
        out[mid] = np.exp(self._interp(np.log(t[mid])))
        out[hi] = self.vals[-1] * (t[hi] / self.taus[-1]) ** self._slope
        return out if np.ndim(tau) else float(out[0])


def _cov_from_table(lam, p, d, table, lag):
    integrand = lambda u: (1.0 - abs(u)) * math.expm1(lam * table(d * abs(u + lag - 1)))
    pts = [1.0 - lag] if -1 < 1 - lag < 1 else None
    v, e = _quad(integrand, -1.0, 1.0, points=pts, epsabs=1e-14, epsrel=1e-9, limit=200)
    scale = d * d * p * p
    return AnalyticResult(scale * v, scale * e)


def cov_service(params, model, lag, spec=QuadratureSpec(), table=None):
    """Covariance of the indicator service in slot 1 and slot ``lag``.

    ``δ² ∫_{-1}^{1} (1 − |u|)·[P(L_0, L_{δ|u + j − 1|}) − P(L)²] du``, the
    double integral over the two slots reduced to the lag difference.
    """
    if lag < 1 or int(lag) != lag:
        raise ParameterError("lag must be a positive whole number")
    if params.intensity == 0:
        return AnalyticResult(0.0, 0.0)
    p = prob_level_crossing(params, spec).value
    d = params.slot
    table = GainTable(params, model, d * (lag + 1), spec) if table is None else table
    return _cov_from_table(params.intensity, p, d, table, lag)


class HeavyTraffic(NamedTuple):
    mean_workload: float
    rho: float
    arrival_probability: float
    ca2: float
    cs2: float
    terms: int


def heavy_traffic_workload(params, model, k_max=4096, tol=1e-3, spec=QuadratureSpec()):
    """Heavy-traffic mean workload ``E[A]·ρ(c_A² + c_S²) / (2(1 − ρ))``.

    The service variability ``c_S²`` is the Cesàro-weighted covariance sum
    ``Σ_{j≤K} (1 − j/K)·Cov(V(1), V(j)) / E[V(1)]²`` with ``K`` doubled until
    the relative change falls below ``tol``.
    """
    d = params.slot
    p = prob_level_crossing(params, spec).value
    ev = p * d
    p_arr = params.load * ev if params.load > 0 else params.arrival_rate * d
    if not 0 < p_arr <= 1:
        raise ParameterError("arrival probability must lie in (0, 1]")
    rho = p_arr / ev
    if rho >= 1:
        raise ParameterError(f"load {rho:.4f} is not below one")
    ca2 = (1.0 - p_arr) / p_arr
    table = GainTable(params, model, d * (k_max + 1), spec) if params.intensity > 0 else None
    covs = []

    def partial(K):
        while len(covs) < K:
            lag = len(covs) + 1
            covs.append(0.0 if table is None else _cov_from_table(params.intensity, p, d, table, lag).value)
        j = np.arange(1, K + 1)
        return float(np.sum((1.0 - j / K) * np.array(covs[:K]))) / ev ** 2

    K, prev = 2, partial(2)
    while True:
        if 2 * K > k_max:
            raise NumericalError("covariance series did not settle", prev, math.nan)
        K *= 2
        cur = partial(K)
        if abs(cur - prev) <= tol * max(abs(cur), 1e-12):
            break
        prev = cur
    w = p_arr * rho * (ca2 + cur) / (2.0 * (1.0 - rho))
    return HeavyTraffic(w, rho, p_arr, ca2, cur, K)


# Monte Carlo oracles -------------------------------------------------------

def _disc_points(intensity, radius, m, rng):
    counts = rng.poisson(intensity * math.pi * radius ** 2, m)
    k = int(counts.sum())
    r = radius * np.sqrt(rng.random(k))
    th = rng.uniform(0.0, TWO_PI, k)
    return np.column_stack([r * np.cos(th), r * np.sin(th)]), np.repeat(np.arange(m), counts)


def _crossing(params, pts, owner, m, rng):
    from .channel import sample_fade
    g = params.path_loss(np.hypot(pts[:, 0], pts[:, 1])) * sample_fade(params.interferer_fade, rng, len(pts))
    interference = np.bincount(owner, weights=g, minlength=m)
    signal = params.signal_gain * rng.exponential(1.0 / params.signal_rate, m)
    return signal > params.threshold * (interference + params.noise)


def mc_crossings(params, n, rng, kernel, radius=60.0, batch=2000):
    """Paired crossing indicators ``(SINR_0 > T, SINR_τ > T)`` over ``n`` independent draws.

    Interferers form a Poisson process on the disc of ``radius`` about the
    receiver; each is displaced by an independent kernel draw and all fades
    are redrawn at the second instant.
    """
    first, second = [], []
    done = 0
    while done < n:
        m = min(batch, n - done)
        pts, owner = _disc_points(params.intensity, radius, m, rng)
        first.append(_crossing(params, pts, owner, m, rng))
        second.append(_crossing(params, pts + kernel.sample_displacements(len(pts), rng), owner, m, rng))
        done += m
    return np.concatenate(first), np.concatenate(second)


def mc_level_crossing(params, n, rng, kernel=None, radius=60.0, batch=2000):
    """Monte Carlo frequency of ``SINR > T`` at one instant, or at two with ``kernel``.

    Returns an :class:`EmpiricalEstimate` with a 95% half-width.
    """
    if kernel is None:
        hits = 0
        done = 0
        while done < n:
            m = min(batch, n - done)
            pts, owner = _disc_points(params.intensity, radius, m, rng)
            hits += int(_crossing(params, pts, owner, m, rng).sum())
            done += m
    else:
        a, b = mc_crossings(params, n, rng, kernel, radius, batch)
        hits = int((a & b).sum())
    p = hits / n
    return EmpiricalEstimate(p, 1.96 * math.sqrt(max(p * (1.0 - p), 1.0 / n) / n), n)


def mc_conditional_gain(params, n, rng, kernel, radius=60.0):
    """Monte Carlo ``P(L_0, L_τ) / (P(L_0) P(L_τ))`` with a delta-method 95% half-width."""
    a, b = (x.astype(float) for x in mc_crossings(params, n, rng, kernel, radius))
    mab, ma, mb = (a * b).mean(), a.mean(), b.mean()
    g = mab / (ma * mb)
    psi = a * b / mab - a / ma - b / mb
    return EmpiricalEstimate(float(g), float(1.96 * g * psi.std(ddof=1) / math.sqrt(n)), n)


def mc_interference_correlation(intensity, path_loss, fade, kernel, n, rng, radius=60.0, batch=2000):
    """Monte Carlo correlation of the shot noise at two instants ``kernel.horizon`` apart.

    Returns ``(estimate, standard_error)``, the error from the delta method
    over independent pairs.
    """
    from .channel import sample_fade
    x, y = [], []
    done = 0
    while done < n:
        m = min(batch, n - done)
        pts, owner = _disc_points(intensity, radius, m, rng)
        moved = pts + kernel.sample_displacements(len(pts), rng)
        for p, out in ((pts, x), (moved, y)):
            g = path_loss(np.hypot(p[:, 0], p[:, 1])) * sample_fade(fade, rng, len(p))
            out.append(np.bincount(owner, weights=g, minlength=m))
        done += m
    x, y = np.concatenate(x), np.concatenate(y)
    r = float(np.corrcoef(x, y)[0, 1])
    # delta-method variance of the sample correlation
    u = (x - x.mean()) / x.std()
    w = (y - y.mean()) / y.std()
    var = np.var(u * w - 0.5 * r * (u ** 2 + w ** 2))
    return r, float(math.sqrt(var / n))


def mc_shannon_rate(intensity, link_distance, exponent, n, rng, radius=30.0, batch=2000):
    """Monte Carlo ``E[ln(1 + SIR)]`` for power-law loss and Rayleigh fades."""
    from .channel import PowerLaw
    l = PowerLaw(1.0, exponent, 1e-9)
    params = SystemParams(intensity, link_distance, path_loss=l)
    vals = []
    done = 0
    while done < n:
        m = min(batch, n - done)
        pts, owner = _disc_points(intensity, radius, m, rng)
        g = l(np.hypot(pts[:, 0], pts[:, 1])) * rng.exponential(1.0, len(pts))
        interference = np.bincount(owner, weights=g, minlength=m)
        signal = params.signal_gain * rng.exponential(1.0, m)
        with np.errstate(divide="ignore"):
            vals.append(np.log1p(signal / interference))
        done += m
    x = np.concatenate(vals)
    return EmpiricalEstimate(float(x.mean()), float(1.96 * x.std(ddof=1) / math.sqrt(n)), n)


def within_sigma(analytic, estimate, k=3.0):
    """Whether ``analytic`` lies within ``k`` standard errors of an oracle.

    ``estimate`` carries a 95% half-width; the analytic error widens the band.
    """
    value = analytic.value if isinstance(analytic, AnalyticResult) else float(analytic)
    err = analytic.error if isinstance(analytic, AnalyticResult) else 0.0
    return abs(value - estimate.mean) <= k * estimate.ci_halfwidth / 1.96 + err
