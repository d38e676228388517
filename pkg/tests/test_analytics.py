import math

import numpy as np
import pytest

from mobiqueue.analytics import (AnalyticResult, GainTable, QuadratureSpec, SystemParams,
                                 arena_spec, conditional_gain, corr_coefficient, cov_service,
                                 heavy_traffic_workload, joint_level_crossing,
                                 mc_interference_correlation, mc_level_crossing, mc_shannon_rate,
                                 mean_service_rate_empirical, mean_service_rate_shannon,
                                 prob_level_crossing, prob_unstable_static, snapshot_rates,
                                 within_sigma)
from mobiqueue.channel import Bounded, DeterministicUnit, PowerLaw, Rayleigh
from mobiqueue.config import ExperimentConfig
from mobiqueue.errors import NumericalError, ParameterError
from mobiqueue.estimators import batch_means
from mobiqueue.mobility import Brownian, MobilityKernel, RandomDirection, RandomWaypoint, Static
from mobiqueue.simulate import run_single_queue

BASE = SystemParams()


def rng(seed):
    return np.random.default_rng(seed)


# single instant ------------------------------------------------------------

def test_crossing_without_interferers():
    assert prob_level_crossing(SystemParams(intensity=0.0)).value == 1.0
    p = SystemParams(intensity=0.0, noise=0.2)
    assert prob_level_crossing(p).value == pytest.approx(math.exp(-0.2 * 8.0 / 1.3 ** -4))


def test_crossing_reference_value():
    # ∫ f over the plane has a closed form for Rayleigh fades and (1+r)^-4
    s = 8.0 * 1.3 ** 4
    # ∫_0^∞ 2πr s/(s + (1+r)^4) dr with u = 1 + r
    from scipy import integrate
    g = lambda u: 2 * math.pi * (u - 1) * s / (s + u ** 4)
    mass = integrate.quad(g, 1, 10, epsabs=0, epsrel=1e-12)[0] + integrate.quad(g, 10, math.inf, epsabs=0, epsrel=1e-12)[0]
    assert prob_level_crossing(BASE).value == pytest.approx(math.exp(-0.1 * mass), rel=1e-8)


@pytest.mark.parametrize("params", [
    SystemParams(),
    SystemParams(intensity=0.05, threshold=2.0, noise=0.1),
    SystemParams(intensity=0.3, threshold=1.0, link_distance=0.5),
])
def test_crossing_matches_monte_carlo(params):
    est = mc_level_crossing(params, 10_000, rng(1))
    assert within_sigma(prob_level_crossing(params), est)


def test_arena_crossing_matches_snapshots():
    c = ExperimentConfig(side_length=20.0, placement="fixed", policy="indicator", threshold=2.0)
    x = snapshot_rates(c, 20_000, rng(2))
    est = mean_service_rate_empirical(c, 20_000, rng(2))
    assert est.mean == pytest.approx(x.mean())
    assert within_sigma(prob_level_crossing(SystemParams.from_config(c), arena_spec(c)), est)


def test_large_arena_approaches_plane():
    plane = prob_level_crossing(BASE).value
    box = prob_level_crossing(BASE, QuadratureSpec(domain_side=400.0)).value
    assert box == pytest.approx(plane, rel=1e-3)
    assert box > plane


# static stability ------------------------------------------------------------

def test_unstable_trivial_limits():
    assert prob_unstable_static(SystemParams(intensity=0.0, arrival_rate=1.2)).value == 0.0
    assert prob_unstable_static(SystemParams(arrival_rate=1e-9)).value < 1e-8


def test_unstable_is_outage_at_exponential_threshold():
    lam = 1.2
    T = math.expm1(lam)
    p = prob_unstable_static(SystemParams(arrival_rate=lam))
    q = prob_level_crossing(SystemParams(threshold=T))
    assert p.value == pytest.approx(1.0 - q.value, rel=1e-9)


@pytest.mark.parametrize("lam", [0.5, 1.2, 2.0])
def test_unstable_matches_rate_outage_frequency(lam):
    # one snapshot: natural-log rate below the arrival rate per unit time
    T = math.expm1(lam)
    est = mc_level_crossing(SystemParams(threshold=T), 10_000, rng(3))
    miss = type(est)(1.0 - est.mean, est.ci_halfwidth, est.n)
    assert within_sigma(prob_unstable_static(SystemParams(arrival_rate=lam)), miss)


# mean Shannon rate ---------------------------------------------------------

def test_shannon_rate_errors():
    with pytest.raises(ParameterError):
        mean_service_rate_shannon(0.1, 0.3, 2.0)
    with pytest.raises(NumericalError):
        mean_service_rate_shannon(0.0, 0.3, 4.0)


def test_shannon_rate_vanishes_in_dense_networks():
    assert mean_service_rate_shannon(1e6, 0.3, 4.0).value < 1e-3


@pytest.mark.parametrize("lam", [0.05, 0.1, 0.3])
def test_shannon_rate_matches_monte_carlo(lam):
    est = mc_shannon_rate(lam, 0.3, 4.0, 60_000, rng(4))
    assert within_sigma(mean_service_rate_shannon(lam, 0.3, 4.0), est)


# two instants ----------------------------------------------------------------

def test_joint_trivial_cases():
    k = MobilityKernel(RandomDirection(1.0), 1.0)
    assert joint_level_crossing(SystemParams(intensity=0.0), k).value == 1.0
    assert conditional_gain(SystemParams(intensity=0.0), k).value == 1.0


def test_static_joint_closed_form():
    from scipy import integrate
    s = BASE.s
    f = lambda r: s * (1 + r) ** -4 / (1 + s * (1 + r) ** -4)
    expo = integrate.quad(lambda r: 2 * math.pi * r * (1 - (1 - f(r)) ** 2), 0, math.inf, limit=200)[0]
    val = joint_level_crossing(BASE, MobilityKernel(Static(), 1.0)).value
    assert val == pytest.approx(math.exp(-0.1 * expo), rel=1e-8)
    assert conditional_gain(BASE, MobilityKernel(Static(), 1.0)).value > 1.0


@pytest.mark.parametrize("kernel", [
    MobilityKernel(RandomDirection(1.0), 1.0),
    MobilityKernel(Brownian.from_velocity(2.0, 1.0), 1.0),
    MobilityKernel(RandomWaypoint(3.0, 0.5), 1.0),
])
def test_joint_matches_monte_carlo(kernel):
    est = mc_level_crossing(BASE, 10_000, rng(5), kernel)
    assert within_sigma(joint_level_crossing(BASE, kernel), est)


def test_gain_routes_agree_and_decay():
    gains = [conditional_gain(BASE, MobilityKernel(RandomDirection(v), 1.0)).value
             for v in (0.1, 1.0, 10.0, 100.0)]
    assert all(g > 1.0 for g in gains)
    assert all(a > b for a, b in zip(gains, gains[1:]))
    assert gains[-1] == pytest.approx(1.0, abs=1e-4)


def test_joint_tends_to_independence():
    p = prob_level_crossing(BASE).value
    j = joint_level_crossing(BASE, MobilityKernel(RandomDirection(1000.0), 1.0)).value
    assert j == pytest.approx(p * p, rel=1e-6)


# interference correlation -------------------------------------------------

def test_static_correlation_is_inverse_second_moment():
    k = MobilityKernel(Static(), 1.0)
    assert corr_coefficient(k, Bounded(4.0), 1.0).value == pytest.approx(1.0, rel=1e-12)
    assert corr_coefficient(k, Bounded(4.0), 2.0).value == pytest.approx(0.5, rel=1e-12)


@pytest.mark.parametrize("kernel, fade, m2", [
    (MobilityKernel(RandomDirection(1.0), 1.0), DeterministicUnit(), 1.0),
    (MobilityKernel(RandomDirection(0.5), 1.0), Rayleigh(), 2.0),
    (MobilityKernel(Brownian(1.0), 1.0), DeterministicUnit(), 1.0),
])
def test_correlation_matches_monte_carlo(kernel, fade, m2):
    r, se = mc_interference_correlation(0.1, Bounded(4.0), fade, kernel, 20_000, rng(6))
    a = corr_coefficient(kernel, Bounded(4.0), m2)
    assert abs(a.value - r) <= 3 * se + a.error


def test_correlation_decreasing_in_velocity():
    vals = [corr_coefficient(MobilityKernel(RandomDirection(v), 1.0), Bounded(4.0), 1.0).value
            for v in (0.1, 1.0, 10.0, 100.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


# service covariance and heavy traffic --------------------------------------

HT = SystemParams(threshold=1.0)


def test_covariance_zero_without_interferers():
    assert cov_service(SystemParams(intensity=0.0), RandomDirection(1.0), 3).value == 0.0
    with pytest.raises(ParameterError):
        cov_service(HT, RandomDirection(1.0), 0)


def test_covariance_nonnegative_and_decaying():
    tab = GainTable(HT, RandomDirection(10.0), 12.0)
    covs = [cov_service(HT, RandomDirection(10.0), j, table=tab).value for j in range(1, 11)]
    assert all(c >= 0 for c in covs)
    assert all(a >= b for a, b in zip(covs, covs[1:]))
    assert covs[-1] < 1e-4 * covs[0]


def test_slot_covariance_matches_simulation():
    # ticks of length d carry independent fades, so the per-slot sum picks
    # up a diagonal term the continuous-time double integral does not have
    c = ExperimentConfig(side_length=60.0, policy="indicator", threshold=1.0, rate=0.0,
                         tick=0.02, slot=1.0, horizon=20_000, velocity=10.0, seed=2)
    V = run_single_queue(c).service
    p = prob_level_crossing(HT).value
    tab = GainTable(HT, RandomDirection(10.0), 3.0)
    n = 50
    k = np.arange(-(n - 1), n)
    w = (n - np.abs(k)) / n ** 2
    expected = []
    for j in (1, 2):
        tau = np.abs(k + (j - 1) * n) / n
        gain = np.expm1(HT.intensity * tab(np.maximum(tau, 1e-12)))
        expected.append(float(w @ np.where(tau == 0, p * (1 - p), p * p * gain)))
    x = V - V.mean()
    for j, e in zip((1, 2), expected):
        est = batch_means(x[:x.size - j + 1] * x[j - 1:], 20)
        assert abs(est.mean - e) <= 3 * est.ci_halfwidth / 1.96 * 1.4
    # the continuous-time covariance sits between the two
    assert cov_service(HT, RandomDirection(10.0), 1).value < expected[0]


def test_heavy_traffic_without_interferers():
    h = heavy_traffic_workload(SystemParams(intensity=0.0, threshold=1.0, load=0.5), RandomDirection(1.0))
    assert h.cs2 == 0.0
    assert h.mean_workload == pytest.approx(0.5 * 0.5 * 1.0 / (2 * 0.5))


def test_heavy_traffic_vanishes_at_light_load():
    h = heavy_traffic_workload(SystemParams(intensity=0.0, threshold=1.0, load=1e-4), RandomDirection(1.0))
    assert h.mean_workload < 1e-3


def test_heavy_traffic_rejects_overload():
    with pytest.raises(ParameterError):
        heavy_traffic_workload(SystemParams(threshold=1.0, load=1.0), RandomDirection(1.0))


def test_heavy_traffic_formula_assembly():
    h = heavy_traffic_workload(SystemParams(threshold=1.0, load=0.9), RandomDirection(1000.0),
                               k_max=256, tol=5e-2)
    p = prob_level_crossing(HT).value
    assert h.rho == pytest.approx(0.9)
    assert h.arrival_probability == pytest.approx(0.9 * p)
    assert h.ca2 == pytest.approx((1 - 0.9 * p) / (0.9 * p))
    assert 0.0 <= h.cs2 < 1e-3
    assert h.mean_workload == pytest.approx(
        h.arrival_probability * 0.9 * (h.ca2 + h.cs2) / (2 * 0.1))


def test_interacting_link_rate_reference():
    # sparse interacting network: Λ = 0.01, noise 0.1, indicator service at T = 8
    p = SystemParams(intensity=0.01, noise=0.1)
    assert prob_level_crossing(p).value == pytest.approx(0.0907, abs=5e-4)
    est = mc_level_crossing(p, 40_000, rng(12), radius=40.0)
    assert within_sigma(prob_level_crossing(p), est)
