import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mobiqueue.errors import NumericalError, ParameterError
from mobiqueue.geometry import Arena, PointConfiguration, sample_uniform, torus_distance
from mobiqueue.mobility import (Brownian, MobilityKernel, MotionState, RandomDirection,
                                RandomWaypoint, Static, advance, calibrate_brownian,
                                init_motion, kernel_average)

ARENA = Arena(50.0)


def config(n=200, seed=0):
    return sample_uniform(n, ARENA, np.random.default_rng(seed))


def test_static_state_is_empty():
    st_ = init_motion(config(), Static(), np.random.default_rng(0))
    assert st_.headings.size == 0


def test_rd_headings_are_isotropic():
    n = 100_000
    s = init_motion(config(n), RandomDirection(1.0), np.random.default_rng(1))
    assert np.all((s.headings >= 0) & (s.headings < 2 * math.pi))
    mean_dir = np.hypot(np.cos(s.headings).mean(), np.sin(s.headings).mean())
    assert mean_dir <= 4 / math.sqrt(n)


def test_rwp_timers_start_full():
    s = init_motion(config(), RandomWaypoint(2.0, 0.3), np.random.default_rng(0))
    assert np.all(s.timers == 0.3)


@pytest.mark.parametrize("model", [RandomDirection(0.0), RandomWaypoint(0.0, 0.5), Brownian(0.0), Static()])
def test_zero_motion_leaves_points(model):
    pc = config()
    s = init_motion(pc, model, np.random.default_rng(0))
    out, _ = advance(pc, s, model, 0.7, np.random.default_rng(1))
    np.testing.assert_array_equal(out.points, pc.points)


def test_rd_step_follows_heading():
    pc = PointConfiguration([[10.0, 10.0]], ARENA)
    out, _ = advance(pc, MotionState(np.array([0.0])), RandomDirection(1.0), 2.0)
    np.testing.assert_allclose(out.points, [[12.0, 10.0]])


def test_rd_displacement_norm_is_exact():
    pc = config(1000, 3)
    model = RandomDirection(0.37)
    s = init_motion(pc, model, np.random.default_rng(4))
    out, _ = advance(pc, s, model, 0.5)
    np.testing.assert_allclose(torus_distance(out.points, pc.points, ARENA), 0.185, rtol=1e-12)


@given(st.integers(1, 9), st.floats(0.01, 3.0), st.floats(0.01, 2.0))
@settings(max_examples=60, deadline=None)
def test_rd_time_acceleration_identity(m, v, t):
    pc = config(50, 5)
    s = init_motion(pc, RandomDirection(v), np.random.default_rng(6))
    fast, _ = advance(pc, s, RandomDirection(m * v), t)
    slow, _ = advance(pc, s, RandomDirection(v), m * t)
    d = torus_distance(fast.points, slow.points, ARENA)
    assert np.all(d <= 1e-9 * max(1.0, m * v * t))


def test_advance_rejects_nonpositive_dt():
    pc = config()
    with pytest.raises(ParameterError):
        advance(pc, init_motion(pc, RandomDirection(1), np.random.default_rng(0)), RandomDirection(1), 0.0)


def test_rwp_long_step_matches_substeps():
    pc = config(300, 7)
    model = RandomWaypoint(1.5, 0.25)
    s = init_motion(pc, model, np.random.default_rng(8))
    one, s1 = advance(pc, s, model, 1.0, np.random.default_rng(9))
    assert np.all((s1.timers > 0) & (s1.timers <= 0.25))
    # every point moves at most v·dt and keeps speed between redraws
    assert np.all(torus_distance(one.points, pc.points, ARENA) <= 1.5 + 1e-9)


def test_rwp_redraws_on_schedule():
    pc = PointConfiguration([[1.0, 1.0]], ARENA)
    model = RandomWaypoint(1.0, 0.5)
    s = MotionState(np.array([0.0]), np.array([0.5]))
    out, s2 = advance(pc, s, model, 0.5, np.random.default_rng(0))
    np.testing.assert_allclose(out.points, [[1.5, 1.0]])
    assert s2.timers[0] == 0.5
    assert s2.headings[0] != 0.0


def test_calibrate_brownian_examples():
    assert calibrate_brownian(0.0, 1e-3) == 0.0
    assert calibrate_brownian(1.0, 1e-3) == pytest.approx(7.9788e-4, rel=1e-4)
    assert calibrate_brownian(2.0, 1e-3) == pytest.approx(2 * calibrate_brownian(1.0, 1e-3), rel=1e-15)
    with pytest.raises(ParameterError):
        calibrate_brownian(1.0, 0.0)


def test_brownian_mean_step_matches_velocity():
    tick = 1e-3
    model = Brownian.from_velocity(1.0, tick)
    pc = config(100, 10)
    s = init_motion(pc, model, None)
    rng = np.random.default_rng(11)
    norms = []
    for _ in range(1000):
        nxt, s = advance(pc, s, model, tick, rng)
        norms.append(torus_distance(nxt.points, pc.points, ARENA))
        pc = nxt
    norms = np.concatenate(norms)
    # Rayleigh mean σ√(π/2) per step equals vΔ
    assert abs(norms.mean() - 1e-3) <= 3 * norms.std(ddof=1) / math.sqrt(norms.size)


# kernels -----------------------------------------------------------------

def sq_norm(y):
    return (y ** 2).sum(axis=-1)


def test_static_kernel_is_point_evaluation():
    x = np.array([0.3, -1.2])
    v, e = kernel_average(MobilityKernel(Static(), 5.0), x, sq_norm)
    assert v == pytest.approx(sq_norm(x)) and e == 0.0


def test_rd_kernel_probability_measure():
    v, _ = kernel_average(MobilityKernel(RandomDirection(3.0), 1.0), [1.0, 2.0], lambda y: np.ones(len(y)))
    assert v == pytest.approx(1.0, abs=1e-14)


def test_rd_kernel_unit_circle_second_moment():
    v, _ = kernel_average(MobilityKernel(RandomDirection(1.0), 1.0), [0.0, 0.0], sq_norm)
    assert v == pytest.approx(1.0, abs=1e-12)


def test_bm_kernel_second_moment():
    k = MobilityKernel(Brownian(0.7), 2.0)
    x = np.array([1.0, -0.5])
    v, _ = kernel_average(k, x, sq_norm)
    assert v == pytest.approx(sq_norm(x) + 2 * 0.49 * 2.0, rel=1e-10)


def test_rwp_kernel_reports_standard_error():
    k = MobilityKernel(RandomWaypoint(1.0, 0.25), 1.0, phase="aligned")
    v, e = kernel_average(k, [0.0, 0.0], sq_norm, n_samples=20000, rng=np.random.default_rng(0))
    # four aligned legs of length 0.25 with independent headings: E|D|² = 4·0.25²
    assert abs(v - 0.25) <= 4 * e


@pytest.mark.parametrize("kernel", [
    MobilityKernel(RandomDirection(1.3), 1.0),
    MobilityKernel(Brownian(0.8), 1.0),
])
def test_kernel_isotropy(kernel):
    x = np.array([0.4, -0.9])
    f = lambda y: np.exp(-sq_norm(y - np.array([0.5, 0.5])))
    shifted = lambda y: f(y + x)
    a, _ = kernel_average(kernel, x, f)
    b, _ = kernel_average(kernel, np.zeros(2), shifted)
    assert a == pytest.approx(b, rel=1e-9)


def test_kernel_nonconvergence_raises():
    k = MobilityKernel(RandomDirection(1.0), 1.0)
    rough = lambda y: np.sign(np.sin(1e4 * np.arctan2(y[:, 1], y[:, 0])))
    with pytest.raises(NumericalError) as info:
        kernel_average(k, [0.0, 0.0], rough, tol=1e-12, max_nodes=64)
    assert info.value.estimate is not None


def test_stationary_rwp_leg_lengths_sum_to_horizon():
    k = MobilityKernel(RandomWaypoint(2.0, 0.3), 1.0)
    legs = k.leg_lengths(1000, np.random.default_rng(0))
    np.testing.assert_allclose(legs.sum(axis=1), 1.0, rtol=1e-12)
    assert np.all(legs <= 0.3 + 1e-12)
