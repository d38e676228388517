import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mobiqueue.channel import (Bounded, DeterministicUnit, PowerLaw, Rayleigh, TablePathLoss,
                               fade_laplace, path_gain, sample_fade)
from mobiqueue.errors import ParameterError


def test_bounded_examples():
    assert path_gain(Bounded(4), 0.3) == pytest.approx(1.3 ** -4, rel=1e-15)
    assert path_gain(Bounded(4), 0.3) == pytest.approx(0.350128, abs=1e-6)
    assert path_gain(Bounded(4), 1.0) == 0.0625


@pytest.mark.parametrize("law", [Bounded(4), PowerLaw(1.0, 3.5), TablePathLoss((0, 1, 5), (1, 0.2, 0))])
def test_gain_vanishes_far_away(law):
    assert path_gain(law, 1e8) < 1e-20


@pytest.mark.parametrize("law", [Bounded(3), PowerLaw(2.0, 4.0, 1e-3), TablePathLoss((0, 1, 5), (1, 0.2, 0))])
def test_gain_nonincreasing(law):
    r = np.linspace(0.0, 20.0, 2001)
    g = path_gain(law, r)
    assert np.all(np.diff(g) <= 0)


def test_power_law_capped_at_origin():
    law = PowerLaw(1.0, 4.0, 1e-6 * 0.3)
    assert path_gain(law, 0.0) == path_gain(law, 1e-6 * 0.3)
    assert math.isfinite(path_gain(law, 0.0))


@pytest.mark.parametrize("bad", [lambda: Bounded(2.0), lambda: PowerLaw(1.0, 1.5),
                                 lambda: TablePathLoss((0, 1), (0.5, 0.7))])
def test_non_integrable_or_increasing_rejected(bad):
    with pytest.raises(ParameterError):
        bad()


def test_negative_distance_rejected():
    with pytest.raises(ParameterError):
        path_gain(Bounded(4), -1.0)


def test_deterministic_fade_is_one():
    assert sample_fade(DeterministicUnit(), np.random.default_rng(0)) == 1.0


def test_rayleigh_moments():
    h = sample_fade(Rayleigh(1.0), np.random.default_rng(0), 1_000_000)
    assert abs(h.mean() - 1.0) < 4e-3
    assert abs((h ** 2).mean() - 2.0) < 2e-2


def test_rayleigh_rate_sets_mean():
    h = sample_fade(Rayleigh(4.0), np.random.default_rng(1), 400_000)
    assert abs(h.mean() - 0.25) < 4 * 0.25 / math.sqrt(h.size)


@pytest.mark.parametrize("model, s, expected", [
    (Rayleigh(1.0), 0.0, 1.0),
    (Rayleigh(1.0), 1.0, 0.5),
    (Rayleigh(2.0), 1.0, 2.0 / 3.0),
    (DeterministicUnit(), 1.0, math.exp(-1)),
    (DeterministicUnit(), 0.0, 1.0),
])
def test_laplace_examples(model, s, expected):
    assert fade_laplace(model, s) == pytest.approx(expected, rel=1e-14)


def test_laplace_negative_argument_rejected():
    with pytest.raises(ParameterError):
        fade_laplace(Rayleigh(), -0.5)


@given(st.sampled_from([Rayleigh(1.0), Rayleigh(0.3), DeterministicUnit()]))
@settings(max_examples=10, deadline=None)
def test_laplace_nonincreasing_and_convex(model):
    s = np.linspace(0.0, 30.0, 301)
    v = fade_laplace(model, s)
    assert np.all(np.diff(v) <= 1e-15)
    assert np.all(np.diff(v, 2) >= -1e-15)


@pytest.mark.parametrize("model", [Rayleigh(1.0), Rayleigh(2.5)])
def test_laplace_matches_monte_carlo(model):
    h = sample_fade(model, np.random.default_rng(5), 200_000)
    for s in (0.1, 0.5, 1.0, 3.0, 10.0):
        x = np.exp(-s * h)
        assert abs(x.mean() - fade_laplace(model, s)) <= 3 * x.std(ddof=1) / math.sqrt(h.size) + 1e-12


def test_coherence_must_be_positive():
    with pytest.raises(ParameterError):
        Rayleigh(1.0, coherence=0)
