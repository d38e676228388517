import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from mobiqueue.channel import Bounded, Rayleigh
from mobiqueue.cli import preset_names, preset_text
from mobiqueue.config import (ConfigError, ExperimentConfig, SweepSpec, emit_config,
                              parse_config)
from mobiqueue.mobility import RandomDirection
from mobiqueue.queueing import TruncatedShannon


def test_minimal_config_gets_defaults():
    c = parse_config("[network]\nintensity = 0.2\n")
    assert c.intensity == 0.2
    assert c == ExperimentConfig(intensity=0.2)


def test_round_trip_defaults():
    c = ExperimentConfig()
    assert parse_config(emit_config(c)) == c


@given(
    st.floats(0.0, 5.0), st.floats(0.01, 3.0), st.sampled_from(["rd", "rwp", "bm", "static"]),
    st.floats(0.0, 1e3), st.integers(0, 2 ** 31), st.sampled_from(["shannon", "truncated"]),
    st.lists(st.integers(1, 20), min_size=1, max_size=4, unique=True),
)
@settings(max_examples=60, deadline=None)
def test_round_trip(lam, r, model, v, seed, policy, mult):
    vels = tuple(float(m) for m in sorted({1, *mult}))
    c = ExperimentConfig(intensity=lam, link_distance=r, model=model, velocity=v, seed=seed,
                         policy=policy, sweep=SweepSpec((("model", ("rd", "bm")), ("velocity", vels))))
    assert parse_config(emit_config(c)) == c


def test_comments_and_case():
    text = "# top\n; also\n[Network]\nIntensity = 0.3\n\n[mobility]\nmodel = BM\n"
    c = parse_config(text)
    assert c.intensity == 0.3 and c.model == "bm"


def violations(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value.violations


def test_bernoulli_probability_message():
    v = violations("[arrivals]\nrate = 2\n[schedule]\ntick = 1\nslot = 1\n")
    assert v == [(2, "Bernoulli probability out of range")]


def test_every_violation_reported_with_line():
    text = "\n".join([
        "[network]",
        "intensity = -1",
        "colour = blue",
        "[mobility]",
        "model = teleport",
        "[bogus]",
        "x = 1",
        "[network]",
        "intensity = 2",
        "stray line",
        "[sweep]",
        "velocity = 10, 1",
    ])
    v = violations(text)
    lines = [n for n, _ in v]
    assert lines == sorted(lines)
    msgs = dict(v)
    assert "unknown key 'colour'" in msgs[3]
    assert "model" in msgs[5]
    assert "unknown section" in msgs[6]
    assert "duplicate" in msgs[9]
    assert "expected" in msgs[10]
    assert "sorted" in msgs[12]
    assert "intensity must be nonnegative" in msgs[2]


def test_key_outside_section():
    assert violations("seed = 3\n")[0][0] == 1


def test_velocity_multiples_enforced():
    v = violations("[sweep]\nvelocity = 1, 2.5\n")
    assert "integer multiples" in v[0][1]


def test_whole_numbers():
    assert "whole number" in violations("[schedule]\nhorizon = 10.5\n")[0][1]


def test_load_requires_indicator():
    assert violations("[arrivals]\nload = 0.5\n")[0][1].startswith("load targets")


def test_fig4_preset_is_the_parameter_block():
    c = parse_config(preset_text("fig4"))
    assert c.side_length == 100 and c.placement == "poisson"
    assert c.intensity == 0.1 and c.noise == 0.0 and c.link_distance == 0.3
    assert c.path_loss_law == Bounded(4.0)
    assert c.signal_fade == Rayleigh(1.0) and c.interferer_fade == Rayleigh(1.0)
    assert c.service_policy == TruncatedShannon(8.0)
    assert c.arrivals == "bernoulli" and c.rate == 1.2
    assert c.tick == 1e-3 and c.slot == 1e-3
    assert dict(c.sweep.axes) == {"model": ("rd", "rwp", "bm"), "velocity": (1.0, 10.0, 100.0, 1000.0)}


def test_all_presets_parse():
    names = preset_names()
    assert names == ["fig3", "fig4", "fig5", "fig6", "fig7", "fig8"]
    for n in names:
        parse_config(preset_text(n))


def test_derived_objects():
    c = ExperimentConfig(model="rd", velocity=5.0)
    assert c.mobility == RandomDirection(5.0)
    assert c.with_values(mode="static").mobility.velocity == 0.0
    assert ExperimentConfig(side_length=10, intensity=0.25).point_count == 25
    assert dataclasses.replace(c, warmup=-1).schedule.warmup == c.horizon // 5
