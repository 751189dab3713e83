"""Discrete integral secondary control."""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fqsim.agc import AgcController, agc_update
from fqsim.engine import integrate
from fqsim.errors import ConfigurationError
from fqsim.network import load_case
from fqsim.scenario import build_devices, load_scenario, run_scenario
from fqsim.system import PowerSystem


def feed(ctrl, f, times):
    return [agc_update(ctrl, f, t) for t in times]


def test_zero_error_never_changes_setpoints():
    ctrl = AgcController.equal_share(["g1", "g2"], ki=0.1)
    for sp in feed(ctrl, 50.0, np.arange(0, 20.001, 0.01)):
        assert sp == {"g1": 0.0, "g2": 0.0}


def test_constant_error_closed_form():
    ctrl = AgcController(ki=0.1, period=2.0, participation={"a": 0.25, "b": 0.75})
    times = np.round(np.arange(0, 10.0001, 0.01), 10)
    out = feed(ctrl, 49.9, times)
    for kk in range(1, 6):
        i = int(np.nonzero(np.isclose(times, 2.0 * kk))[0][0])
        held = 0.1 * 0.1 * 2 * kk
        assert out[i]["a"] == pytest.approx(0.25 * held, rel=1e-9)
        assert out[i]["b"] == pytest.approx(0.75 * held, rel=1e-9)


def test_issuance_at_two_seconds():
    ctrl = AgcController.equal_share(["g"], ki=0.1)
    agc_update(ctrl, 49.9, 0.0)
    before = agc_update(ctrl, 49.9, 1.9)
    assert before["g"] == 0.0
    after = agc_update(ctrl, 49.9, 2.0)
    assert after["g"] == pytest.approx(0.1 * 0.1 * 2.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(49.5, 50.5), min_size=50, max_size=400))
def test_setpoints_constant_between_issuances(freqs):
    ctrl = AgcController.equal_share(["g"], ki=0.2, period=2.0)
    dt = 0.1
    last, last_issue = None, None
    for i, f in enumerate(freqs):
        t = i * dt
        sp = agc_update(ctrl, f, t)["g"]
        slot = int(np.floor(t / 2.0 + 1e-9))
        if last is not None and slot == last_issue:
            assert sp == last
        last, last_issue = sp, slot


def test_anti_windup_clamps_integral():
    ctrl = AgcController.equal_share(["g"], ki=0.5, limits=(-0.3, 0.2))
    feed(ctrl, 45.0, np.arange(0, 100.0, 0.1))
    assert ctrl.held == pytest.approx(0.2)
    assert ctrl.integral == pytest.approx(0.2 / 0.5)
    # recovery starts immediately once the error reverses
    feed(ctrl, 51.0, np.arange(100.0, 104.01, 0.1))
    assert ctrl.held < 0.2


def test_time_must_not_decrease():
    ctrl = AgcController.equal_share(["g"])
    agc_update(ctrl, 50.0, 5.0)
    with pytest.raises(ValueError):
        agc_update(ctrl, 50.0, 4.0)


def test_controller_validation():
    with pytest.raises(ConfigurationError):
        AgcController(participation={"a": 0.5, "b": 0.6})
    with pytest.raises(ConfigurationError):
        AgcController(period=0.0)
    with pytest.raises(ConfigurationError):
        AgcController.equal_share([])


def test_integral_removes_steady_state_error():
    cfg = dataclasses.replace(load_scenario(1, agc=True), horizon=400.0)
    with_agc = run_scenario(cfg)
    without = run_scenario(dataclasses.replace(load_scenario(1), horizon=400.0))
    tail = with_agc.times >= 200.0
    dev = with_agc.f_coi[tail] - 50.0
    # the governor dead-band lets the held set-point hunt by about its width
    assert abs(dev.mean()) < 0.005
    assert np.max(np.abs(dev)) < 0.03
    assert np.min(without.f_coi[tail] - 50.0) > 0.1


def test_disabled_controller_is_bit_exact():
    cfg = load_scenario(1, agc=True)
    net = load_case()

    def run(agc):
        system = PowerSystem(net, build_devices(cfg, net), agc=agc)
        return integrate(system, dataclasses.replace(cfg, horizon=30.0).integration, cfg.events)

    off = run(AgcController.equal_share(["gen1", "gen2", "gen3"], enabled=False))
    none = run(None)
    for name in none.channels:
        np.testing.assert_array_equal(off[name], none[name])
