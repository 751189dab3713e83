"""Ornstein-Uhlenbeck channels and ramp profiles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fqsim.errors import ConfigurationError
from fqsim.network import load_case
from fqsim.scenario import build_devices, load_scenario
from fqsim.stochastic import (OuProcess, RampProfile, ou_diffusion, ou_drift, ou_trapezoid_step, ramp_value,
                              simulate_ou)
from fqsim.system import NoiseSettings, PowerSystem


# ---- oracles -----------------------------------------------------------

def trapezoid_stationary_variance(alpha, sigma, dt):
    """Exact stationary variance of the discrete recursion used by the integrator."""
    h = 0.5 * alpha * dt
    a = (1 - h) / (1 + h)
    b = sigma / (1 + h)
    return b**2 * dt / (1 - a**2)


# ---- drift / diffusion -------------------------------------------------

@pytest.mark.parametrize("alpha, mu, eta, expected", [(1.0, 0.3, 0.3, 0.0), (2.0, 1.0, 0.0, 2.0),
                                                      (0.5, 0.0, -2.0, 1.0)])
def test_ou_drift_examples(alpha, mu, eta, expected):
    assert ou_drift(OuProcess(mean=mu, mean_reversion=alpha), eta) == pytest.approx(expected)


def test_zero_diffusion_is_deterministic():
    proc = OuProcess(mean_reversion=0.5, diffusion=0.0, value=1.0)
    assert ou_diffusion(proc) == 0.0
    a = simulate_ou(proc, 100, 0.1, np.random.default_rng(1))
    b = simulate_ou(proc, 100, 0.1, np.random.default_rng(2))
    assert np.array_equal(a, b)


def test_stationary_variance_long_run():
    alpha, sigma, dt = 1.0, 0.3, 0.01
    proc = OuProcess(mean_reversion=alpha, diffusion=sigma)
    path = simulate_ou(proc, 1_000_000, dt, np.random.default_rng(7))
    target = sigma**2 / (2 * alpha)
    assert proc.stationary_variance == pytest.approx(target)
    assert abs(path[1000:].var() / target - 1) < 0.10
    # discretization bias of the recursion is far below the 10% tolerance
    assert trapezoid_stationary_variance(alpha, sigma, dt) == pytest.approx(target, rel=1e-4)


def test_doubling_diffusion_quadruples_variance():
    rng_a, rng_b = np.random.default_rng(3), np.random.default_rng(3)
    a = simulate_ou(OuProcess(mean_reversion=0.2, diffusion=0.1), 20_000, 0.05, rng_a)
    b = simulate_ou(OuProcess(mean_reversion=0.2, diffusion=0.2), 20_000, 0.05, rng_b)
    assert np.allclose(b, 2 * a, rtol=0, atol=1e-14)
    assert b.var() == pytest.approx(4 * a.var(), rel=1e-12)
    assert OuProcess(mean_reversion=0.2, diffusion=0.2).stationary_variance == pytest.approx(
        4 * OuProcess(mean_reversion=0.2, diffusion=0.1).stationary_variance)


def test_from_stationary_std():
    proc = OuProcess.from_stationary_std(0.01, 1 / 300)
    assert math.sqrt(proc.stationary_variance) == pytest.approx(0.01)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(1e-3, 5), st.floats(1e-3, 1.0))
def test_noiseless_path_converges_monotonically(start, mu, alpha, frac):
    dt = frac * 1.99 / alpha  # alpha * dt < 2 keeps the trapezoid factor positive
    proc = OuProcess(mean=mu, mean_reversion=alpha, diffusion=0.0, value=start)
    path = simulate_ou(proc, 200, dt, np.random.default_rng(0))
    dist = np.abs(path - mu)
    assert np.all(np.diff(dist) <= 1e-12)
    # trapezoid never crosses the mean while alpha*dt < 2
    assert np.all((path - mu) * (start - mu) >= -1e-12)


def test_trapezoid_step_matches_recursion():
    eta, dt, dw = 0.4, 0.1, 0.05
    h = 0.5 * 2.0 * dt
    expected = (eta * (1 - h) + 2.0 * 1.0 * dt + 0.3 * dw) / (1 + h)
    assert ou_trapezoid_step(eta, dt, dw, 1.0, 2.0, 0.3) == pytest.approx(expected)


def test_invalid_process_parameters():
    with pytest.raises(ConfigurationError):
        OuProcess(mean_reversion=-1.0)
    with pytest.raises(ConfigurationError):
        OuProcess(diffusion=-0.1)


# ---- ramps -------------------------------------------------------------

def test_constant_ramp():
    prof = RampProfile([(0.0, 1.0)])
    assert np.all(ramp_value(prof, np.array([-10.0, 0.0, 5e4])) == 1.0)


def test_ramp_interpolation_and_clamping():
    prof = RampProfile([(0, 1.0), (3600, 1.1)])
    assert ramp_value(prof, 1800) == pytest.approx(1.05)
    assert ramp_value(prof, -5.0) == 1.0
    assert ramp_value(prof, 1e6) == pytest.approx(1.1)


def test_ramp_validation():
    with pytest.raises(ConfigurationError):
        RampProfile([])
    with pytest.raises(ConfigurationError):
        RampProfile([(10, 1.0), (5, 1.1)])
    with pytest.raises(ConfigurationError):
        RampProfile([(0, 0.0)])
    prof = RampProfile([(0, 1.0)])
    prof.breakpoints = []
    with pytest.raises(ConfigurationError):
        ramp_value(prof, 0.0)


def test_shipped_daily_ramps():
    cfg = load_scenario(1, study="longterm")
    from fqsim.scenario import _ramps
    load, wind = _ramps(cfg.params)
    assert load.times[0] == 0 and load.times[-1] == 86400
    assert 0.89 <= load.levels.min() and load.levels.max() <= 1.11
    assert np.all(wind.levels > 0)


# ---- composition contract ----------------------------------------------

def test_effective_load_is_nominal_times_ramp_times_noise():
    cfg = load_scenario(1, study="longterm")
    net = load_case()
    ramp = RampProfile([(0, 0.9), (86400, 1.1)])
    sys_ = PowerSystem(net, build_devices(cfg, net), noise=NoiseSettings(wind=False), load_ramp=ramp, t0=43200)
    eta = np.array([0.02, -0.01, 0.0])
    p_nom = np.array([ld.p for ld in net.loads])
    t = 64800.0
    expected = np.sum(p_nom * ramp_value(ramp, t) * (1 + eta))
    assert sys_.served_load(eta, t).real == pytest.approx(expected, rel=1e-12)
    # zero-mean noise leaves the ramped value on average
    assert sys_.served_load(np.zeros(3), t).real == pytest.approx(p_nom.sum() * ramp_value(ramp, t))
