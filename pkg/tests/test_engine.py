"""Implicit trapezoidal SDAE stepping, Wiener sampling, events and traces."""

import dataclasses
import math

import numpy as np
import pytest
from numba import njit
from scipy.linalg import expm

from fqsim.engine import (IntegrationConfig, SdaeModel, Trace, WienerPath, apply_event, integrate,
                          sample_wiener_increments, step)
from fqsim.errors import NumericalDivergence, StepFailure
from fqsim.network import Load, load_case
from fqsim.scenario import EventSpec, build_devices, build_system, load_scenario, run_scenario
from fqsim.system import PowerSystem


# ---- test models ---------------------------------------------------------

@njit(cache=True)
def _scalar_fg(x, y, eta, t, data, f, g):
    f[0] = data[0][0] * x[0]


@njit(cache=True)
def _linear_dae_fg(x, y, eta, t, data, f, g):
    f[0] = -x[0] + y[0]
    f[1] = -2.0 * x[1] + x[0]
    g[0] = y[0] - 0.5 * x[1]


@njit(cache=True)
def _diffusion_fg(x, y, eta, t, data, f, g):
    f[0] = 0.0
    g[0] = y[0] - eta[0]


@njit(cache=True)
def _cubic_fg(x, y, eta, t, data, f, g):
    f[0] = -x[0] ** 3


@njit(cache=True)
def _blowup_fg(x, y, eta, t, data, f, g):
    f[0] = x[0] * np.inf if t > 0.25 else 0.0


DATA = (np.array([-1.0]),)


def linear_dae_model():
    return SdaeModel(_linear_dae_fg, DATA, [1.0, 0.0], [0.0])


def linear_dae_exact(t):
    """Oracle: the reduced ODE x' = A x solved by the matrix exponential."""
    a = np.array([[-1.0, 0.5], [1.0, -2.0]])
    return expm(a * t) @ np.array([1.0, 0.0])


def no_event_config(index, horizon=60.0, **kw):
    cfg = load_scenario(index, **kw)
    return dataclasses.replace(cfg, events=[], horizon=horizon)


# ---- step ----------------------------------------------------------------

def test_scalar_step_matches_closed_form():
    model = SdaeModel(_scalar_fg, DATA, [1.0], [])
    x, y, e = step(model, [1.0], [], [], 0.01, [], newton_tol=1e-14)
    lam, dt = -1.0, 0.01
    assert x[0] == pytest.approx((1 + lam * dt / 2) / (1 - lam * dt / 2), rel=1e-11)


def test_pure_diffusion_telescopes():
    model = SdaeModel(_diffusion_fg, DATA, [0.0], [0.0], eta0=[0.0], ou=[0.0, 0.0, 1.0])
    cfg = IntegrationConfig(t_end=5.0, dt=0.01, newton_tol=1e-12)
    path = WienerPath.sample(1, cfg.n_steps, cfg.dt, seed=11)
    trace = integrate(model, cfg, wiener=path)
    np.testing.assert_array_equal(trace["eta0"][1:], np.cumsum(path.increments[:, 0]))
    assert np.max(np.abs(trace["y0"] - trace["eta0"])) < 1e-12


def test_equilibrium_step_is_fixed_point():
    system = build_system(load_scenario(9))
    x, y, e = step(system, system.x0, system.y0, system.eta0, 0.01, np.zeros(len(system.eta0)),
                   newton_tol=1e-10)
    assert np.max(np.abs(x - system.x0)) < 1e-9
    assert np.max(np.abs(y - system.y0)) < 1e-9


def test_trapezoid_second_order_on_linear_dae():
    errors, steps = [], [0.1, 0.05, 0.025, 0.0125, 0.00625]
    for dt in steps:
        cfg = IntegrationConfig(t_end=1.0, dt=dt, newton_tol=1e-14, newton_max_iter=20)
        trace = integrate(linear_dae_model(), cfg)
        x_end = np.array([trace["x0"][-1], trace["x1"][-1]])
        errors.append(np.max(np.abs(x_end - linear_dae_exact(1.0))))
        assert abs(trace["y0"][-1] - 0.5 * trace["x1"][-1]) < 1e-13
    slope = np.polyfit(np.log(steps), np.log(errors), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.2)


def test_newton_failure_carries_time_and_residual():
    model = SdaeModel(_cubic_fg, DATA, [1.0], [])
    cfg = IntegrationConfig(t_end=1.0, dt=0.5, newton_tol=1e-300, newton_max_iter=1)
    with pytest.raises(StepFailure) as info:
        integrate(model, cfg)
    assert not isinstance(info.value, NumericalDivergence)
    assert info.value.time == pytest.approx(0.5)
    assert info.value.residual > 0


def test_non_finite_state_is_divergence():
    model = SdaeModel(_blowup_fg, DATA, [1.0], [])
    with pytest.raises(NumericalDivergence) as info:
        integrate(model, IntegrationConfig(t_end=1.0, dt=0.1))
    assert info.value.time == pytest.approx(0.3)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegrationConfig(dt=0.0)
    with pytest.raises(ValueError):
        IntegrationConfig(t_start=5.0, t_end=5.0)
    with pytest.raises(ValueError):
        IntegrationConfig(record_every=0)
    assert IntegrationConfig(t_end=120.0, dt=0.01).n_steps == 12000


# ---- Wiener increments -----------------------------------------------------

def test_zero_dt_gives_zero_increments():
    assert np.array_equal(sample_wiener_increments(4, 0.0, np.random.default_rng(0)), np.zeros(4))
    with pytest.raises(ValueError):
        sample_wiener_increments(2, -0.1, np.random.default_rng(0))


def test_wiener_increment_statistics():
    n, dt = 100_000, 0.01
    dw = WienerPath.sample(2, n, dt, seed=2024).increments
    for ch in range(2):
        assert abs(dw[:, ch].mean()) < 4 * math.sqrt(dt) / math.sqrt(n)
        assert abs(dw[:, ch].var() / dt - 1) < 0.05
    assert abs(np.corrcoef(dw[:, 0], dw[:, 1])[0, 1]) < 0.02


def test_wiener_path_is_seeded():
    a = WienerPath.sample(3, 50, 0.02, seed=5).increments
    b = WienerPath.sample(3, 50, 0.02, seed=5).increments
    c = WienerPath.sample(3, 50, 0.02, seed=6).increments
    assert np.array_equal(a, b) and not np.array_equal(a, c)


# ---- integrate on the grid model -------------------------------------------

@pytest.mark.parametrize("index", [1, 4, 6, 9, 10])
def test_noiseless_equilibrium_holds_for_60_s(index):
    trace = run_scenario(no_event_config(index))
    assert trace.times[-1] == pytest.approx(60.0)
    assert np.max(np.abs(trace.f_coi - 50.0)) < 1e-3


def test_same_seed_bit_identical_traces():
    cfg = load_scenario(3, study="longterm", horizon=600.0)
    a, b = run_scenario(cfg, seed=4), run_scenario(cfg, seed=4)
    c = run_scenario(cfg, seed=5)
    assert list(a.channels) == list(b.channels)
    for name in a.channels:
        np.testing.assert_array_equal(a[name], b[name])
    assert not np.array_equal(a.f_coi, c.f_coi)


def test_load_loss_event_resolve_and_frequency_rise():
    cfg = dataclasses.replace(load_scenario(1), horizon=5.0)
    trace = run_scenario(cfg)
    k_event = int(round(1.0 / cfg.dt))
    assert np.max(np.abs(trace.f_coi[:k_event + 1] - 50.0)) < 1e-9
    assert np.all(np.diff(trace.f_coi[k_event + 1:k_event + 100]) > 0)

    system = build_system(cfg)
    y1 = apply_event(system, EventSpec(1.0, "load_loss", 6), system.x0, system.y0, system.eta0, 1.0,
                     tol=1e-10)
    _, g = system.evaluate(system.x0, y1, system.eta0, 1.0)
    assert np.max(np.abs(g)) < 1e-10


def test_algebraic_residual_after_every_step():
    system = build_system(load_scenario(3))
    x, e = system.x0, system.eta0
    y = apply_event(system, EventSpec(0.0, "load_loss", 6), x, system.y0, e, 0.0)
    t = 0.0
    for _ in range(50):
        x, y, e = step(system, x, y, e, 0.01, np.zeros(len(e)), t=t, newton_tol=1e-9)
        t += 0.01
        _, g = system.evaluate(x, y, e, t)
        assert np.max(np.abs(g)) <= 1e-9


def test_null_event_leaves_solution_unchanged():
    cfg = load_scenario(1)
    net = load_case()
    net.loads.append(Load(7, 0.0, 0.0))
    system = PowerSystem(net, build_devices(cfg, net))
    y1 = apply_event(system, EventSpec(0.0, "load_loss", 7), system.x0, system.y0, system.eta0, 0.0)
    assert np.max(np.abs(y1 - system.y0)) < 1e-12


def test_bus6_loss_removes_almost_30_percent_of_load():
    system = build_system(load_scenario(1))
    before = system.served_load().real
    apply_event(system, EventSpec(1.0, "load_loss", 6), system.x0, system.y0, system.eta0, 1.0)
    after = system.served_load().real
    drop = 1 - after / before
    assert 0.25 < drop < 0.30


def test_reconnect_inverts_disconnect():
    system = build_system(load_scenario(2))
    x, e = system.x0, system.eta0
    y1 = apply_event(system, EventSpec(1.0, "load_loss", 6), x, system.y0, e, 1.0)
    assert np.max(np.abs(y1 - system.y0)) > 1e-3
    y2 = apply_event(system, EventSpec(1.0, "load_reconnect", 6), x, y1, e, 1.0)
    assert np.max(np.abs(y2 - system.y0)) < 1e-9


# ---- traces ------------------------------------------------------------------

def test_trace_csv_round_trip(tmp_path):
    tr = Trace(np.array([0.0, 0.01, 0.02]), {"f_coi": np.array([50.0, 50.1234567890123, 49.9]),
                                             "v_bus1": np.array([1.04, 1.04, 1.0400001])})
    path = tr.to_csv(tmp_path / "t.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "time,f_coi,v_bus1"
    assert lines[2].startswith("0.010000,")
    back = Trace.from_csv(path)
    np.testing.assert_array_equal(back.f_coi, tr.f_coi)
    np.testing.assert_array_equal(back["v_bus1"], tr["v_bus1"])
    np.testing.assert_allclose(back.times, tr.times, atol=5e-7)


def test_recording_spacing_is_uniform():
    cfg = load_scenario(9, study="longterm", horizon=600.0)
    trace = run_scenario(cfg, seed=1)
    spacing = np.diff(trace.times)
    assert np.allclose(spacing, cfg.dt * cfg.record_every)
    assert trace.times[0] == pytest.approx(cfg.t_start)
