"""Acceptance criteria 1-8.

Each test records one PASS/FAIL line (shown in the terminal summary and
printed live) before asserting. Criteria 2-6 simulate the catalog under
the shipped default parameters and are marked slow.
"""

import dataclasses
import math
import time
from dataclasses import asdict
from decimal import Decimal

import numpy as np
import pytest

from fqsim import metrics as fm
from fqsim.engine import IntegrationConfig, WienerPath, integrate
from fqsim.scenario import catalog, load_scenario, run_scenario

from oracles import (long_term_oracle, random_contingency_trace, random_longterm_trace, restore_oracle,
                     rocof_oracle)
from reference_tables import CONTINGENCY, NORMAL, SUSPECT_DELTA_ROWS
from test_engine import linear_dae_exact, linear_dae_model

LONGTERM_SEEDS = (0, 1, 2, 3, 4)


@pytest.fixture
def verdict(request, capsys):
    def record(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
        request.config.acceptance_lines.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return ok
    return record


def decimals(text):
    return -Decimal(text).as_tuple().exponent


# ---- shared simulation results ---------------------------------------------------------

@pytest.fixture(scope="module")
def contingency():
    start = time.perf_counter()
    out = {}
    for cfg in catalog("contingency"):
        trace = run_scenario(cfg)
        out[cfg.index, cfg.agc_enabled] = fm.contingency_metrics(trace, cfg.events[0].time)
    return out, time.perf_counter() - start


@pytest.fixture(scope="module")
def longterm():
    start = time.perf_counter()
    out = {}
    for cfg in catalog("longterm"):
        stats = [fm.long_term_stats(run_scenario(cfg, seed=s)) for s in LONGTERM_SEEDS]
        out[cfg.index, cfg.agc_enabled] = {k: float(np.mean([asdict(m)[k] for m in stats]))
                                           for k in asdict(stats[0])}
    return out, time.perf_counter() - start


# ---- 1: metric-definition fidelity -------------------------------------------------------

def test_criterion_1_metric_definition_fidelity(verdict):
    start = time.perf_counter()
    labels_ok = 0
    for name, z, _, r, tr, label in CONTINGENCY:
        sec = fm.classify_security((float(z), float(r), None if tr is None else float(tr)))
        labels_ok += sec.value == label

    matched, strict, misses = 0, 0, []
    for i, (name, s_minus, s_plus, printed) in enumerate(NORMAL):
        agc = i >= 11
        delta = fm.delta_sigma(float(s_minus), float(s_plus))
        err = abs(delta - float(printed))
        # +-2 in the last digit the printed operands can resolve
        d = min(decimals(s_minus), decimals(s_plus), decimals(printed))
        ok = err <= 2 * 10.0**-d + 1e-15
        strict += err <= 2 * 10.0**-decimals(printed) + 1e-15
        if ok:
            matched += 1
        else:
            misses.append((name, agc))
    elapsed = time.perf_counter() - start
    ok = labels_ok == 22 and matched >= 18 and set(misses) <= SUSPECT_DELTA_ROWS and elapsed < 1.0
    verdict(1, ok, f"security labels {labels_ok}/22; delta-sigma rows {matched}/22 "
                   f"(misses: {sorted(misses)}; last-digit-of-delta reading {strict}/22); {elapsed:.3f} s")
    assert ok


# ---- 2-5: contingency study ---------------------------------------------------------------

@pytest.mark.slow
def test_criterion_2_contingency_ordering(verdict, contingency):
    res, elapsed = contingency
    details, ok = [], elapsed < 120.0
    for agc in (False, True):
        z = {i: res[i, agc].zenith for i in range(1, 12)}
        order = max(z[8], z[9]) < z[6] < z[3] < z[1]
        gfm_secure = all(res[i, agc].security == fm.Security.SECURE for i in (8, 9, 10, 11))
        s1 = res[1, agc].security == fm.Security.INSECURE and z[1] > 51.0
        ok &= order and gfm_secure and s1
        details.append(f"{'AGC' if agc else 'no AGC'}: z8={z[8]:.3f} z9={z[9]:.3f} z6={z[6]:.3f} "
                       f"z3={z[3]:.3f} z1={z[1]:.3f} gfm_secure={gfm_secure} s1_insecure={s1}")
    verdict(2, ok, "; ".join(details) + f"; 22 runs in {elapsed:.1f} s")
    assert ok


@pytest.mark.slow
def test_criterion_3_condenser_reduces_rocof(verdict, contingency):
    res, _ = contingency
    ok, details = True, []
    for agc in (False, True):
        for without, with_c in ((3, 4), (6, 7)):
            a, b = res[without, agc].max_rocof, res[with_c, agc].max_rocof
            red = 1 - b / a
            ok &= b < a and red >= 0.05
            details.append(f"{without}->{with_c}{' AGC' if agc else ''}: {a:.3f}->{b:.3f} ({red:.1%})")
    verdict(3, ok, "; ".join(details))
    assert ok


@pytest.mark.slow
def test_criterion_4_dead_band_effects(verdict, contingency):
    res, _ = contingency
    ok, details = True, []
    for agc in (False, True):
        b200, b15 = res[5, agc], res[6, agc]
        bess = b15.zenith < b200.zenith and b15.max_rocof < b200.max_rocof
        w200, w15 = res[2, agc].max_rocof, res[3, agc].max_rocof
        wind = abs(w15 - w200) / w200 < 0.05
        ok &= bess and wind
        details.append(f"{'AGC' if agc else 'no AGC'}: BESS zenith {b200.zenith:.3f}->{b15.zenith:.3f}, "
                       f"RoCoF {b200.max_rocof:.3f}->{b15.max_rocof:.3f}; wind RoCoF {w200:.3f} vs {w15:.3f} "
                       f"({abs(w15 - w200) / w200:.1%})")
    verdict(4, ok, "; ".join(details))
    assert ok


@pytest.mark.slow
def test_criterion_5_agc_restoration(verdict, contingency):
    res, _ = contingency
    ok, details = True, []
    for i in (5, 6, 7):
        off, on = res[i, False].t_restore, res[i, True].t_restore
        ok &= off is None and on is not None and math.isfinite(on) and on > 10.0
        details.append(f"{i}: {'none' if off is None else f'{off:.2f}'} -> {'none' if on is None else f'{on:.2f}'} s")
    verdict(5, ok, "; ".join(details))
    assert ok


# ---- 6: long-term study --------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_6_longterm_ordering(verdict, longterm):
    res, elapsed = longterm
    ok, details = elapsed < 1800.0, []
    for agc in (False, True):
        s = {i: res[i, agc]["sigma_f"] for i in range(1, 12)}
        order = s[9] < s[8] < min(s[2], s[3], s[4])
        zero = {i: res[i, agc]["minutes_outside_100mHz"] for i in (6, 7, 8, 9, 10, 11)}
        zero_ok = all(v == 0.0 for v in zero.values())
        ok &= order and zero_ok
        details.append(f"{'AGC' if agc else 'no AGC'}: s9={s[9]:.5f} s8={s[8]:.5f} "
                       f"s2-4=({s[2]:.5f}, {s[3]:.5f}, {s[4]:.5f}) "
                       f"minutes outside 6-11={[round(v, 2) for v in zero.values()]}")
    s1_off, s1_on = res[1, False]["sigma_f"], res[1, True]["sigma_f"]
    ok &= s1_on <= s1_off
    details.append(f"scenario 1 sigma with AGC {s1_on:.5f} <= without {s1_off:.5f}")
    verdict(6, ok, "; ".join(details) + f"; {len(LONGTERM_SEEDS)} seeds x 22 configs in {elapsed:.0f} s")
    assert ok


# ---- 7: numerical properties ---------------------------------------------------------------

def test_criterion_7_numerical_properties(verdict):
    steps, errors = [0.1, 0.05, 0.025, 0.0125, 0.00625], []
    for dt in steps:
        trace = integrate(linear_dae_model(), IntegrationConfig(t_end=1.0, dt=dt, newton_tol=1e-14,
                                                                newton_max_iter=20))
        errors.append(np.max(np.abs([trace["x0"][-1] - linear_dae_exact(1.0)[0],
                                     trace["x1"][-1] - linear_dae_exact(1.0)[1]])))
    slope = float(np.polyfit(np.log(steps), np.log(errors), 1)[0])
    slope_ok = abs(slope - 2.0) <= 0.2

    n, dt = 100_000, 0.01
    dw = WienerPath.sample(2, n, dt, seed=2024).increments
    mean_ok = all(abs(dw[:, c].mean()) < 4 * math.sqrt(dt / n) for c in range(2))
    var_ok = all(abs(dw[:, c].var() / dt - 1) < 0.05 for c in range(2))
    rho = float(np.corrcoef(dw[:, 0], dw[:, 1])[0, 1])
    wiener_ok = mean_ok and var_ok and abs(rho) < 0.02

    drift = 0.0
    for index in range(1, 12):
        cfg = dataclasses.replace(load_scenario(index), events=[], horizon=60.0)
        drift = max(drift, float(np.max(np.abs(run_scenario(cfg).f_coi - 50.0))))
    eq_ok = drift < 1e-3

    cfg = load_scenario(10, study="longterm", horizon=600.0)
    a, b = run_scenario(cfg, seed=7), run_scenario(cfg, seed=7)
    det_ok = all(np.array_equal(a[c], b[c]) for c in a.channels)

    ok = slope_ok and wiener_ok and eq_ok and det_ok
    verdict(7, ok, f"trapezoid slope {slope:.3f}; Wiener mean/var/corr ok={wiener_ok} (rho={rho:.4f}); "
                   f"60 s equilibrium max |f-50| {drift:.2e} Hz over 11 scenarios; bit-identical reruns={det_ok}")
    assert ok


# ---- 8: metric oracles ---------------------------------------------------------------------

def test_criterion_8_metric_oracles(verdict):
    def close(a, b):
        return abs(a - b) <= 1e-9 * max(abs(a), abs(b)) + 1e-12

    rocof_ok = restore_ok = stats_ok = 0
    for seed in range(100):
        t, f, ev = random_contingency_trace(np.random.default_rng(50_000 + seed))
        rocof_ok += close(fm.max_rocof(t, freq=f), rocof_oracle(t, f))
        got, want = fm.restore_time(t, ev, freq=f), restore_oracle(t, f, ev)
        restore_ok += (got is None and want is None) or (got is not None and want is not None and close(got, want))
        t, f = random_longterm_trace(np.random.default_rng(90_000 + seed))
        got = asdict(fm.long_term_stats(t, freq=f))
        stats_ok += all(close(got[k], v) for k, v in long_term_oracle(t, f).items())
    ok = rocof_ok == restore_ok == stats_ok == 100
    verdict(8, ok, f"max_rocof {rocof_ok}/100, restore_time {restore_ok}/100, long_term_stats {stats_ok}/100 "
                   f"at 1e-9 relative")
    assert ok
