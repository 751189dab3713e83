"""Fixed-step integrator for stochastic differential-algebraic models.

The drift of the differential states and of the stochastic channels is
advanced with the implicit trapezoidal rule; the Newton system stacks the
trapezoidal defect of ``f`` with the algebraic residual ``g``. Diffusion
enters the stochastic channels as an Euler-Maruyama increment evaluated at
the start of the step (Ito), inside the same step, so the returned point
satisfies ``g = 0`` with the final ``eta``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _core
from .errors import EventError, NumericalDivergence, StepFailure


@dataclass
class IntegrationConfig:
    t_start: float = 0.0
    t_end: float = 10.0
    dt: float = 0.01
    newton_tol: float = 1e-8
    newton_max_iter: int = 10
    record_every: int = 1
    jacobian_refresh: int = 4  # refresh the chord Jacobian when a step needs more iterations

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end <= self.t_start:
            raise ValueError("t_end must exceed t_start")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round((self.t_end - self.t_start) / self.dt))


@dataclass
class WienerPath:
    increments: np.ndarray
    dt: float
    rng_seed: int

    @classmethod
    def sample(cls, n_channels: int, n_steps: int, dt: float, seed: int) -> WienerPath:
        rng = np.random.default_rng(seed)
        inc = np.empty((n_steps, n_channels))
        for k in range(n_steps):
            inc[k] = sample_wiener_increments(n_channels, dt, rng)
        return cls(inc, dt, seed)


def sample_wiener_increments(n: int, dt: float, rng) -> np.ndarray:
    """``n`` independent N(0, dt) draws."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if dt == 0:
        return np.zeros(n)
    return rng.normal(0.0, math.sqrt(dt), n)


@dataclass
class Trace:
    times: np.ndarray
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def f_coi(self) -> np.ndarray:
        return self.channels["f_coi"]

    def __getitem__(self, name) -> np.ndarray:
        return self.channels[name]

    def __len__(self):
        return len(self.times)

    def to_csv(self, path) -> Path:
        path = Path(path)
        names = list(self.channels)
        cols = [self.channels[n] for n in names]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", *names])
            for i, t in enumerate(self.times):
                w.writerow([f"{t:.6f}", *(repr(float(c[i])) for c in cols)])
        return path

    @classmethod
    def from_csv(cls, path) -> Trace:
        with Path(path).open(newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        data = np.array(body, dtype=float).reshape(len(body), len(header))
        return cls(data[:, 0].copy(), {n: data[:, j].copy() for j, n in enumerate(header[1:], start=1)})


class SdaeModel:
    """Minimal model: compiled ``fg`` plus OU channel rows.

    ``post(x, y, eta, t, dt, data, ctrl) -> bool`` runs after every accepted
    step (discrete controllers; True when parameters changed) and
    ``out(x, y, y_prev, eta, t, dt, data, ctrl, row)`` fills one recorded
    row. Both are compiled functions; the defaults do nothing and record
    every variable.
    """

    post = staticmethod(_core.no_post)
    out = staticmethod(_core.record_all)

    def __init__(self, fg, data, x0, y0, eta0=None, ou=None):
        self.fg = fg
        self.data = data
        self.ctrl = np.zeros(1)
        self.x0 = np.asarray(x0, dtype=float)
        self.y0 = np.asarray(y0, dtype=float)
        self.eta0 = np.zeros(0) if eta0 is None else np.asarray(eta0, dtype=float)
        self.ou = np.zeros((len(self.eta0), 3)) if ou is None else np.asarray(ou, dtype=float).reshape(-1, 3)

    def channel_names(self) -> list[str]:
        return ([f"x{i}" for i in range(len(self.x0))] + [f"y{i}" for i in range(len(self.y0))]
                + [f"eta{i}" for i in range(len(self.eta0))])

    def reset(self, t0: float) -> None:
        """Restore parameters mutated by events or controllers."""

    def apply_event(self, event, x, y, eta, t) -> None:
        raise EventError(f"model does not support event {event!r}")

    def evaluate(self, x, y, eta, t):
        return _core.evaluate(self.fg, self.data, np.asarray(x, float), np.asarray(y, float),
                              np.asarray(eta, float), t)


def _raise_failure(status, t, err):
    if status == _core.DIVERGED or not np.isfinite(err):
        raise NumericalDivergence(f"non-finite state at t={t:.6f} s", time=t, residual=err)
    raise StepFailure(f"Newton did not converge at t={t:.6f} s (residual {err:.3e})", time=t, residual=err)


def _empty_jacobian(model):
    n = len(model.x0) + len(model.y0)
    jinv = np.zeros((n, n))
    jinv[0, 0] = np.nan
    return jinv


def solve_algebraic(model, x, y, eta, t, tol=1e-10, max_iter=50):
    try:
        y1, status, _, err = _core.solve_algebraic(model.fg, model.data, np.asarray(x, float),
                                                   np.asarray(y, float), np.asarray(eta, float), t,
                                                   tol, max_iter)
    except np.linalg.LinAlgError:
        raise EventError(f"algebraic Jacobian is singular at t={t:.6f} s") from None
    if status != _core.OK:
        raise EventError(f"algebraic re-solve failed at t={t:.6f} s (residual {err:.3e})")
    return y1


def step(model, state, algebraic, eta, dt, dw, t=0.0, newton_tol=1e-10, newton_max_iter=20):
    """One step from time ``t``: trapezoidal drift, Ito diffusion increment ``dw``.

    Returns ``(state', algebraic', eta')``. Discrete controllers do not run.
    """
    x = np.array(state, dtype=float)
    y = np.array(algebraic, dtype=float)
    e = np.array(eta, dtype=float)
    dw = np.asarray(dw, dtype=float).reshape(1, len(e))
    rec = np.empty((1, 1))
    try:
        status, _, _, err = _core.run_steps(model.fg, _core.no_post, _core.record_all, model.data,
                                            model.ctrl, x, y, e, 0, 1, t, dt, dw, model.ou,
                                            _empty_jacobian(model), newton_tol, newton_max_iter,
                                            newton_max_iter, 1 << 62, rec, 0)
    except np.linalg.LinAlgError:
        raise StepFailure(f"singular step Jacobian at t={t + dt:.6f} s", time=t + dt) from None
    if status != _core.OK:
        _raise_failure(status, t + dt, err)
    return x, y, e


def apply_event(model, event, x, y, eta, t, tol=1e-10):
    """Apply a topology/parameter change and re-solve ``y`` with ``x`` and ``eta`` frozen."""
    model.apply_event(event, x, y, eta, t)
    return solve_algebraic(model, x, y, eta, t, tol=tol)


def integrate(model, config: IntegrationConfig, events=(), seed: int = 0,
              wiener: WienerPath | None = None) -> Trace:
    """Run ``model`` over the configured horizon.

    Deterministic for a given seed. Events fire at the first step boundary
    at or after their time, followed by an algebraic re-solve.
    """
    n_steps = config.n_steps
    dt = config.dt
    n_eta = len(model.eta0)
    if wiener is None:
        wiener = WienerPath.sample(n_eta, n_steps, dt, seed)
    if wiener.increments.shape != (n_steps, n_eta):
        raise ValueError("Wiener path does not match the horizon and channel count")
    dw = np.ascontiguousarray(wiener.increments)

    t0 = config.t_start
    model.reset(t0)
    x = model.x0.copy()
    y = model.y0.copy()
    eta = model.eta0.copy()
    jinv = _empty_jacobian(model)

    names = model.channel_names()
    n_rec = n_steps // config.record_every + 1
    rec = np.empty((n_rec, len(names)))
    model.out(x, y, y, eta, t0, dt, model.data, model.ctrl, rec[0])
    r = 1

    # event -> first global step index at or after its time
    schedule = []
    for ev in sorted(events, key=lambda e: e.time):
        k = int(np.ceil((ev.time - t0) / dt - 1e-9))
        if k > n_steps:
            continue
        schedule.append((max(k, 0), ev))

    k = 0
    tol = config.newton_tol
    while True:
        while schedule and schedule[0][0] <= k:
            y = apply_event(model, schedule.pop(0)[1], x, y, eta, t0 + k * dt, tol=min(tol, 1e-10))
            jinv[0, 0] = np.nan
        if k >= n_steps:
            break
        k_end = schedule[0][0] if schedule else n_steps
        try:
            status, done, r, err = _core.run_steps(
                model.fg, model.post, model.out, model.data, model.ctrl, x, y, eta, k, k_end - k, t0, dt,
                dw, model.ou, jinv, tol, config.newton_max_iter, config.jacobian_refresh,
                config.record_every, rec, r)
        except np.linalg.LinAlgError:
            raise StepFailure(f"singular step Jacobian after t={t0 + k * dt:.6f} s", time=t0 + k * dt) from None
        if status != _core.OK:
            _raise_failure(status, t0 + (k + done + 1) * dt, err)
        k = k_end

    times = t0 + dt * config.record_every * np.arange(r)
    channels = {name: rec[:r, j].copy() for j, name in enumerate(names)}
    return Trace(times, channels, meta={"seed": seed, "dt": dt})
