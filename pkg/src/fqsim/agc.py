"""Discrete integral secondary controller (AGC).

The integral of the frequency error advances every simulation step by the
trapezoidal rule; the held set-point only changes at integer multiples of
the issuance period and is split among units by participation factors.
State lives in a flat float array so the same kernel runs inside the
compiled time loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ConfigurationError

# controller array layout
C_ENABLED, C_KI, C_PERIOD, C_INTEGRAL, C_MIN, C_MAX = 0, 1, 2, 3, 4, 5
C_NEXT, C_LAST_ERR, C_LAST_T, C_HELD, C_STARTED, C_FNOM = 6, 7, 8, 9, 10, 11
C_NCOL = 12


@njit(cache=True)
def agc_advance(c, f_measured, t):
    """Advance the controller to time ``t``; True when the held set-point was reissued."""
    if c[C_ENABLED] < 0.5:
        return False
    err = c[C_FNOM] - f_measured
    if c[C_STARTED] > 0.5:
        c[C_INTEGRAL] += 0.5 * (c[C_LAST_ERR] + err) * (t - c[C_LAST_T])
    c[C_STARTED] = 1.0
    c[C_LAST_ERR] = err
    c[C_LAST_T] = t
    ki = c[C_KI]
    if ki > 0.0:
        lo = c[C_MIN] / ki
        hi = c[C_MAX] / ki
        if c[C_INTEGRAL] < lo:
            c[C_INTEGRAL] = lo
        elif c[C_INTEGRAL] > hi:
            c[C_INTEGRAL] = hi
    issued = False
    eps = 1e-9 * c[C_PERIOD]
    while t >= c[C_NEXT] - eps:
        c[C_NEXT] += c[C_PERIOD]
        c[C_HELD] = ki * c[C_INTEGRAL]
        issued = True
    return issued


@dataclass
class AgcController:
    """Integral gain ``ki`` in pu/(Hz s); set-points are system-base pu."""

    ki: float = 0.05
    period: float = 2.0
    participation: dict[str, float] = field(default_factory=dict)
    limits: tuple[float, float] = (-1.0, 1.0)
    f_nominal: float = 50.0
    enabled: bool = True

    def __post_init__(self):
        if self.period <= 0:
            raise ConfigurationError("AGC issuance period must be positive")
        if self.ki < 0:
            raise ConfigurationError("AGC integral gain must be non-negative")
        if self.limits[0] > 0 or self.limits[1] < 0:
            raise ConfigurationError("AGC limits must bracket zero")
        if self.participation:
            vals = np.array(list(self.participation.values()), dtype=float)
            if np.any(vals < 0) or not math.isclose(vals.sum(), 1.0, abs_tol=1e-9):
                raise ConfigurationError("participation factors must be non-negative and sum to 1")
        self.state = np.zeros(C_NCOL)
        self.reset(0.0)

    @classmethod
    def equal_share(cls, units, **kw) -> AgcController:
        units = list(units)
        if not units:
            raise ConfigurationError("AGC needs at least one participating unit")
        return cls(participation={u: 1.0 / len(units) for u in units}, **kw)

    def reset(self, t0: float = 0.0) -> None:
        c = self.state
        c[:] = 0.0
        c[C_ENABLED] = 1.0 if self.enabled else 0.0
        c[C_KI], c[C_PERIOD] = self.ki, self.period
        c[C_MIN], c[C_MAX] = self.limits
        c[C_FNOM] = self.f_nominal
        c[C_NEXT] = (math.floor(t0 / self.period + 1e-9) + 1) * self.period

    @property
    def held(self) -> float:
        return float(self.state[C_HELD])

    @property
    def integral(self) -> float:
        return float(self.state[C_INTEGRAL])

    def setpoints(self) -> dict[str, float]:
        return {u: self.held * share for u, share in self.participation.items()}


def agc_update(controller: AgcController, f_measured: float, t: float) -> dict[str, float]:
    """Feed one measurement; returns the held set-point adjustment per unit."""
    if t < controller.state[C_LAST_T] and controller.state[C_STARTED] > 0.5:
        raise ValueError("AGC time must be non-decreasing")
    agc_advance(controller.state, float(f_measured), float(t))
    return controller.setpoints()
