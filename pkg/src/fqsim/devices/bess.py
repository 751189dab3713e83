from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from . import kernels as k
from .base import Device


def bess_pfc_power(df_hz, dead_band, droop, p0=0.0):
    """Saturated primary-control power command (device base) before the response lag."""
    return float(k.clip(p0 + k.droop_power(float(df_hz), float(dead_band), float(droop)), -1.0, 1.0))


class GflBess(Device):
    """Grid-following battery: droop PFC through a dead-band, Q-V droop, first-order lags.

    States: active and reactive output (device base), washout filter on
    the bus angle and stored energy (device-base pu times hours, counted
    from the initial charge).
    """

    family = "bess"
    n_states = k.S_NSTATE
    state_names = ("p", "q", "z", "energy")
    pf_role = "zero"

    def __init__(self, name, bus, *, rating=0.25, droop=0.002, dead_band=0.015, t_lag=0.2,
                 t_q=0.1, k_v=2.0, t_washout=0.05):
        super().__init__(name, bus)
        if t_lag <= 0:
            raise ConfigurationError(f"{name}: response lag must be positive")
        if rating <= 0:
            raise ConfigurationError(f"{name}: rating must be positive")
        self.rating = rating
        self.droop, self.dead_band = droop, dead_band
        self.t_lag, self.t_q, self.k_v, self.t_washout = t_lag, t_q, k_v, t_washout
        self.p0 = 0.0
        self.q0 = 0.0
        self.vref = 1.0

    def initialize(self, v, theta, p, q, **inputs):
        self.p0 = p / self.rating
        self.q0 = q / self.rating
        if abs(self.p0) > 1:
            raise ConfigurationError(f"{self.name}: dispatch exceeds rating")
        self.vref = v
        self.x0 = np.array([self.p0, self.q0, theta, 0.0])
        return self.x0

    def param_row(self):
        row = np.zeros(k.S_NCOL)
        row[k.S_RATING], row[k.S_P0], row[k.S_Q0] = self.rating, self.p0, self.q0
        row[k.S_R], row[k.S_DB], row[k.S_TB] = self.droop, self.dead_band, self.t_lag
        row[k.S_TQ], row[k.S_KV], row[k.S_VREF], row[k.S_TW] = self.t_q, self.k_v, self.vref, self.t_washout
        return row

    def _rhs(self, row, x, v, theta, dx, **inputs):
        return k.bess_rhs(row, x, 0, v, theta, dx)
