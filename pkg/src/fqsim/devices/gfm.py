"""Grid-forming converters: power-filter droop and virtual synchronous machine.

Both are outer loops driving the angle of a voltage source behind a
coupling reactance; inner current loops are omitted. Reactive power is
handled by a Q-V droop on the internal voltage magnitude. When the
terminal current exceeds its limit the source switches to a
magnitude-limited current along the same direction.
"""

from __future__ import annotations

import cmath

import numpy as np

from ..errors import ConfigurationError
from . import kernels as k
from .base import Device


def vsm_swing_derivative(p_e, p_ref, omega, h_v, d_v, omega_b=k.OMEGA_B):
    """(d omega/dt, d angle/dt) of the virtual swing equation, device base."""
    return (p_ref - p_e - d_v * (omega - 1.0)) / (2.0 * h_v), omega_b * (omega - 1.0)


def gfm_droop_frequency(p_f, p_ref, m_p):
    return 1.0 + m_p * (p_ref - p_f)


class _Gfm(Device):
    family = "gfm"
    n_states = k.F_NSTATE
    kind = -1
    participates_as = "gfm"

    def __init__(self, name, bus, *, rating, x_c=0.15, n_q=0.05, t_q=0.1, current_limit=1.2):
        super().__init__(name, bus)
        if rating <= 0:
            raise ConfigurationError(f"{name}: rating must be positive")
        self.rating, self.x_c, self.n_q, self.t_q = rating, x_c, n_q, t_q
        self.current_limit = current_limit
        self.e0 = 1.0
        self.p0 = 0.0
        self.q0 = 0.0
        self.p_agc = 0.0

    def initialize(self, v, theta, p, q, **inputs):
        vph = cmath.rect(v, theta)
        cur = (complex(p, q) / vph).conjugate()
        if abs(cur) > self.current_limit * self.rating:
            raise ConfigurationError(f"{self.name}: initial current above its limit")
        e = vph + 1j * (self.x_c / self.rating) * cur
        self.e0 = abs(e)
        self.p0 = p / self.rating
        self.q0 = q / self.rating
        self.x0 = np.array([cmath.phase(e), self._second_state0(), self.q0])
        return self.x0

    def param_row(self):
        row = np.zeros(k.F_NCOL)
        row[k.F_KIND], row[k.F_RATING], row[k.F_XC] = self.kind, self.rating, self.x_c
        row[k.F_E0], row[k.F_NQ], row[k.F_Q0], row[k.F_TQ] = self.e0, self.n_q, self.q0, self.t_q
        row[k.F_P0], row[k.F_PAGC] = self.p0, self.p_agc
        row[k.F_IMAX] = self.current_limit
        self._fill(row)
        return row

    def _rhs(self, row, x, v, theta, dx, **inputs):
        return k.gfm_rhs(row, x, 0, v, theta, dx)

    def terminal_current(self, x, v, theta) -> complex:
        ir, ii = k.gfm_current(self.param_row(), np.asarray(x, float), 0, v, theta)
        return complex(ir, ii)

    def speed(self, x):
        return float(k.gfm_speed(self.param_row(), np.asarray(x, float), 0))

    def set_agc_offset(self, row, offset_sys):
        row[k.F_PAGC] = offset_sys / self.rating


class GfmVsm(_Gfm):
    kind = k.GFM_VSM
    state_names = ("delta", "omega", "q_f")

    def __init__(self, name, bus, *, rating, h_v=5.0, d_v=20.0, **kw):
        super().__init__(name, bus, rating=rating, **kw)
        if h_v <= 0:
            raise ConfigurationError(f"{name}: virtual inertia must be positive")
        if d_v < 0:
            raise ConfigurationError(f"{name}: virtual damping must be non-negative")
        self.h_v, self.d_v = h_v, d_v

    def _second_state0(self):
        return 1.0

    def _fill(self, row):
        row[k.F_H], row[k.F_D] = self.h_v, self.d_v

    def inertia(self):
        return self.h_v * self.rating


class GfmDroop(_Gfm):
    kind = k.GFM_DROOP
    state_names = ("delta", "p_f", "q_f")

    def __init__(self, name, bus, *, rating, m_p=0.02, t_filter=0.05, **kw):
        super().__init__(name, bus, rating=rating, **kw)
        if m_p <= 0:
            raise ConfigurationError(f"{name}: droop gain must be positive")
        if t_filter <= 0:
            raise ConfigurationError(f"{name}: power filter time constant must be positive")
        self.m_p, self.t_filter = m_p, t_filter

    def _second_state0(self):
        return self.p0

    def _fill(self, row):
        row[k.F_MP], row[k.F_TF] = self.m_p, self.t_filter

    def inertia(self):
        # a droop loop with a first-order power filter behaves as a swing
        # equation with H = T_f / (2 m_p)
        return self.t_filter / (2.0 * self.m_p) * self.rating
