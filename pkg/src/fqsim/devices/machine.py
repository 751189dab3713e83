"""Two-axis synchronous machine with exciter and TGOV1-style governor; condenser variant."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from . import kernels as k
from .base import Device


@dataclass
class TurbineGovernor:
    droop: float = 0.05
    dead_band: float = 0.015
    t1: float = 0.5
    t2: float = 2.0
    t3: float = 10.0
    valve_min: float = 0.0
    valve_max: float = 1.0

    def __post_init__(self):
        if self.droop <= 0:
            raise ConfigurationError("governor droop must be positive")
        if self.dead_band < 0:
            raise ConfigurationError("governor dead-band must be non-negative")
        if min(self.t1, self.t3) <= 0:
            raise ConfigurationError("governor time constants must be positive")


def governor_response(df_hz: float, dead_band: float, droop: float) -> float:
    """Power-reference change (machine base) for a frequency deviation in Hz."""
    if droop <= 0:
        raise ConfigurationError("droop must be positive")
    return float(k.droop_power(float(df_hz), float(dead_band), float(droop)))


class SynchronousMachine(Device):
    """Fourth-order two-axis machine (R_s = 0) with first-order exciter.

    Parameters are on the system base except the governor, which works on
    the machine rating. Without a governor the mechanical power stays at
    its initial value.
    """

    family = "machine"
    participates_as = "conv"

    def __init__(self, name, bus, *, h, xd, xdp, xq, xqp, td0p, tq0p, rating=1.0, damping=2.0,
                 ka=20.0, ta=0.2, governor: TurbineGovernor | None = None):
        super().__init__(name, bus)
        if h <= 0:
            raise ConfigurationError(f"{name}: inertia constant must be positive")
        self.h = h
        self.damping = damping
        self.xd, self.xdp, self.xq, self.xqp = xd, xdp, xq, xqp
        self.td0p, self.tq0p = td0p, tq0p
        self.rating = rating
        self.ka, self.ta = ka, ta
        self.governor = governor
        self.n_states = k.M_NSTATE_GOV if governor else k.M_NSTATE
        names = ("delta", "omega", "eqp", "edp", "efd")
        self.state_names = names + (("pv", "xll") if governor else ())
        self.vref = 1.0
        self.p_ref = 0.0
        self.pm0 = 0.0

    def initialize(self, v, theta, p, q, **inputs):
        vph = cmath.rect(v, theta)
        cur = (complex(p, q) / vph).conjugate()
        eq = vph + 1j * self.xq * cur
        delta = cmath.phase(eq)
        rot = cmath.exp(-1j * (delta - math.pi / 2))
        idq = cur * rot
        vdq = vph * rot
        i_d, i_q = idq.real, idq.imag
        vd, vq = vdq.real, vdq.imag
        eqp = vq + self.xdp * i_d
        edp = vd - self.xqp * i_q
        efd = eqp + (self.xd - self.xdp) * i_d
        self.vref = v + efd / self.ka
        pe = vd * i_d + vq * i_q
        self.pm0 = pe
        self.p_ref = pe
        x = [delta, 1.0, eqp, edp, efd]
        if self.governor:
            pv = pe / self.rating
            g = self.governor
            if not g.valve_min <= pv <= g.valve_max:
                raise ConfigurationError(f"{self.name}: dispatch {pe:.3f} pu outside valve limits")
            x += [pv, (1.0 - g.t2 / g.t3) * pv]
        self.x0 = np.array(x)
        return self.x0

    def param_row(self):
        row = np.zeros(k.M_NCOL)
        row[k.M_H] = self.h
        row[k.M_D] = self.damping
        row[k.M_XD], row[k.M_XDP], row[k.M_XQ], row[k.M_XQP] = self.xd, self.xdp, self.xq, self.xqp
        row[k.M_TD0P], row[k.M_TQ0P] = self.td0p, self.tq0p
        row[k.M_KA], row[k.M_TA], row[k.M_VREF] = self.ka, self.ta, self.vref
        row[k.M_RATING] = self.rating
        row[k.M_PREF] = self.p_ref
        row[k.M_PM0] = self.pm0
        g = self.governor
        if g:
            row[k.M_HAS_GOV] = 1.0
            row[k.M_R], row[k.M_DB] = g.droop, g.dead_band
            row[k.M_T1], row[k.M_T2], row[k.M_T3] = g.t1, g.t2, g.t3
            row[k.M_VMIN], row[k.M_VMAX] = g.valve_min, g.valve_max
        return row

    def _rhs(self, row, x, v, theta, dx, **inputs):
        return k.machine_rhs(row, x, 0, v, theta, dx)

    def inertia(self):
        return self.h

    def speed(self, x):
        return x[1]

    def set_agc_offset(self, row, offset_sys):
        if not self.governor:
            raise ConfigurationError(f"{self.name} has no governor to follow AGC")
        row[k.M_PAGC] = offset_sys

    def mechanical_power(self, x) -> float:
        if not self.governor:
            return self.pm0
        g = self.governor
        return self.rating * (g.t2 / g.t3 * x[5] + x[6])


class SynchronousCondenser(SynchronousMachine):
    """Machine with zero mechanical power and no turbine governor."""

    pf_role = "zero"
    participates_as = None

    def __init__(self, name, bus, **params):
        params.pop("governor", None)
        super().__init__(name, bus, governor=None, **params)

    def initialize(self, v, theta, p, q, **inputs):
        if abs(p) > 1e-9:
            raise ConfigurationError(f"{self.name}: condenser must start at zero active power")
        x = super().initialize(v, theta, 0.0, q)
        self.pm0 = 0.0
        self.p_ref = 0.0
        return x

    def mechanical_power(self, x):
        return 0.0
