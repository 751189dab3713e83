"""Doubly-fed induction generator wind plant with MPPT, pitch and primary control.

States: rotor speed, pitch angle (deg), active and reactive converter
outputs (first-order tracking of their orders) and a washout filter on
the bus angle that provides the measured frequency. The electrical
dynamics of the rotor-side converter are fast enough to be treated as
those two first-order loops.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from ..errors import ConfigurationError
from . import kernels as k
from .base import Device


@lru_cache(maxsize=None)
def optimal_tip_speed() -> tuple[float, float]:
    """(lambda_opt, Cp_max) of the zero-pitch power-coefficient curve."""
    res = minimize_scalar(lambda lam: -k.power_coefficient(lam, 0.0), bounds=(2.0, 15.0),
                          method="bounded", options={"xatol": 1e-10})
    return float(res.x), float(-res.fun)


def mppt_power(v, rated_power=1.0, curtailment=0.8, rated_speed=12.0, cut_in=3.0, cut_out=25.0):
    """Curtailed power reference: cubic between cut-in and rated wind speed, flat above."""
    if v < 0:
        raise ConfigurationError("wind speed must be non-negative")
    return curtailment * rated_power * k.mppt_curve(float(v), rated_speed, cut_in, cut_out)


class DfigWind(Device):
    family = "dfig"
    n_states = k.W_NSTATE
    state_names = ("omega_r", "pitch", "p", "q", "z")
    participates_as = "wind"

    def __init__(self, name, bus, *, rating, rated_wind=12.0, cut_in=3.0, cut_out=25.0,
                 curtailment=0.8, droop=0.05, dead_band=0.015, t_p=1.0, t_q=0.1, k_v=2.0,
                 h_t=3.0, k_pitch=500.0, omega_max=1.3, t_pitch=0.3, pitch_max=30.0,
                 t_washout=0.05):
        super().__init__(name, bus)
        if not 0 < curtailment <= 1:
            raise ConfigurationError(f"{name}: curtailment factor must lie in (0, 1]")
        if rating <= 0:
            raise ConfigurationError(f"{name}: rating must be positive")
        self.rating = rating
        self.rated_wind, self.cut_in, self.cut_out = rated_wind, cut_in, cut_out
        self.curtailment = curtailment
        self.droop, self.dead_band = droop, dead_band
        self.t_p, self.t_q, self.k_v = t_p, t_q, k_v
        self.h_t = h_t
        self.k_pitch, self.omega_max, self.t_pitch, self.pitch_max = k_pitch, omega_max, t_pitch, pitch_max
        self.t_washout = t_washout
        self.lam_opt, self.cp_max = optimal_tip_speed()
        self.mean_wind = rated_wind
        self.vref = 1.0
        self.q0 = 0.0
        self.p_agc = 0.0
        self.eta_index = -1
        self.use_ramp = False

    def initialize(self, v, theta, p, q, wind_speed=None, **inputs):
        pe = p / self.rating
        if wind_speed is None:
            ratio = pe / (self.curtailment)
            if not 0 < ratio < 1:
                raise ConfigurationError(
                    f"{self.name}: dispatch {p:.3f} pu is outside the curtailed cubic region of a "
                    f"{self.rating:.3f} pu plant")
            wind_speed = self.rated_wind * ratio ** (1.0 / 3.0)
        self.mean_wind = wind_speed
        p_avail = k.mppt_curve(wind_speed, self.rated_wind, self.cut_in, self.cut_out)
        if abs(self.curtailment * p_avail - pe) > 1e-9:
            raise ConfigurationError(f"{self.name}: wind speed {wind_speed:.3f} m/s inconsistent with dispatch")
        wr = self._equilibrium_speed(wind_speed, pe)
        beta = min(max(self.k_pitch * (wr - self.omega_max), 0.0), self.pitch_max)
        self.q0 = q / self.rating
        self.vref = v
        self.x0 = np.array([wr, beta, pe, self.q0, theta])
        return self.x0

    def _pitch(self, wr):
        return min(max(self.k_pitch * (wr - self.omega_max), 0.0), self.pitch_max)

    def _equilibrium_speed(self, wind, pe):
        """Over-speed de-loading point where aerodynamic power equals the electrical output."""
        w_opt = wind / self.rated_wind

        def gap(wr):
            return k.aero_power(wind, wr, self._pitch(wr), self.rated_wind, self.lam_opt, self.cp_max) - pe

        if gap(w_opt) < 0:
            raise ConfigurationError(f"{self.name}: not enough wind for the dispatched power")
        hi = w_opt * 1.5
        while gap(hi) > 0:
            hi *= 1.5
            if hi > 10:
                raise ConfigurationError(f"{self.name}: cannot find an over-speed operating point")
        return brentq(gap, w_opt, hi, xtol=1e-14)

    def param_row(self):
        row = np.zeros(k.W_NCOL)
        row[k.W_RATING], row[k.W_VR] = self.rating, self.rated_wind
        row[k.W_VCIN], row[k.W_VCOUT] = self.cut_in, self.cut_out
        row[k.W_VMEAN], row[k.W_ETA], row[k.W_CURT] = self.mean_wind, self.eta_index, self.curtailment
        row[k.W_R], row[k.W_DB], row[k.W_TE] = self.droop, self.dead_band, self.t_p
        row[k.W_TQ], row[k.W_KV], row[k.W_VREF], row[k.W_Q0] = self.t_q, self.k_v, self.vref, self.q0
        row[k.W_HT], row[k.W_KTH], row[k.W_WMAX] = self.h_t, self.k_pitch, self.omega_max
        row[k.W_TTH], row[k.W_THMAX], row[k.W_TW] = self.t_pitch, self.pitch_max, self.t_washout
        row[k.W_PAGC] = self.p_agc
        row[k.W_LOPT], row[k.W_CPMAX] = self.lam_opt, self.cp_max
        row[k.W_RAMP] = 1.0 if self.use_ramp else 0.0
        return row

    def _rhs(self, row, x, v, theta, dx, wind_speed=None, **inputs):
        wind = self.mean_wind if wind_speed is None else wind_speed
        return k.dfig_rhs(row, x, 0, v, theta, float(wind), dx)

    def set_agc_offset(self, row, offset_sys):
        row[k.W_PAGC] = offset_sys / self.rating

    def headroom(self, wind_speed) -> float:
        """Upward reserve (device base) at the given wind speed."""
        p_avail = k.mppt_curve(wind_speed, self.rated_wind, self.cut_in, self.cut_out)
        return (1.0 - self.curtailment) * p_avail
