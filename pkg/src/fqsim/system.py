"""Assembly of network, devices, disturbances and AGC into one SDAE model.

Algebraic unknowns are the bus angles followed by the bus voltage
magnitudes. Every device family keeps its parameters in one row of a
family table; the tables, the network conductance/susceptance matrices,
the load table, both ramp profiles and the AGC target table form the data
tuple consumed by the compiled residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import agc as agc_mod
from .devices import kernels as k
from .devices.base import Device
from .devices.bess import GflBess
from .devices.gfm import _Gfm
from .devices.machine import SynchronousMachine
from .devices.wind import DfigWind
from .engine import SdaeModel
from .errors import ConfigurationError, EventError, InitializationError
from .network import NetworkModel, solve_power_flow
from .stochastic import OuProcess, RampProfile, ramp_value

FAM_MACHINE, FAM_DFIG, FAM_BESS, FAM_GFM = 0, 1, 2, 3

# AGC target table columns
T_FAM, T_ROW, T_SHARE, T_SCALE = 0, 1, 2, 3


@njit(cache=True)
def system_fg(x, y, eta, t, data, f, g):
    gm, bm, loads, rl, rw, mach, wind, bess, gfm, _ = data
    nb = gm.shape[0]
    pinj = np.zeros(nb)
    qinj = np.zeros(nb)
    for i in range(mach.shape[0]):
        row = mach[i]
        b = int(row[k.BUS])
        pe, qe = k.machine_rhs(row, x, int(row[k.XOFF]), y[nb + b], y[b], f)
        pinj[b] += pe
        qinj[b] += qe
    if wind.shape[0] > 0:
        lw = np.interp(t, rw[0], rw[1])
        for i in range(wind.shape[0]):
            row = wind[i]
            b = int(row[k.BUS])
            v = row[k.W_VMEAN]
            if row[k.W_RAMP] > 0.5:
                v *= lw
            e = int(row[k.W_ETA])
            if e >= 0:
                v += eta[e]
            if v < 0.0:
                v = 0.0
            pe, qe = k.dfig_rhs(row, x, int(row[k.XOFF]), y[nb + b], y[b], v, f)
            pinj[b] += pe
            qinj[b] += qe
    for i in range(bess.shape[0]):
        row = bess[i]
        b = int(row[k.BUS])
        pe, qe = k.bess_rhs(row, x, int(row[k.XOFF]), y[nb + b], y[b], f)
        pinj[b] += pe
        qinj[b] += qe
    for i in range(gfm.shape[0]):
        row = gfm[i]
        b = int(row[k.BUS])
        pe, qe = k.gfm_rhs(row, x, int(row[k.XOFF]), y[nb + b], y[b], f)
        pinj[b] += pe
        qinj[b] += qe
    ll = np.interp(t, rl[0], rl[1])
    for i in range(loads.shape[0]):
        row = loads[i]
        s = row[k.L_CONN]
        if row[k.L_RAMP] > 0.5:
            s *= ll
        e = int(row[k.L_ETA])
        if e >= 0:
            s *= 1.0 + eta[e]
        b = int(row[k.L_BUS])
        pinj[b] -= row[k.L_P] * s
        qinj[b] -= row[k.L_Q] * s
    er = np.empty(nb)
    ei = np.empty(nb)
    for i in range(nb):
        er[i] = y[nb + i] * math.cos(y[i])
        ei[i] = y[nb + i] * math.sin(y[i])
    for i in range(nb):
        ir = 0.0
        ii = 0.0
        for j in range(nb):
            ir += gm[i, j] * er[j] - bm[i, j] * ei[j]
            ii += gm[i, j] * ei[j] + bm[i, j] * er[j]
        g[i] = pinj[i] - (er[i] * ir + ei[i] * ii)
        g[nb + i] = qinj[i] - (ei[i] * ir - er[i] * ii)


@njit(cache=True)
def coi_speed(x, data):
    """Inertia-weighted mean speed of machines, condensers and grid-forming units (pu)."""
    mach = data[5]
    gfm = data[8]
    num = 0.0
    den = 0.0
    for i in range(mach.shape[0]):
        w = mach[i, k.M_H]
        num += w * x[int(mach[i, k.XOFF]) + 1]
        den += w
    for i in range(gfm.shape[0]):
        row = gfm[i]
        if row[k.F_KIND] < 0.5:
            w = row[k.F_H] * row[k.F_RATING]
        else:
            w = row[k.F_TF] / (2.0 * row[k.F_MP]) * row[k.F_RATING]
        num += w * k.gfm_speed(row, x, int(row[k.XOFF]))
        den += w
    if den <= 0.0:
        return 1.0
    return num / den


@njit(cache=True)
def system_post(x, y, eta, t, dt, data, ctrl):
    if ctrl[agc_mod.C_ENABLED] < 0.5:
        return False
    if not agc_mod.agc_advance(ctrl, k.F_NOMINAL * coi_speed(x, data), t):
        return False
    held = ctrl[agc_mod.C_HELD]
    targets = data[9]
    for i in range(targets.shape[0]):
        fam = int(targets[i, T_FAM])
        r = int(targets[i, T_ROW])
        v = held * targets[i, T_SHARE] * targets[i, T_SCALE]
        if fam == FAM_MACHINE:
            data[5][r, k.M_PAGC] = v
        elif fam == FAM_DFIG:
            data[6][r, k.W_PAGC] = v
        elif fam == FAM_GFM:
            data[8][r, k.F_PAGC] = v
    return True


@njit(cache=True)
def system_out(x, y, y_prev, eta, t, dt, data, ctrl, row):
    """Channels: f_coi, bus frequencies, bus voltages, device P, device speeds,
    grid-forming current magnitudes (device base) and the AGC set-point."""
    gm, _, _, _, rw, mach, wind, bess, gfm, _ = data
    nb = gm.shape[0]
    row[0] = k.F_NOMINAL * coi_speed(x, data)
    c = 1
    for i in range(nb):
        row[c] = k.F_NOMINAL + k.F_NOMINAL * (y[i] - y_prev[i]) / (k.OMEGA_B * dt)
        c += 1
    for i in range(nb):
        row[c] = y[nb + i]
        c += 1
    scratch = np.empty(x.shape[0])
    for i in range(mach.shape[0]):
        p = mach[i]
        b = int(p[k.BUS])
        row[c], _ = k.machine_rhs(p, x, int(p[k.XOFF]), y[nb + b], y[b], scratch)
        c += 1
    for i in range(wind.shape[0]):
        row[c] = wind[i, k.W_RATING] * x[int(wind[i, k.XOFF]) + 2]
        c += 1
    for i in range(bess.shape[0]):
        row[c] = bess[i, k.S_RATING] * x[int(bess[i, k.XOFF])]
        c += 1
    for i in range(gfm.shape[0]):
        p = gfm[i]
        b = int(p[k.BUS])
        row[c], _ = k.gfm_rhs(p, x, int(p[k.XOFF]), y[nb + b], y[b], scratch)
        c += 1
    for i in range(mach.shape[0]):
        row[c] = x[int(mach[i, k.XOFF]) + 1]
        c += 1
    for i in range(gfm.shape[0]):
        row[c] = k.gfm_speed(gfm[i], x, int(gfm[i, k.XOFF]))
        c += 1
    for i in range(gfm.shape[0]):
        p = gfm[i]
        b = int(p[k.BUS])
        ir, ii = k.gfm_current(p, x, int(p[k.XOFF]), y[nb + b], y[b])
        row[c] = math.hypot(ir, ii) / p[k.F_RATING]
        c += 1
    row[c] = ctrl[agc_mod.C_HELD]


@dataclass
class NoiseSettings:
    """Stationary standard deviations: loads relative to nominal, wind relative to mean speed."""

    load: bool = True
    wind: bool = True
    load_std: float = 0.01
    load_reversion: float = 1.0 / 300.0
    wind_std: float = 0.05
    wind_reversion: float = 1.0 / 300.0

    def __post_init__(self):
        if min(self.load_std, self.wind_std) < 0:
            raise ConfigurationError("noise standard deviations must be non-negative")
        if min(self.load_reversion, self.wind_reversion) <= 0:
            raise ConfigurationError("noise mean reversion rates must be positive")


def _family(dev: Device) -> int:
    if isinstance(dev, SynchronousMachine):
        return FAM_MACHINE
    if isinstance(dev, DfigWind):
        return FAM_DFIG
    if isinstance(dev, GflBess):
        return FAM_BESS
    if isinstance(dev, _Gfm):
        return FAM_GFM
    raise ConfigurationError(f"unsupported device type {type(dev).__name__}")


def _table(rows, ncol):
    if not rows:
        return np.zeros((0, ncol))
    return np.ascontiguousarray(np.vstack(rows), dtype=float)


class PowerSystem(SdaeModel):
    """Initialized grid model ready for ``engine.integrate``.

    Construction solves the power flow at ``t0`` (loads at their ramp level
    for that instant), back-initializes every device and checks that the
    residual vanishes.
    """

    fg = staticmethod(system_fg)
    post = staticmethod(system_post)
    out = staticmethod(system_out)

    def __init__(self, network: NetworkModel, devices: list[Device], *, noise: NoiseSettings | None = None,
                 load_ramp: RampProfile | None = None, wind_ramp: RampProfile | None = None,
                 agc: agc_mod.AgcController | None = None, t0: float = 0.0):
        self.network = network.copy()
        self.devices = list(devices)
        self.noise = noise
        self.load_ramp = load_ramp
        self.wind_ramp = wind_ramp
        self.agc = agc
        self.t0 = t0
        names = [d.name for d in self.devices]
        if len(set(names)) != len(names):
            raise ConfigurationError("device names must be unique")
        self._check_placement()
        self._initialize()

    # assembly -----------------------------------------------------------

    def _check_placement(self):
        net = self.network
        gen_buses = {b.id for b in net.buses if b.kind in ("slack", "pv")}
        suppliers = {}
        for d in self.devices:
            net.bus_index(d.bus)
            if d.pf_role == "gen":
                if d.bus in suppliers:
                    raise ConfigurationError(f"bus {d.bus} has two generating devices")
                suppliers[d.bus] = d
        missing = gen_buses - set(suppliers)
        if missing:
            raise ConfigurationError(f"generator buses without a generating device: {sorted(missing)}")
        extra = set(suppliers) - gen_buses
        if extra:
            raise ConfigurationError(f"generating devices at load buses: {sorted(extra)}")

    def _initialize(self):
        net = self.network
        t0 = self.t0
        load_level = float(ramp_value(self.load_ramp, t0)) if self.load_ramp else 1.0
        wind_level = float(ramp_value(self.wind_ramp, t0)) if self.wind_ramp else 1.0
        pf_net = net.copy()
        for ld in pf_net.loads:
            ld.scale *= load_level
        self.power_flow = pf = solve_power_flow(pf_net)

        ou_rows, eta_names = [], []
        noise = self.noise
        load_rows = []
        for ld in net.loads:
            row = np.zeros(k.L_NCOL)
            row[k.L_BUS] = net.bus_index(ld.bus)
            row[k.L_P], row[k.L_Q] = ld.p_nominal * ld.scale, ld.q_nominal * ld.scale
            row[k.L_CONN] = 1.0 if ld.connected else 0.0
            row[k.L_RAMP] = 1.0 if self.load_ramp else 0.0
            row[k.L_ETA] = -1
            if noise and noise.load:
                row[k.L_ETA] = len(ou_rows)
                ou_rows.append(OuProcess.from_stationary_std(noise.load_std, noise.load_reversion).row())
                eta_names.append(f"eta_load{ld.bus}")
            load_rows.append(row)

        tables = {FAM_MACHINE: [], FAM_DFIG: [], FAM_BESS: [], FAM_GFM: []}
        self._rows = {}
        x0 = []
        off = 0
        for d in self.devices:
            i = net.bus_index(d.bus)
            v, th = pf.vm[i], pf.va[i]
            p, q = (pf.p_gen[i], pf.q_gen[i]) if d.pf_role == "gen" else (0.0, 0.0)
            fam = _family(d)
            if fam == FAM_DFIG:
                xd = d.initialize(v, th, p, q)
                d.use_ramp = self.wind_ramp is not None
                v0 = d.mean_wind
                d.mean_wind = v0 / wind_level
                d.eta_index = -1
                if noise and noise.wind:
                    d.eta_index = len(ou_rows)
                    ou_rows.append(OuProcess.from_stationary_std(noise.wind_std * v0, noise.wind_reversion).row())
                    eta_names.append(f"eta_wind_{d.name}")
            else:
                xd = d.initialize(v, th, p, q)
            row = d.param_row()
            row[k.BUS] = i
            row[k.XOFF] = off
            self._rows[d.name] = (fam, len(tables[fam]))
            tables[fam].append(row)
            x0.append(np.asarray(xd, dtype=float))
            off += d.n_states

        targets = []
        if self.agc is not None:
            for unit, share in self.agc.participation.items():
                if unit not in self._rows:
                    raise ConfigurationError(f"AGC unit {unit!r} is not a device of this system")
                dev = self.device(unit)
                fam, r = self._rows[unit]
                if fam == FAM_BESS or dev.participates_as is None:
                    raise ConfigurationError(f"{unit} cannot follow AGC set-points")
                if fam == FAM_MACHINE and not dev.governor:
                    raise ConfigurationError(f"{unit} has no governor to follow AGC")
                scale = 1.0 if fam == FAM_MACHINE else 1.0 / dev.rating
                targets.append([fam, r, share, scale])

        nb = net.n_bus
        rl = self.load_ramp or RampProfile.constant()
        rw = self.wind_ramp or RampProfile.constant()
        self.data = (
            np.ascontiguousarray(net.ybus.real), np.ascontiguousarray(net.ybus.imag),
            _table(load_rows, k.L_NCOL),
            np.ascontiguousarray(np.vstack([rl.times, rl.levels])),
            np.ascontiguousarray(np.vstack([rw.times, rw.levels])),
            _table(tables[FAM_MACHINE], k.M_NCOL), _table(tables[FAM_DFIG], k.W_NCOL),
            _table(tables[FAM_BESS], k.S_NCOL), _table(tables[FAM_GFM], k.F_NCOL),
            _table(targets, 4),
        )
        self._data0 = tuple(a.copy() for a in self.data)
        self.x0 = np.concatenate(x0) if x0 else np.zeros(0)
        self.y0 = np.concatenate([pf.va, pf.vm])
        self.ou = np.array(ou_rows, dtype=float).reshape(-1, 3)
        self.eta0 = np.zeros(len(ou_rows))
        self.eta_names = eta_names
        self.ctrl = self.agc.state if self.agc is not None else np.zeros(agc_mod.C_NCOL)
        self.n_bus = nb

        f, g = self.evaluate(self.x0, self.y0, self.eta0, t0)
        err = max(np.max(np.abs(f), initial=0.0), np.max(np.abs(g), initial=0.0))
        if not err < 1e-6:
            raise InitializationError(f"initial point is not an equilibrium (residual {err:.3e})", mismatch=err)
        self.initial_residual = err

    # model hooks --------------------------------------------------------

    def reset(self, t0: float) -> None:
        for a, a0 in zip(self.data, self._data0):
            a[...] = a0
        if self.agc is not None:
            self.agc.reset(t0)

    def channel_names(self) -> list[str]:
        ids = [b.id for b in self.network.buses]
        names = ["f_coi"] + [f"f_bus{i}" for i in ids] + [f"v_bus{i}" for i in ids]
        by_fam = {fam: [] for fam in (FAM_MACHINE, FAM_DFIG, FAM_BESS, FAM_GFM)}
        for d in self.devices:
            by_fam[_family(d)].append(d.name)
        for fam in (FAM_MACHINE, FAM_DFIG, FAM_BESS, FAM_GFM):
            names += [f"p_{n}" for n in by_fam[fam]]
        names += [f"omega_{n}" for n in by_fam[FAM_MACHINE] + by_fam[FAM_GFM]]
        names += [f"i_{n}" for n in by_fam[FAM_GFM]]
        names.append("agc_setpoint")
        return names

    def apply_event(self, event, x, y, eta, t) -> None:
        kind = event.kind
        loads = self.data[2]
        if kind in ("load_loss", "load_reconnect"):
            try:
                b = self.network.bus_index(int(event.target))
            except (ConfigurationError, ValueError):
                raise EventError(f"event target {event.target!r} is not a bus") from None
            rows = np.nonzero(loads[:, k.L_BUS] == b)[0]
            if len(rows) == 0:
                raise EventError(f"no load at bus {event.target}")
            frac = 1.0 if event.magnitude is None else float(event.magnitude)
            for r in rows:
                if kind == "load_reconnect":
                    loads[r, k.L_CONN] = 1.0
                elif frac >= 1.0:
                    loads[r, k.L_CONN] = 0.0
                else:
                    loads[r, k.L_CONN] *= 1.0 - frac
        elif kind == "setpoint_step":
            if event.target not in self._rows:
                raise EventError(f"unknown unit {event.target!r}")
            fam, r = self._rows[event.target]
            dp = float(event.magnitude or 0.0)
            dev = self.device(event.target)
            if fam == FAM_MACHINE:
                self.data[5][r, k.M_PREF] += dp
                self.data[5][r, k.M_PM0] += dp
            elif fam == FAM_BESS:
                self.data[7][r, k.S_P0] += dp / dev.rating
            elif fam == FAM_GFM:
                self.data[8][r, k.F_P0] += dp / dev.rating
            else:
                raise EventError(f"{event.target} does not accept set-point steps")
        else:
            raise EventError(f"unknown event kind {kind!r}")

    # queries ------------------------------------------------------------

    def device(self, name) -> Device:
        for d in self.devices:
            if d.name == name:
                return d
        raise KeyError(name)

    def state_slice(self, name) -> slice:
        fam, r = self._rows[name]
        off = int(self.data[5 + fam][r, k.XOFF])
        return slice(off, off + self.device(name).n_states)

    def coi_frequency(self, x) -> float:
        return float(k.F_NOMINAL * coi_speed(np.asarray(x, dtype=float), self.data))

    def served_load(self, eta=None, t=None) -> complex:
        """Total load actually drawn at time ``t`` (defaults: start time, zero noise)."""
        t = self.t0 if t is None else t
        eta = self.eta0 if eta is None else eta
        loads = self.data[2]
        ll = float(ramp_value(self.load_ramp, t)) if self.load_ramp else 1.0
        total = 0j
        for row in loads:
            s = row[k.L_CONN] * (ll if row[k.L_RAMP] > 0.5 else 1.0)
            e = int(row[k.L_ETA])
            if e >= 0:
                s *= 1.0 + eta[e]
            total += complex(row[k.L_P], row[k.L_Q]) * s
        return total

    def inertia_weights(self) -> dict[str, float]:
        return {d.name: d.inertia() for d in self.devices if d.inertia() > 0}
