"""Static grid model: buses, branches, loads, admittance matrix and power flow.

The power-flow solution anchors the algebraic equations of the dynamic
model; every device is back-initialized from it.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigurationError, InitializationError

BUS_KINDS = ("slack", "pv", "pq")


@dataclass
class Bus:
    id: int
    base_kv: float = 230.0
    kind: str = "pq"
    voltage_mag: float = 1.0
    voltage_ang: float = 0.0

    def __post_init__(self):
        if self.kind not in BUS_KINDS:
            raise ConfigurationError(f"bus {self.id}: unknown kind {self.kind!r}")
        if self.voltage_mag <= 0:
            raise ConfigurationError(f"bus {self.id}: voltage magnitude must be positive")


@dataclass
class Branch:
    from_bus: int
    to_bus: int
    resistance: float
    reactance: float
    shunt_susceptance: float = 0.0
    tap_ratio: float = 1.0

    def __post_init__(self):
        if self.reactance == 0:
            raise ConfigurationError(f"branch {self.from_bus}-{self.to_bus}: zero reactance")
        if self.from_bus == self.to_bus:
            raise ConfigurationError(f"branch {self.from_bus}-{self.to_bus}: self loop")
        if self.tap_ratio <= 0:
            raise ConfigurationError(f"branch {self.from_bus}-{self.to_bus}: tap ratio must be positive")


@dataclass
class Load:
    bus: int
    p_nominal: float
    q_nominal: float
    scale: float = 1.0
    connected: bool = True

    def __post_init__(self):
        if self.p_nominal < 0:
            raise ConfigurationError(f"load at bus {self.bus}: negative active power")
        if self.scale < 0:
            raise ConfigurationError(f"load at bus {self.bus}: negative scale")

    @property
    def p(self) -> float:
        return self.p_nominal * self.scale if self.connected else 0.0

    @property
    def q(self) -> float:
        return self.q_nominal * self.scale if self.connected else 0.0


def build_ybus(buses, branches) -> np.ndarray:
    """Assemble the nodal admittance matrix.

    Rows and columns follow the order of ``buses``. Line charging is split
    evenly between both ends; an off-nominal tap sits on the from side.
    """
    index = {b.id: k for k, b in enumerate(buses)}
    n = len(buses)
    ybus = np.zeros((n, n), dtype=complex)
    for br in branches:
        try:
            i, j = index[br.from_bus], index[br.to_bus]
        except KeyError as exc:
            raise ConfigurationError(
                f"branch {br.from_bus}-{br.to_bus} references unknown bus {exc.args[0]}"
            ) from None
        ys = 1.0 / complex(br.resistance, br.reactance)
        bsh = 0.5j * br.shunt_susceptance
        t = br.tap_ratio
        ybus[i, i] += ys / t**2 + bsh
        ybus[j, j] += ys + bsh
        ybus[i, j] -= ys / t
        ybus[j, i] -= ys / t
    return ybus


@dataclass
class NetworkModel:
    buses: list[Bus]
    branches: list[Branch]
    loads: list[Load]
    s_base: float = 100.0
    f_nominal: float = 50.0
    generators: dict[int, float] = field(default_factory=dict)
    machines: dict[int, dict] = field(default_factory=dict)
    name: str = "network"

    def __post_init__(self):
        slack = [b for b in self.buses if b.kind == "slack"]
        if len(slack) != 1:
            raise ConfigurationError(f"network needs exactly one slack bus, found {len(slack)}")
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise ConfigurationError("duplicate bus ids")
        known = set(ids)
        for load in self.loads:
            if load.bus not in known:
                raise ConfigurationError(f"load references unknown bus {load.bus}")
        self.ybus = build_ybus(self.buses, self.branches)

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    def bus_index(self, bus_id: int) -> int:
        for k, b in enumerate(self.buses):
            if b.id == bus_id:
                return k
        raise ConfigurationError(f"unknown bus {bus_id}")

    def loads_at(self, bus_id: int) -> list[Load]:
        return [ld for ld in self.loads if ld.bus == bus_id]

    def total_load(self) -> complex:
        return complex(sum(ld.p for ld in self.loads), sum(ld.q for ld in self.loads))

    def copy(self) -> NetworkModel:
        return copy.deepcopy(self)


def load_case(path=None) -> NetworkModel:
    """Read a case file; defaults to the shipped IEEE 9-bus fixture."""
    if path is None:
        text = resources.files("fqsim.data").joinpath("ieee9.yaml").read_text()
    else:
        text = Path(path).read_text()
    raw = yaml.safe_load(text)
    try:
        buses = [
            Bus(id=int(b["id"]), base_kv=float(b.get("base_kv", 230.0)), kind=b.get("kind", "pq"),
                voltage_mag=float(b.get("vm", 1.0)), voltage_ang=float(b.get("va", 0.0)))
            for b in raw["buses"]
        ]
        branches = [
            Branch(int(br["from"]), int(br["to"]), float(br.get("r", 0.0)), float(br["x"]),
                   float(br.get("b", 0.0)), float(br.get("tap", 1.0)))
            for br in raw.get("branches", [])
        ]
        loads = [Load(int(ld["bus"]), float(ld["p"]), float(ld.get("q", 0.0))) for ld in raw.get("loads", [])]
    except KeyError as exc:
        raise ConfigurationError(f"case file missing field {exc.args[0]!r}") from None
    generators = {int(g["bus"]): float(g["p"]) for g in raw.get("generators", [])}
    machines = {int(m["bus"]): {k: v for k, v in m.items() if k != "bus"} for m in raw.get("machines", [])}
    return NetworkModel(buses, branches, loads, s_base=float(raw.get("s_base", 100.0)),
                        f_nominal=float(raw.get("f_nominal", 50.0)), generators=generators,
                        machines=machines, name=raw.get("name", "network"))


@dataclass
class PowerFlowSolution:
    vm: np.ndarray
    va: np.ndarray
    p_inj: np.ndarray
    q_inj: np.ndarray
    p_gen: np.ndarray
    q_gen: np.ndarray
    iterations: int
    mismatch: float

    @property
    def voltage(self) -> np.ndarray:
        return self.vm * np.exp(1j * self.va)


def _bus_injections(ybus, v):
    s = v * np.conj(ybus @ v)
    return s.real, s.imag


def solve_power_flow(network: NetworkModel, setpoints=None, tol=1e-8, max_iter=30,
                     flat_start=True) -> PowerFlowSolution:
    """Newton-Raphson power flow in polar coordinates.

    ``setpoints`` maps bus id to scheduled active generation for PV buses;
    missing entries fall back to the network's generator table. Voltage
    set-points come from the bus records.
    """
    gen_p = dict(network.generators)
    if setpoints:
        gen_p.update(setpoints)
    n = network.n_bus
    ybus = network.ybus
    kinds = [b.kind for b in network.buses]

    p_load = np.zeros(n)
    q_load = np.zeros(n)
    for ld in network.loads:
        k = network.bus_index(ld.bus)
        p_load[k] += ld.p
        q_load[k] += ld.q
    p_sched = -p_load.copy()
    q_sched = -q_load.copy()
    for k, b in enumerate(network.buses):
        if b.kind == "pv":
            p_sched[k] += gen_p.get(b.id, 0.0)

    vm = np.ones(n)
    va = np.zeros(n)
    for k, b in enumerate(network.buses):
        if b.kind in ("slack", "pv"):
            vm[k] = b.voltage_mag
        elif not flat_start:
            vm[k] = b.voltage_mag
        if b.kind == "slack" or not flat_start:
            va[k] = b.voltage_ang

    pvpq = np.array([k for k in range(n) if kinds[k] != "slack"], dtype=int)
    pq = np.array([k for k in range(n) if kinds[k] == "pq"], dtype=int)
    npvpq = len(pvpq)

    def mismatch(vm, va):
        p, q = _bus_injections(ybus, vm * np.exp(1j * va))
        return np.concatenate([(p - p_sched)[pvpq], (q - q_sched)[pq]])

    it = 0
    f = mismatch(vm, va)
    err = float(np.max(np.abs(f))) if f.size else 0.0
    while err > tol and it < max_iter:
        v = vm * np.exp(1j * va)
        ibus = ybus @ v
        diag_v = np.diag(v)
        diag_i = np.diag(ibus)
        diag_vnorm = np.diag(v / vm)
        ds_dvm = diag_v @ np.conj(ybus @ diag_vnorm) + np.conj(diag_i) @ diag_vnorm
        ds_dva = 1j * diag_v @ np.conj(diag_i - ybus @ diag_v)
        jac = np.block([
            [ds_dva.real[np.ix_(pvpq, pvpq)], ds_dvm.real[np.ix_(pvpq, pq)]],
            [ds_dva.imag[np.ix_(pq, pvpq)], ds_dvm.imag[np.ix_(pq, pq)]],
        ])
        dx = np.linalg.solve(jac, -f)
        va[pvpq] += dx[:npvpq]
        vm[pq] += dx[npvpq:]
        it += 1
        f = mismatch(vm, va)
        err = float(np.max(np.abs(f)))
        if not np.isfinite(err):
            break

    if not err <= tol:
        raise InitializationError(
            f"power flow did not converge after {it} iterations (mismatch {err:.3e} pu)",
            mismatch=err,
        )
    p, q = _bus_injections(ybus, vm * np.exp(1j * va))
    return PowerFlowSolution(vm=vm, va=va, p_inj=p, q_inj=q, p_gen=p + p_load, q_gen=q + q_load,
                             iterations=it, mismatch=err)
