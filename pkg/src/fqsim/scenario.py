"""Scenario catalog, parameter loading and system assembly.

Each catalog file describes one row of the scenario table (device mix,
dead-bands, AGC participation with and without AGC, noise and ramp
switches). ``defaults.yaml`` holds device parameters and study settings;
both can be overridden with dotted ``section.field`` keys.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .agc import AgcController
from .devices import DfigWind, GflBess, GfmDroop, GfmVsm, SynchronousCondenser, SynchronousMachine, TurbineGovernor
from .engine import IntegrationConfig, Trace, integrate
from .errors import ConfigurationError
from .network import load_case
from .stochastic import RampProfile
from .system import NoiseSettings, PowerSystem

STUDIES = ("contingency", "longterm")
EVENT_KINDS = ("load_loss", "load_reconnect", "setpoint_step")

WIND_BUS = 3
GFM_BUS = 2
SUPPORT_BUS = 4


@dataclass(frozen=True)
class EventSpec:
    time: float
    kind: str
    target: int | str
    magnitude: float | None = None

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ConfigurationError(f"unknown event kind {self.kind!r}; expected one of {EVENT_KINDS}")
        if self.time < 0:
            raise ConfigurationError("event time must be non-negative")


@dataclass
class ScenarioConfig:
    name: str
    index: int
    agc_enabled: bool
    wind: bool
    apc: bool | None
    fdb_wind: float | None
    fdb_conv: float
    bess: bool
    fdb_bess: float | None
    condenser: bool
    gfm_kind: str | None
    agc_participation: tuple[str, ...]
    ramps: str  # "load" or "both"
    load_noise: bool
    wind_noise: bool
    study: str = "contingency"
    events: list[EventSpec] = field(default_factory=list)
    horizon: float = 120.0
    dt: float = 0.01
    record_every: int = 1
    t_start: float = 0.0
    seed: int = 0
    noise_enabled: bool = False
    ramps_enabled: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for label, v in (("fdb_wind", self.fdb_wind), ("fdb_conv", self.fdb_conv), ("fdb_bess", self.fdb_bess)):
            if v is not None and v < 0:
                raise ConfigurationError(f"{self.name}: {label} must be non-negative")
        if self.wind != (self.fdb_wind is not None):
            raise ConfigurationError(f"{self.name}: fdb_wind must be set exactly when wind is installed")
        if self.bess != (self.fdb_bess is not None):
            raise ConfigurationError(f"{self.name}: fdb_bess must be set exactly when a BESS is installed")
        if self.gfm_kind not in (None, "vsm", "droop"):
            raise ConfigurationError(f"{self.name}: gfm must be null, 'vsm' or 'droop'")
        if self.ramps not in ("load", "both"):
            raise ConfigurationError(f"{self.name}: ramps must be 'load' or 'both'")
        for unit in self.agc_participation:
            if unit not in ("conv", "wind", "gfm"):
                raise ConfigurationError(f"{self.name}: unknown AGC group {unit!r}")
        if "wind" in self.agc_participation and not self.wind:
            raise ConfigurationError(f"{self.name}: wind cannot follow AGC without a wind plant")
        if "gfm" in self.agc_participation and not self.gfm_kind:
            raise ConfigurationError(f"{self.name}: GFM cannot follow AGC without a GFM unit")
        if self.study not in STUDIES:
            raise ConfigurationError(f"study must be one of {STUDIES}")
        if self.dt <= 0 or self.horizon <= 0:
            raise ConfigurationError("dt and horizon must be positive")
        if self.study == "contingency" and self.horizon > 600:
            raise ConfigurationError("contingency horizon must not exceed 600 s")
        if self.study == "longterm" and self.horizon < 600:
            raise ConfigurationError("long-term horizon must be at least 600 s")
        for ev in self.events:
            if not 0 <= ev.time - self.t_start <= self.horizon:
                raise ConfigurationError(f"event at {ev.time} s lies outside the horizon")

    @property
    def label(self) -> str:
        return f"{self.name} ({'with' if self.agc_enabled else 'without'} AGC)"

    @property
    def integration(self) -> IntegrationConfig:
        return IntegrationConfig(t_start=self.t_start, t_end=self.t_start + self.horizon, dt=self.dt,
                                 record_every=self.record_every)


# catalog ------------------------------------------------------------------

def _data_text(*parts) -> str:
    node = resources.files("fqsim.data")
    for p in parts:
        node = node.joinpath(p)
    return node.read_text(encoding="utf-8")


def _catalog_raw() -> list[dict]:
    node = resources.files("fqsim.data").joinpath("scenarios")
    files = sorted(p.name for p in node.iterdir() if p.name.endswith(".yaml"))
    return [yaml.safe_load(node.joinpath(f).read_text(encoding="utf-8")) for f in files]


def scenario_names() -> list[str]:
    return [raw["name"] for raw in _catalog_raw()]


def _resolve(name) -> tuple[int, dict]:
    catalog = _catalog_raw()
    key = str(name).strip()
    for i, raw in enumerate(catalog, start=1):
        full = raw["name"]
        ascii_name = full.replace("±", "+-")
        if key in (full, ascii_name, str(i)) or key.lower() in (full.lower(), ascii_name.lower()):
            return i, raw
    valid = "; ".join(r["name"] for r in catalog)
    raise ConfigurationError(f"unknown scenario {name!r}. Valid scenarios: {valid}")


def default_parameters() -> dict:
    return yaml.safe_load(_data_text("defaults.yaml"))


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def apply_overrides(params: dict, overrides) -> dict:
    """Apply ``{"section.field": value}`` (or ``"section.field=value"`` strings)."""
    params = copy.deepcopy(params)
    if not overrides:
        return params
    items = overrides.items() if isinstance(overrides, dict) else (_split(o) for o in overrides)
    for key, value in items:
        node = params
        parts = key.split(".")
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                node[p] = {}
            node = node[p]
        node[parts[-1]] = value
    return params


def _split(text: str):
    if "=" not in text:
        raise ConfigurationError(f"override {text!r} must look like section.field=value")
    key, raw = text.split("=", 1)
    return key.strip(), yaml.safe_load(raw)


_SCENARIO_KEYS = {"name", "wind", "apc", "fdb_wind", "fdb_conv", "bess", "fdb_bess", "agc_without",
                  "agc_with", "ramps", "load_noise", "wind_noise", "condenser", "gfm"}


def load_scenario(name, agc: bool = False, study: str = "contingency", overrides=None, *,
                  seed: int = 0, horizon: float | None = None, dt: float | None = None,
                  full_24h: bool = False) -> ScenarioConfig:
    """Resolve a catalog entry (by full name or number) into a validated config.

    Scenario-level fields can be overridden with ``scenario.<field>`` keys;
    everything else patches the default parameter tree.
    """
    if study not in STUDIES:
        raise ConfigurationError(f"study must be one of {STUDIES}")
    index, raw = _resolve(name)
    params = default_parameters()
    scen_over = {}
    other = {}
    if overrides:
        items = overrides.items() if isinstance(overrides, dict) else (_split(o) for o in overrides)
        for key, value in items:
            if key.startswith("scenario."):
                scen_over[key.split(".", 1)[1]] = value
            else:
                other[key] = value
    params = apply_overrides(params, other)
    raw = _merge(raw, scen_over)
    unknown = set(raw) - _SCENARIO_KEYS
    if unknown:
        raise ConfigurationError(f"unknown scenario fields: {sorted(unknown)}")

    st = params["studies"][study]
    t_start = 0.0
    hz = float(st["horizon"])
    if study == "longterm":
        if full_24h:
            hz = float(st["full_horizon"])
        else:
            t_start = float(st.get("window_start", 0.0))
    if horizon is not None:
        hz = float(horizon)
    events = [EventSpec(float(e["time"]) + t_start, e["kind"], e["target"], e.get("magnitude"))
              for e in st.get("events", [])]
    group = raw["agc_with"] if agc else raw["agc_without"]
    return ScenarioConfig(
        name=raw["name"], index=index, agc_enabled=bool(agc), wind=bool(raw["wind"]), apc=raw["apc"],
        fdb_wind=raw["fdb_wind"], fdb_conv=float(raw["fdb_conv"]), bess=bool(raw["bess"]),
        fdb_bess=raw["fdb_bess"], condenser=bool(raw["condenser"]), gfm_kind=raw["gfm"],
        agc_participation=tuple(group or ()), ramps=raw["ramps"], load_noise=bool(raw["load_noise"]),
        wind_noise=bool(raw["wind_noise"]), study=study, events=events, horizon=hz,
        dt=float(dt if dt is not None else st["dt"]), record_every=int(st["record_every"]),
        t_start=t_start, seed=int(seed), noise_enabled=bool(st["noise"]), ramps_enabled=bool(st["ramps"]),
        params=params,
    )


def catalog(study: str = "contingency", overrides=None, **kw) -> list[ScenarioConfig]:
    """All 22 configurations: the 11 rows without AGC, then the 11 rows with AGC."""
    names = scenario_names()
    return [load_scenario(n, agc, study, overrides, **kw) for agc in (False, True) for n in names]


def contingency_schedule(config: ScenarioConfig) -> list[EventSpec]:
    """Loss of the whole bus-6 load, one second into the run."""
    return [EventSpec(config.t_start + 1.0, "load_loss", 6)]


# assembly -----------------------------------------------------------------

def _ramps(params):
    spec = params["ramps"]
    raw = yaml.safe_load(_data_text(spec)) if isinstance(spec, str) else spec
    return RampProfile([tuple(p) for p in raw["load"]]), RampProfile([tuple(p) for p in raw["wind"]])


def build_devices(config: ScenarioConfig, network) -> list:
    p = config.params
    mp = p["machine"]
    gov = p["governor"]
    devices = []
    for bus, data in sorted(network.machines.items()):
        if config.wind and bus == WIND_BUS:
            w = dict(p["wind"])
            devices.append(DfigWind("wind", bus, rating=data["rating"], dead_band=config.fdb_wind, **w))
        elif config.gfm_kind and bus == GFM_BUS:
            g = {k: v for k, v in p["gfm"].items() if k not in ("vsm", "droop")}
            cls = GfmVsm if config.gfm_kind == "vsm" else GfmDroop
            devices.append(cls("gfm", bus, rating=data["rating"], **g, **p["gfm"][config.gfm_kind]))
        else:
            governor = TurbineGovernor(dead_band=config.fdb_conv, **gov)
            devices.append(SynchronousMachine(f"gen{bus}", bus, governor=governor, **mp, **data))
    if config.condenser:
        c = p["condenser"]
        data = network.machines[int(c["copy_machine"])]
        devices.append(SynchronousCondenser("condenser", int(c["bus"]), **mp, **data))
    if config.bess:
        devices.append(GflBess("bess", SUPPORT_BUS, dead_band=config.fdb_bess, **p["bess"]))
    return devices


def agc_units(config: ScenarioConfig, devices) -> list[str]:
    groups = set(config.agc_participation)
    units = []
    for d in devices:
        if d.participates_as in groups and not (isinstance(d, SynchronousMachine) and not d.governor):
            units.append(d.name)
    return units


def build_system(config: ScenarioConfig) -> PowerSystem:
    p = config.params
    network = load_case() if p.get("case", "ieee9.yaml") == "ieee9.yaml" else load_case(p["case"])
    devices = build_devices(config, network)
    noise = None
    if config.noise_enabled and (config.load_noise or config.wind_noise):
        noise = NoiseSettings(load=config.load_noise, wind=config.wind_noise, **p["noise"])
    load_ramp = wind_ramp = None
    if config.ramps_enabled:
        load_ramp, wind_ramp = _ramps(p)
        if config.ramps != "both":
            wind_ramp = None
    agc = None
    units = agc_units(config, devices)
    if units:
        a = p["agc"]
        agc = AgcController.equal_share(units, ki=float(a["ki"]), period=float(a["period"]),
                                        limits=tuple(a["limits"]))
    return PowerSystem(network, devices, noise=noise, load_ramp=load_ramp, wind_ramp=wind_ramp,
                       agc=agc, t0=config.t_start)


def run_scenario(config: ScenarioConfig, seed: int | None = None) -> Trace:
    """Assemble and integrate one configuration."""
    system = build_system(config)
    trace = integrate(system, config.integration, config.events,
                      seed=config.seed if seed is None else seed)
    trace.meta.update(scenario=config.name, agc=config.agc_enabled, study=config.study)
    return trace


def scenario_file(name) -> Path:
    index, _ = _resolve(name)
    return Path(str(resources.files("fqsim.data").joinpath("scenarios", f"s{index:02d}.yaml")))
