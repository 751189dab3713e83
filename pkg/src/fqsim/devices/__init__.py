from .base import Device, device_derivatives
from .bess import GflBess, bess_pfc_power
from .gfm import GfmDroop, GfmVsm, gfm_droop_frequency, vsm_swing_derivative
from .kernels import deadband
from .machine import SynchronousCondenser, SynchronousMachine, TurbineGovernor, governor_response
from .wind import DfigWind, mppt_power

__all__ = [
    "Device",
    "DfigWind",
    "GflBess",
    "GfmDroop",
    "GfmVsm",
    "SynchronousCondenser",
    "SynchronousMachine",
    "TurbineGovernor",
    "bess_pfc_power",
    "deadband",
    "device_derivatives",
    "gfm_droop_frequency",
    "governor_response",
    "mppt_power",
    "vsm_swing_derivative",
]
