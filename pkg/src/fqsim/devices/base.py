from __future__ import annotations

import numpy as np

from ..errors import ModelValidityError


class Device:
    """One dynamic component connected to a bus.

    Subclasses set ``family`` (which compiled kernel evaluates them),
    ``n_states`` and ``state_names``, and implement ``initialize`` and
    ``param_row``. ``pf_role`` is ``"gen"`` when the device supplies the
    power-flow generation at its bus and ``"zero"`` when it floats at
    zero exchange in the initial operating point.
    """

    family = ""
    n_states = 0
    state_names: tuple[str, ...] = ()
    pf_role = "gen"
    participates_as: str | None = None  # AGC group: "conv", "wind" or "gfm"

    def __init__(self, name: str, bus: int):
        self.name = name
        self.bus = bus
        self.x0: np.ndarray | None = None

    def initialize(self, v: float, theta: float, p: float, q: float, **inputs) -> np.ndarray:
        raise NotImplementedError

    def param_row(self) -> np.ndarray:
        raise NotImplementedError

    def _rhs(self, row, x, v, theta, dx, **inputs):
        raise NotImplementedError

    def inertia(self) -> float:
        """Inertia weight (seconds times system-base MVA) used for the COI frequency."""
        return 0.0

    def speed(self, x: np.ndarray) -> float:
        return 1.0

    def set_agc_offset(self, row: np.ndarray, offset_sys: float) -> None:
        raise NotImplementedError(f"{self.name} cannot follow AGC set-points")

    def derivatives(self, x, v: float, theta: float, **inputs):
        """Local state derivatives and complex current injection (system base).

        ``x`` holds only this device's states. The current is the phasor
        injected into the network at the device bus.
        """
        if v < 0.01:
            raise ModelValidityError(f"{self.name}: terminal voltage {v:.4f} pu below model validity")
        x = np.asarray(x, dtype=float)
        dx = np.zeros(self.n_states)
        row = self.param_row()
        row[1] = 0.0
        p, q = self._rhs(row, x, v, theta, dx, **inputs)
        vph = v * np.exp(1j * theta)
        current = np.conj(complex(p, q) / vph)
        return dx, current


def device_derivatives(device: Device, x, v, theta, **inputs):
    return device.derivatives(x, v, theta, **inputs)
