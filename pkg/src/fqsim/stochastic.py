"""Ornstein-Uhlenbeck disturbances and deterministic ramp profiles.

Each OU channel follows ``d eta = alpha (mu - eta) dt + sigma dW`` with
additive (state-independent) diffusion. Ramp profiles are piecewise-linear
multipliers with constant extrapolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


@dataclass
class OuProcess:
    mean: float = 0.0
    mean_reversion: float = 1.0 / 300.0
    diffusion: float = 0.0
    value: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.mean_reversion < 0:
            raise ConfigurationError(f"{self.name or 'OU process'}: mean reversion must be >= 0")
        if self.diffusion < 0:
            raise ConfigurationError(f"{self.name or 'OU process'}: diffusion must be >= 0")

    @classmethod
    def from_stationary_std(cls, std, mean_reversion, mean=0.0, name=""):
        """Diffusion chosen so the stationary standard deviation equals ``std``."""
        return cls(mean=mean, mean_reversion=mean_reversion,
                   diffusion=std * math.sqrt(2.0 * mean_reversion), value=mean, name=name)

    @property
    def stationary_variance(self) -> float:
        if self.mean_reversion == 0:
            return math.inf
        return self.diffusion**2 / (2.0 * self.mean_reversion)

    def row(self) -> tuple[float, float, float]:
        return (self.mean, self.mean_reversion, self.diffusion)


def ou_drift(process: OuProcess, eta=None):
    eta = process.value if eta is None else eta
    return process.mean_reversion * (process.mean - eta)


def ou_diffusion(process: OuProcess, eta=None):
    return process.diffusion


def ou_trapezoid_step(eta, dt, dw, mean, alpha, sigma):
    """One drift-implicit trapezoidal step with an Ito (start-of-step) diffusion term.

    Works elementwise on scalars or arrays; the drift is linear so the
    implicit equation is solved exactly.
    """
    h = 0.5 * alpha * dt
    return (eta * (1.0 - h) + alpha * mean * dt + sigma * dw) / (1.0 + h)


def simulate_ou(process: OuProcess, n_steps: int, dt: float, rng) -> np.ndarray:
    """Sample path of one OU channel using the integrator's update rule."""
    dw = rng.normal(0.0, math.sqrt(dt), n_steps)
    path = np.empty(n_steps + 1)
    path[0] = eta = process.value
    for k in range(n_steps):
        eta = ou_trapezoid_step(eta, dt, dw[k], process.mean, process.mean_reversion, process.diffusion)
        path[k + 1] = eta
    return path


@dataclass
class RampProfile:
    breakpoints: list[tuple[float, float]] = field(default_factory=lambda: [(0.0, 1.0)])

    def __post_init__(self):
        if not self.breakpoints:
            raise ConfigurationError("ramp profile needs at least one breakpoint")
        self.breakpoints = [(float(t), float(v)) for t, v in self.breakpoints]
        times = [t for t, _ in self.breakpoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigurationError("ramp breakpoint times must be strictly increasing")
        if any(v <= 0 for _, v in self.breakpoints):
            raise ConfigurationError("ramp levels must be positive")

    @classmethod
    def constant(cls, level=1.0):
        return cls([(0.0, level)])

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.breakpoints])

    @property
    def levels(self) -> np.ndarray:
        return np.array([v for _, v in self.breakpoints])


def ramp_value(profile: RampProfile, t):
    if not profile.breakpoints:
        raise ConfigurationError("ramp profile needs at least one breakpoint")
    # np.interp clamps to the end levels outside the breakpoint span
    return np.interp(t, profile.times, profile.levels)
