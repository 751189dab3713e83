"""Short-term (contingency) and long-term frequency-quality metrics.

Every function accepts either a ``Trace`` (its ``f_coi`` channel is used)
or a pair of arrays ``(times, freq)`` passed as ``trace`` and ``freq``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import MetricError

F_NOMINAL = 50.0


class Security(str, enum.Enum):
    SECURE = "Secure"
    INSECURE = "Insecure"


@dataclass(frozen=True)
class SecurityLimits:
    zenith_limit: float = 51.0
    rocof_limit: float = 1.0
    restore_band: float = 0.2

    def __post_init__(self):
        if min(self.zenith_limit, self.rocof_limit, self.restore_band) <= 0:
            raise ValueError("security limits must be positive")


@dataclass(frozen=True)
class ContingencyMetrics:
    zenith: float
    t_zenith: float
    max_rocof: float
    t_restore: float | None
    security: Security


@dataclass(frozen=True)
class LongTermMetrics:
    mean: float
    sigma_f: float
    sigma_f_minus: float
    sigma_f_plus: float
    delta_sigma_f: float
    minutes_outside_100mHz: float
    minutes_below_49p9: float
    minutes_above_50p1: float


def _series(trace, freq=None):
    if freq is None:
        times, freq = trace.times, trace.f_coi
    else:
        times = trace
    t = np.asarray(times, dtype=float)
    f = np.asarray(freq, dtype=float)
    if t.ndim != 1 or t.shape != f.shape:
        raise MetricError("times and frequency must be 1-D arrays of equal length")
    if len(t) == 0:
        raise MetricError("empty trace")
    if len(t) > 1 and np.any(np.diff(t) <= 0):
        raise MetricError("trace times must be strictly increasing")
    return t, f


def max_rocof(trace, window: float = 0.5, freq=None) -> float:
    """Largest |f(t) - f(t - window)| / window over the trace (Hz/s).

    Uniformly spaced traces whose spacing divides the window use exact
    sample differences; otherwise f(t - window) is linearly interpolated.
    """
    t, f = _series(trace, freq)
    if window <= 0:
        raise MetricError("RoCoF window must be positive")
    if len(t) < 2 or t[-1] - t[0] < window * (1 - 1e-12):
        raise MetricError("trace is shorter than the RoCoF window")
    spacing = (t[-1] - t[0]) / (len(t) - 1)
    if spacing > window * (1 + 1e-12):
        raise MetricError("trace spacing exceeds the RoCoF window")
    steps = np.diff(t)
    uniform = np.allclose(steps, spacing, rtol=1e-6, atol=0.0)
    lag = window / spacing
    if uniform and abs(lag - round(lag)) < 1e-6:
        n = int(round(lag))
        return float(np.max(np.abs(f[n:] - f[:-n])) / window)
    mask = t - window >= t[0] - 1e-12 * max(1.0, abs(t[0]))
    past = np.interp(t[mask] - window, t, f)
    return float(np.max(np.abs(f[mask] - past)) / window)


def zenith(trace, event_time: float = 0.0, freq=None) -> tuple[float, float]:
    """(maximum post-event frequency, seconds from the event to it); earliest tie wins."""
    t, f = _series(trace, freq)
    idx = np.nonzero(t >= event_time - 1e-9)[0]
    if len(idx) == 0:
        raise MetricError("trace ends before the event")
    k = idx[0] + int(np.argmax(f[idx]))
    return float(f[k]), float(t[k] - event_time)


def nadir(trace, event_time: float = 0.0, freq=None) -> tuple[float, float]:
    t, f = _series(trace, freq)
    value, tz = zenith(t, event_time, freq=2 * F_NOMINAL - f)
    return 2 * F_NOMINAL - value, tz


def restore_time(trace, event_time: float = 0.0, band: float = 0.2, dwell: float = 10.0,
                 freq=None) -> float | None:
    """Seconds from the event to the first sample after which f stays within 50 ± band.

    "Stays" means every sample in [t_k, min(t_k + dwell, t_end)] is inside
    the band (edges inclusive). Returns None when no such sample exists.
    """
    t, f = _series(trace, freq)
    if band <= 0 or dwell < 0:
        raise MetricError("band must be positive and dwell non-negative")
    idx = np.nonzero(t >= event_time - 1e-9)[0]
    if len(idx) == 0:
        raise MetricError("trace ends before the event")
    t = t[idx[0]:]
    inside = np.abs(f[idx[0]:] - F_NOMINAL) <= band
    n = len(t)
    # index of the next outside sample at or after each position
    nxt = np.empty(n, dtype=np.int64)
    pos = n
    for i in range(n - 1, -1, -1):
        if not inside[i]:
            pos = i
        nxt[i] = pos
    tol = 1e-9 * max(1.0, dwell)
    for k in range(n):
        if not inside[k]:
            continue
        j = nxt[k]
        if j == n or t[j] - t[k] > dwell + tol:
            return float(t[k] - event_time)
    return None


def long_term_stats(trace, sample_period: float = 1.0, freq=None, min_duration: float = 600.0) -> LongTermMetrics:
    """Statistics of the trace averaged over consecutive ``sample_period`` bins.

    Only bins fully covered by the trace are kept. sigma_f- and sigma_f+
    are root-mean-square deviations from 50 Hz of the bins below and above
    nominal; band minutes count bins with |f - 50| > 0.1 Hz.
    """
    t, f = _series(trace, freq)
    if sample_period <= 0:
        raise MetricError("sample period must be positive")
    duration = t[-1] - t[0]
    if duration < min_duration * (1 - 1e-12):
        raise MetricError(f"trace lasts {duration:.1f} s; long-term statistics need at least {min_duration:.0f} s")
    samples = resample_means(t, f, sample_period)
    d = samples - F_NOMINAL
    below = d[d < 0]
    above = d[d > 0]
    s_minus = float(np.sqrt(np.mean(below**2))) if len(below) else 0.0
    s_plus = float(np.sqrt(np.mean(above**2))) if len(above) else 0.0
    per_min = sample_period / 60.0
    m_below = float(np.count_nonzero(d < -0.1) * per_min)
    m_above = float(np.count_nonzero(d > 0.1) * per_min)
    return LongTermMetrics(
        mean=float(np.mean(samples)),
        sigma_f=float(np.std(samples)),
        sigma_f_minus=s_minus,
        sigma_f_plus=s_plus,
        delta_sigma_f=abs(s_minus - s_plus),
        minutes_outside_100mHz=m_below + m_above,
        minutes_below_49p9=m_below,
        minutes_above_50p1=m_above,
    )


def resample_means(t, f, period: float) -> np.ndarray:
    """Means over bins [t0 + kP, t0 + (k+1)P) that lie fully inside the trace span."""
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    rel = t - t[0]
    n_bins = int(math.floor((rel[-1] + 1e-9 * max(1.0, rel[-1])) / period))
    if n_bins < 1:
        raise MetricError("trace shorter than one sample period")
    k = np.floor(rel / period + 1e-9).astype(np.int64)
    keep = k < n_bins
    sums = np.bincount(k[keep], weights=f[keep], minlength=n_bins)
    counts = np.bincount(k[keep], minlength=n_bins)
    ok = counts > 0
    return sums[ok] / counts[ok]


def classify_security(metrics, limits: SecurityLimits | None = None) -> Security:
    """Secure iff zenith and RoCoF are below their limits and frequency was restored.

    ``metrics`` is a ContingencyMetrics or a ``(zenith, rocof, t_restore)`` triple.
    """
    limits = limits or SecurityLimits()
    if isinstance(metrics, ContingencyMetrics):
        z, r, tr = metrics.zenith, metrics.max_rocof, metrics.t_restore
    else:
        z, r, tr = metrics
    restored = tr is not None and math.isfinite(tr)
    if z < limits.zenith_limit and r < limits.rocof_limit and restored:
        return Security.SECURE
    return Security.INSECURE


def contingency_metrics(trace, event_time: float, limits: SecurityLimits | None = None, window: float = 0.5,
                        dwell: float = 10.0, freq=None) -> ContingencyMetrics:
    limits = limits or SecurityLimits()
    t, f = _series(trace, freq)
    z, tz = zenith(t, event_time, freq=f)
    r = max_rocof(t, window, freq=f)
    tr = restore_time(t, event_time, limits.restore_band, dwell, freq=f)
    sec = classify_security((z, r, tr), limits)
    return ContingencyMetrics(z, tz, r, tr, sec)


def delta_sigma(sigma_minus: float, sigma_plus: float) -> float:
    return abs(sigma_minus - sigma_plus)
