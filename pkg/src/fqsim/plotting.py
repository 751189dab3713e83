"""Static SVG frequency plots with the ±200 mHz and ±100 mHz bands."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import FqsimError  # noqa: E402


class PlotError(FqsimError):
    pass


def plot_frequency(traces, labels, path, *, channel="f_coi", title=None, bands=(0.2, 0.1)):
    """Overlay ``channel`` of several traces sharing one time base."""
    traces = list(traces)
    labels = list(labels)
    if not traces:
        raise PlotError("nothing to plot")
    if len(labels) != len(traces):
        raise PlotError("one label per trace is required")
    base = traces[0].times
    for tr in traces[1:]:
        if len(tr.times) != len(base) or not np.allclose(tr.times, base, rtol=0, atol=1e-9):
            raise PlotError("traces do not share a time base")
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for tr, lab in zip(traces, labels):
        ax.plot(tr.times, tr[channel], lw=1.2, label=lab)
    styles = ("--", ":")
    for k, band in enumerate(bands):
        ls = styles[k % len(styles)]
        for sign in (1, -1):
            ax.axhline(50 + sign * band, color="0.4", lw=0.8, ls=ls,
                       label=f"±{band * 1000:.0f} mHz" if sign == 1 else None)
    ax.set_xlabel("Time (s)")
    ax.set_ylabel("Frequency (Hz)")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8, loc="best")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path
