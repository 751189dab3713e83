"""Tabular reports in the column order of the contingency and normal-conditions tables."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

from .metrics import ContingencyMetrics, LongTermMetrics

CONTINGENCY_COLUMNS = ("Scenario", "Zenith (Hz)", "T_zenith (s)", "RoCoF (Hz/s)", "T_restore (s)", "Security")
LONGTERM_COLUMNS = ("Scenario", "Mean (Hz)", "σ_f (Hz)", "σ_f- (Hz)", "σ_f+ (Hz)", "Δσ_f (Hz)",
                    "Outside ±100 mHz (mins)", "< 49.9 Hz (mins)", "> 50.1 Hz (mins)")
GROUPS = ("Without AGC", "With AGC")
NO_RESTORE = "No rest."


def format_restore(t_restore) -> str:
    return NO_RESTORE if t_restore is None else f"{t_restore:.2f}"


def contingency_cells(m: ContingencyMetrics) -> list[str]:
    return [f"{m.zenith:.2f}", f"{m.t_zenith:.2f}", f"{m.max_rocof:.2f}", format_restore(m.t_restore),
            m.security.value]


def longterm_cells(m: LongTermMetrics) -> list[str]:
    return [f"{m.mean:.2f}", f"{m.sigma_f:.5f}", f"{m.sigma_f_minus:.5f}", f"{m.sigma_f_plus:.5f}",
            f"{m.delta_sigma_f:.6f}", f"{m.minutes_outside_100mHz:.2f}", f"{m.minutes_below_49p9:.2f}",
            f"{m.minutes_above_50p1:.2f}"]


@dataclass
class ReportRow:
    scenario: str
    agc: bool
    metrics: ContingencyMetrics | LongTermMetrics | None = None
    error: str | None = None

    @property
    def group(self) -> str:
        return GROUPS[1] if self.agc else GROUPS[0]


@dataclass
class ReportTable:
    study: str
    rows: list[ReportRow] = field(default_factory=list)

    @property
    def columns(self) -> tuple[str, ...]:
        return CONTINGENCY_COLUMNS if self.study == "contingency" else LONGTERM_COLUMNS

    def add(self, scenario: str, agc: bool, metrics=None, error: str | None = None) -> None:
        self.rows.append(ReportRow(scenario, agc, metrics, error))

    def ordered(self) -> list[ReportRow]:
        """Without-AGC rows first, each group in insertion (catalog) order."""
        return [r for r in self.rows if not r.agc] + [r for r in self.rows if r.agc]

    @property
    def failed(self) -> list[ReportRow]:
        return [r for r in self.rows if r.error is not None]

    def _cells(self, row: ReportRow) -> list[str]:
        n = len(self.columns) - 1
        if row.error is not None:
            return ["FAILED"] + [""] * (n - 1)
        if self.study == "contingency":
            return contingency_cells(row.metrics)
        return longterm_cells(row.metrics)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["AGC", *self.columns, "Error"])
        for row in self.ordered():
            w.writerow([row.group, row.scenario, *self._cells(row), row.error or ""])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    def to_markdown(self, path=None) -> str:
        cols = self.columns
        lines = ["| " + " | ".join(cols) + " |", "|" + "|".join(["---"] * len(cols)) + "|"]
        for group in GROUPS:
            rows = [r for r in self.ordered() if r.group == group]
            if not rows:
                continue
            lines.append(f"| **{group}** |" + " |" * (len(cols) - 1))
            for row in rows:
                lines.append("| " + " | ".join([row.scenario, *self._cells(row)]) + " |")
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def metrics_row_csv(study: str, scenario: str, agc: bool, metrics, path=None) -> str:
    """Single-row CSV for one run, same schema as the sweep table."""
    table = ReportTable(study)
    table.add(scenario, agc, metrics)
    return table.to_csv(path)
