"""Command-line front-end: run, sweep, metrics, plot.

Exit codes: 0 success, 1 usage error, 2 simulation failure, 3 metric failure.
The default output root comes from ``FQSIM_OUT`` (falls back to ``./fqsim-out``).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import metrics as fm
from .engine import Trace
from .errors import ConfigurationError, FqsimError, MetricError, StepFailure
from .plotting import PlotError, plot_frequency
from .report import ReportTable, metrics_row_csv
from .scenario import load_scenario, run_scenario, scenario_names

EXIT_OK, EXIT_USAGE, EXIT_SIM, EXIT_METRIC = 0, 1, 2, 3

log = logging.getLogger("fqsim")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _out_root(arg) -> Path:
    return Path(arg or os.environ.get("FQSIM_OUT", "fqsim-out"))


def _slug(cfg, seed) -> str:
    return f"s{cfg.index:02d}_{'agc' if cfg.agc_enabled else 'noagc'}_{cfg.study}_seed{seed}"


def _event_time(cfg) -> float:
    return cfg.events[0].time if cfg.events else cfg.t_start


def compute_metrics(cfg, trace: Trace):
    if cfg.study == "contingency":
        return fm.contingency_metrics(trace, _event_time(cfg))
    return fm.long_term_stats(trace)


def average_longterm(items) -> fm.LongTermMetrics:
    items = list(items)
    return fm.LongTermMetrics(**{f.name: float(np.mean([getattr(m, f.name) for m in items]))
                                 for f in fields(fm.LongTermMetrics)})


def _config(args, name, agc):
    return load_scenario(name, agc, args.study, args.set, seed=args.seed if hasattr(args, "seed") else 0,
                         horizon=args.horizon, dt=args.dt, full_24h=args.full_24h)


def _run_one(cfg, seed, out: Path):
    trace = run_scenario(cfg, seed=seed)
    d = out / _slug(cfg, seed)
    d.mkdir(parents=True, exist_ok=True)
    trace.to_csv(d / "trace.csv")
    m = compute_metrics(cfg, trace)
    metrics_row_csv(cfg.study, cfg.name, cfg.agc_enabled, m, d / "metrics.csv")
    return trace, m, d


def cmd_run(args) -> int:
    cfg = _config(args, args.scenario, args.agc == "on")
    out = _out_root(args.out)
    try:
        trace, m, d = _run_one(cfg, args.seed, out)
    except StepFailure as exc:
        print(f"simulation failed at t={exc.time:.6f} s: {exc}", file=sys.stderr)
        return EXIT_SIM
    except MetricError as exc:
        print(f"metric computation failed: {exc}", file=sys.stderr)
        return EXIT_METRIC
    except FqsimError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIM
    table = ReportTable(cfg.study)
    table.add(cfg.name, cfg.agc_enabled, m)
    print(table.to_markdown(), end="")
    print(f"wrote {d}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    seeds = args.seeds or [0]
    out = _out_root(args.out)
    table = ReportTable(args.study)
    for agc in (False, True):
        for name in scenario_names():
            cfg = load_scenario(name, agc, args.study, args.set, horizon=args.horizon, dt=args.dt,
                                full_24h=args.full_24h)
            run_seeds = seeds if args.study == "longterm" else seeds[:1]
            try:
                ms = [_run_one(cfg, s, out)[1] for s in run_seeds]
            except FqsimError as exc:
                log.warning("%s failed: %s", cfg.label, exc)
                table.add(cfg.name, agc, error=str(exc))
                continue
            m = ms[0] if args.study == "contingency" else average_longterm(ms)
            table.add(cfg.name, agc, m)
            log.info("%s done", cfg.label)
    out.mkdir(parents=True, exist_ok=True)
    table.to_csv(out / f"{args.study}_table.csv")
    table.to_markdown(out / f"{args.study}_table.md")
    print(table.to_markdown(), end="")
    if table.failed:
        return EXIT_SIM
    return EXIT_OK


def cmd_metrics(args) -> int:
    try:
        trace = Trace.from_csv(args.trace)
    except (OSError, ValueError, KeyError, IndexError) as exc:
        raise UsageError(f"cannot read trace {args.trace}: {exc}") from None
    if "f_coi" not in trace.channels:
        raise UsageError("trace has no f_coi channel")
    try:
        if args.study == "contingency":
            m = fm.contingency_metrics(trace, args.event_time)
        else:
            m = fm.long_term_stats(trace, sample_period=args.sample_period)
    except MetricError as exc:
        print(f"metric computation failed: {exc}", file=sys.stderr)
        return EXIT_METRIC
    table = ReportTable(args.study)
    table.add(args.label or Path(args.trace).parent.name, args.agc == "on", m)
    if args.out:
        table.to_csv(args.out)
    print(table.to_markdown(), end="")
    return EXIT_OK


def cmd_plot(args) -> int:
    labels = args.labels or [Path(p).parent.name for p in args.traces]
    try:
        traces = [Trace.from_csv(p) for p in args.traces]
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read trace: {exc}") from None
    try:
        path = plot_frequency(traces, labels, args.out, title=args.title)
    except PlotError as exc:
        raise UsageError(str(exc)) from None
    print(f"wrote {path}")
    return EXIT_OK


def _common(p, study_default="contingency"):
    p.add_argument("--study", choices=("contingency", "longterm"), default=study_default)
    p.add_argument("--horizon", type=float, default=None, help="seconds; overrides the study default")
    p.add_argument("--dt", type=float, default=None, help="integration step in seconds")
    p.add_argument("--out", default=None, help="output directory (default: $FQSIM_OUT or ./fqsim-out)")
    p.add_argument("--full-24h", action="store_true", help="long-term study over the whole day")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a parameter, e.g. bess.droop=0.003 or scenario.fdb_wind=0.2")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fqsim", description="Stochastic frequency-quality simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="simulate one configuration")
    p.add_argument("--scenario", required=True, help="catalog name or number (1-11)")
    p.add_argument("--agc", choices=("on", "off"), default="off")
    p.add_argument("--seed", type=int, default=0)
    _common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="simulate all 22 configurations")
    p.add_argument("--seeds", type=int, nargs="*", default=None)
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("metrics", help="recompute metrics from a stored trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--study", choices=("contingency", "longterm"), default="contingency")
    p.add_argument("--event-time", type=float, default=1.0)
    p.add_argument("--sample-period", type=float, default=1.0)
    p.add_argument("--agc", choices=("on", "off"), default="off")
    p.add_argument("--label", default=None)
    p.add_argument("--out", default=None, help="CSV file for the metrics row")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("plot", help="overlay frequency traces as SVG")
    p.add_argument("--traces", nargs="+", required=True)
    p.add_argument("--labels", nargs="*", default=None)
    p.add_argument("--title", default=None)
    p.add_argument("--out", required=True, help="SVG file")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"fqsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigurationError as exc:
        print(f"fqsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
