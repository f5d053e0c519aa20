"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 stability condition violated
(or precondition failed), 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import config, report, traceio
from .errors import ConfigInvalid, MicrogridError

EXIT_OK, EXIT_CONFIG, EXIT_CONDITION, EXIT_IO = 0, 1, 2, 3

SWEEP_KEYS = ("sigma_omega", "sigma_p", "h", "c_omega", "c_p")


def _scenario(args):
    if args.preset and args.config:
        raise ConfigInvalid("give either --config or --preset, not both")
    if args.preset:
        return config.load_preset(args.preset)
    if not args.config:
        raise ConfigInvalid("one of --config or --preset is required")
    return config.load_config(args.config)


def cmd_simulate(args) -> int:
    sc = _scenario(args)
    cond = report.condition_report(sc)
    if not cond.satisfied and not args.force:
        print(f"stability condition violated: {cond.reason}; use --force to run anyway",
              file=sys.stderr)
        return EXIT_CONDITION
    log, runtime = report.timed_run(sc)
    summary = report.summarize(sc, log, runtime, cond)
    out = traceio.write_run(log, summary, args.out)
    ev = summary["events"]
    print(f"wrote {out}/trace.csv, events.json, checks.json, summary.json")
    print(f"condition satisfied: {cond.satisfied}")
    print(f"events in ({sc.t_on:g}, {sc.horizon:g}]: frequency {ev['frequency']['total']}, "
          f"power {ev['power']['total']}, packets {ev['packets']['total']} "
          f"of {ev['time_triggered']['total']} "
          f"({summary['communication_reduction']:.1f}% reduction)")
    tc = summary["convergence_time"]
    print("convergence time: " + ("not converged" if tc is None else f"{tc:.3f} s"))
    return EXIT_OK


def cmd_compare(args) -> int:
    sc = _scenario(args)
    rep, _, _ = report.compare(sc)
    et, tt = rep["event_triggered"], rep["time_triggered"]
    print(f"window            : ({rep['window'][0]:g}, {rep['window'][1]:g}]")
    print("                    " + "  ".join(f"DG{i + 1:>4}" for i in range(len(et["per_dg"]))) + "   total")
    print("time-triggered    : " + "  ".join(f"{c:>6}" for c in tt["per_dg"]) + f"  {tt['total']:>6}")
    print("event-triggered   : " + "  ".join(f"{c:>6}" for c in et["per_dg"]) + f"  {et['total']:>6}")
    print(f"reduction         : {rep['communication_reduction']:.1f}%")
    print(f"max |w_et - w_tt| : {rep['max_terminal_frequency_difference']:.3e} rad/s at t = {sc.horizon:g} s")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        traceio.dump_json(rep, Path(args.out) / "compare.json")
    return EXIT_OK


def cmd_check(args) -> int:
    sc = _scenario(args)
    cond = report.condition_report(sc)
    for line in cond.lines():
        print(line)
    return EXIT_OK if cond.satisfied else EXIT_CONDITION


def parse_grid(text: str | None) -> dict[str, list[float]]:
    """``"sigma_omega=0,0.05,0.1;h=0.01,0.005"`` -> ordered axis dict."""
    grid: dict[str, list[float]] = {}
    if not text:
        return grid
    for part in filter(None, (p.strip() for p in text.split(";"))):
        key, _, vals = part.partition("=")
        key = key.strip()
        if key not in SWEEP_KEYS:
            raise ConfigInvalid(f"grid key {key!r} not in {', '.join(SWEEP_KEYS)}")
        try:
            grid[key] = [float(v) for v in vals.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigInvalid(f"grid axis {key!r}: {exc}") from exc
    return grid


def _sweep_point(args):
    sc, point = args
    row = dict(point)
    try:
        sc = config.with_overrides(sc, **point)
        sc.validate()
        cond = report.condition_report(sc)
        log, runtime = report.timed_run(sc)
        s = report.summarize(sc, log, runtime, cond)
        row.update(
            condition_violated=not cond.satisfied, lam=cond.lam,
            events_frequency=s["events"]["frequency"]["total"],
            events_power=s["events"]["power"]["total"],
            packets=s["events"]["packets"]["total"],
            communication_reduction=s["communication_reduction"],
            convergence_time=s["convergence_time"],
            sharing_mismatch=s["terminal_sharing_mismatch"], runtime=runtime, error="")
    except MicrogridError as exc:
        row.update(error=f"{type(exc).__name__}: {exc}")
    return row


SWEEP_COLUMNS = ("condition_violated", "lam", "events_frequency", "events_power", "packets",
                 "communication_reduction", "convergence_time", "sharing_mismatch",
                 "runtime", "error")


def sweep(sc, grid: dict[str, list[float]], workers: int = 1) -> list[dict]:
    if not grid or any(not v for v in grid.values()):
        return []
    keys = list(grid)
    points = [dict(zip(keys, combo)) for combo in itertools.product(*grid.values())]
    jobs = [(sc, p) for p in points]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, jobs))
    return [_sweep_point(j) for j in jobs]


def cmd_sweep(args) -> int:
    sc = _scenario(args)
    grid = parse_grid(args.grid)
    rows = sweep(sc, grid, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cols = [*grid, *SWEEP_COLUMNS]
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else r.get(k, "")) for k in cols})
    print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="etmicrogrid", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="scenario TOML file")
        sp.add_argument("--preset", choices=config.PRESETS, help="bundled scenario")

    sp = sub.add_parser("simulate", help="run one scenario and write trace files")
    common(sp)
    sp.add_argument("--out", default="out", help="output directory")
    sp.add_argument("--force", action="store_true", help="run even if the stability condition fails")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("compare", help="event-triggered run vs synchronous time-triggered baseline")
    common(sp)
    sp.add_argument("--out", help="optional directory for compare.json")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("check", help="report lambda, w and the sampling/threshold condition")
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("sweep", help="run a parameter grid and write sweep.csv")
    common(sp)
    sp.add_argument("--grid", default="", help="e.g. 'sigma_omega=0,0.05,0.1;h=0.01'")
    sp.add_argument("--out", default="out", help="output directory")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MicrogridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONDITION


if __name__ == "__main__":
    sys.exit(main())
