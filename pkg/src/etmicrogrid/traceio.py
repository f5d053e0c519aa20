"""Trace serialization: ``trace.csv`` samples plus JSON event/check logs."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .controller import Channel
from .engine import TraceLog

TWO_PI = 2 * math.pi


def trace_header(n: int) -> list[str]:
    cols = ["t"]
    for prefix in ("omega_hz", "p_watt", "mp_p", "u_omega", "u_p"):
        cols += [f"{prefix}_{i}" for i in range(1, n + 1)]
    return cols


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trace_csv(log: TraceLog, path: str | Path) -> None:
    n = log.n
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_header(n))
        hz = log.omega / TWO_PI
        for k in range(log.t.size):
            w.writerow([_fmt(log.t[k]), *map(_fmt, hz[k]), *map(_fmt, log.P[k]),
                        *map(_fmt, log.mP[k]), *map(_fmt, log.u_omega[k]),
                        *map(_fmt, log.u_P[k])])


def events_records(log: TraceLog) -> list[dict]:
    # DGs are numbered from 1; frequency values are reported in Hz
    return [{"t": e.t, "dg": e.dg + 1, "channel": e.channel,
             "value": e.value / TWO_PI if e.channel == Channel.FREQUENCY.value else e.value}
            for e in log.events]


def checks_records(log: TraceLog) -> list[dict]:
    return [{"t": c.t, "dg": c.dg + 1, "channel": c.channel, "fired": c.fired,
             "lhs": c.lhs, "rhs": c.rhs} for c in log.checks]


def dump_json(obj, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_run(log: TraceLog, summary: dict, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(log, out / "trace.csv")
    dump_json(events_records(log), out / "events.json")
    dump_json(checks_records(log), out / "checks.json")
    dump_json(summary, out / "summary.json")
    return out
