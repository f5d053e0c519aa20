"""Run summaries, the stability-condition report and baseline comparison."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from .controller import Channel
from .engine import GRID_TOL, Scenario, TraceLog, convergence_time, event_counts, run
from .errors import NotConverged, NotPositiveDefinite, NotStronglyConnected
from .graph import (
    check_theorem1_condition,
    is_strongly_connected,
    laplacian,
    lemma1_check,
    spectral_data,
)

TWO_PI = 2 * math.pi
CONVERGENCE_TOL = TWO_PI * 1e-3


@dataclass
class ConditionReport:
    strongly_connected: bool
    lemma1: bool | None
    w: list[float] | None
    lam: float | None
    h: float
    sigma_omega: float
    lhs: float
    inv_lambda: float | None
    satisfied: bool
    reason: str = ""

    def lines(self) -> list[str]:
        out = [f"strongly connected : {'yes' if self.strongly_connected else 'NO'}"]
        if self.w is not None:
            out.append("w (wL = 0)         : " + ", ".join(f"{x:.6g}" for x in self.w))
            out.append(f"WL + L'W >= 0      : {'yes' if self.lemma1 else 'NO'}")
        if self.lam is not None:
            out.append(f"lambda             : {self.lam:.10g}")
            out.append(f"h/2 + sigma        : {self.lhs:.6g}")
            out.append(f"1/lambda           : {self.inv_lambda:.6g}")
        if self.reason:
            out.append(f"note               : {self.reason}")
        out.append(f"verdict            : {'PASS' if self.satisfied else 'FAIL'}")
        return out


def condition_report(sc: Scenario) -> ConditionReport:
    c = sc.controller
    lhs = c.h / 2 + c.sigma_omega
    connected = is_strongly_connected(sc.graph)
    if not connected:
        return ConditionReport(False, None, None, None, c.h, c.sigma_omega, lhs, None, False,
                               "communication graph is not strongly connected")
    try:
        spec = spectral_data(sc.graph, gain=c.c_omega)
    except (NotStronglyConnected, NotPositiveDefinite) as exc:
        return ConditionReport(connected, None, None, None, c.h, c.sigma_omega, lhs, None,
                               False, str(exc))
    ok = check_theorem1_condition(c.h, c.sigma_omega, spec.lam)
    return ConditionReport(
        strongly_connected=True, lemma1=lemma1_check(laplacian(sc.graph), spec.w),
        w=spec.w.tolist(), lam=spec.lam, h=c.h, sigma_omega=c.sigma_omega, lhs=lhs,
        inv_lambda=1 / spec.lam, satisfied=ok,
        reason="" if ok else f"h/2 + sigma = {lhs:.6g} >= 1/lambda = {1 / spec.lam:.6g}")


def scheduled_checks(sc: Scenario, window: tuple[float, float]) -> list[int]:
    """Check instants per DG in ``(t_a, t_b]`` after activation; this is what a
    synchronous time-triggered scheme would transmit."""
    dt, h = sc.micro_step, sc.controller.h
    h_ticks = int(round(h / dt))
    ton = int(math.ceil(sc.t_on / dt - GRID_TOL))
    ta, tb = (int(round(x / dt)) for x in window)
    counts = []
    for c in sc.clocks:
        t0 = int(round(c / dt))
        first = t0 + max(0, -((t0 - ton) // h_ticks)) * h_ticks
        lo = max(first, ta + 1)
        counts.append(0 if lo > tb else (tb - first) // h_ticks - (lo - 1 - first) // h_ticks)
    return counts


def packet_counts(log: TraceLog, window: tuple[float, float]) -> list[int]:
    """Transmissions per DG counting simultaneous frequency and power
    broadcasts as one packet."""
    ta, tb = window
    seen = {(ev.dg, ev.t) for ev in log.events if ta + GRID_TOL < ev.t <= tb + GRID_TOL}
    counts = [0] * log.n
    for dg, _ in seen:
        counts[dg] += 1
    return counts


def summarize(sc: Scenario, log: TraceLog, runtime: float,
              cond: ConditionReport | None = None) -> dict:
    cond = cond or condition_report(sc)
    window = (sc.t_on, sc.horizon)
    freq = event_counts(log, window, Channel.FREQUENCY)
    power = event_counts(log, window, Channel.POWER)
    packets = packet_counts(log, window)
    baseline = scheduled_checks(sc, window)
    reduction = 100.0 * (1 - sum(packets) / sum(baseline)) if sum(baseline) else 0.0
    try:
        t_conv = convergence_time(log, sc.controller.omega_ref, CONVERGENCE_TOL, t_from=sc.t_on)
    except NotConverged:
        t_conv = None
    mp = log.mP[-1]
    return {
        "scenario": sc.name,
        "condition": {
            "satisfied": cond.satisfied, "h": cond.h, "sigma_omega": cond.sigma_omega,
            "lambda": cond.lam, "inv_lambda": cond.inv_lambda, "h_half_plus_sigma": cond.lhs,
        },
        "window": list(window),
        "events": {
            "frequency": {"per_dg": freq.per_dg, "total": freq.total},
            "power": {"per_dg": power.per_dg, "total": power.total},
            "packets": {"per_dg": packets, "total": sum(packets)},
            "time_triggered": {"per_dg": baseline, "total": sum(baseline)},
        },
        "communication_reduction": min(100.0, max(0.0, reduction)),
        "convergence_time": t_conv,
        "terminal_frequency_hz": (log.omega[-1] / TWO_PI).tolist(),
        "terminal_sharing_mismatch": float(mp.max() - mp.min()),
        "runtime": runtime,
    }


def timed_run(sc: Scenario) -> tuple[TraceLog, float]:
    start = time.perf_counter()
    log = run(sc)
    return log, time.perf_counter() - start


def time_triggered(sc: Scenario) -> Scenario:
    """Synchronous periodic baseline: zero thresholds, all clocks at zero."""
    ctrl = replace(sc.controller, sigma_omega=0.0, sigma_P=0.0)
    return replace(sc, controller=ctrl, clocks=[0.0] * sc.graph.n,
                   name=f"{sc.name}-time-triggered" if sc.name else "time-triggered")


def compare(sc: Scenario) -> tuple[dict, TraceLog, TraceLog]:
    et_log, _ = timed_run(sc)
    tt_sc = time_triggered(sc)
    tt_log, _ = timed_run(tt_sc)
    window = (sc.t_on, sc.horizon)
    et = packet_counts(et_log, window)
    tt = packet_counts(tt_log, window)
    diff = np.abs(et_log.omega[-1] - tt_log.omega[-1])
    report = {
        "scenario": sc.name,
        "window": list(window),
        "event_triggered": {"per_dg": et, "total": sum(et),
                            "terminal_frequency_hz": (et_log.omega[-1] / TWO_PI).tolist()},
        "time_triggered": {"per_dg": tt, "total": sum(tt),
                           "terminal_frequency_hz": (tt_log.omega[-1] / TWO_PI).tolist()},
        "terminal_frequency_difference": diff.tolist(),
        "max_terminal_frequency_difference": float(diff.max()),
        "communication_reduction": 100.0 * (1 - sum(et) / sum(tt)) if sum(tt) else 0.0,
    }
    return report, et_log, tt_log


def condition_dict(cond: ConditionReport) -> dict:
    return asdict(cond)
