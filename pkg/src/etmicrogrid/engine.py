"""Deterministic hybrid simulation of the event-triggered secondary loop.

Time runs on an integer micro-step grid. Check instants ``t0_i + k*h`` are
grid points, so window integrals are exact and two runs of the same
scenario produce identical logs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Sequence

import numpy as np

from .controller import (
    BroadcastTable,
    Channel,
    ControllerParams,
    TriggerMode,
    TriggerState,
    commit_check,
    control_input_freq,
    control_input_power,
    error_vectors,
    evaluate_trigger,
    on_event,
)
from .errors import ConfigInvalid, NotConverged
from .graph import CommGraph
from .plant import (
    DGParams,
    NetworkModel,
    NetworkSolver,
    PlantState,
    droop_equilibrium,
    initial_network_state,
    network_solve_state,
    network_step,
    reduced_step,
)

GRID_TOL = 1e-9
CHANNELS = (Channel.FREQUENCY, Channel.POWER)


class LoadEvent(NamedTuple):
    t: float
    load: int
    action: Literal["connect", "disconnect"]


class Event(NamedTuple):
    t: float
    dg: int
    channel: str
    value: float


class Check(NamedTuple):
    t: float
    dg: int
    channel: str
    fired: bool
    lhs: float
    rhs: float


@dataclass
class Scenario:
    graph: CommGraph
    controller: ControllerParams
    dg_params: Sequence[DGParams]
    plant_kind: Literal["reduced", "network"] = "reduced"
    network: NetworkModel | None = None
    clocks: Sequence[float] | None = None
    t_on: float = 2.0
    horizon: float = 5.0
    micro_step: float = 1e-3
    load_events: Sequence[LoadEvent] = ()
    initial_state: PlantState | str = "droop-settle"
    name: str = ""

    def __post_init__(self):
        n = self.graph.n
        if self.clocks is None:
            self.clocks = [0.0] * n
        self.clocks = [float(c) for c in self.clocks]
        self.load_events = [LoadEvent(*ev) for ev in self.load_events]
        self.dg_params = list(self.dg_params)

    def validate(self) -> None:
        n, h = self.graph.n, self.controller.h
        if len(self.dg_params) != n:
            raise ConfigInvalid(f"{len(self.dg_params)} DG parameter sets for {n} agents")
        if len(self.clocks) != n:
            raise ConfigInvalid(f"{len(self.clocks)} clock offsets for {n} agents")
        if any(not 0 <= c < h for c in self.clocks):
            raise ConfigInvalid(f"clock offsets must lie in [0, h={h})")
        if self.plant_kind not in ("reduced", "network"):
            raise ConfigInvalid(f"unknown plant kind {self.plant_kind!r}")
        if self.micro_step <= 0:
            raise ConfigInvalid("micro_step must be positive")
        if abs(h / self.micro_step - round(h / self.micro_step)) > GRID_TOL:
            raise ConfigInvalid(f"micro_step {self.micro_step} does not divide h {h}")
        if self.horizon <= self.t_on:
            raise ConfigInvalid("horizon must exceed t_on")
        if self.plant_kind == "network" and self.network is None:
            raise ConfigInvalid("network plant needs a network description")
        if self.network is not None and len(self.network.dg_buses) != n:
            raise ConfigInvalid("network has a different number of DGs than the graph")
        if self.load_events:
            if self.plant_kind != "network":
                raise ConfigInvalid("load events need the network plant")
            for ev in self.load_events:
                if not 0 <= ev.load < len(self.network.loads):
                    raise ConfigInvalid(f"load event refers to unknown load {ev.load}")
                if ev.action not in ("connect", "disconnect"):
                    raise ConfigInvalid(f"unknown load action {ev.action!r}")
        if isinstance(self.initial_state, str):
            if self.initial_state != "droop-settle":
                raise ConfigInvalid(f"unknown initial state {self.initial_state!r}")
            if self.plant_kind == "reduced" and self.network is None:
                raise ConfigInvalid("droop-settle on the reduced plant needs a network")


@dataclass
class TraceLog:
    t: np.ndarray
    omega: np.ndarray
    P: np.ndarray
    mP: np.ndarray
    u_omega: np.ndarray
    u_P: np.ndarray
    events: list[Event] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.omega.shape[1]


def _ticks(x: float, dt: float) -> int:
    return int(round(x / dt))


def _ceil_ticks(x: float, dt: float) -> int:
    return int(math.ceil(x / dt - GRID_TOL))


def _initial_state(sc: Scenario) -> PlantState:
    ref = sc.controller.omega_ref
    if isinstance(sc.initial_state, PlantState):
        return sc.initial_state.copy()
    if sc.plant_kind == "network":
        return initial_network_state(sc.graph.n, ref)
    return droop_equilibrium(sc.network, sc.dg_params, ref)


def run(sc: Scenario) -> TraceLog:
    sc.validate()
    n, params = sc.graph.n, sc.controller
    dt = sc.micro_step
    n_steps = int(math.floor(sc.horizon / dt + GRID_TOL))
    h_ticks = _ticks(params.h, dt)
    t0_ticks = np.array([_ticks(c, dt) for c in sc.clocks])
    ton_tick = _ceil_ticks(sc.t_on, dt)
    first = t0_ticks + np.maximum(0, -((t0_ticks - ton_tick) // h_ticks)) * h_ticks
    m_p = np.array([d.m_p for d in sc.dg_params])
    gains = {Channel.FREQUENCY: params.c_omega, Channel.POWER: params.c_P}
    joint = params.trigger_mode is TriggerMode.JOINT

    network = sc.network
    solver = NetworkSolver(network) if sc.plant_kind == "network" else None
    state = _initial_state(sc)
    if solver is not None:
        state = network_solve_state(state, solver, sc.dg_params)

    load_at: dict[int, list[LoadEvent]] = {}
    for ev in sorted(sc.load_events, key=lambda e: (e.t, e.load)):
        load_at.setdefault(_ceil_ticks(ev.t, dt), []).append(ev)

    table = BroadcastTable.empty(n)
    trig: dict[tuple[int, Channel], TriggerState] = {}
    u_w = np.zeros(n)
    u_p = np.zeros(n)

    out_t = np.arange(n_steps + 1) * dt
    out_w = np.empty((n_steps + 1, n))
    out_P = np.empty((n_steps + 1, n))
    out_uw = np.empty((n_steps + 1, n))
    out_up = np.empty((n_steps + 1, n))
    events: list[Event] = []
    checks: list[Check] = []

    for k in range(n_steps + 1):
        t = float(out_t[k])
        if k > 0:
            if solver is None:
                state = reduced_step(state, u_w, u_p, dt, m_p)
            else:
                state = network_step(state, solver, sc.dg_params, u_w, u_p, dt)
        if k in load_at:
            for ev in load_at[k]:
                network = network.set_load(ev.load, ev.action == "connect")
            solver = NetworkSolver(network)
            state = network_solve_state(state, solver, sc.dg_params)

        due = [i for i in range(n) if k >= first[i] and (k - first[i]) % h_ticks == 0]
        if due:
            current = {Channel.FREQUENCY: state.omega, Channel.POWER: m_p * state.P}
            fired: list[tuple[int, Channel]] = []
            for i in due:
                if k == first[i]:
                    fired.extend((i, ch) for ch in CHANNELS)
                    continue
                results = {}
                for ch in CHANNELS:
                    ts = trig[i, ch]
                    ts.close_segment(t)
                    results[ch] = evaluate_trigger(ts, current[ch][i], params.sigma(ch), params.h)
                both = all(r.fired for r in results.values())
                for ch, res in results.items():
                    go = both if joint else res.fired
                    checks.append(Check(t, i, ch.value, go, res.lhs, res.rhs))
                    commit_check(trig[i, ch], current[ch][i], go, params.h)
                    if go:
                        fired.append((i, ch))
            for ts in trig.values():
                ts.close_segment(t)
            for i, ch in sorted(fired, key=lambda f: (f[0], CHANNELS.index(f[1]))):
                value = float(current[ch][i])
                on_event(i, t, ch, value, table)
                events.append(Event(t, i, ch.value, value))
                if (i, ch) not in trig:
                    trig[i, ch] = TriggerState(ch, last_event_value=value,
                                               next_check=t + params.h, segment_start=t)
            e_w, e_p = error_vectors(table, sc.graph, params.omega_ref)
            active = table.active
            u_w = control_input_freq(e_w, params, active)
            u_p = control_input_power(e_p, params, active)
            # Trigger integrand is the gain-weighted error, i.e. the control input.
            errs = {Channel.FREQUENCY: gains[Channel.FREQUENCY] * e_w,
                    Channel.POWER: gains[Channel.POWER] * e_p}
            for (i, ch), ts in trig.items():
                ts.open_segment(t, errs[ch][i])

        out_w[k] = state.omega
        out_P[k] = state.P
        out_uw[k] = u_w
        out_up[k] = u_p

    meta = {
        "name": sc.name,
        "plant": sc.plant_kind,
        "micro_step": dt,
        "h_ticks": h_ticks,
        "clock_ticks": t0_ticks.tolist(),
        "clocks_quantized": (t0_ticks * dt).tolist(),
        "first_check": (first * dt).tolist(),
    }
    return TraceLog(t=out_t, omega=out_w, P=out_P, mP=out_P * m_p, u_omega=out_uw,
                    u_P=out_up, events=events, checks=checks, meta=meta)


class EventCounts(NamedTuple):
    per_dg: list[int]
    total: int


def event_counts(log: TraceLog, window: tuple[float, float],
                 channel: Channel | str = Channel.FREQUENCY) -> EventCounts:
    """Broadcast events per DG with ``t_a < t <= t_b``."""
    ta, tb = window
    ch = Channel(channel).value
    counts = [0] * log.n
    eps = GRID_TOL * max(1.0, abs(tb))
    for ev in log.events:
        if ev.channel == ch and ta + eps < ev.t <= tb + eps:
            counts[ev.dg] += 1
    return EventCounts(counts, sum(counts))


def convergence_time(log: TraceLog, reference: float, tolerance: float,
                     t_from: float = 0.0, t_until: float | None = None) -> float:
    """Earliest sample time after which every frequency stays within
    ``tolerance`` of ``reference`` (optionally restricted to a sub-window)."""
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    sel = log.t >= t_from - GRID_TOL
    if t_until is not None:
        sel &= log.t <= t_until + GRID_TOL
    t = log.t[sel]
    bad = np.max(np.abs(log.omega[sel] - reference), axis=1) > tolerance
    if not bad.any():
        return float(t[0])
    last = int(np.flatnonzero(bad)[-1])
    if last == t.size - 1:
        raise NotConverged(f"not within {tolerance} rad/s of reference at t={t[-1]}")
    return float(t[last + 1])


def sharing_mismatch(log: TraceLog, index: int = -1) -> float:
    mp = log.mP[index]
    return float(mp.max() - mp.min())
