"""Secondary frequency / power-sharing controllers with asynchronous periodic
integral-type event triggers.

Each DG samples its own frequency (and droop-scaled power ``m_p * P``) every
``h`` seconds on a private clock. At each check it compares the drift since
its last broadcast against the RMS of its neighbourhood error over the last
window. Broadcast values are held (zero-order hold) until the next event.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InactiveAgent, NegativeSegment, NotACheckInstant
from .graph import CommGraph

CHECK_TIME_TOL = 1e-12


class Channel(str, enum.Enum):
    FREQUENCY = "frequency"
    POWER = "power"


class TriggerMode(str, enum.Enum):
    INDEPENDENT = "independent"
    JOINT = "joint"


@dataclass(frozen=True)
class ControllerParams:
    c_omega: float = 4.5
    c_P: float = 4.5
    sigma_omega: float = 0.1
    sigma_P: float = 0.1
    omega_ref: float = 2 * math.pi * 50.0
    h: float = 0.01
    trigger_mode: TriggerMode = TriggerMode.INDEPENDENT

    def __post_init__(self):
        object.__setattr__(self, "trigger_mode", TriggerMode(self.trigger_mode))
        if self.c_omega <= 0 or self.c_P <= 0:
            raise ValueError("controller gains must be positive")
        if self.h <= 0:
            raise ValueError("event-checking period h must be positive")
        if self.sigma_omega < 0 or self.sigma_P < 0:
            raise ValueError("trigger thresholds must be nonnegative")

    def sigma(self, channel: Channel) -> float:
        return self.sigma_omega if Channel(channel) is Channel.FREQUENCY else self.sigma_P


@dataclass
class TriggerState:
    """Per-DG, per-channel trigger bookkeeping.

    The neighbourhood error is piecewise constant (it only changes when some
    broadcast changes), so the window integral is accumulated exactly, one
    constant segment at a time.
    """

    channel: Channel
    last_event_value: float
    next_check: float
    window_integral: float = 0.0
    segment_start: float = 0.0
    segment_error: float = 0.0
    checks_since_event: int = 0

    def close_segment(self, t: float) -> None:
        accumulate_window_integral(self, self.segment_error, t - self.segment_start)
        self.segment_start = t

    def open_segment(self, t: float, error: float) -> None:
        self.segment_start = t
        self.segment_error = float(error)


@dataclass(frozen=True)
class CheckResult:
    fired: bool
    lhs: float
    rhs: float


@dataclass
class BroadcastTable:
    """Latest broadcast values; ``active`` marks DGs that have sent their
    first (forced) broadcast. Edges touching an inactive DG are ignored."""

    omega_hat: np.ndarray
    mp_hat: np.ndarray
    active_since: np.ndarray = field(default=None)

    def __post_init__(self):
        self.omega_hat = np.asarray(self.omega_hat, dtype=float).copy()
        self.mp_hat = np.asarray(self.mp_hat, dtype=float).copy()
        if self.active_since is None:
            self.active_since = np.full(self.omega_hat.shape, np.inf)
        else:
            self.active_since = np.asarray(self.active_since, dtype=float).copy()

    @classmethod
    def empty(cls, n: int) -> BroadcastTable:
        return cls(np.zeros(n), np.zeros(n))

    @property
    def active(self) -> np.ndarray:
        return np.isfinite(self.active_since)

    def values(self, channel: Channel) -> np.ndarray:
        return self.omega_hat if Channel(channel) is Channel.FREQUENCY else self.mp_hat


def _effective_adjacency(graph: CommGraph, active: np.ndarray) -> np.ndarray:
    return graph.adjacency * (active[:, None] & active[None, :])


def _require_active(i: int, table: BroadcastTable, t: float) -> None:
    if not (table.active[i] and t >= table.active_since[i]):
        raise InactiveAgent(f"DG {i} has not broadcast yet at t={t}")


def neighborhood_error_freq(i: int, table: BroadcastTable, graph: CommGraph,
                            omega_ref: float, t: float) -> float:
    _require_active(i, table, t)
    active = table.active & (table.active_since <= t)
    w = table.omega_hat
    err = graph.pinning[i] * (w[i] - omega_ref)
    for j in graph.in_neighbors(i):
        if active[j]:
            err += graph.adjacency[i, j] * (w[i] - w[j])
    return float(err)


def neighborhood_error_power(i: int, table: BroadcastTable, graph: CommGraph,
                             t: float) -> float:
    _require_active(i, table, t)
    active = table.active & (table.active_since <= t)
    mp = table.mp_hat
    err = 0.0
    for j in graph.in_neighbors(i):
        if active[j]:
            err += graph.adjacency[i, j] * (mp[i] - mp[j])
    return float(err)


def error_vectors(table: BroadcastTable, graph: CommGraph,
                  omega_ref: float) -> tuple[np.ndarray, np.ndarray]:
    """Frequency and power neighbourhood errors of all DGs at once.

    Inactive DGs get zero error.
    """
    active = table.active
    a = _effective_adjacency(graph, active)
    deg = a.sum(axis=1)
    w, mp = table.omega_hat, table.mp_hat
    e_w = deg * w - a @ w + graph.pinning * (w - omega_ref)
    e_p = deg * mp - a @ mp
    return np.where(active, e_w, 0.0), np.where(active, e_p, 0.0)


def control_input_freq(e_omega_i, params: ControllerParams, active=True):
    return np.where(active, -params.c_omega * np.asarray(e_omega_i), 0.0) + 0.0


def control_input_power(e_P_i, params: ControllerParams, active=True):
    # Negative feedback; the positive sign would make power sharing diverge.
    return np.where(active, -params.c_P * np.asarray(e_P_i), 0.0) + 0.0


def accumulate_window_integral(state: TriggerState, error_value: float,
                               segment_length: float) -> TriggerState:
    if segment_length < 0:
        raise NegativeSegment(f"segment length {segment_length} < 0")
    state.window_integral += float(error_value) ** 2 * segment_length
    return state


def evaluate_trigger(state: TriggerState, current_value: float, sigma: float,
                     h: float) -> CheckResult:
    """Compare drift since the last event with ``sigma * sqrt(integral / h)``.

    ``sigma == 0`` degenerates to periodic sampling: every check broadcasts.
    """
    lhs = abs(float(current_value) - state.last_event_value)
    rhs = sigma * math.sqrt(state.window_integral / h)
    return CheckResult(fired=sigma == 0 or lhs > rhs, lhs=lhs, rhs=rhs)


def commit_check(state: TriggerState, current_value: float, fired: bool, h: float) -> None:
    state.window_integral = 0.0
    state.next_check += h
    if fired:
        state.last_event_value = float(current_value)
        state.checks_since_event = 0
    else:
        state.checks_since_event += 1


def check_trigger(state: TriggerState, current_value: float, params: ControllerParams,
                  t: float | None = None) -> CheckResult:
    """Evaluate and commit one check. ``t`` (if given) must be the scheduled
    check instant."""
    if t is not None and abs(t - state.next_check) > CHECK_TIME_TOL * max(1.0, abs(t)):
        raise NotACheckInstant(f"t={t} is not the scheduled check {state.next_check}")
    res = evaluate_trigger(state, current_value, params.sigma(state.channel), params.h)
    commit_check(state, current_value, res.fired, params.h)
    return res


def on_event(i: int, t: float, channel: Channel, current_value: float,
             table: BroadcastTable) -> BroadcastTable:
    """Store DG ``i``'s new broadcast; delivery to neighbours is instantaneous."""
    table.values(channel)[i] = current_value
    if not table.active[i]:
        table.active_since[i] = t
    return table
