"""Plant models driven by the secondary controller.

Two fidelities share one :class:`PlantState`:

* the reduced first-order model, where frequency and the droop-scaled power
  ``m_p * P`` are pure integrators of the two auxiliary inputs;
* a quasi-static phasor network: each DG is an ideal source of droop-set
  magnitude behind its connector, lines and RL loads are constant impedances
  at nominal frequency, and angles drift with frequency differences.

The network is solved per phase; reported ``P`` and ``Q`` are three-phase
totals (``NetworkModel.phases`` times the per-phase value).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import SingularNetwork

OMEGA_NOMINAL = 2 * np.pi * 50.0


@dataclass(frozen=True)
class DGParams:
    m_p: float
    n_q: float = 0.0
    v_nominal: float = 380.0
    r_c: float = 0.0
    l_c: float = 0.0

    def __post_init__(self):
        if self.m_p <= 0:
            raise ValueError("m_p must be positive")
        if self.n_q < 0:
            raise ValueError("n_q must be nonnegative")
        if self.v_nominal <= 0:
            raise ValueError("v_nominal must be positive")
        if self.r_c < 0 or self.l_c < 0:
            raise ValueError("connector impedance must be nonnegative")


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    r: float
    l: float


@dataclass(frozen=True)
class Load:
    bus: int
    r: float
    l: float
    connected: bool = True
    name: str = ""

    def __post_init__(self):
        if self.r < 0 or self.l < 0 or (self.r == 0 and self.l == 0):
            raise ValueError(f"load {self.name or self.bus}: need R, L >= 0, not both zero")


@dataclass(frozen=True)
class NetworkModel:
    n_buses: int
    dg_buses: tuple[int, ...]
    connectors: tuple[tuple[float, float], ...]
    lines: tuple[Line, ...]
    loads: tuple[Load, ...]
    omega_nominal: float = OMEGA_NOMINAL
    phases: int = 3

    def __post_init__(self):
        object.__setattr__(self, "dg_buses", tuple(int(b) for b in self.dg_buses))
        object.__setattr__(self, "connectors", tuple(tuple(map(float, c)) for c in self.connectors))
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "loads", tuple(self.loads))
        if len(self.connectors) != len(self.dg_buses):
            raise ValueError("one connector impedance per DG is required")
        if not self.dg_buses:
            raise ValueError("network needs at least one DG source")
        for b in (*self.dg_buses, *(ln.from_bus for ln in self.lines),
                  *(ln.to_bus for ln in self.lines), *(ld.bus for ld in self.loads)):
            if not 0 <= b < self.n_buses:
                raise ValueError(f"bus index {b} out of range 0..{self.n_buses - 1}")
        for ln in self.lines:
            if ln.r < 0 or ln.l < 0 or (ln.r == 0 and ln.l == 0):
                raise ValueError(f"line {ln.from_bus}-{ln.to_bus}: need R, L >= 0, not both zero")
        if not self._connected():
            raise ValueError("network buses are not all connected through lines")

    def _connected(self) -> bool:
        parent = list(range(self.n_buses))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for ln in self.lines:
            parent[find(ln.from_bus)] = find(ln.to_bus)
        return len({find(b) for b in range(self.n_buses)}) == 1

    @classmethod
    def from_dgs(cls, dgs, dg_buses, lines, loads, **kw) -> NetworkModel:
        return cls(n_buses=kw.pop("n_buses", 1 + max(
            [*dg_buses, *(ln.from_bus for ln in lines), *(ln.to_bus for ln in lines),
             *(ld.bus for ld in loads)])),
            dg_buses=tuple(dg_buses), connectors=tuple((d.r_c, d.l_c) for d in dgs),
            lines=tuple(lines), loads=tuple(loads), **kw)

    def set_load(self, index: int, connected: bool) -> NetworkModel:
        loads = list(self.loads)
        loads[index] = replace(loads[index], connected=connected)
        return replace(self, loads=tuple(loads))

    def impedance(self, r: float, l: float) -> complex:
        return complex(r, self.omega_nominal * l)


@dataclass
class PlantState:
    omega: np.ndarray
    omega_n: np.ndarray
    theta: np.ndarray
    P: np.ndarray
    Q: np.ndarray

    def copy(self) -> PlantState:
        return PlantState(self.omega.copy(), self.omega_n.copy(), self.theta.copy(),
                          self.P.copy(), self.Q.copy())


@dataclass(frozen=True)
class PhasorSolution:
    P: np.ndarray
    Q: np.ndarray
    bus_voltages: np.ndarray
    source_currents: np.ndarray


@dataclass
class NetworkSolver:
    """Precomputed linear map from source EMFs to source currents.

    Source nodes have fixed voltage; all other nodes are eliminated once
    (Kron reduction), so each solve is a small matrix-vector product.
    """

    network: NetworkModel
    _M: np.ndarray = field(init=False, repr=False)
    _B: np.ndarray = field(init=False, repr=False)
    _bus_src: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        net = self.network
        nb, nd = net.n_buses, len(net.dg_buses)
        # node ids: buses 0..nb-1, then one internal node per DG with a connector
        node_of_src = []
        branches = []  # (a, b, admittance); b = -1 means ground
        extra = nb
        for i, (bus, (rc, lc)) in enumerate(zip(net.dg_buses, net.connectors)):
            if rc == 0 and lc == 0:
                if bus in node_of_src:
                    raise SingularNetwork(f"two ideal sources share bus {bus}")
                node_of_src.append(bus)
            else:
                node_of_src.append(extra)
                branches.append((extra, bus, 1 / net.impedance(rc, lc)))
                extra += 1
        for ln in net.lines:
            branches.append((ln.from_bus, ln.to_bus, 1 / net.impedance(ln.r, ln.l)))
        for ld in net.loads:
            if ld.connected:
                branches.append((ld.bus, -1, 1 / net.impedance(ld.r, ld.l)))
        Y = np.zeros((extra, extra), dtype=complex)
        for a, b, y in branches:
            Y[a, a] += y
            if b >= 0:
                Y[b, b] += y
                Y[a, b] -= y
                Y[b, a] -= y
        known = np.array(node_of_src)
        unknown = np.setdiff1d(np.arange(extra), known)
        Ykk = Y[np.ix_(known, known)]
        if unknown.size:
            Yuu = Y[np.ix_(unknown, unknown)]
            Yuk = Y[np.ix_(unknown, known)]
            Yku = Y[np.ix_(known, unknown)]
            if np.linalg.cond(Yuu) > 1e14:
                raise SingularNetwork("nodal admittance system is singular")
            B = -np.linalg.solve(Yuu, Yuk)
            M = Ykk + Yku @ B
        else:
            B = np.zeros((0, nd), dtype=complex)
            M = Ykk
        # bus voltage map: each bus is either a source node or an eliminated node
        bus_map = np.zeros((nb, nd), dtype=complex)
        pos_u = {int(u): r for r, u in enumerate(unknown)}
        pos_k = {int(k): c for c, k in enumerate(known)}
        for b in range(nb):
            if b in pos_k:
                bus_map[b, pos_k[b]] = 1.0
            else:
                bus_map[b] = B[pos_u[b]]
        self._M = M
        self._B = bus_map
        self._bus_src = known

    def solve(self, droop_voltages, theta) -> PhasorSolution:
        E = np.asarray(droop_voltages, dtype=float) * np.exp(1j * np.asarray(theta, dtype=float))
        I = self._M @ E
        S = E * np.conj(I)
        return PhasorSolution(P=S.real, Q=S.imag, bus_voltages=self._B @ E, source_currents=I)


def phasor_solve(network: NetworkModel, droop_voltages, theta) -> PhasorSolution:
    """Per-phase source powers for given source magnitudes and angles."""
    return NetworkSolver(network).solve(droop_voltages, theta)


def reduced_step(state: PlantState, u_omega, u_P, dt: float, m_p) -> PlantState:
    """Exact integration over ``dt`` of inputs held constant."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    m_p = np.asarray(m_p, dtype=float)
    omega = state.omega + np.asarray(u_omega) * dt
    mP = m_p * state.P + np.asarray(u_P) * dt
    return PlantState(omega=omega, omega_n=omega + mP, theta=state.theta.copy(),
                      P=mP / m_p, Q=state.Q.copy())


def droop_voltages(solver: NetworkSolver, dgs, theta, v_guess=None,
                   tol: float = 1e-10, max_iter: int = 50) -> np.ndarray:
    """Source magnitudes consistent with the voltage droop ``V = V_n - n_Q Q``.

    ``Q`` depends on ``V`` through the network, so the loop is closed with
    Newton's method rather than a lagged substitution (the lag diverges once
    ``n_Q * dQ/dV`` exceeds one, which it does for stiff networks).
    """
    Vn = np.array([d.v_nominal for d in dgs])
    nq = np.array([d.n_q for d in dgs]) * solver.network.phases
    if not np.any(nq):
        return Vn
    u = np.exp(1j * np.asarray(theta, dtype=float))
    C = u[:, None] * np.conj(solver._M) * np.conj(u)[None, :]
    V = Vn.copy() if v_guess is None else np.asarray(v_guess, dtype=float).copy()
    for _ in range(max_iter):
        CV = C @ V
        S = V * CV
        F = V - Vn + nq * S.imag
        dS = V[:, None] * C + np.diag(CV)
        J = np.eye(V.size) + nq[:, None] * dS.imag
        step = np.linalg.solve(J, F)
        V = V - step
        if np.max(np.abs(step)) < tol * np.max(Vn):
            return V
    raise SingularNetwork("voltage droop loop did not converge")


def network_solve_state(state: PlantState, solver: NetworkSolver, dgs) -> PlantState:
    """Re-solve the algebraic network at the current setpoints and angles."""
    m_p = np.array([d.m_p for d in dgs])
    k = solver.network.phases
    V = droop_voltages(solver, dgs, state.theta)
    sol = solver.solve(V, state.theta)
    P, Q = k * sol.P, k * sol.Q
    return PlantState(omega=state.omega_n - m_p * P, omega_n=state.omega_n.copy(),
                      theta=state.theta.copy(), P=P, Q=Q)


def network_step(state: PlantState, network: NetworkModel | NetworkSolver, dgs,
                 u_omega, u_P, dt: float) -> PlantState:
    """One quasi-static step: integrate setpoints, solve the network with the
    voltage droop closed, apply frequency droop, then advance angles in DG 1's
    rotating frame."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    solver = network if isinstance(network, NetworkSolver) else NetworkSolver(network)
    omega_n = state.omega_n + (np.asarray(u_omega) + np.asarray(u_P)) * dt
    nxt = network_solve_state(
        PlantState(state.omega, omega_n, state.theta, state.P, state.Q), solver, dgs)
    nxt.theta = state.theta + (nxt.omega - nxt.omega[0]) * dt
    return nxt


def initial_network_state(n: int, omega_ref: float) -> PlantState:
    z = np.zeros(n)
    return PlantState(omega=np.full(n, omega_ref), omega_n=np.full(n, omega_ref),
                      theta=z.copy(), P=z.copy(), Q=z.copy())


def droop_equilibrium(network: NetworkModel, dgs, omega_ref: float, dt: float = 1e-3,
                      max_time: float = 60.0, tol: float = 1e-11) -> PlantState:
    """Primary-only operating point reached from nominal setpoints.

    Runs the network model with zero secondary input until angles and
    reactive powers stop moving.
    """
    solver = NetworkSolver(network)
    state = network_solve_state(initial_network_state(len(dgs), omega_ref), solver, dgs)
    zero = np.zeros(len(dgs))
    for _ in range(int(round(max_time / dt))):
        nxt = network_step(state, solver, dgs, zero, zero, dt)
        moved = max(np.max(np.abs(nxt.theta - state.theta)),
                    np.max(np.abs(nxt.Q - state.Q)) / max(1.0, np.max(np.abs(nxt.Q))))
        state = nxt
        if moved < tol:
            return state
    raise RuntimeError("droop equilibrium did not settle")
