"""Random reduced-plant scenarios that satisfy (or deliberately violate) the
sampling/threshold condition."""
import math

import numpy as np

from etmicrogrid.controller import ControllerParams
from etmicrogrid.engine import Scenario
from etmicrogrid.graph import CommGraph, spectral_data
from etmicrogrid.plant import DGParams, PlantState

from .conftest import random_strong_digraph

OMEGA_REF = 2 * math.pi * 50.0
GRID = 1e-4


def random_theorem_scenario(seed: int, violate: bool = False, horizon: float = 20.0) -> Scenario:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    a = random_strong_digraph(rng, n)
    pin = np.zeros(n)
    pin[rng.choice(n, int(rng.integers(1, n + 1)), replace=False)] = rng.uniform(0.5, 2.0)
    g = CommGraph(a, pin)
    # gain chosen so the slowest closed-loop mode decays at >= 1.5 / s
    slow = np.min(np.linalg.eigvals(spectral_data(g).pinned).real)
    c = 1.5 / slow
    lam = spectral_data(g, gain=c).lam
    h = max(GRID, math.floor(0.6 / lam / GRID) * GRID)
    sigma = 0.5 * (1 / lam - h / 2)
    if violate:
        sigma = 2 / lam - h / 2
    micro = h / 5
    ticks = 5
    clocks = [int(k) * micro for k in rng.integers(0, ticks, n)]
    m_p = rng.uniform(5e-5, 2e-4, n)
    omega0 = OMEGA_REF + rng.uniform(-1.0, 1.0, n)
    mp0 = rng.uniform(0.5, 2.0, n)
    init = PlantState(omega=omega0, omega_n=omega0 + mp0, theta=np.zeros(n),
                      P=mp0 / m_p, Q=np.zeros(n))
    ctrl = ControllerParams(c_omega=c, c_P=c, sigma_omega=sigma, sigma_P=sigma,
                            omega_ref=OMEGA_REF, h=h)
    return Scenario(graph=g, controller=ctrl, dg_params=[DGParams(m) for m in m_p],
                    plant_kind="reduced", clocks=clocks, t_on=h, horizon=horizon,
                    micro_step=micro, initial_state=init, name=f"random-{seed}")
