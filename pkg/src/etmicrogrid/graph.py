"""Directed communication topology and the spectral quantities behind the
sampling/threshold stability condition.

Convention: ``adjacency[i, j] > 0`` means DG ``j`` sends to DG ``i``
(``j`` is an in-neighbour of ``i``). The Laplacian therefore carries
in-degrees on its diagonal and its rows sum to zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite, NotStronglyConnected

PD_TOL = 1e-12


@dataclass(frozen=True)
class CommGraph:
    adjacency: np.ndarray
    pinning: np.ndarray

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=float)
        g = np.array(self.pinning, dtype=float).reshape(-1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {a.shape}")
        if g.shape[0] != a.shape[0]:
            raise DimensionMismatch(
                f"pinning has {g.shape[0]} entries for {a.shape[0]} agents")
        if np.any(a < 0) or np.any(np.diag(a) != 0):
            raise ValueError("adjacency must be nonnegative with zero diagonal")
        if np.any(g < 0) or not np.any(g > 0):
            raise ValueError("pinning must be nonnegative with at least one positive gain")
        a.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "adjacency", a)
        object.__setattr__(self, "pinning", g)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def in_neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i] > 0)

    def out_neighbors(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[:, j] > 0)


@dataclass(frozen=True)
class SpectralData:
    laplacian: np.ndarray
    pinned: np.ndarray
    w: np.ndarray
    bigW: np.ndarray
    lam: float
    generalized_eigenvalues: np.ndarray = field(repr=False)


def laplacian(graph: CommGraph) -> np.ndarray:
    a = graph.adjacency
    return np.diag(a.sum(axis=1)) - a


def is_strongly_connected(graph: CommGraph) -> bool:
    """Reachability in both directions from node 0 (two BFS passes)."""
    n = graph.n
    if n == 1:
        return True
    edges = graph.adjacency > 0

    def reach(adj: np.ndarray) -> int:
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        frontier = [0]
        while frontier:
            nxt = []
            for u in frontier:
                for v in np.flatnonzero(adj[u] & ~seen):
                    seen[v] = True
                    nxt.append(v)
            frontier = nxt
        return int(seen.sum())

    # edges[i, j] is the edge j -> i, so edges.T[j] lists successors of j.
    return reach(edges.T) == n and reach(edges) == n


def left_perron_vector(lap: np.ndarray) -> np.ndarray:
    """Positive ``w`` with ``w @ lap = 0``, scaled so that ``sum(w) == n``."""
    lap = np.asarray(lap, dtype=float)
    n = lap.shape[0]
    if n == 1:
        return np.ones(1)
    # Null space of lap.T from the SVD; a strongly connected graph gives rank n-1.
    _, s, vt = np.linalg.svd(lap.T)
    scale = max(s[0], 1.0)
    if s[-2] <= 1e-10 * scale:
        raise NotStronglyConnected("Laplacian null space is not one-dimensional")
    w = vt[-1]
    w = w / w.sum() * n if abs(w.sum()) > 0 else w
    if np.any(w <= 0):
        raise NotStronglyConnected("left null vector is not strictly positive")
    # One refinement pass: pin w_0 and solve the remaining equations exactly.
    w_ref = np.linalg.lstsq(lap.T[:, 1:], -lap.T[:, 0] * w[0], rcond=None)[0]
    w = np.concatenate(([w[0]], w_ref))
    return w / w.sum() * n


def lemma1_check(lap: np.ndarray, w: np.ndarray, tol: float = 1e-9) -> bool:
    """True when ``W L + L^T W`` is positive semidefinite (up to ``tol``)."""
    lap = np.asarray(lap, dtype=float)
    w = np.asarray(w, dtype=float).reshape(-1)
    if lap.shape != (w.size, w.size):
        raise DimensionMismatch(f"Laplacian {lap.shape} vs w of length {w.size}")
    W = np.diag(w)
    sym = W @ lap + lap.T @ W
    return bool(np.linalg.eigvalsh(sym).min() >= -tol)


def _lambda_pencil(pinned: np.ndarray, bigW: np.ndarray) -> np.ndarray:
    A = np.asarray(pinned, dtype=float)
    W = np.asarray(bigW, dtype=float)
    if A.shape != W.shape or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"A {A.shape} vs W {W.shape}")
    num = A.T @ W @ A
    num = (num + num.T) / 2
    den = (W @ A + A.T @ W) / 2
    if np.linalg.eigvalsh(num).min() < PD_TOL:
        raise NotPositiveDefinite("A^T W A is not positive definite")
    if np.linalg.eigvalsh(den).min() < PD_TOL:
        raise NotPositiveDefinite("sym(W A) is not positive definite")
    # Cholesky-reduced symmetric-definite generalized eigenproblem.
    return scipy.linalg.eigh(num, den, eigvals_only=True)


def compute_lambda(pinned: np.ndarray, bigW: np.ndarray) -> float:
    """Maximum over unit vectors of ``x'A'WAx / x'WAx``.

    Only the symmetric part of ``WA`` contributes to the denominator, so the
    maximum is the top eigenvalue of the pencil ``(A'WA, sym(WA))``.
    """
    return float(_lambda_pencil(pinned, bigW)[-1])


def check_theorem1_condition(h: float, sigma: float, lam: float) -> bool:
    """Sufficient condition for restoration: ``h/2 + sigma < 1/lam`` (strict)."""
    if h <= 0 or sigma < 0 or lam <= 0:
        raise ValueError("need h > 0, sigma >= 0, lambda > 0")
    return h / 2 + sigma < 1 / lam


def spectral_data(graph: CommGraph, gain: float = 1.0) -> SpectralData:
    """Everything the stability check needs, with the control gain folded into
    the pinned Laplacian (``A = gain * (L + G)``)."""
    lap = laplacian(graph)
    if not is_strongly_connected(graph):
        raise NotStronglyConnected("communication graph is not strongly connected")
    w = left_perron_vector(lap)
    W = np.diag(w)
    pinned = gain * (lap + np.diag(graph.pinning))
    ev = _lambda_pencil(pinned, W)
    return SpectralData(laplacian=lap, pinned=pinned, w=w, bigW=W,
                        lam=float(ev[-1]), generalized_eigenvalues=ev)


def ring_graph(n: int, weight: float = 1.0, pinned: tuple[int, ...] = (0,),
               gain: float = 1.0) -> CommGraph:
    """Directed ring 0 -> 1 -> ... -> n-1 -> 0."""
    a = np.zeros((n, n))
    for i in range(n):
        if n > 1:
            a[i, (i - 1) % n] = weight
    g = np.zeros(n)
    g[list(pinned)] = gain
    return CommGraph(a, g)
