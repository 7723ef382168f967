"""Dense-tableau primal simplex returning basic (vertex) optima.

Small, well-scaled LPs only: ``max c.x`` subject to ``A_ub x <= b_ub`` and
``A_eq x = b_eq`` with ``x >= 0`` and ``b_ub >= 0``. Equality rows go through
a phase-one with artificial columns. Dantzig pricing is used until a run of
degenerate pivots trips a counter, after which Bland's rule takes over.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

TOL = 1e-9
DEGENERATE_LIMIT = 50


class SolverError(RuntimeError):
    pass


class InfeasibleError(SolverError):
    pass


class UnboundedError(SolverError):
    pass


@dataclass
class SimplexResult:
    x: np.ndarray  # structural variables only
    value: float
    basis: tuple[int, ...]  # column indices; >= n_struct are slacks
    n_struct: int
    pivots: int


class _Tableau:
    def __init__(self, T: np.ndarray, basis: list[int], max_pivots: int):
        self.T = T
        self.basis = basis
        self.max_pivots = max_pivots
        self.pivots = 0
        self.degenerate_run = 0

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        others = np.abs(T[:, col]) > 0
        others[row] = False
        T[others] -= np.outer(T[others, col], T[row])
        self.basis[row] = col
        self.pivots += 1

    def optimize(self, allowed: np.ndarray) -> None:
        """Pivot until no allowed column has a positive reduced cost.

        The objective row is the last row and stores reduced costs c_j - z_j.
        """
        T = self.T
        m = T.shape[0] - 1
        while True:
            if self.pivots > self.max_pivots:
                raise SolverError(f"pivot limit {self.max_pivots} exceeded (cycling guard)")
            red = np.where(allowed, T[-1, :-1], 0.0)
            bland = self.degenerate_run >= DEGENERATE_LIMIT
            if bland:
                cand = np.flatnonzero(red > TOL)
                if cand.size == 0:
                    return
                col = int(cand[0])
            else:
                col = int(np.argmax(red))
                if red[col] <= TOL:
                    return
            colv = T[:m, col]
            pos = colv > TOL
            if not pos.any():
                raise UnboundedError(f"column {col} has no positive entry")
            ratios = np.full(m, np.inf)
            ratios[pos] = T[:m, -1][pos] / colv[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + TOL)
            if bland:
                row = int(min(ties, key=lambda r: self.basis[r]))
            else:
                row = int(ties[np.argmax(colv[ties])])
            if best <= TOL:
                self.degenerate_run += 1
            else:
                self.degenerate_run = 0
            self.pivot(row, col)


def solve(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    max_pivots: int = 10_000,
) -> SimplexResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).copy()
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).copy()
    if (b_ub < 0).any():
        raise ValueError("inequality right-hand sides must be nonnegative")
    neg = b_eq < 0
    A_eq[neg] *= -1
    b_eq[neg] *= -1

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    # columns: structural | slacks (one per ub row) | artificials (one per eq row)
    ncols = n + m_ub + m_eq
    T = np.zeros((m + 1, ncols + 1))
    T[:m_ub, :n] = A_ub
    T[:m_ub, n : n + m_ub] = np.eye(m_ub)
    T[:m_ub, -1] = b_ub
    T[m_ub:m, :n] = A_eq
    T[m_ub:m, n + m_ub : ncols] = np.eye(m_eq)
    T[m_ub:m, -1] = b_eq
    A_full, b_full = T[:m, :ncols].copy(), T[:m, -1].copy()
    basis = list(range(n, ncols))
    tab = _Tableau(T, basis, max_pivots)
    artificial = np.zeros(ncols, dtype=bool)
    artificial[n + m_ub :] = True

    if m_eq:
        # phase one: maximize -sum(artificials); reduced costs after pricing out the basis
        T[-1, :] = T[m_ub:m].sum(axis=0)
        T[-1, :ncols][artificial] = 0.0
        tab.optimize(~artificial)
        if T[-1, -1] > 1e-7:  # rhs of the objective row holds the remaining infeasibility
            raise InfeasibleError(f"phase one ended with infeasibility {T[-1, -1]:.3g}")
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = list(range(m))
        for r in range(m):
            if not artificial[tab.basis[r]]:
                continue
            row = T[r, :ncols]
            cand = np.flatnonzero((np.abs(row) > 1e-9) & ~artificial)
            if cand.size:
                tab.pivot(r, int(cand[0]))
            else:
                keep.remove(r)
        if len(keep) < m:
            T = np.vstack([T[keep], T[-1:]])
            A_full, b_full = A_full[keep], b_full[keep]
            tab.T = T
            tab.basis = [tab.basis[r] for r in keep]
            m = len(keep)

    # phase two: reduced costs of the true objective w.r.t. the current basis
    cost = np.zeros(ncols)
    cost[:n] = c
    T[-1, :] = 0.0
    T[-1, :ncols] = cost
    for r, b in enumerate(tab.basis):
        if cost[b] != 0.0:
            T[-1] -= cost[b] * T[r]
    tab.degenerate_run = 0
    tab.optimize(~artificial)

    x = np.zeros(ncols)
    try:
        # re-solve the basic system on the original data to shed pivot round-off
        x[tab.basis] = np.linalg.solve(A_full[:, tab.basis], b_full)
    except np.linalg.LinAlgError:
        raise SolverError("final basis is singular") from None
    x = x[:n]
    x[np.abs(x) < TOL * 1e-3] = 0.0
    if (x < -1e-7).any():
        raise SolverError("negative basic variable after phase two")
    x = np.maximum(x, 0.0)
    value = float(c @ x)
    log.debug("simplex: %d pivots, value %.12g", tab.pivots, value)
    return SimplexResult(x, value, tuple(tab.basis), n, tab.pivots)
