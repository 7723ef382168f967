"""Exact reference computations for small cases.

* ``dp_opt``: optimal total payoff over ``T`` rounds by backward induction on
  capped delay vectors (capping at each arm's recovery time loses nothing).
* The weighted rank function ``f(S) = max{w(I) : I subset of S, |I| <= k}``,
  its multilinear extension ``F`` (independent inclusion) and its concave
  closure ``f+`` (best correlated distribution with the same marginals).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import simplex
from .instances import Instance
from .lp import DelayProfile

DEFAULT_BUDGET = 10**7
EXACT_TOL = 1e-9


class BudgetExceeded(RuntimeError):
    pass


def gamma(k: int) -> float:
    """Approximation constant ``1 - k^k / (e^k k!)``, via log-factorials."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return 1.0 - math.exp(k * math.log(k) - k - math.lgamma(k + 1))


# -- planning optimum ---------------------------------------------------------


def _dp_tables(instance: Instance):
    caps = [f.recovery_time for f in instance.arms]
    n = instance.n
    shape = tuple(caps)
    S = int(np.prod(shape))
    delays = np.stack(np.unravel_index(np.arange(S), shape), axis=1) + 1  # (S, n)
    vals = np.stack([np.asarray(f.values)[delays[:, i] - 1] for i, f in enumerate(instance.arms)], axis=1)
    aged = np.minimum(delays + 1, np.array(caps))
    actions = [a for r in range(instance.k + 1) for a in itertools.combinations(range(n), r)]
    reward = np.zeros((len(actions), S))
    nxt = np.zeros((len(actions), S), dtype=np.int64)
    for j, a in enumerate(actions):
        d = aged.copy()
        if a:
            d[:, list(a)] = 1
            reward[j] = vals[:, list(a)].sum(axis=1)
        nxt[j] = np.ravel_multi_index(tuple((d - 1).T), shape)
    return reward, nxt, S


def dp_opt_curve(instance: Instance, T: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """``opt(1), ..., opt(T)`` from one backward pass; every arm starts at delay 1."""
    S = math.prod(f.recovery_time for f in instance.arms)
    if S * T > budget:
        raise BudgetExceeded(
            f"{S} delay states x {T} rounds = {S * T} exceeds the budget of {budget}; "
            "raise --budget or use the LP upper bound"
        )
    reward, nxt, S = _dp_tables(instance)
    V = np.zeros(S)
    out = np.empty(T)
    for h in range(T):
        V = (reward + V[nxt]).max(axis=0)
        out[h] = V[0]
    return out


def dp_opt(instance: Instance, T: int, budget: int = DEFAULT_BUDGET) -> float:
    return float(dp_opt_curve(instance, T, budget)[-1])


# -- weighted rank and its extensions ----------------------------------------


def weighted_rank(w, k: int, S) -> float:
    vals = sorted((float(w[i]) for i in S), reverse=True)
    return float(sum(vals[:k]))


def _rank_all(w: np.ndarray, k: int) -> np.ndarray:
    """``f(S)`` for every subset, indexed by bitmask."""
    n = w.size
    masks = np.arange(2**n)
    bits = (masks[:, None] >> np.arange(n)) & 1
    ws = np.sort(np.where(bits == 1, w[None, :], 0.0), axis=1)[:, ::-1]
    return ws[:, :k].sum(axis=1)


def _product_weights(y: np.ndarray) -> np.ndarray:
    n = y.size
    masks = np.arange(2**n)
    bits = (masks[:, None] >> np.arange(n)) & 1
    return np.prod(np.where(bits == 1, y[None, :], 1.0 - y[None, :]), axis=1)


def _check_inputs(w, y, limit: int):
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float)
    if w.shape != y.shape or w.ndim != 1:
        raise ValueError("w and y must be vectors of equal length")
    if w.size > limit:
        raise ValueError(f"exact enumeration limited to n <= {limit}, got {w.size}")
    if (y < 0).any() or (y > 1).any():
        raise ValueError("marginals must lie in [0, 1]")
    return w, y


def multilinear_exact(w, k: int, y) -> float:
    w, y = _check_inputs(w, y, 20)
    n = w.size
    if n <= 14:
        return float(_rank_all(w, k) @ _product_weights(y))
    # split the ground set so neither half's table gets big
    lo, hi = n // 2, n - n // 2
    total = 0.0
    pw_lo = _product_weights(y[:lo])
    bits_lo = (np.arange(2**lo)[:, None] >> np.arange(lo)) & 1
    for mask_hi in range(2**hi):
        sel = np.array([(mask_hi >> j) & 1 for j in range(hi)], dtype=bool)
        p_hi = float(np.prod(np.where(sel, y[lo:], 1.0 - y[lo:])))
        if p_hi == 0.0:
            continue
        ws = np.where(bits_lo == 1, w[None, :lo], 0.0)
        ws = np.concatenate([ws, np.broadcast_to(np.where(sel, w[lo:], 0.0), (2**lo, hi))], axis=1)
        f = np.sort(ws, axis=1)[:, ::-1][:, :k].sum(axis=1)
        total += p_hi * float(f @ pw_lo)
    return total


def multilinear_mc(w, k: int, y, samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo estimate of ``F`` and its standard error."""
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float)
    incl = rng.random((samples, w.size)) < y[None, :]
    vals = np.sort(np.where(incl, w[None, :], 0.0), axis=1)[:, ::-1][:, :k].sum(axis=1)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def concave_closure_exact(w, k: int, y) -> float:
    """``f+(y)``: LP over distribution weights on all ``2^n`` subsets."""
    w, y = _check_inputs(w, y, 12)
    n = w.size
    masks = np.arange(2**n)
    bits = ((masks[None, :] >> np.arange(n)[:, None]) & 1).astype(float)
    A_eq = np.vstack([bits, np.ones(2**n)])
    b_eq = np.concatenate([y, [1.0]])
    try:
        res = simplex.solve(_rank_all(w, k), A_eq=A_eq, b_eq=b_eq)
    except simplex.InfeasibleError as exc:
        raise RuntimeError(f"closure LP infeasible for marginals in [0,1]: {exc}") from exc
    return res.value


@dataclass(frozen=True)
class GapReport:
    holds: bool
    ratio: float
    multilinear: float
    closure: float
    bound: float


def correlation_gap_check(w, k: int, y) -> GapReport:
    F = multilinear_exact(w, k, y)
    fp = concave_closure_exact(w, k, y)
    g = gamma(k)
    holds = F >= g * fp - EXACT_TOL and fp >= F - EXACT_TOL
    ratio = F / fp if fp > 0 else 1.0
    return GapReport(holds, ratio, F, fp, g)


@dataclass(frozen=True)
class CouplingReport:
    holds: bool
    gap: float
    exclusive: float
    independent: float


def exclusive_expectation(w, k: int, y, a: int, b: int) -> float:
    """E f(S) when ``a`` and ``b`` enter S mutually exclusively, the rest independently."""
    w, y = _check_inputs(w, y, 12)
    if a == b:
        raise ValueError("the coupled elements must be distinct")
    if y[a] + y[b] > 1.0 + EXACT_TOL:
        raise ValueError(f"y[a] + y[b] = {y[a] + y[b]} exceeds 1")
    rest = [i for i in range(w.size) if i not in (a, b)]
    wr, yr = w[rest], y[rest]
    pw = _product_weights(yr)
    bits = (np.arange(2**len(rest))[:, None] >> np.arange(len(rest))) & 1
    base = np.where(bits == 1, wr[None, :], 0.0)

    def f_with(extra: float | None) -> np.ndarray:
        ws = base if extra is None else np.concatenate([base, np.full((base.shape[0], 1), extra)], axis=1)
        return np.sort(ws, axis=1)[:, ::-1][:, :k].sum(axis=1)

    branch = (1.0 - y[a] - y[b]) * f_with(None) + y[a] * f_with(w[a]) + y[b] * f_with(w[b])
    return float(branch @ pw)


def exclusive_coupling_check(w, k: int, y, a: int, b: int) -> CouplingReport:
    e_d = exclusive_expectation(w, k, y, a, b)
    e_i = multilinear_exact(w, k, y)
    return CouplingReport(e_d >= e_i - EXACT_TOL, e_d - e_i, e_d, e_i)


def profile_vectors(profile: DelayProfile, table: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Weights and inclusion marginals seen by a round after burn-in.

    Regular arm: ``w = p(tau*)``, ``y = 1/tau*``. The irregular arm is split
    into one copy per possible critical delay with ``y = x`` at that delay.
    """
    width = table.shape[1]
    p = lambda i, d: float(table[i, min(d, width) - 1])
    w, y = [], []
    for i, tau in sorted(profile.regular.items()):
        w.append(p(i, tau))
        y.append(1.0 / tau)
    ir = profile.irregular
    if ir is not None:
        w.append(p(ir.arm, ir.tau_a))
        y.append(ir.x_a)
        if ir.tau_b is not None:
            w.append(p(ir.arm, ir.tau_b))
            y.append(ir.x_b)
    return np.array(w), np.array(y)
