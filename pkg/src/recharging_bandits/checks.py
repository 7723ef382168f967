"""Randomized property sweeps over the planner and the oracles.

Each sweep returns a :class:`CheckResult`; ``worst_margin`` is the smallest
slack seen (negative means a violation). The CLI ``oracle`` and ``verify``
subcommands and the test-suite share these.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .instances import KINDS, Instance, generate
from .lp import DelayProfile, IrregularArm, StructureViolation, build_lp, extract_profile, solve_extreme
from .oracle import (
    BudgetExceeded,
    concave_closure_exact,
    correlation_gap_check,
    dp_opt_curve,
    exclusive_coupling_check,
    gamma,
    multilinear_exact,
    profile_vectors,
    weighted_rank,
)
from .scheduler import candidates, init_schedule, simulate_many

log = logging.getLogger(__name__)
TOL = 1e-9


@dataclass
class CheckResult:
    name: str
    trials: int = 0
    failures: int = 0
    worst_margin: float = math.inf
    witnesses: list = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        return self.trials > 0 and self.failures == 0

    def observe(self, margin: float, witness=None, ok: bool | None = None) -> None:
        self.trials += 1
        self.worst_margin = min(self.worst_margin, margin)
        if ok is None:
            ok = margin >= 0.0
        if not ok:
            self.failures += 1
            if len(self.witnesses) < 5:
                self.witnesses.append(witness)

    def row(self) -> tuple:
        return self.name, self.trials, self.failures, self.worst_margin


def random_instance(rng: np.random.Generator, n_max: int, tau_max: int, ks=(1, 2, 3), n_min: int = 2) -> Instance:
    k = int(rng.choice(ks))
    n = int(rng.integers(max(n_min, k + 1), max(n_max, k + 1) + 1))
    kind = KINDS[int(rng.integers(len(KINDS)))]
    tm = int(rng.integers(1, tau_max + 1))
    return generate(kind, n, tm, int(rng.integers(2**31)), k=k)


def lp_sparsity(trials: int = 1000, seed: int = 0) -> CheckResult:
    """Vertex optima have at most (#supported + 1) nonzeros and at most one irregular arm."""
    res = CheckResult("lp-sparsity")
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        inst = random_instance(rng, 8, 6)
        sol = solve_extreme(build_lp(inst))
        slack = len(sol.supported_arms()) + 1 - len(sol.x)
        try:
            extract_profile(sol)
            ok = slack >= 0
        except StructureViolation:
            ok = False
        res.observe(float(slack), inst, ok)
    return res


def lp_upper_bound(trials: int = 200, seed: int = 1, horizons=(5, 10, 20)) -> CheckResult:
    """T * V* >= opt(T) against the DP optimum."""
    res = CheckResult("lp-upper-bound")
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        inst = random_instance(rng, 4, 4, ks=(1, 2))
        v = solve_extreme(build_lp(inst)).value
        curve = dp_opt_curve(inst, max(horizons))
        for T in horizons:
            res.observe(T * v - curve[T - 1] + TOL, (inst, T))
    return res


def support_truncation(trials: int = 200, seed: int = 2) -> CheckResult:
    """Allowing delays up to 2 * tau_max does not change V*."""
    res = CheckResult("support-truncation")
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        inst = random_instance(rng, 6, 5)
        v = solve_extreme(build_lp(inst)).value
        v2 = solve_extreme(build_lp(inst, max_delay=2 * inst.tau_max)).value
        res.observe(TOL - abs(v - v2), inst)
    return res


def lp_optimality(trials: int = 100, points: int = 100, seed: int = 3) -> CheckResult:
    """V* dominates rejection-sampled feasible points of the polytope."""
    res = CheckResult("lp-optimality")
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        inst = random_instance(rng, 6, 5)
        prob = build_lp(inst)
        v = solve_extreme(prob).value
        widths = np.array([inst.arms[i].recovery_time for i, _ in prob.variables], dtype=float)
        taus = np.array([tau for _, tau in prob.variables], dtype=float)
        hi = 1.0 / (taus * widths)  # every point in this box meets the per-arm rows
        got = 0
        while got < points:
            x = rng.random(hi.size) * hi
            if x.sum() > inst.k:
                continue
            got += 1
            res.observe(v - float(prob.c @ x) + TOL, (inst, x))
    return res


def _random_wky(rng: np.random.Generator, n_max: int = 8):
    n = int(rng.integers(1, n_max + 1))
    k = int(rng.integers(1, 4))
    w = rng.random(n) * rng.choice([1.0, 10.0])
    y = rng.random(n)
    if rng.random() < 0.5:
        y *= min(1.0, k / y.sum()) * rng.random()  # land inside ||y||_1 <= k
    if rng.random() < 0.2:
        y = np.round(y)  # vertex cases
    return w, k, y


def correlation_gap(trials: int = 1000, seed: int = 4) -> CheckResult:
    """F >= gamma_k f+, f+ >= F, and f+ >= w.y whenever ||y||_1 <= k."""
    res = CheckResult("correlation-gap")
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        w, k, y = _random_wky(rng)
        rep = correlation_gap_check(w, k, y)
        margin = min(rep.multilinear - gamma(k) * rep.closure, rep.closure - rep.multilinear) + TOL
        if y.sum() <= k:
            margin = min(margin, rep.closure - float(w @ y) + TOL)
        res.observe(margin, (w, k, y))
    return res


def exclusive_coupling(trials: int = 500, seed: int = 5) -> CheckResult:
    res = CheckResult("exclusive-coupling")
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        k = int(rng.integers(1, 4))
        w = rng.random(n)
        y = rng.random(n)
        a, b = (int(v) for v in rng.choice(n, size=2, replace=False))
        s = y[a] + y[b]
        if s > 1.0:
            y[a], y[b] = y[a] / s * rng.random(), y[b] / s * rng.random()
        rep = exclusive_coupling_check(w, k, y, a, b)
        res.observe(rep.gap + TOL, (w, k, y, a, b))
    return res


def closure_concavity(trials: int = 200, seed: int = 6) -> CheckResult:
    res = CheckResult("closure-concavity")
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        n = int(rng.integers(1, 7))
        k = int(rng.integers(1, 4))
        w = rng.random(n)
        y1, y2 = rng.random(n), rng.random(n)
        mid = concave_closure_exact(w, k, (y1 + y2) / 2)
        ends = (concave_closure_exact(w, k, y1) + concave_closure_exact(w, k, y2)) / 2
        res.observe(mid - ends + TOL, (w, k, y1, y2))
    return res


def multilinear_vertices(trials: int = 200, seed: int = 7) -> CheckResult:
    res = CheckResult("multilinear-vertices")
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        n = int(rng.integers(1, 9))
        k = int(rng.integers(1, 4))
        w = rng.random(n)
        y = (rng.random(n) < 0.5).astype(float)
        S = [i for i in range(n) if y[i] == 1.0]
        res.observe(TOL - abs(multilinear_exact(w, k, y) - weighted_rank(w, k, S)), (w, k, y))
    return res


def dp_monotone(trials: int = 100, seed: int = 8, T: int = 20) -> CheckResult:
    """opt(T) never decreases as T grows."""
    res = CheckResult("dp-monotone")
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        inst = random_instance(rng, 4, 4, ks=(1, 2))
        curve = dp_opt_curve(inst, T)
        res.observe(float(np.min(np.diff(curve))) + TOL, inst)
    return res


def marginals(inits: int = 100_000, t: int = 100, seed_base: int = 0) -> CheckResult:
    """Candidate frequencies at a fixed round match 1/tau* and the LP marginals.

    Uses a profile with a regular arm (tau*=3), a regular arm (tau*=1) and an
    irregular arm spread over delays 2 and 5. Pass = within 3 standard errors.
    """
    profile = DelayProfile({0: 3, 2: 1}, IrregularArm(1, 2, 0.3, 5, 0.06))
    targets = {
        ("cand", 0): 1 / 3,
        ("cand", 2): 1.0,
        ("joint", 1, 2): 0.3,
        ("joint", 1, 5): 0.06,
    }
    hits = dict.fromkeys(targets, 0)
    for s in range(seed_base, seed_base + inits):
        st = init_schedule(profile, s)
        c = candidates(st, t)
        hits[("cand", 0)] += 0 in c
        hits[("cand", 2)] += 2 in c
        if 1 in c:
            hits[("joint", 1, st.sampled_delay[1])] += 1
    res = CheckResult("candidate-marginals")
    for key, p in targets.items():
        freq = hits[key] / inits
        se = math.sqrt(max(p * (1 - p), 1e-12) / inits)
        res.observe(3 * se - abs(freq - p) if p < 1 else -abs(freq - p), key)
    return res


def rti_vs_multilinear(trials: int = 20, seeds: int = 400, seed: int = 9) -> CheckResult:
    """Per-round expected payoff after burn-in >= F(w, y) built from the profile (3 SE slack)."""
    res = CheckResult("rti-vs-multilinear")
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        inst = random_instance(rng, 5, 4, ks=(1, 2))
        sol = solve_extreme(build_lp(inst))
        profile = extract_profile(sol)
        table = inst.table()
        w, y = profile_vectors(profile, table)
        F = multilinear_exact(w, inst.k, y) if w.size else 0.0
        t_eval = inst.tau_max + 3 * inst.tau_max
        pay = simulate_many(table, profile, list(range(seeds)), t_eval, inst.k)
        col = pay[:, inst.tau_max - 1 :].mean(axis=1)
        mean, se = float(col.mean()), float(col.std(ddof=1) / math.sqrt(seeds))
        res.observe(mean - F + 3 * se + TOL, inst)
    return res


ORACLE_SUITE = (
    lp_upper_bound,
    correlation_gap,
    exclusive_coupling,
    closure_concavity,
    multilinear_vertices,
    dp_monotone,
)
VERIFY_SUITE = (lp_sparsity, support_truncation, lp_optimality) + ORACLE_SUITE + (marginals, rti_vs_multilinear)


def run_suite(suite, scale: float = 1.0) -> list[CheckResult]:
    """Run each sweep; ``scale`` shrinks or grows the default trial counts."""
    out = []
    for fn in suite:
        kwargs = {}
        if scale != 1.0:
            name = "inits" if fn is marginals else "trials"
            default = fn.__defaults__[0]
            kwargs[name] = max(1, int(round(default * scale)))
        try:
            out.append(fn(**kwargs))
        except BudgetExceeded as exc:
            log.error("%s refused: %s", fn.__name__, exc)
            out.append(CheckResult(fn.__name__.replace("_", "-"), failures=1, worst_margin=-math.inf))
    return out
