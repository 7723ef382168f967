"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Tolerances are fixed: 1e-9 on exact paths, 3 standard errors on Monte Carlo.
"""
import math

import numpy as np
import pytest

from recharging_bandits import checks
from recharging_bandits.bandit import C_ROB, benchmark_curve, etc_run, perturbations
from recharging_bandits.cli import main
from recharging_bandits.instances import Instance, constant, generate, heaviside, save
from recharging_bandits.lp import build_lp, extract_profile, solve_extreme, solve_instance
from recharging_bandits.oracle import dp_opt_curve, gamma
from recharging_bandits.scheduler import simulate_many

PUBLISHED = {1: 0.63, 2: 0.72, 3: 0.77, 4: 0.80, 5: 0.82, 10: 0.87}


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def test_c01_constants_table(criterion):
    # The published values agree with the exact constant in the first two
    # decimals (truncation); k=2 and k=3 would round up to 0.73 and 0.78.
    got = {k: gamma(k) for k in PUBLISHED}
    ok = all(math.floor(g * 100) / 100 == PUBLISHED[k] and abs(g - PUBLISHED[k]) < 0.01 for k, g in got.items())
    detail = ", ".join(f"k={k}: {g:.4f}" for k, g in got.items())
    assert criterion(1, "constants table", ok, detail)


def test_c02_lp_upper_bound(criterion):
    res = checks.lp_upper_bound(trials=200)
    assert criterion(2, "T*V* >= opt(T)", res.passed, f"{res.trials} (instance, T) pairs, {res.failures} failures, "
                     f"worst slack {res.worst_margin:.3g}")


def test_c03_vertex_sparsity(criterion):
    res = checks.lp_sparsity(trials=1000)
    assert criterion(3, "extreme-point sparsity", res.passed, f"{res.trials} instances, {res.failures} failures")


def test_c04_correlation_gap(criterion):
    res = checks.correlation_gap(trials=1000)
    assert criterion(4, "correlation gap and closure bound", res.passed,
                     f"{res.trials} draws, {res.failures} failures, worst margin {res.worst_margin:.3g}")


def test_c05_exclusive_coupling(criterion):
    res = checks.exclusive_coupling(trials=500)
    assert criterion(5, "exclusive coupling", res.passed,
                     f"{res.trials} cases, {res.failures} failures, worst gap {res.worst_margin:.3g}")


def test_c06_marginals(criterion):
    res = checks.marginals(inits=100_000, t=100)
    assert criterion(6, "candidate marginals", res.passed,
                     f"4 frequencies over 1e5 inits, {res.failures} outside 3 SE")


def _c7_instances():
    rng = np.random.default_rng(2024)
    out = []
    for k in (1, 2, 3):
        for j in range(20):
            n = int(rng.integers(k + 1, 5))
            kind = ("heaviside", "concave", "random-monotone")[j % 3]
            out.append(generate(kind, n, int(rng.integers(1, 5)), int(rng.integers(2**31)), k=k))
    return out


def test_c07_approximation(criterion):
    T, seeds = 10_000, list(range(50))
    fails, worst = [], math.inf
    instances = _c7_instances()
    for idx, inst in enumerate(instances):
        _, profile = solve_instance(inst)
        opt = dp_opt_curve(inst, T)[-1]
        pay = simulate_many(inst.table(), profile, seeds, T, inst.k)[:, inst.tau_max - 1 :].mean(axis=1)
        m, se = _mean_se(pay)
        slack = m - (gamma(inst.k) * opt / T - 3 * se)
        worst = min(worst, slack)
        if slack < -1e-12:
            fails.append(idx)
    ok = not fails
    assert criterion(7, "approximation guarantee", ok,
                     f"{len(instances)} instances (20 per k), worst slack {worst:.4f}, failing {fails}")


def _c8_instances():
    rng = np.random.default_rng(7)
    insts = [Instance((heaviside(1.0, 2), constant(0.6)), 1, 2)]
    for k in (1, 1, 2, 2, 3):
        insts.append(generate("random-monotone", k + 1 + int(rng.integers(0, 2)), 3, int(rng.integers(2**31)), k=k))
    return insts


def test_c08_robustness(criterion):
    eps, T, seeds = 0.05, 10_000, list(range(50))
    worst, fails = math.inf, []
    for idx, inst in enumerate(_c8_instances()):
        table = inst.table()
        sol = solve_extreme(build_lp(Instance.from_table(table, inst.k)))
        opt = dp_opt_curve(inst, T)[-1]
        bound = gamma(inst.k) * opt / T - C_ROB * inst.k * eps
        for name, est in perturbations(table, set(sol.x), eps).items():
            profile = extract_profile(solve_extreme(build_lp(Instance.from_table(est, inst.k, strict=False))))
            pay = simulate_many(table, profile, seeds, T, inst.k, select_table=est)
            m, se = _mean_se(pay[:, inst.tau_max - 1 :].mean(axis=1))
            slack = m - (bound - 3 * se)
            worst = min(worst, slack)
            if slack < -1e-12:
                fails.append((idx, name))
    assert criterion(8, "robustness to eps=0.05 estimates", not fails,
                     f"C_rob={C_ROB}, 6 instances x 7 perturbations, worst slack {worst:.4f}, failing {fails}")


def test_c09_sublinear_regret(criterion):
    # n identical Heaviside arms with k=1: the LP plays each arm every n rounds and
    # the scheduler's collisions keep its payoff close to gamma_1 * opt, so the
    # learning cost is visible instead of being masked by a planning surplus.
    inst = Instance(tuple(heaviside(1.0, 5) for _ in range(5)), 1, 5)
    Ts, seeds = (2000, 4000, 8000, 16000), range(200)
    curve, kind = benchmark_curve(inst, Ts[-1], budget=10**8)
    means, ses = [], []
    for T in Ts:
        m, se = _mean_se([etc_run(inst, T, seed=s, benchmark=(curve[:T], kind)).regret for s in seeds])
        means.append(m)
        ses.append(se)
    per_round = [m / T for m, T in zip(means, Ts)]
    decreasing = all(a > b for a, b in zip(per_round, per_round[1:]))
    positive = all(m > 0 for m in means)
    slope = float(np.polyfit(np.log(Ts), np.log(means), 1)[0]) if positive else float("nan")
    ok = kind == "dp" and decreasing and positive and slope <= 0.85
    detail = (f"{kind} benchmark, 200 seeds, Reg/T = " + ", ".join(f"{r:.4f}" for r in per_round)
              + f" (SE {', '.join(f'{s / T:.4f}' for s, T in zip(ses, Ts))}), slope {slope:.3f}")
    assert criterion(9, "sublinear regret", ok, detail)


def _snapshot(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_c10_determinism(criterion, tmp_path):
    inst = tmp_path / "hv.json"
    save(Instance((heaviside(1.0, 2), constant(0.6)), 1, 2), inst)
    commands = {
        "gen": ["gen", "--kind", "concave", "--n", "4", "--tau-max", "3", "--seed", "1", "--out", "{d}/i.json"],
        "solve-lp": ["solve-lp", "--instance", str(inst), "--out", "{d}/lp.json"],
        "plan": ["plan", "--instance", str(inst), "--horizon", "500", "--seed", "2", "--out", "{d}"],
        "simulate": ["simulate", "--instance", str(inst), "--horizon", "500", "--seeds", "0-19",
                     "--algorithms", "rti,greedy,etc", "--workers", "4", "--out", "{d}"],
        "learn": ["learn", "--instance", str(inst), "--horizon", "3000", "--seeds", "0-3", "--out", "{d}"],
        "oracle": ["oracle", "--scale", "0.02", "--out", "{d}/o.csv"],
        "verify": ["verify", "--scale", "0.01", "--out", "{d}/v.csv"],
    }
    differing = []
    for name, argv in commands.items():
        snaps = []
        for rep in ("a", "b"):
            d = tmp_path / name / rep
            d.mkdir(parents=True)
            assert main([a.replace("{d}", str(d)) for a in argv]) == 0
            snaps.append(_snapshot(d))
        if not snaps[0] or snaps[0] != snaps[1]:
            differing.append(name)
    assert criterion(10, "determinism", not differing,
                     f"{len(commands)} subcommands rerun, differing: {differing or 'none'}")
