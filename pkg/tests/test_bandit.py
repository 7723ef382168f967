import math

import numpy as np
import pytest

from recharging_bandits.bandit import (
    C_EXPLORE,
    ExplorationBudgetError,
    StochasticEnv,
    etc_run,
    explore,
    perturbations,
    plan_exploration,
    required_samples,
    tune_epsilon,
)
from recharging_bandits.instances import Instance, PayoffFunction, constant, generate, heaviside
from recharging_bandits.lp import extract_profile, solve_extreme, build_lp
from recharging_bandits.scheduler import simulate

HV = Instance((heaviside(1.0, 2), constant(0.6)), 1, 2)
SMALL = Instance((PayoffFunction((0.2, 0.7)), PayoffFunction((0.4, 0.5))), 1, 2)


def test_required_samples_examples():
    assert required_samples(0.1, 0.01, 2, 4) == 369
    ms = [required_samples(e, 0.01, 2, 4) for e in (0.05, 0.1, 0.2, 0.4)]
    assert ms == sorted(ms, reverse=True)
    assert required_samples(0.1, 0.01, 4, 4) > 369
    with pytest.raises(ValueError):
        required_samples(1.0, 0.1, 2, 2)
    with pytest.raises(ValueError):
        required_samples(0.1, 0.0, 2, 2)


def test_tune_epsilon_examples():
    eps, delta = tune_epsilon(2, 1, 2, 10_000)
    assert eps == pytest.approx(0.2039, abs=5e-5)
    assert delta == 1e-4
    e1, _ = tune_epsilon(2, 1, 2, 10**4)
    e4, _ = tune_epsilon(2, 1, 2, 4 * 10**4)
    assert (e1 / e4) ** 3 == pytest.approx(4 * math.log(4e4) / math.log(16e4), rel=1e-12)
    assert tune_epsilon(2, 1, 2, 10**12)[0] < 1e-3
    assert tune_epsilon(50, 1, 10, 3)[0] < 1.0


def test_single_arm_exploration_length():
    assert len(plan_exploration([1], 1, 1, 10)) == 10


def test_exploration_audit_and_bound():
    env = StochasticEnv(HV, "bernoulli", seed=0)
    plan = plan_exploration(env.next_delays().tolist(), 1, 2, 2)
    assert len(plan) <= C_EXPLORE * 2 * 2 * 4 / 1
    # replay the plan and audit every sample's delay
    last = [0, 0]
    hits = np.zeros((2, 2), dtype=int)
    for t, arms in enumerate(plan, start=1):
        for i in arms:
            d = t - last[i]
            if d <= 2:
                hits[i, d - 1] += 1
            last[i] = t
    assert (hits >= 2).all()
    est, used, _ = explore(env, 2)
    assert used == len(plan)
    np.testing.assert_array_equal(est.counts, hits)


def test_exploration_bound_on_random_instances():
    rng = np.random.default_rng(0)
    for _ in range(40):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, n))
        tau = int(rng.integers(1, 6))
        m = int(rng.integers(1, 20))
        plan = plan_exploration([1] * n, k, tau, m)
        assert len(plan) <= C_EXPLORE * n * m * tau**2 / k
        assert all(len(a) <= k for a in plan)


def test_env_rejects_over_budget_play():
    env = StochasticEnv(HV, "none")
    with pytest.raises(ValueError):
        env.step([0, 1])


@pytest.mark.parametrize("noise", ["bernoulli", "uniform"])
def test_noise_means(noise):
    env = StochasticEnv(SMALL, noise, seed=3)
    xs = np.array([env._draw(0.7) for _ in range(40_000)])
    assert ((0 <= xs) & (xs <= 1)).all()
    assert abs(xs.mean() - 0.7) <= 4 * xs.std() / math.sqrt(xs.size)


def test_estimate_coverage():
    eps, delta = 0.1, 0.1
    m = required_samples(eps, delta, SMALL.n, SMALL.tau_max)
    reps = 200
    good = 0
    for s in range(reps):
        est, _, _ = explore(StochasticEnv(SMALL, "bernoulli", seed=s), m)
        good += np.abs(est.means() - SMALL.table()).max() <= eps
    sigma = math.sqrt(delta * (1 - delta) / reps)
    assert good / reps >= 1 - delta - 3 * sigma


def test_zero_noise_matches_planning_run():
    inst = generate("random-monotone", 4, 3, 8, k=2)
    T, seed = 3000, 5
    led = etc_run(inst, T, seed=seed, noise="none")
    np.testing.assert_array_equal(led.estimates, inst.table())
    plan = plan_exploration([1] * inst.n, inst.k, inst.tau_max, led.m)
    last = {}
    for t, arms in enumerate(plan, start=1):
        for i in arms:
            last[i] = t - len(plan)
    start = {i: last.get(i, -len(plan)) for i in range(inst.n)}
    ref = simulate(inst.table(), led.profile, seed, T - led.exploration_rounds, inst.k, initial_last_play=start)
    np.testing.assert_array_equal(led.realized[led.exploration_rounds :], [r.payoff for r in ref])
    table_profile = extract_profile(solve_extreme(build_lp(Instance.from_table(inst.table(), inst.k))))
    assert table_profile == led.profile


def test_ledger_conservation_and_flags():
    led = etc_run(HV, 2000, seed=1)
    assert led.total == float(np.sum(led.realized))
    assert led.cumulative[-1] == pytest.approx(led.total, abs=1e-9)
    assert led.benchmark_kind == "dp" and not led.pessimistic
    rows = list(led.rows())
    assert len(rows) == 2000 and rows[-1][4] == pytest.approx(led.regret)
    big = etc_run(HV, 2000, seed=1, budget=10)
    assert big.benchmark_kind == "lp-bound" and big.pessimistic
    assert big.benchmark[-1] == pytest.approx(2000 * 0.8)


def test_exploration_budget_refusal():
    with pytest.raises(ExplorationBudgetError) as exc:
        etc_run(HV, 50, epsilon=0.05, delta=0.01)
    assert exc.value.rounds >= 50


def test_perturbations_stay_in_band():
    table = HV.table()
    for name, p in perturbations(table, {(0, 2), (1, 1)}, 0.05).items():
        assert np.abs(p - table).max() <= 0.05 + 1e-12
        assert ((0 <= p) & (p <= 1)).all()


def test_exploration_share_shrinks_with_horizon():
    shares = [etc_run(HV, T, seed=0).exploration_rounds / T for T in (2000, 4000, 8000, 16000)]
    assert all(a > b for a, b in zip(shares, shares[1:]))
