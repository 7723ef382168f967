"""Semi-bandit environment and the explore-then-commit learner."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .instances import Instance
from .lp import DelayProfile, build_lp, extract_profile, solve_extreme
from .oracle import BudgetExceeded, DEFAULT_BUDGET, dp_opt_curve, gamma
from .scheduler import NOISE_STREAM, init_schedule, stream, top_k

NOISE_MODELS = ("bernoulli", "uniform", "none")
EPS_CAP = 1.0 - 1e-9
# Loss from planning on eps-accurate estimates: k*eps from ranking on estimates plus gamma_k*k*eps from the
# perturbed LP value, so at most 2*k*eps per round.
C_ROB = 2.0
# rounds_used <= C_EXPLORE * n * m * tau_max**2 / k for the greedy packing below
C_EXPLORE = 4.0


class ExplorationBudgetError(ValueError):
    def __init__(self, rounds: int, T: int):
        super().__init__(f"exploration needs {rounds} rounds but the horizon is only T={T}")
        self.rounds = rounds
        self.T = T


class StochasticEnv:
    """Ground-truth environment: tracks delays and draws payoffs with mean ``p_i(delay)``.

    ``bernoulli`` draws 0/1; ``uniform`` draws uniformly on ``p +- h`` with
    ``h = min(width, p, 1 - p)`` so the mean stays exact inside ``[0, 1]``;
    ``none`` returns the mean itself.
    """

    def __init__(self, instance: Instance, noise: str = "bernoulli", seed: int = 0, width: float = 0.5):
        if noise not in NOISE_MODELS:
            raise ValueError(f"unknown noise model {noise!r}; expected one of {NOISE_MODELS}")
        self.instance = instance
        self.table = instance.table()
        self.noise = noise
        self.width = width
        self.rng = stream(seed, NOISE_STREAM)
        self.t = 0
        self.last_play = np.zeros(instance.n, dtype=np.int64)

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def k(self) -> int:
        return self.instance.k

    @property
    def tau_max(self) -> int:
        return self.instance.tau_max

    def next_delays(self) -> np.ndarray:
        """Delay each arm would have if played in the coming round."""
        return self.t + 1 - self.last_play

    def mean(self, arm: int, delay: int) -> float:
        return float(self.table[arm, min(delay, self.tau_max) - 1])

    def _draw(self, p: float) -> float:
        if self.noise == "none":
            return p
        u = self.rng.random()
        if self.noise == "bernoulli":
            return 1.0 if u < p else 0.0
        h = min(self.width, p, 1.0 - p)
        return p + h * (2.0 * u - 1.0)

    def step(self, arms: Sequence[int]) -> tuple[list[int], list[float]]:
        """Play ``arms`` (sorted, at most k) for one round; return their delays and payoffs."""
        if len(arms) > self.k:
            raise ValueError(f"played {len(arms)} arms with budget k={self.k}")
        self.t += 1
        delays = [int(self.t - self.last_play[i]) for i in arms]
        payoffs = [self._draw(self.mean(i, d)) for i, d in zip(arms, delays)]
        for i in arms:
            self.last_play[i] = self.t
        return delays, payoffs


@dataclass
class EstimateTable:
    """Running means per (arm, delay). The incremental update is exact when
    every sample is identical, so a noiseless run recovers the true table."""

    avg: np.ndarray
    counts: np.ndarray

    @classmethod
    def empty(cls, n: int, tau_max: int) -> "EstimateTable":
        return cls(np.zeros((n, tau_max)), np.zeros((n, tau_max), dtype=np.int64))

    def record(self, arm: int, delay: int, payoff: float) -> None:
        if delay <= self.avg.shape[1]:
            j = delay - 1
            self.counts[arm, j] += 1
            self.avg[arm, j] += (payoff - self.avg[arm, j]) / self.counts[arm, j]

    def means(self) -> np.ndarray:
        return np.clip(self.avg, 0.0, 1.0)


@dataclass
class RegretLedger:
    realized: np.ndarray  # per-round payoff actually collected
    benchmark: np.ndarray  # benchmark(t) for t = 1..T
    benchmark_kind: str  # "dp" (exact opt) or "lp-bound" (t * V*, pessimistic)
    gamma_k: float
    exploration_rounds: int
    m: int
    epsilon: float
    delta: float
    profile: DelayProfile | None = None
    estimates: np.ndarray | None = field(default=None, repr=False)

    @property
    def T(self) -> int:
        return self.realized.size

    @property
    def pessimistic(self) -> bool:
        return self.benchmark_kind != "dp"

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.realized)

    @property
    def total(self) -> float:
        return float(self.realized.sum())

    @property
    def regret_curve(self) -> np.ndarray:
        return self.gamma_k * self.benchmark - self.cumulative

    @property
    def regret(self) -> float:
        return float(self.gamma_k * self.benchmark[-1] - self.total)

    def rows(self):
        cum = self.cumulative
        reg = self.regret_curve
        for t in range(self.T):
            yield t + 1, self.realized[t], cum[t], self.benchmark[t], reg[t]


def required_samples(epsilon: float, delta: float, n: int, tau_max: int) -> int:
    """Samples per (arm, delay) for an epsilon-accurate table w.p. 1 - delta (Hoeffding + union bound)."""
    if not (0.0 < epsilon < 1.0 and 0.0 < delta < 1.0):
        raise ValueError(f"epsilon and delta must lie in (0, 1), got {epsilon}, {delta}")
    return math.ceil(math.log(2.0 * tau_max * n / delta) / (2.0 * epsilon**2))


def tune_epsilon(n: int, k: int, tau_max: int, T: int) -> tuple[float, float]:
    if T < 2:
        raise ValueError("horizon must be at least 2")
    eps = (n * tau_max**2 * math.log(tau_max * n * T) / (k * T)) ** (1.0 / 3.0)
    return min(eps, EPS_CAP), 1.0 / T


def plan_exploration(initial_delays: Sequence[int], k: int, tau_max: int, m: int) -> list[tuple[int, ...]]:
    """Deterministic exploration schedule: sets of arms to play, one per round.

    Each (arm, delay) pair needs ``m`` plays at exactly that delay. Every
    round, arms whose current delay still needs samples compete for the ``k``
    slots, those that would otherwise overshoot their last needed delay going
    first; leftover slots reset arms that have overshot.
    """
    n = len(initial_delays)
    remaining = np.full((n, tau_max), m, dtype=np.int64)
    delay = np.array(initial_delays, dtype=np.int64)
    todo = remaining.sum()
    plan: list[tuple[int, ...]] = []
    while todo > 0:
        useful, resets = [], []
        for i in range(n):
            need = np.flatnonzero(remaining[i]) + 1
            if need.size == 0:
                continue
            d = delay[i]
            if d <= tau_max and remaining[i, d - 1] > 0:
                useful.append((0 if need[-1] <= d else 1, i))
            elif need[-1] < d:
                resets.append(i)
        chosen = [i for _, i in sorted(useful)[:k]]
        chosen += resets[: k - len(chosen)]
        chosen.sort()
        for i in chosen:
            d = delay[i]
            if d <= tau_max and remaining[i, d - 1] > 0:
                remaining[i, d - 1] -= 1
                todo -= 1
        delay += 1
        delay[chosen] = 1
        plan.append(tuple(chosen))
    return plan


def explore(env: StochasticEnv, m: int) -> tuple[EstimateTable, int, list[float]]:
    """Collect at least ``m`` samples of every (arm, delay <= tau_max) at that exact delay.

    Returns the estimates, the rounds used and the per-round collected payoff.
    """
    if m < 1:
        raise ValueError("m must be positive")
    plan = plan_exploration(env.next_delays().tolist(), env.k, env.tau_max, m)
    est = EstimateTable.empty(env.n, env.tau_max)
    collected = []
    for arms in plan:
        delays, payoffs = env.step(arms)
        for i, d, r in zip(arms, delays, payoffs):
            est.record(i, d, r)
        collected.append(sum(payoffs))
    return est, len(plan), collected


def benchmark_curve(instance: Instance, T: int, budget: int = DEFAULT_BUDGET) -> tuple[np.ndarray, str]:
    """``opt(t)`` by DP when the state budget allows, else the LP bound ``t * V*``."""
    try:
        return dp_opt_curve(instance, T, budget), "dp"
    except BudgetExceeded:
        v = solve_extreme(build_lp(instance)).value
        return v * np.arange(1, T + 1, dtype=float), "lp-bound"


def commit_phase(
    env: StochasticEnv,
    estimates: np.ndarray,
    seed: int,
    rounds: int,
) -> tuple[DelayProfile, list[float], list[tuple[int, ...]]]:
    """Plan on ``estimates`` and run the scheduler against the true environment."""
    k = env.k
    est_instance = Instance.from_table(estimates, k, strict=False)
    profile = extract_profile(solve_extreme(build_lp(est_instance)))
    state = init_schedule(profile, seed)
    start = env.t
    state.last_play = {i: int(env.last_play[i]) - start for i in range(env.n)}
    width = estimates.shape[1]
    rows = estimates.tolist()
    collected, played_log = [], []
    for t in range(1, rounds + 1):
        cand = [i for i, tau in state.sampled_delay.items() if t % tau == state.offsets[i]]
        scores = {i: rows[i][min(t - state.last_play[i], width) - 1] for i in cand}
        played = top_k(scores, k)
        _, payoffs = env.step(played)
        for i in played:
            state.last_play[i] = t
        total = 0.0
        for r in payoffs:
            total += r
        collected.append(total)
        played_log.append(played)
    return profile, collected, played_log


def etc_run(
    instance: Instance,
    T: int,
    seed: int = 0,
    noise: str = "bernoulli",
    epsilon: float | None = None,
    delta: float | None = None,
    benchmark: tuple[np.ndarray, str] | None = None,
    budget: int = DEFAULT_BUDGET,
    width: float = 0.5,
) -> RegretLedger:
    """Explore every (arm, delay) ``m`` times, then commit to the planner on the estimates."""
    n, k, tau_max = instance.n, instance.k, instance.tau_max
    if epsilon is None or delta is None:
        e, d = tune_epsilon(n, k, tau_max, T)
        epsilon = e if epsilon is None else epsilon
        delta = d if delta is None else delta
    m = required_samples(epsilon, delta, n, tau_max)
    needed = len(plan_exploration([1] * n, k, tau_max, m))
    if needed >= T:
        raise ExplorationBudgetError(needed, T)
    env = StochasticEnv(instance, noise, seed, width)
    est, used, explore_payoffs = explore(env, m)
    profile, commit_payoffs, _ = commit_phase(env, est.means(), seed, T - used)
    if benchmark is None:
        benchmark = benchmark_curve(instance, T, budget)
    curve, kind = benchmark
    return RegretLedger(
        np.array(explore_payoffs + commit_payoffs),
        np.asarray(curve[:T], dtype=float),
        kind,
        gamma(k),
        used,
        m,
        epsilon,
        delta,
        profile,
        est.means(),
    )


def perturbations(table: np.ndarray, support: set[tuple[int, int]], eps: float, seed: int = 0, random_draws: int = 4):
    """Candidate worst-case estimate tables with ``|p_hat - p| <= eps`` entrywise.

    Includes the pattern that lowers every entry the true LP optimum uses and
    raises all others, the two uniform shifts, and a few random sign patterns.
    """
    table = np.asarray(table, dtype=float)
    lower_support = np.full(table.shape, eps)
    for i, tau in support:
        lower_support[i, min(tau, table.shape[1]) - 1] = -eps
    out = {"against-support": lower_support, "all-up": np.full(table.shape, eps), "all-down": np.full(table.shape, -eps)}
    rng = np.random.default_rng(seed)
    for j in range(random_draws):
        out[f"random-{j}"] = eps * rng.choice([-1.0, 1.0], size=table.shape)
    return {name: np.clip(table + shift, 0.0, 1.0) for name, shift in out.items()}
