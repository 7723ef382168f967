"""Randomize-Then-Interleave scheduling and a greedy baseline.

Each retained arm becomes a candidate every ``tau*`` rounds from a uniformly
random offset; each round plays the best ``k`` candidates by payoff at their
actual delay. The irregular arm first draws its critical delay (or drops
out) from the LP marginals.

Randomness uses per-purpose Philox streams keyed off the run seed: one
stream for the irregular draw and one per arm for offsets, so adding an arm
leaves every other arm's draws unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .lp import REGULAR_TOL, DelayProfile

IRREGULAR_STREAM = 0
OFFSET_STREAM = 1
NOISE_STREAM = 2


class ProfileError(ValueError):
    pass


def stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for one (seed, purpose, ...) key."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass
class SchedulerState:
    sampled_delay: dict[int, int]
    offsets: dict[int, int]
    last_play: dict[int, int] = field(default_factory=dict)
    removed: int | None = None
    seed: int = 0

    def delay(self, arm: int, t: int) -> int:
        return t - self.last_play.get(arm, 0)


@dataclass(frozen=True)
class RoundOutcome:
    t: int
    candidates: tuple[int, ...]
    played: tuple[int, ...]
    delays: tuple[int, ...]  # actual delay of each played arm
    payoff: float


def init_schedule(profile: DelayProfile, seed: int) -> SchedulerState:
    delays = dict(profile.regular)
    removed = None
    ir = profile.irregular
    if ir is not None:
        p_a, p_b = ir.p_a, ir.p_b
        if p_a + p_b > 1.0 + REGULAR_TOL:
            raise ProfileError(f"irregular arm {ir.arm}: p_a + p_b = {p_a + p_b!r} > 1")
        u = stream(seed, IRREGULAR_STREAM).random()
        if u < p_a:
            delays[ir.arm] = ir.tau_a
        elif u < p_a + p_b:
            delays[ir.arm] = ir.tau_b
        else:
            removed = ir.arm
    offsets = {i: int(stream(seed, OFFSET_STREAM, i).integers(tau)) for i, tau in delays.items()}
    return SchedulerState(dict(sorted(delays.items())), offsets, {}, removed, seed)


def candidates(state: SchedulerState, t: int) -> tuple[int, ...]:
    return tuple(i for i, tau in state.sampled_delay.items() if t % tau == state.offsets[i])


def top_k(values: dict[int, float], k: int) -> tuple[int, ...]:
    """Best ``k`` arms by value, lowest index first among ties; result sorted by arm."""
    ranked = sorted(values, key=lambda i: (-values[i], i))
    return tuple(sorted(ranked[:k]))


def play_round(
    state: SchedulerState,
    t: int,
    k: int,
    payoff_eval: Callable[[int, int], float],
    reward: Callable[[int, int], float] | None = None,
) -> RoundOutcome:
    """Advance one round. ``payoff_eval`` ranks candidates; ``reward`` (default: the
    same function) gives the payoff actually collected."""
    cand = candidates(state, t)
    sigma = {i: state.delay(i, t) for i in cand}
    played = top_k({i: payoff_eval(i, sigma[i]) for i in cand}, k)
    reward = payoff_eval if reward is None else reward
    total = 0.0
    for i in played:
        total += reward(i, sigma[i])
        state.last_play[i] = t
    return RoundOutcome(t, cand, played, tuple(sigma[i] for i in played), total)


def _lookup(table: np.ndarray) -> Callable[[int, int], float]:
    width = table.shape[1]
    rows = table.tolist()
    return lambda i, d: rows[i][min(d, width) - 1]


def simulate(
    table: np.ndarray,
    profile: DelayProfile,
    seed: int,
    T: int,
    k: int,
    select_table: np.ndarray | None = None,
    initial_last_play: dict[int, int] | None = None,
) -> list[RoundOutcome]:
    """Scalar reference run of ``T`` rounds.

    ``table[i, d-1]`` is the mean payoff of arm ``i`` at delay ``d`` (plateau past
    the last column). Candidates are ranked with ``select_table`` when given.
    """
    state = init_schedule(profile, seed)
    if initial_last_play:
        state.last_play.update(initial_last_play)
    reward = _lookup(np.asarray(table))
    rank = reward if select_table is None else _lookup(np.asarray(select_table))
    return [play_round(state, t, k, rank, reward) for t in range(1, T + 1)]


def simulate_many(
    table: np.ndarray,
    profile: DelayProfile,
    seeds: Sequence[int],
    T: int,
    k: int,
    select_table: np.ndarray | None = None,
) -> np.ndarray:
    """Per-round payoffs for many seeds at once, shape ``(len(seeds), T)``.

    Same draws and tie rule as :func:`simulate`; vectorized over seeds.
    """
    table = np.asarray(table, dtype=float)
    select = table if select_table is None else np.asarray(select_table, dtype=float)
    n, width = table.shape
    S = len(seeds)
    tau = np.ones((S, n), dtype=np.int64)
    off = np.zeros((S, n), dtype=np.int64)
    active = np.zeros((S, n), dtype=bool)
    for s, seed in enumerate(seeds):
        st = init_schedule(profile, seed)
        for i, d in st.sampled_delay.items():
            tau[s, i], off[s, i], active[s, i] = d, st.offsets[i], True
    last = np.zeros((S, n), dtype=np.int64)
    arms = np.arange(n)[None, :]
    rows = np.arange(S)
    out = np.zeros((S, T))
    for t in range(1, T + 1):
        cand = active & (t % tau == off)
        if not cand.any():
            continue
        idx = np.minimum(t - last, width) - 1
        score = np.where(cand, select[arms, idx], -np.inf)
        if k == 1:
            j = np.argmax(score, axis=1)
            has = cand[rows, j]
            played = np.zeros((S, n), dtype=bool)
            played[rows[has], j[has]] = True
        else:
            order = np.argsort(-score, axis=1, kind="stable")[:, :k]
            played = np.zeros((S, n), dtype=bool)
            played[rows[:, None], order] = True
            played &= cand
        out[:, t - 1] = np.where(played, table[arms, idx], 0.0).sum(axis=1)
        last[played] = t
    return out


def greedy_baseline(table: np.ndarray, T: int, k: int) -> np.ndarray:
    """Each round play the ``k`` arms with the highest positive payoff at their current delay.

    Arms at zero payoff are left alone: playing them gains nothing and only
    restarts their recovery.
    """
    table = np.asarray(table, dtype=float)
    n, width = table.shape
    rows = table.tolist()
    last = [0] * n
    out = np.zeros(T)
    for t in range(1, T + 1):
        vals = {i: rows[i][min(t - last[i], width) - 1] for i in range(n)}
        vals = {i: v for i, v in vals.items() if v > 0.0}
        total = 0.0
        for i in top_k(vals, k):
            total += vals[i]
            last[i] = t
        out[t - 1] = total
    return out
