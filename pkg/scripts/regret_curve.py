"""Explore-then-commit regret on n identical Heaviside arms as the horizon doubles.

Reports mean gamma_1-regret, its standard error, regret per round and the
log-log slope. The benchmark is the exact DP optimum when it fits the budget.
"""
import argparse
from pathlib import Path

import numpy as np

from recharging_bandits.bandit import benchmark_curve, etc_run
from recharging_bandits.harness import write_csv
from recharging_bandits.instances import Instance, heaviside


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=5)
    ap.add_argument("--seeds", type=int, default=200)
    ap.add_argument("--horizons", default="2000,4000,8000,16000")
    ap.add_argument("--noise", default="bernoulli")
    ap.add_argument("--budget", type=int, default=10**8)
    ap.add_argument("--out", default="results/regret_curve.csv")
    args = ap.parse_args()

    inst = Instance(tuple(heaviside(1.0, args.n) for _ in range(args.n)), 1, args.n)
    Ts = [int(t) for t in args.horizons.split(",")]
    curve, kind = benchmark_curve(inst, max(Ts), args.budget)
    rows = []
    for T in Ts:
        regs = np.array([etc_run(inst, T, s, args.noise, benchmark=(curve[:T], kind)).regret for s in range(args.seeds)])
        se = regs.std(ddof=1) / np.sqrt(regs.size)
        rows.append((T, kind, regs.mean(), se, regs.mean() / T))
        print(*rows[-1], sep=",")
    means = np.array([r[2] for r in rows])
    if (means > 0).all():
        print(f"log-log slope {np.polyfit(np.log(Ts), np.log(means), 1)[0]:.3f}")
    write_csv(Path(args.out), rows, ["horizon", "benchmark", "mean_regret", "se", "regret_per_round"])


if __name__ == "__main__":
    main()
