"""Experiment configuration, seeded replications and CSV output."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .bandit import NOISE_MODELS, benchmark_curve, etc_run
from .instances import Instance, generate, load
from .lp import solve_instance
from .oracle import DEFAULT_BUDGET, gamma
from .scheduler import greedy_baseline, simulate_many

__all__ = ["gamma", "ConfigError", "ExperimentConfig", "ExperimentResult", "run_experiment", "write_csv"]

ALGORITHMS = ("rti", "greedy", "etc")
OUT_ENV = "RECHARGING_BANDITS_OUT"


class ConfigError(ValueError):
    pass


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "results"))


@dataclass(frozen=True)
class ExperimentConfig:
    horizon: int
    seeds: tuple[int, ...]
    instance: str | None = None  # path to an instance file
    generator: dict | None = None  # {kind, n, tau_max, k, seed}
    algorithms: tuple[str, ...] = ("rti",)
    noise: str = "bernoulli"
    epsilon: float | None = None
    delta: float | None = None
    budget: int = DEFAULT_BUDGET
    out_dir: str | None = None
    workers: int = 1

    def validate(self) -> None:
        if not self.seeds:
            raise ConfigError("seed list is empty")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if (self.instance is None) == (self.generator is None):
            raise ConfigError("give exactly one of an instance file or a generator spec")
        if self.instance is not None and not Path(self.instance).is_file():
            raise ConfigError(f"instance file {self.instance} does not exist")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ConfigError(f"unknown algorithms {bad}; choose from {ALGORITHMS}")
        if self.noise not in NOISE_MODELS:
            raise ConfigError(f"unknown noise model {self.noise!r}")

    def load_instance(self) -> Instance:
        if self.instance is not None:
            return load(self.instance)
        g = dict(self.generator)
        return generate(g["kind"], int(g["n"]), int(g["tau_max"]), int(g["seed"]), k=int(g.get("k", 1)))

    def digest(self) -> str:
        d = asdict(self)
        d.pop("out_dir")
        d.pop("workers")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class ExperimentResult:
    per_seed: list[dict]
    aggregate: list[dict]
    manifest: dict
    files: list[Path] = field(default_factory=list)


def _mean_se(xs: Sequence[float]) -> tuple[float, float]:
    a = np.asarray(xs, dtype=float)
    if a.size < 2:
        return float(a.mean()), float("nan")
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(a.size))


def write_csv(path: Path, rows: Iterable[Sequence], header: Sequence[str]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every algorithm on every seed; aggregate with mean and standard error.

    Seeds share one instance and one benchmark. Rows are sorted by
    (algorithm, seed), so output does not depend on worker scheduling.
    """
    config.validate()
    inst = config.load_instance()
    T, k = config.horizon, inst.k
    table = inst.table()
    sol, profile = solve_instance(inst)
    bench, kind = benchmark_curve(inst, T, config.budget)
    g = gamma(k)
    burn = min(inst.tau_max, T) - 1  # rounds [tau_max, T]
    seeds = sorted(set(config.seeds))

    def row(alg: str, seed: int, payoffs: np.ndarray, extra: dict | None = None) -> dict:
        total = float(payoffs.sum())
        r = {
            "algorithm": alg,
            "seed": seed,
            "horizon": T,
            "total": total,
            "mean_payoff": total / T,
            "mean_payoff_after_burnin": float(payoffs[burn:].mean()),
            "benchmark": float(bench[-1]),
            "regret": g * float(bench[-1]) - total,
            "exploration_rounds": 0,
        }
        r.update(extra or {})
        return r

    rows: list[dict] = []
    for alg in config.algorithms:
        if alg == "rti":
            pay = simulate_many(table, profile, seeds, T, k)
            rows += [row(alg, s, pay[j]) for j, s in enumerate(seeds)]
        elif alg == "greedy":
            pay = greedy_baseline(table, T, k)
            rows += [row(alg, s, pay) for s in seeds]
        else:
            def one(seed: int) -> dict:
                led = etc_run(inst, T, seed, config.noise, config.epsilon, config.delta, (bench, kind))
                return row(alg, seed, led.realized, {"exploration_rounds": led.exploration_rounds})

            with ThreadPoolExecutor(max_workers=max(1, config.workers)) as pool:
                rows += list(pool.map(one, seeds))
    rows.sort(key=lambda r: (ALGORITHMS.index(r["algorithm"]), r["seed"]))

    agg = []
    for alg in config.algorithms:
        sel = [r for r in rows if r["algorithm"] == alg]
        m, se = _mean_se([r["mean_payoff_after_burnin"] for r in sel])
        tm, tse = _mean_se([r["total"] for r in sel])
        rm, rse = _mean_se([r["regret"] for r in sel])
        agg.append(
            {
                "algorithm": alg,
                "seeds": len(sel),
                "mean_payoff_after_burnin": m,
                "se": se,
                "total": tm,
                "total_se": tse,
                "regret": rm,
                "regret_se": rse,
                "v_star": sol.value,
                "gamma_k": g,
                "reference": g * sol.value,
                "benchmark_kind": kind,
            }
        )

    manifest = {
        "version": __version__,
        "config": {k_: v for k_, v in asdict(config).items() if k_ not in ("out_dir", "workers")},
        "config_hash": config.digest(),
        "seeds": seeds,
        "instance": {"n": inst.n, "k": k, "tau_max": inst.tau_max},
        "v_star": sol.value,
        "profile": profile.to_dict(),
        "benchmark_kind": kind,
    }
    result = ExperimentResult(rows, agg, manifest)
    if config.out_dir is not None:
        out = Path(config.out_dir)
        head = list(rows[0])
        result.files.append(write_csv(out / "per_seed.csv", ([r[h] for h in head] for r in rows), head))
        ahead = list(agg[0])
        result.files.append(write_csv(out / "aggregate.csv", ([r[h] for h in ahead] for r in agg), ahead))
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        result.files.append(out / "manifest.json")
    return result
