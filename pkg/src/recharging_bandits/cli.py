"""Command line entry point.

Exit codes: 0 success, 1 a verification check failed, 2 bad configuration.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import checks
from .bandit import ExplorationBudgetError, etc_run
from .harness import ConfigError, ExperimentConfig, default_out_dir, run_experiment, write_csv
from .instances import KINDS, InstanceError, generate, load, save
from .lp import solve_instance
from .oracle import DEFAULT_BUDGET, BudgetExceeded, dp_opt, gamma
from .scheduler import simulate

log = logging.getLogger("recharging_bandits")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"7"``, ``"0-49"`` (inclusive) or ``"1,4,9"``."""
    try:
        if "-" in text and "," not in text:
            lo, hi = text.split("-")
            seeds = tuple(range(int(lo), int(hi) + 1))
        else:
            seeds = tuple(int(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    return seeds


def _out(args) -> Path:
    return Path(args.out) if args.out else default_out_dir()


def cmd_gen(args) -> int:
    inst = generate(args.kind, args.n, args.tau_max, args.seed, k=args.k)
    path = Path(args.out) if args.out else default_out_dir() / f"{args.kind}-n{args.n}-s{args.seed}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    save(inst, path)
    print(path)
    return EXIT_OK


def cmd_solve_lp(args) -> int:
    sol, profile = solve_instance(load(args.instance))
    doc = {
        "value": sol.value,
        "nonzeros": [[i, tau, x] for i, tau, x in sol.nonzeros()],
        "profile": profile.to_dict(),
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_plan(args) -> int:
    inst = load(args.instance)
    sol, profile = solve_instance(inst)
    trace = simulate(inst.table(), profile, args.seed, args.horizon, inst.k)
    out = _out(args)
    fmt = lambda arms: ";".join(map(str, arms))
    write_csv(
        out / "trace.csv",
        ((r.t, fmt(r.candidates), fmt(r.played), r.payoff) for r in trace),
        ["t", "candidates", "played", "payoff"],
    )
    total = sum(r.payoff for r in trace)
    burn = min(inst.tau_max, args.horizon) - 1
    after = [r.payoff for r in trace[burn:]]
    g = gamma(inst.k)
    write_csv(
        out / "summary.csv",
        [(args.seed, args.horizon, total / args.horizon, sum(after) / len(after), sol.value, g, g * sol.value)],
        ["seed", "horizon", "mean_payoff", "mean_payoff_after_burnin", "v_star", "gamma_k", "reference"],
    )
    print(f"mean payoff {sum(after) / len(after):.6f} after burn-in; reference gamma_k*V* = {g * sol.value:.6f}")
    return EXIT_OK


def _config(args, algorithms) -> ExperimentConfig:
    gen = None
    if args.instance is None:
        if args.gen is None:
            raise ConfigError("give --instance or --gen KIND")
        gen = {"kind": args.gen, "n": args.n, "tau_max": args.tau_max, "k": args.k, "seed": args.gen_seed}
    return ExperimentConfig(
        horizon=args.horizon,
        seeds=args.seeds,
        instance=args.instance,
        generator=gen,
        algorithms=algorithms,
        noise=args.noise,
        epsilon=getattr(args, "epsilon", None),
        delta=getattr(args, "delta", None),
        budget=args.budget,
        out_dir=str(_out(args)),
        workers=args.workers,
    )


def cmd_simulate(args) -> int:
    res = run_experiment(_config(args, tuple(args.algorithms.split(","))))
    for r in res.aggregate:
        print(f"{r['algorithm']:>7}: {r['mean_payoff_after_burnin']:.6f} +- {r['se']:.6f}  (gamma_k*V* = {r['reference']:.6f})")
    return EXIT_OK


def cmd_learn(args) -> int:
    cfg = _config(args, ("etc",))
    cfg.validate()
    inst = cfg.load_instance()
    out = _out(args)
    summary = []
    for seed in sorted(set(cfg.seeds)):
        led = etc_run(inst, cfg.horizon, seed, cfg.noise, cfg.epsilon, cfg.delta, budget=cfg.budget)
        write_csv(out / f"ledger_seed{seed}.csv", led.rows(), ["t", "realized", "cumulative", "benchmark", "regret"])
        summary.append(
            (seed, cfg.horizon, led.m, led.epsilon, led.delta, led.exploration_rounds, led.total,
             float(led.benchmark[-1]), led.benchmark_kind, led.gamma_k, led.regret)
        )
    write_csv(
        out / "summary.csv",
        summary,
        ["seed", "horizon", "m", "epsilon", "delta", "exploration_rounds", "total", "benchmark",
         "benchmark_kind", "gamma_k", "regret"],
    )
    (out / "manifest.json").write_text(
        json.dumps({"config_hash": cfg.digest(), "seeds": sorted(set(cfg.seeds))}, indent=2) + "\n"
    )
    for row in summary:
        print(f"seed {row[0]}: regret {row[-1]:.3f} ({row[8]} benchmark)")
    return EXIT_OK


def _report(results, out: Path | None) -> int:
    rows = [r.row() for r in results]
    if out is not None:
        write_csv(out, rows, ["check", "trials", "failures", "worst_margin"])
    for name, trials, failures, margin in rows:
        status = "PASS" if failures == 0 and trials > 0 else "FAIL"
        print(f"{status} {name}: {trials} trials, {failures} failures, worst margin {margin:.3g}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_oracle(args) -> int:
    if args.instance is not None:
        inst = load(args.instance)
        print(f"opt({args.horizon}) = {dp_opt(inst, args.horizon, args.budget)!r}")
        return EXIT_OK
    out = Path(args.out) if args.out else None
    return _report(checks.run_suite(checks.ORACLE_SUITE, args.scale), out)


def cmd_verify(args) -> int:
    out = Path(args.out) if args.out else None
    return _report(checks.run_suite(checks.VERIFY_SUITE, args.scale), out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="recharging-bandits", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a random instance file")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--tau-max", type=int, required=True)
    g.add_argument("--k", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve-lp", help="solve the LP relaxation to a vertex and print its delay profile")
    s.add_argument("--instance", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve_lp)

    pl = sub.add_parser("plan", help="per-round trace of the interleaved scheduler for one seed")
    pl.add_argument("--instance", required=True)
    pl.add_argument("--seed", type=int, default=0)
    pl.add_argument("--horizon", type=int, required=True)
    pl.add_argument("--out")
    pl.set_defaults(func=cmd_plan)

    def experiment_args(q, default_seeds="0-49"):
        q.add_argument("--instance")
        q.add_argument("--gen", choices=KINDS, help="generate the instance instead of loading one")
        q.add_argument("--n", type=int, default=4)
        q.add_argument("--tau-max", type=int, default=4)
        q.add_argument("--k", type=int, default=1)
        q.add_argument("--gen-seed", type=int, default=0)
        q.add_argument("--horizon", type=int, required=True)
        q.add_argument("--seeds", "--seed", type=parse_seeds, default=parse_seeds(default_seeds))
        q.add_argument("--noise", default="bernoulli")
        q.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
        q.add_argument("--workers", type=int, default=1)
        q.add_argument("--out")

    sim = sub.add_parser("simulate", help="seeded replications of one or more algorithms")
    experiment_args(sim)
    sim.add_argument("--algorithms", default="rti,greedy")
    sim.set_defaults(func=cmd_simulate)

    le = sub.add_parser("learn", help="explore-then-commit runs with regret ledgers")
    experiment_args(le, default_seeds="0")
    le.add_argument("--epsilon", type=float)
    le.add_argument("--delta", type=float)
    le.set_defaults(func=cmd_learn)

    o = sub.add_parser("oracle", help="oracle property sweeps, or opt(T) for --instance")
    o.add_argument("--instance")
    o.add_argument("--horizon", type=int, default=20)
    o.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    o.add_argument("--scale", type=float, default=1.0, help="multiply default trial counts")
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("verify", help="all property sweeps; nonzero exit on any failure")
    v.add_argument("--scale", type=float, default=1.0)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InstanceError, ExplorationBudgetError, BudgetExceeded, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
