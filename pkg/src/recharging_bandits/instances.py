"""Problem instances: tabulated recharging payoff curves, generators, and JSON I/O."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

KINDS = ("heaviside", "concave", "random-monotone")


class InstanceError(ValueError):
    """Invalid instance data. Carries the offending arm/delay when known."""

    def __init__(self, message: str, arm: int | None = None, delay: int | None = None):
        where = []
        if arm is not None:
            where.append(f"arm {arm}")
        if delay is not None:
            where.append(f"delay {delay}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.arm = arm
        self.delay = delay


@dataclass(frozen=True)
class PayoffFunction:
    """Mean payoff of one arm as a function of its delay.

    ``values[j]`` is the payoff at delay ``j + 1``; beyond ``recovery_time``
    the curve stays at its last value. With ``strict=False`` the monotonicity
    check is skipped, which is what empirical estimates need.
    """

    values: tuple[float, ...]
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise InstanceError("payoff table is empty")
        for j, v in enumerate(vals):
            if not (0.0 <= v <= 1.0):
                raise InstanceError(f"payoff {v!r} outside [0, 1]", delay=j + 1)
        if self.strict:
            for j in range(1, len(vals)):
                if vals[j] < vals[j - 1]:
                    raise InstanceError(
                        f"payoff decreases from {vals[j - 1]!r} to {vals[j]!r}", delay=j + 1
                    )

    @property
    def recovery_time(self) -> int:
        return len(self.values)

    def __call__(self, tau: int) -> float:
        return evaluate(self, tau)


def evaluate(f: PayoffFunction, tau: int) -> float:
    """Payoff at delay ``tau`` (1-indexed, plateau past the recovery time)."""
    if tau < 1:
        raise ValueError(f"delays start at 1, got {tau}")
    return f.values[min(tau, f.recovery_time) - 1]


def heaviside(baseline: float, threshold: int) -> PayoffFunction:
    """Step curve: 0 below ``threshold``, ``baseline`` from it on."""
    if threshold < 1:
        raise InstanceError(f"threshold must be positive, got {threshold}")
    return PayoffFunction(tuple(0.0 for _ in range(threshold - 1)) + (float(baseline),))


def constant(p: float) -> PayoffFunction:
    return PayoffFunction((float(p),))


@dataclass(frozen=True)
class Instance:
    arms: tuple[PayoffFunction, ...]
    k: int
    tau_max: int

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        n = len(self.arms)
        if self.k < 1:
            raise InstanceError(f"play budget k must be positive, got {self.k}")
        if not self.k < n:
            raise InstanceError(f"play budget k={self.k} must be smaller than n={n}")
        longest = max(f.recovery_time for f in self.arms)
        if self.tau_max < longest:
            raise InstanceError(
                f"tau_max={self.tau_max} below the longest recovery time {longest}"
            )

    @property
    def n(self) -> int:
        return len(self.arms)

    def table(self, width: int | None = None) -> np.ndarray:
        """Dense ``(n, width)`` array of payoffs at delays ``1..width``."""
        width = self.tau_max if width is None else width
        out = np.empty((self.n, width))
        for i, f in enumerate(self.arms):
            r = f.recovery_time
            m = min(r, width)
            out[i, :m] = f.values[:m]
            out[i, m:] = f.values[-1]
        return out

    @classmethod
    def from_table(cls, table: np.ndarray, k: int, strict: bool = True) -> "Instance":
        table = np.asarray(table, dtype=float)
        arms = tuple(PayoffFunction(tuple(row), strict=strict) for row in table)
        return cls(arms, k, table.shape[1])


def generate(kind: str, n: int, tau_max: int, seed: int, k: int = 1) -> Instance:
    """Random instance of one of the families in ``KINDS``; pure in its arguments."""
    if kind not in KINDS:
        raise InstanceError(f"unknown instance kind {kind!r}; expected one of {KINDS}")
    if n < 2 or tau_max < 1:
        raise InstanceError(f"need n >= 2 and tau_max >= 1, got n={n}, tau_max={tau_max}")
    if n <= k:
        raise InstanceError(f"play budget k={k} must be smaller than n={n}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, KINDS.index(kind), n, tau_max]))
    arms = []
    for _ in range(n):
        r = int(rng.integers(1, tau_max + 1))
        if kind == "heaviside":
            arms.append(heaviside(float(rng.random()), r))
        elif kind == "concave":
            inc = np.sort(rng.random(r))[::-1]
            vals = np.cumsum(inc) * (rng.random() / inc.sum())
            arms.append(PayoffFunction(tuple(np.minimum(vals, 1.0))))
        else:
            arms.append(PayoffFunction(tuple(np.sort(rng.random(r)))))
    return Instance(tuple(arms), k, tau_max)


def to_dict(instance: Instance) -> dict:
    return {
        "n": instance.n,
        "k": instance.k,
        "tau_max": instance.tau_max,
        "arms": [
            {"recovery_time": f.recovery_time, "values": list(f.values)}
            for f in instance.arms
        ],
    }


def from_dict(data: dict) -> Instance:
    try:
        n, k, tau_max, raw_arms = data["n"], data["k"], data["tau_max"], data["arms"]
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"missing top-level field {exc}") from None
    if len(raw_arms) != n:
        raise InstanceError(f"n={n} but {len(raw_arms)} arms listed")
    arms = []
    for i, a in enumerate(raw_arms):
        values = a.get("values")
        if not isinstance(values, list) or not values:
            raise InstanceError("arm has no values list", arm=i)
        if a.get("recovery_time", len(values)) != len(values):
            raise InstanceError(
                f"recovery_time={a.get('recovery_time')} but {len(values)} values", arm=i
            )
        try:
            arms.append(PayoffFunction(tuple(values)))
        except InstanceError as exc:
            raise InstanceError(str(exc).split(" (")[0], arm=i, delay=exc.delay) from None
    return Instance(tuple(arms), k, tau_max)


def save(instance: Instance, path: str | Path) -> None:
    # json writes floats with their shortest round-trip repr, so loading is bit-exact
    Path(path).write_text(json.dumps(to_dict(instance), indent=2) + "\n")


def load(path: str | Path) -> Instance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: not valid JSON: {exc}") from None
    return from_dict(data)


def instance_of(tables: Sequence[Sequence[float]], k: int, tau_max: int | None = None) -> Instance:
    """Convenience constructor from ragged per-arm value lists."""
    arms = tuple(PayoffFunction(tuple(v)) for v in tables)
    if tau_max is None:
        tau_max = max(f.recovery_time for f in arms)
    return Instance(arms, k, tau_max)
