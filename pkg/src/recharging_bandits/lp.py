"""The per-arm delay LP relaxation and the structure of its vertex optima.

Variable ``x[i, tau]`` is the long-run fraction of rounds in which arm ``i``
is played at delay ``tau``. Rows: one budget row ``sum x <= k`` and one row
per arm ``sum_tau tau * x[i, tau] <= 1``. Arms are 0-indexed throughout.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import simplex
from .instances import Instance

log = logging.getLogger(__name__)

NONZERO_TOL = 1e-9
REGULAR_TOL = 1e-7


class StructureViolation(RuntimeError):
    """An LP solution that is not almost-delay-feasible."""

    def __init__(self, message: str, arms: list[int]):
        super().__init__(f"{message}: arms {arms}")
        self.arms = arms


@dataclass(frozen=True)
class LpProblem:
    c: np.ndarray
    A: np.ndarray  # row 0 is the budget row, row 1 + i the delay row of arm i
    b: np.ndarray
    variables: tuple[tuple[int, int], ...]  # (arm, tau) per column
    n: int
    k: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


@dataclass(frozen=True)
class LpSolution:
    x: dict[tuple[int, int], float]  # nonzeros only
    value: float
    basis_certificate: tuple[tuple, ...]
    n: int
    k: int

    def supported_arms(self) -> list[int]:
        return sorted({i for i, _ in self.x})

    def nonzeros(self) -> list[tuple[int, int, float]]:
        return [(i, tau, v) for (i, tau), v in sorted(self.x.items())]


@dataclass(frozen=True)
class IrregularArm:
    arm: int
    tau_a: int
    x_a: float
    tau_b: int | None = None
    x_b: float = 0.0

    @property
    def p_a(self) -> float:
        return self.tau_a * self.x_a

    @property
    def p_b(self) -> float:
        return 0.0 if self.tau_b is None else self.tau_b * self.x_b


@dataclass(frozen=True)
class DelayProfile:
    regular: dict[int, int] = field(default_factory=dict)  # arm -> critical delay
    irregular: IrregularArm | None = None

    @property
    def is_empty(self) -> bool:
        return not self.regular and self.irregular is None

    def to_dict(self) -> dict:
        irr = None
        if self.irregular is not None:
            ir = self.irregular
            irr = {"arm": ir.arm, "tau_a": ir.tau_a, "x_a": ir.x_a, "tau_b": ir.tau_b, "x_b": ir.x_b}
        return {"regular": {str(i): t for i, t in sorted(self.regular.items())}, "irregular": irr}


def build_lp(instance: Instance, max_delay: int | None = None) -> LpProblem:
    """LP over delays ``1..recovery_time`` of each arm, or ``1..max_delay`` if given."""
    variables, costs = [], []
    for i, f in enumerate(instance.arms):
        width = f.recovery_time if max_delay is None else max_delay
        for tau in range(1, width + 1):
            variables.append((i, tau))
            costs.append(f(tau))
    n = instance.n
    A = np.zeros((n + 1, len(variables)))
    A[0, :] = 1.0
    for j, (i, tau) in enumerate(variables):
        A[1 + i, j] = tau
    b = np.concatenate([[float(instance.k)], np.ones(n)])
    return LpProblem(np.array(costs), A, b, tuple(variables), n, instance.k)


def solve_extreme(problem: LpProblem) -> LpSolution:
    """Optimal vertex of the relaxation via the bespoke simplex."""
    res = simplex.solve(problem.c, problem.A, problem.b)
    nv = len(problem.variables)
    cert = []
    for col in res.basis:
        if col < nv:
            cert.append(("x",) + problem.variables[col])
        else:
            row = col - nv
            cert.append(("slack", "budget") if row == 0 else ("slack", row - 1))
    x = {
        problem.variables[j]: float(v)
        for j, v in enumerate(res.x)
        if v > NONZERO_TOL
    }
    return LpSolution(x, res.value, tuple(cert), problem.n, problem.k)


def solve_instance(instance: Instance) -> tuple[LpSolution, DelayProfile]:
    sol = solve_extreme(build_lp(instance))
    return sol, extract_profile(sol)


def extract_profile(solution: LpSolution) -> DelayProfile:
    """Split supported arms into regular ones and at most one irregular arm."""
    if not solution.basis_certificate:
        raise ValueError("solution carries no basis certificate; not a vertex")
    per_arm: dict[int, list[tuple[int, float]]] = {}
    for (i, tau), v in sorted(solution.x.items()):
        if v > NONZERO_TOL:
            per_arm.setdefault(i, []).append((tau, v))

    regular: dict[int, int] = {}
    odd: list[int] = []
    for i, entries in per_arm.items():
        if len(entries) == 1:
            tau, v = entries[0]
            gap = abs(v - 1.0 / tau)
            if gap <= REGULAR_TOL:
                if gap > NONZERO_TOL:
                    log.info("arm %d: x=%.12g is within %.1e of 1/%d, taken as regular", i, v, gap, tau)
                regular[i] = tau
                continue
            if v > 1.0 / tau:
                raise StructureViolation(f"x={v!r} exceeds 1/{tau}", [i])
        odd.append(i)
    if len(odd) > 1:
        raise StructureViolation("more than one arm breaks the one-variable-at-1/tau pattern", odd)
    irregular = None
    if odd:
        i = odd[0]
        entries = per_arm[i]
        if len(entries) > 2:
            raise StructureViolation(f"{len(entries)} nonzero variables on one arm", [i])
        (tau_a, x_a), *rest = entries
        tau_b, x_b = rest[0] if rest else (None, 0.0)
        irregular = IrregularArm(i, tau_a, x_a, tau_b, x_b)
        if irregular.p_a + irregular.p_b > 1.0 + REGULAR_TOL:
            raise StructureViolation("irregular marginals exceed one", [i])
    return DelayProfile(regular, irregular)
