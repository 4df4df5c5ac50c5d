"""Assignment LPs for malleable jobs and their exact extreme-point solutions.

The load coefficient of pair (i, j) at target C is ``f_j(s_ij)`` when machine
i alone finishes j within C (the pair is "fast", class ``+``) and
``f_j(g) * (g / s_ij) ** p`` otherwise (class ``-``), where ``g`` is the
critical speed of j at C.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import mpmath
import networkx as nx

from .model import INF, Instance, ModelError, _mpf, _mpf_to_fraction, PRECISION_BITS, as_fraction
from .simplex import LpProblem, LpResult, Row, check_feasible, solve_lp, to_cplex_lp

SPEED_CAP = Fraction(2) ** 62


class UndefinedCriticalSpeed(Exception):
    """No speed up to :data:`SPEED_CAP` finishes the job within the target."""

    def __init__(self, job, C):
        super().__init__(f"job {job} cannot finish within {C} at any speed <= 2^62")
        self.job = job
        self.C = C


def critical_speed(fn, C, grain: Fraction = Fraction(1)) -> Fraction | None:
    """Smallest multiple q of ``grain`` (q >= grain) with ``fn(q) <= C``.

    With the default grain this is the smallest positive integer.  Search
    gallops by doubling and then bisects; ``None`` if nothing up to
    :data:`SPEED_CAP` qualifies.
    """
    C = as_fraction(C)
    if C <= 0:
        raise ValueError("target must be positive")
    grain = as_fraction(grain)
    cap = SPEED_CAP // grain
    if fn(grain) <= C:
        return grain
    lo, hi = 1, 2  # fn(lo * grain) > C
    while fn(hi * grain) > C:
        if hi >= cap:
            return None
        lo, hi = hi, min(2 * hi, cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if fn(mid * grain) <= C:
            hi = mid
        else:
            lo = mid
    return hi * grain


def _ratio_power(ratio: Fraction, p) -> Fraction:
    if p == 1:
        return ratio
    if isinstance(p, Fraction) and p.denominator == 1:
        return ratio ** p.numerator
    with mpmath.workprec(PRECISION_BITS):
        return _mpf_to_fraction(mpmath.power(_mpf(ratio), _mpf(as_fraction(p))))


def pair_coefficients(instance: Instance, C, p=None, grain=None):
    """``(gamma, classes, coef)`` for every pair with positive speed.

    Raises :class:`UndefinedCriticalSpeed` if some job has no critical speed.
    For ``p = INF`` slow pairs get no coefficient (they are forbidden).
    """
    C = as_fraction(C)
    p = instance.p if p is None else p
    grain = instance.speed_grain if grain is None else grain
    gamma, classes, coef = {}, {}, {}
    for j, fn in enumerate(instance.functions):
        g = critical_speed(fn, C, grain)
        if g is None:
            raise UndefinedCriticalSpeed(j, C)
        gamma[j] = g
        fg = fn(g)
        for i in instance.machines_for(j):
            s = instance.speeds[i][j]
            fs = fn(s)
            if fs <= C:
                classes[i, j] = "+"
                coef[i, j] = fs
            else:
                classes[i, j] = "-"
                if p != INF:
                    coef[i, j] = fg * _ratio_power(g / s, p)
    return gamma, classes, coef


@dataclass(frozen=True)
class AssignmentLp:
    instance: Instance
    C: Fraction
    p: Fraction | float
    problem: LpProblem
    gamma: dict
    classes: dict
    coef: dict


def build_lp(instance: Instance, C, p=None, grain=None) -> AssignmentLp:
    """Feasibility LP: every job fully assigned, every machine load <= C.

    ``p`` defaults to the instance's regularizer; values other than 1 give
    the p-norm variant, where slow-pair coefficients use ``(g / s) ** p``.
    ``grain`` overrides the speed lattice used for critical speeds.
    """
    C = as_fraction(C)
    p = instance.p if p is None else p
    gamma, classes, coef = pair_coefficients(instance, C, p, grain)
    columns = tuple(sorted(coef, key=lambda ij: (ij[1], ij[0])))
    eq_rows = tuple(
        Row({(i, j): Fraction(1) for i in instance.machines_for(j) if (i, j) in coef},
            Fraction(1), ("job", j))
        for j in range(instance.n)
    )
    ub_rows = tuple(
        Row({(i, j): coef[i, j] for j in range(instance.n) if (i, j) in coef}, C, ("machine", i))
        for i in range(instance.m)
    )
    problem = LpProblem(columns, eq_rows, ub_rows, None, {"kind": "assignment", "C": C, "p": p})
    return AssignmentLp(instance, C, p, problem, gamma, classes, coef)


def build_lp_pnorm(instance: Instance, C, p) -> AssignmentLp:
    return build_lp(instance.with_p(p), C)


@dataclass(frozen=True)
class FractionalAssignment:
    """An extreme point ``x`` of the assignment LP at target ``C``."""

    C: Fraction
    p: Fraction | float
    x: dict  # (i, j) -> positive Fraction
    gamma: dict
    classes: dict
    coef: dict
    basis: tuple
    n: int
    m: int
    problem: LpProblem | None = None

    def load(self, i: int, jobs=None) -> Fraction:
        return sum((self.coef[i, j] * v for (ii, j), v in self.x.items()
                    if ii == i and (jobs is None or j in jobs)), Fraction(0))

    def jobs_on(self, i: int) -> list[int]:
        return sorted(j for (ii, j) in self.x if ii == i)

    def machines_of(self, j: int) -> list[int]:
        return sorted(i for (i, jj) in self.x if jj == j)

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(("m", i) for i in range(self.m))
        g.add_nodes_from(("j", j) for j in range(self.n))
        g.add_edges_from((("m", i), ("j", j)) for (i, j) in self.x)
        return g


def solve_extreme_point(problem: LpProblem) -> LpResult:
    """Exact basic feasible (optimal, if there is an objective) solution."""
    return solve_lp(problem)


def assignment_from_values(alp: AssignmentLp, values: Mapping, basis=()) -> FractionalAssignment:
    """Wrap a (checked) point of ``alp`` as a :class:`FractionalAssignment`."""
    problems = check_feasible(alp.problem, values)
    if problems:
        raise AssertionError(f"point is not feasible for LP({alp.C}): {problems}")
    x = {k: v for k, v in values.items() if v}
    return FractionalAssignment(alp.C, alp.p, x, alp.gamma, alp.classes, alp.coef,
                                tuple(basis), alp.instance.n, alp.instance.m, alp.problem)


def solve_assignment(alp: AssignmentLp) -> FractionalAssignment | None:
    res = solve_extreme_point(alp.problem)
    if not res.feasible:
        return None
    return assignment_from_values(alp, res.values, res.basis)


def solve_assignment_lp(instance: Instance, C, p=None, grain=None) -> FractionalAssignment | None:
    """Build and solve; ``None`` means the LP (hence target C) is infeasible."""
    try:
        alp = build_lp(instance, C, p, grain)
    except UndefinedCriticalSpeed:
        return None
    return solve_assignment(alp)


def lp_feasible(instance: Instance, C, p=None) -> bool:
    return solve_assignment_lp(instance, C, p) is not None


def structure_report(fa: FractionalAssignment) -> dict:
    """Support size and cycle count per component of the assignment graph."""
    g = fa.graph()
    comps = []
    for nodes in nx.connected_components(g):
        sub = g.subgraph(nodes)
        comps.append(sub.number_of_edges() - sub.number_of_nodes() + 1)
    return {
        "support": len(fa.x),
        "bound": fa.n + fa.m,
        "max_cycles": max(comps, default=0),
    }


def check_extreme_structure(fa: FractionalAssignment) -> bool:
    rep = structure_report(fa)
    return rep["support"] <= rep["bound"] and rep["max_cycles"] <= 1


def assignment_rows_hold(instance: Instance, C, x: Mapping, p=None, grain=None) -> list[str]:
    """Re-verify a candidate assignment ``x`` against LP(C), exactly."""
    try:
        alp = build_lp(instance, C, p, grain)
    except UndefinedCriticalSpeed as exc:
        return [str(exc)]
    extra = [k for k, v in x.items() if v and k not in alp.coef]
    if extra:
        return [f"mass on pairs without a column: {extra}"]
    vals = {k: x.get(k, Fraction(0)) for k in alp.problem.columns}
    return check_feasible(alp.problem, vals)


# ---------------------------------------------------------------------------
# interval-indexed LP for weighted completion times


@dataclass(frozen=True)
class IntervalLp:
    instance: Instance
    tau: Fraction
    L: int
    U: Fraction
    problem: LpProblem


def serial_upper_bound(instance: Instance) -> Fraction:
    return sum((instance.full_speed_time(j) for j in range(instance.n)), Fraction(0))


def horizon_length(tau, U) -> int:
    """Smallest L with ``tau ** L > U``."""
    tau, U = as_fraction(tau), as_fraction(U)
    L, t = 0, Fraction(1)
    while t <= U:
        t *= tau
        L += 1
    return L


def build_interval_lp(instance: Instance, weights=None, tau=2, U=None) -> IntervalLp:
    """Interval-indexed LP: x[i, j, l] is the part of j on i finishing in [tau^(l-1), tau^l)."""
    tau = as_fraction(tau)
    if tau <= 1:
        raise ValueError("tau must exceed 1")
    if instance.p != 1:
        raise ModelError("the weighted objective is implemented for additive speeds (p = 1)")
    for j in range(instance.n):
        if instance.full_speed_time(j) < 1:
            raise ModelError(
                f"job {j} finishes below time 1 at full speed; rescale all processing "
                "times so that every job needs at least 1 time unit"
            )
    weights = [instance.weight(j) for j in range(instance.n)] if weights is None else \
        [as_fraction(w) for w in weights]
    serial = serial_upper_bound(instance)
    U = serial if U is None else as_fraction(U)
    if U < serial:
        raise ValueError(f"U={U} is below the serial bound {serial}")
    L = horizon_length(tau, U)
    grain = instance.speed_grain

    coef = {}  # (i, j, l) -> coefficient in machine rows at threshold tau^l
    for ell in range(1, L + 1):
        T = tau ** ell
        for j, fn in enumerate(instance.functions):
            g = critical_speed(fn, T, grain)
            if g is None:
                continue
            fg = fn(g)
            for i in instance.machines_for(j):
                s = instance.speeds[i][j]
                fs = fn(s)
                coef[i, j, ell] = fs if fs <= T else fg * g / s
    columns = tuple(sorted(coef, key=lambda k: (k[2], k[1], k[0])))
    eq_rows = tuple(
        Row({k: Fraction(1) for k in columns if k[1] == j}, Fraction(1), ("job", j))
        for j in range(instance.n)
    )
    ub_rows = []
    for ell in range(1, L + 1):
        for i in range(instance.m):
            row = {(ii, j, l2): coef[ii, j, ell] for (ii, j, l2) in columns
                   if ii == i and l2 <= ell and (ii, j, ell) in coef}
            ub_rows.append(Row(row, tau ** ell, ("machine", i, ell)))
    objective = {k: weights[k[1]] * tau ** (k[2] - 1) for k in columns}
    problem = LpProblem(columns, eq_rows, tuple(ub_rows), objective,
                        {"kind": "interval", "tau": tau, "L": L})
    return IntervalLp(instance, tau, L, U, problem)


def dump_lp(problem: LpProblem) -> str:
    return to_cplex_lp(problem)
