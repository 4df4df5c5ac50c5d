"""Exhaustive baselines for tiny instances.

Any schedule can be left-shifted until every job starts at time 0 or at the
completion of another job without delaying anything.  Such a schedule is
reproduced by placing its jobs in start order, each on its machine set at the
earliest time all of those machines are free.  Enumerating every start order
together with every machine set per job therefore finds an optimum for both
the makespan and the weighted completion objective.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .lp import lp_feasible
from .model import Instance, Schedule, as_fraction
from .search import exact_threshold, bisect_threshold


class BudgetExceeded(RuntimeError):
    """The instance is too large for exhaustive enumeration."""


@dataclass(frozen=True)
class OracleBudget:
    max_jobs: int = 4
    max_machines: int = 5
    max_combinations: int = 10**7

    def __post_init__(self):
        if min(self.max_jobs, self.max_machines, self.max_combinations) <= 0:
            raise ValueError("oracle budgets must be positive")


def candidate_sets(instance: Instance, j: int) -> list[tuple]:
    """Machine sets worth trying for job j, fastest first.

    A set is dropped when removing one of its machines leaves the processing
    time unchanged: the smaller set is never worse.
    """
    usable = instance.machines_for(j)
    times = {}
    for r in range(1, len(usable) + 1):
        for S in itertools.combinations(usable, r):
            times[S] = instance.proc_time(j, S)
    keep = [
        S for S, t in times.items()
        if len(S) == 1 or all(times[tuple(x for x in S if x != i)] != t for i in S)
    ]
    keep.sort(key=lambda S: (times[S], len(S), S))
    return keep


def _check_budget(instance: Instance, budget: OracleBudget) -> list[list[tuple]]:
    if instance.n > budget.max_jobs:
        raise BudgetExceeded(f"{instance.n} jobs exceed the oracle budget of {budget.max_jobs}")
    if instance.m > budget.max_machines:
        raise BudgetExceeded(
            f"{instance.m} machines exceed the oracle budget of {budget.max_machines}")
    sets = [candidate_sets(instance, j) for j in range(instance.n)]
    combos = math.prod(len(s) for s in sets) * math.factorial(instance.n)
    if combos > budget.max_combinations:
        raise BudgetExceeded(
            f"{combos} set/order combinations exceed the oracle budget of "
            f"{budget.max_combinations}")
    return sets


def _search(instance: Instance, budget: OracleBudget, weighted: bool):
    sets = _check_budget(instance, budget)
    n = instance.n
    times = [{S: instance.proc_time(j, S) for S in sets[j]} for j in range(n)]
    fastest = [min(t.values()) for t in times]
    w = [instance.weight(j) for j in range(n)]
    free = [Fraction(0)] * instance.m
    plan: dict = {}
    best = [None, None]  # value, plan

    def rest_bound(remaining):
        if weighted:
            return sum((w[j] * fastest[j] for j in remaining), Fraction(0))
        return max((fastest[j] for j in remaining), default=Fraction(0))

    def dfs(remaining: frozenset, value: Fraction):
        if not remaining:
            if best[0] is None or value < best[0]:
                best[0], best[1] = value, dict(plan)
            return
        if best[0] is not None:
            rb = rest_bound(remaining)
            bound = value + rb if weighted else max(value, rb)
            if bound >= best[0]:
                return
        for j in sorted(remaining):
            for S in sets[j]:
                start = max(free[i] for i in S)
                end = start + times[j][S]
                new = value + w[j] * end if weighted else max(value, end)
                if best[0] is not None and new >= best[0]:
                    continue
                saved = [free[i] for i in S]
                for i in S:
                    free[i] = end
                plan[j] = (S, start)
                dfs(remaining - {j}, new)
                del plan[j]
                for i, v in zip(S, saved):
                    free[i] = v

    dfs(frozenset(range(n)), Fraction(0))
    return best[0], Schedule.build(instance, best[1])


def brute_force_makespan(instance: Instance, budget: OracleBudget = OracleBudget()):
    """``(OPT, witness schedule)``; raises :class:`BudgetExceeded` when too large."""
    return _search(instance, budget, weighted=False)


def brute_force_weighted(instance: Instance, weights=None, budget: OracleBudget = OracleBudget()):
    """``(min sum w_j C_j, witness)``; weights default to the instance's own."""
    if weights is not None:
        instance = instance.with_weights([as_fraction(x) for x in weights])
    return _search(instance, budget, weighted=True)


@dataclass(frozen=True)
class Bracket:
    """The LP threshold lies in ``(lo, hi]``; ``lo`` is None when unknown."""

    lo: Fraction | None
    hi: Fraction


def min_feasible_C(instance: Instance, candidates: Sequence | None = None, eps=None):
    """Smallest target C at which the assignment LP is feasible.

    With ``candidates`` the smallest feasible grid point is returned as a
    Fraction if the LP is also infeasible just below it (relative 1e-12), which
    pins the threshold to that point; otherwise a :class:`Bracket`.  Without
    candidates, bisection to relative width ``eps`` (default 1e-6) yields a
    Bracket.
    """
    if candidates is None:
        eps = Fraction(1, 10**6) if eps is None else as_fraction(eps)
        lo, hi, _ = bisect_threshold(instance, eps)
        return Bracket(None if lo == hi else lo, hi)
    below, C, _ = exact_threshold(instance, candidates)
    if not lp_feasible(instance, C * (1 - Fraction(1, 10**12))):
        return C
    return Bracket(below, C)
