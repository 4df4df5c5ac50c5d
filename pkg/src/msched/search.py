"""Bisection on the target makespan around the LP feasibility test."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .lp import FractionalAssignment, solve_assignment_lp
from .model import Instance, Schedule, as_fraction, verify_schedule
from .rounding import (
    SCHEMES, RoundedAssignment, assemble_schedule, guarantee, round_solution,
)


@dataclass(frozen=True)
class SearchConfig:
    eps: Fraction = Fraction(1, 10**6)
    scheme: str = "filtered"
    candidates: tuple | None = None  # exact mode: sorted rational targets

    def __post_init__(self):
        object.__setattr__(self, "eps", as_fraction(self.eps))
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.candidates is not None:
            cands = tuple(as_fraction(c) for c in self.candidates)
            if list(cands) != sorted(set(cands)):
                raise ValueError("candidates must be strictly increasing")
            object.__setattr__(self, "candidates", cands)


@dataclass(frozen=True)
class SearchResult:
    schedule: Schedule
    C: Fraction
    lower: Fraction  # largest target proven infeasible (or the trivial bound)
    assignment: FractionalAssignment
    rounded: RoundedAssignment
    probes: list = field(default_factory=list)  # (C, feasible) in probe order
    bounds: tuple = ()

    @property
    def makespan(self) -> Fraction:
        return self.schedule.makespan

    @property
    def ratio(self) -> float:
        return float(self.makespan / self.C)


def makespan_bounds(instance: Instance) -> tuple[Fraction, Fraction]:
    """Every job alone at full speed (lower) and all jobs serialized (upper)."""
    full = [instance.full_speed_time(j) for j in range(instance.n)]
    return max(full), sum(full, Fraction(0))


def iteration_cap(lb: Fraction, ub: Fraction, eps: Fraction) -> int:
    if ub <= lb:
        return 2
    return math.ceil(math.log2(float((ub - lb) / (eps * lb)))) + 2


class _Prober:
    def __init__(self, instance):
        self.instance = instance
        self.probes = []
        self.cache = {}

    def __call__(self, C):
        if C not in self.cache:
            self.cache[C] = solve_assignment_lp(self.instance, C)
            self.probes.append((C, self.cache[C] is not None))
        return self.cache[C]


def bisect_threshold(instance: Instance, eps=Fraction(1, 10**6), prober=None):
    """``(lo, hi, fa)``: LP(lo) infeasible (or lo = trivial lower bound),
    LP(hi) feasible, and ``hi <= (1 + eps) lo``."""
    eps = as_fraction(eps)
    probe = prober or _Prober(instance)
    lb, ub = makespan_bounds(instance)
    fa = probe(lb)
    if fa is not None:
        return lb, lb, fa
    fa = probe(ub)
    lo = lb
    # with p != 1 the critical speed can overshoot the p-norm speed, so the
    # serial bound itself may be LP-infeasible; double until it is not
    for _ in range(64):
        if fa is not None:
            break
        lo, ub = ub, 2 * ub
        fa = probe(ub)
    else:
        raise AssertionError(f"LP still infeasible at {ub}")
    hi = ub
    for _ in range(iteration_cap(lb, ub, eps)):
        if hi <= (1 + eps) * lo:
            break
        mid = (lo + hi) / 2
        got = probe(mid)
        if got is None:
            lo = mid
        else:
            hi, fa = mid, got
    return lo, hi, fa


def exact_threshold(instance: Instance, candidates: Sequence, prober=None):
    """Smallest feasible candidate by bisection over the sorted list.

    Returns ``(below, C, fa)`` where ``below`` is the largest infeasible
    candidate (``None`` if the first one is feasible).  Raises ``ValueError``
    when no candidate is feasible.
    """
    probe = prober or _Prober(instance)
    cands = [as_fraction(c) for c in candidates]
    lo, hi = -1, len(cands) - 1  # cands[lo] infeasible, cands[hi] feasible
    fa = probe(cands[hi]) if cands else None
    if fa is None:
        raise ValueError("no candidate target is LP-feasible")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        got = probe(cands[mid])
        if got is None:
            lo = mid
        else:
            hi, fa = mid, got
    return (cands[lo] if lo >= 0 else None), cands[hi], fa


def farey_candidates(lo, hi, max_den: int = 24) -> list[Fraction]:
    """All rationals in ``[lo, hi]`` with denominator at most ``max_den``."""
    lo, hi = as_fraction(lo), as_fraction(hi)
    out = set()
    for d in range(1, max_den + 1):
        for num in range(math.ceil(lo * d), math.floor(hi * d) + 1):
            out.add(Fraction(num, d))
    return sorted(out)


def minimize_makespan(instance: Instance, config: SearchConfig = SearchConfig()) -> SearchResult:
    """Find (nearly) the smallest LP-feasible target and round its solution."""
    probe = _Prober(instance)
    bounds = makespan_bounds(instance)
    if config.candidates is not None:
        below, C, fa = exact_threshold(instance, config.candidates, probe)
        lower = below if below is not None else bounds[0]
    else:
        lower, C, fa = bisect_threshold(instance, config.eps, probe)
    rounded = round_solution(instance, fa, config.scheme)
    schedule = assemble_schedule(instance, rounded)
    problems = verify_schedule(instance, schedule)
    if problems:
        raise AssertionError("rounded schedule is invalid: " + "; ".join(map(str, problems)))
    return SearchResult(schedule, C, lower, fa, rounded, probe.probes, bounds)


def scheme_bound(scheme: str, instance: Instance) -> float:
    return guarantee(scheme, instance.p)
