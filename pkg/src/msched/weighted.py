"""Weighted completion time through interval buckets.

The interval LP spreads each job over geometric time windows.  Jobs are
grouped by their fractional completion time, each group's LP mass is folded
into a single makespan LP at a matching target, and the groups are rounded
one after another with an ordinary makespan scheme.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .lp import (
    IntervalLp, assignment_from_values, assignment_rows_hold, build_interval_lp, build_lp,
)
from .model import Instance, JobSlot, ModelError, Schedule, as_fraction, objectives, verify_schedule
from .rounding import assemble_schedule, guarantee, round_solution
from .simplex import purify, solve_lp


@dataclass(frozen=True)
class WeightedConfig:
    tau: Fraction = Fraction(2)
    alpha: Fraction = Fraction(2)
    scheme: str = "filtered"

    def __post_init__(self):
        object.__setattr__(self, "tau", as_fraction(self.tau))
        object.__setattr__(self, "alpha", as_fraction(self.alpha))
        if self.tau <= 1 or self.alpha <= 1:
            raise ValueError("tau and alpha must both exceed 1")

    @property
    def stretch(self) -> Fraction:
        """Per-job factor between output completion and C̄_j, before ρ."""
        a, t = self.alpha, self.tau
        return a * a / (a - 1) * t * t / (t - 1)


@dataclass
class BucketPlan:
    tau: Fraction
    alpha: Fraction
    L: int
    x: dict  # (i, j, l) -> optimal interval LP value
    lp_value: Fraction
    frac_completion: list  # C̄_j
    buckets: dict  # l -> sorted job list
    folded: dict = field(default_factory=dict)  # l -> {(i, j): z}

    def bucket_of(self, j: int) -> int:
        return next(l for l, js in self.buckets.items() if j in js)

    def target(self, ell: int) -> Fraction:
        return self.alpha / (self.alpha - 1) * self.tau ** ell


@dataclass
class WeightedResult:
    schedule: Schedule
    plan: BucketPlan
    value: Fraction
    rho: float
    bucket_spans: dict  # l -> (start, end)

    def job_bound(self, j: int) -> float:
        cfg = WeightedConfig(self.plan.tau, self.plan.alpha)
        return self.rho * float(cfg.stretch * self.plan.frac_completion[j])


def _tail(x: dict, j: int, ell: int) -> Fraction:
    return sum((v for (i, jj, l), v in x.items() if jj == j and l > ell), Fraction(0))


def plan_buckets(instance: Instance, config: WeightedConfig = WeightedConfig()) -> tuple[BucketPlan, IntervalLp]:
    ilp = build_interval_lp(instance, tau=config.tau)
    res = solve_lp(ilp.problem)
    if not res.feasible:
        raise AssertionError("interval LP is infeasible, which the horizon choice rules out")
    x = {k: v for k, v in res.values.items() if v}
    tau, alpha = config.tau, config.alpha
    cbar = [sum((tau ** (l - 1) * v for (i, jj, l), v in x.items() if jj == j), Fraction(0))
            for j in range(instance.n)]
    buckets: dict = {}
    for j, c in enumerate(cbar):
        ell = 1
        while alpha * c >= tau ** ell:
            ell += 1
        tail = _tail(x, j, ell)
        assert tail <= 1 / alpha, f"job {j}: late mass {tail} exceeds 1/alpha"
        buckets.setdefault(ell, []).append(j)
    plan = BucketPlan(tau, alpha, ilp.L, x, res.objective, cbar, dict(sorted(buckets.items())))
    for ell, jobs in plan.buckets.items():
        z = {}
        for pos, j in enumerate(jobs):
            keep = 1 - _tail(x, j, ell)
            for (i, jj, l), v in x.items():
                if jj == j and l <= ell:
                    z[i, pos] = z.get((i, pos), Fraction(0)) + v / keep
        plan.folded[ell] = z
    return plan, ilp


def solve_weighted(instance: Instance, weights=None,
                   config: WeightedConfig = WeightedConfig()) -> WeightedResult:
    """Round bucket by bucket; bucket l starts when bucket l-1 has fully finished."""
    if weights is not None:
        weights = [as_fraction(w) for w in weights]
        if any(w < 0 for w in weights):
            raise ModelError("weights must be non-negative")
        instance = instance.with_weights(weights)
    plan, _ = plan_buckets(instance, config)
    grain = instance.speed_grain
    slots = [None] * instance.n
    offset = Fraction(0)
    spans = {}
    for ell, jobs in plan.buckets.items():
        sub = instance.subinstance(jobs)
        C = plan.target(ell)
        z = plan.folded[ell]
        problems = assignment_rows_hold(sub, C, z, grain=grain)
        if problems:
            raise AssertionError(f"bucket {ell}: folded point violates LP({C}): {problems}")
        alp = build_lp(sub, C, grain=grain)
        vertex = purify(alp.problem, {k: z.get(k, Fraction(0)) for k in alp.problem.columns})
        fa = assignment_from_values(alp, vertex)
        part = assemble_schedule(sub, round_solution(sub, fa, config.scheme))
        for pos, j in enumerate(jobs):
            s = part.slots[pos]
            slots[j] = JobSlot(s.machines, s.start + offset, s.end + offset)
        spans[ell] = (offset, offset + part.makespan)
        offset += part.makespan
    schedule = Schedule(tuple(slots))
    bad = verify_schedule(instance, schedule)
    if bad:
        raise AssertionError("weighted schedule is invalid: " + "; ".join(map(str, bad)))
    result = WeightedResult(schedule, plan, objectives(instance, schedule)[1],
                            guarantee(config.scheme, instance.p), spans)
    for j in range(instance.n):
        if float(schedule.completion(j)) > result.job_bound(j) * (1 + 1e-12):
            raise AssertionError(f"job {j} completes after its bucket bound")
    return result
