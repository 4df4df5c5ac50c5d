"""Instances, processing-time families, schedules and the schedule checker.

All speeds, times and weights are :class:`fractions.Fraction`.  Processing
time families whose closed form is rational (capped inverse, Amdahl, table)
are evaluated exactly; power laws with a non-unit exponent and p-norm
effective speeds go through ``mpmath`` at :data:`PRECISION_BITS` bits and are
converted back to (binary) fractions, so the rest of the code never has to
care which kind of number it holds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping, Sequence, Union

import gmpy2
import mpmath

PRECISION_BITS = 96
TOL = 1e-9

INF = math.inf
Number = Union[int, Fraction]


class ModelError(ValueError):
    """Raised for malformed instances, functions or schedules."""


def as_fraction(value) -> Fraction:
    """Coerce ints, fractions, ``"a/b"`` strings and mpmath numbers."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, mpmath.mpf):
        return _mpf_to_fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    return Fraction(value)


def _mpf_to_fraction(x: mpmath.mpf) -> Fraction:
    man, exp = x.man_exp
    if exp >= 0:
        return Fraction(int(man) << exp)
    return Fraction(int(man), 1 << -exp)


def _mpf(q: Fraction) -> mpmath.mpf:
    return mpmath.mpf(q.numerator) / q.denominator


# ---------------------------------------------------------------------------
# processing-time families


@dataclass(frozen=True)
class ProcTimeFn:
    """Base class.  Subclasses implement ``_eval`` on a positive speed."""

    family = "abstract"
    exact = True

    def __call__(self, speed: Number) -> Fraction:
        return eval_proc_time(self, speed)

    def _eval(self, speed: Fraction) -> Fraction:  # pragma: no cover
        raise NotImplementedError

    def to_dict(self) -> dict:  # pragma: no cover
        raise NotImplementedError


@dataclass(frozen=True)
class CappedInverse(ProcTimeFn):
    """``f(s) = max(work / s, floor)``."""

    work: Fraction
    floor: Fraction
    family = "capped_inverse"

    def __post_init__(self):
        object.__setattr__(self, "work", as_fraction(self.work))
        object.__setattr__(self, "floor", as_fraction(self.floor))
        if self.work <= 0 or self.floor <= 0:
            raise ModelError("capped_inverse needs work > 0 and floor > 0")

    def _eval(self, speed):
        return max(self.work / speed, self.floor)

    def to_dict(self):
        return {"family": self.family, "work": fmt(self.work), "floor": fmt(self.floor)}


@dataclass(frozen=True)
class PowerLaw(ProcTimeFn):
    """``f(s) = work * s**(-exponent)`` with ``0 < exponent <= 1``."""

    work: Fraction
    exponent: Fraction
    family = "power_law"

    def __post_init__(self):
        object.__setattr__(self, "work", as_fraction(self.work))
        object.__setattr__(self, "exponent", as_fraction(self.exponent))
        if self.work <= 0:
            raise ModelError("power_law needs work > 0")
        if not 0 < self.exponent <= 1:
            # work s**(1-a) would decrease for a > 1
            raise ModelError(
                f"power_law exponent must lie in (0, 1], got {self.exponent}"
            )

    @property
    def exact(self):
        return self.exponent == 1

    def _eval(self, speed):
        if self.exponent == 1:
            return self.work / speed
        with mpmath.workprec(PRECISION_BITS):
            val = _mpf(self.work) * mpmath.power(_mpf(speed), -_mpf(self.exponent))
            return _mpf_to_fraction(val)

    def to_dict(self):
        return {"family": self.family, "work": fmt(self.work), "exponent": fmt(self.exponent)}


@dataclass(frozen=True)
class Amdahl(ProcTimeFn):
    """``f(s) = work * ((1 - parallel) + parallel / s)``."""

    work: Fraction
    parallel: Fraction
    family = "amdahl"

    def __post_init__(self):
        object.__setattr__(self, "work", as_fraction(self.work))
        object.__setattr__(self, "parallel", as_fraction(self.parallel))
        if self.work <= 0:
            raise ModelError("amdahl needs work > 0")
        if not 0 <= self.parallel <= 1:
            raise ModelError("amdahl parallel fraction must lie in [0, 1]")

    def _eval(self, speed):
        return self.work * ((1 - self.parallel) + self.parallel / speed)

    def to_dict(self):
        return {"family": self.family, "work": fmt(self.work), "parallel": fmt(self.parallel)}


@dataclass(frozen=True)
class Table(ProcTimeFn):
    """Tabulated values at speed breakpoints.

    Below the first breakpoint the first value is kept.  Between breakpoints
    ``s_k < s < s_{k+1}`` the function is ``max(v_{k+1}, s_k v_k / s)``, i.e.
    the work stays flat at ``s_k v_k`` until the next tabulated value is
    reached; past the last breakpoint the last value is kept.  This is the
    smallest extension of the table with non-increasing time and
    non-decreasing work, provided the breakpoints themselves satisfy both.
    """

    points: tuple
    family = "table"

    def __post_init__(self):
        pts = tuple((as_fraction(s), as_fraction(v)) for s, v in self.points)
        if not pts:
            raise ModelError("table needs at least one breakpoint")
        for (s0, _), (s1, _) in zip(pts, pts[1:]):
            if s1 <= s0:
                raise ModelError("table breakpoints must be strictly increasing")
        if any(s <= 0 or v <= 0 for s, v in pts):
            raise ModelError("table speeds and values must be positive")
        object.__setattr__(self, "points", pts)

    def _eval(self, speed):
        pts = self.points
        if speed <= pts[0][0]:
            return pts[0][1]
        for (s0, v0), (s1, v1) in zip(pts, pts[1:]):
            if speed < s1:
                return max(v1, s0 * v0 / speed)
        return pts[-1][1]

    def to_dict(self):
        return {"family": self.family, "points": [[fmt(s), fmt(v)] for s, v in self.points]}


FAMILIES = {cls.family: cls for cls in (CappedInverse, PowerLaw, Amdahl, Table)}


def fn_from_dict(d: Mapping) -> ProcTimeFn:
    try:
        fam = d["family"]
        if fam == "table":
            return Table(tuple(tuple(p) for p in d["points"]))
        cls = FAMILIES[fam]
    except KeyError as exc:
        raise ModelError(f"unknown or incomplete function record {dict(d)!r}") from exc
    args = {k: v for k, v in d.items() if k != "family"}
    return cls(**args)


def eval_proc_time(fn: ProcTimeFn, speed: Number) -> Fraction:
    speed = as_fraction(speed)
    if speed <= 0:
        raise ModelError(f"processing time needs a positive speed, got {speed}")
    return fn._eval(speed)


@dataclass(frozen=True)
class FnViolation:
    prop: str  # "nonincreasing" | "work" | "positive"
    speeds: tuple

    def __str__(self):
        return f"{self.prop} violated at speeds {', '.join(map(str, self.speeds))}"


def validate_proc_fn(fn: ProcTimeFn) -> FnViolation | None:
    """Return ``None`` when both monotonicity properties hold.

    The closed-form families satisfy them whenever their constructor accepted
    the parameters.  Tables are checked on consecutive breakpoints.
    """
    if not isinstance(fn, Table):
        return None
    for (s0, v0), (s1, v1) in zip(fn.points, fn.points[1:]):
        if v1 > v0:
            return FnViolation("nonincreasing", (s0, s1))
        if s1 * v1 < s0 * v0:
            return FnViolation("work", (s0, s1))
    return None


# ---------------------------------------------------------------------------
# instances


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def parse_p(value) -> Fraction | float:
    if value is None:
        return Fraction(1)
    if isinstance(value, float) and math.isinf(value):
        return INF
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity"):
        return INF
    p = as_fraction(value)
    if p < 1:
        raise ModelError(f"norm regularizer p must be >= 1, got {p}")
    return p


def effective_speed(speeds: Iterable[Number], p=1) -> Fraction:
    """p-norm of a speed vector; ``p=1`` is the plain sum, ``p=INF`` the max."""
    vals = [as_fraction(s) for s in speeds]
    if not vals:
        return Fraction(0)
    p = parse_p(p)
    if p == 1:
        return sum(vals, Fraction(0))
    if p == INF:
        return max(vals)
    if p.denominator == 1:
        k = p.numerator
        total = sum((v ** k for v in vals), Fraction(0))
        root = _exact_root(total, k)
        if root is not None:
            return root
    with mpmath.workprec(PRECISION_BITS):
        total = mpmath.fsum(mpmath.power(_mpf(v), _mpf(p)) for v in vals)
        return _mpf_to_fraction(mpmath.power(total, 1 / _mpf(p)))


def _exact_root(q: Fraction, k: int) -> Fraction | None:
    num, den = _iroot(q.numerator, k), _iroot(q.denominator, k)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def _iroot(x: int, k: int) -> int | None:
    r, exact = gmpy2.iroot(x, k)
    return int(r) if exact else None


VARIANTS = ("unrelated", "restricted", "uniform")


@dataclass(frozen=True)
class Instance:
    """Machines ``0..m-1``, jobs ``0..n-1``; ``speeds[i][j]`` is s_{i,j}."""

    speeds: tuple
    functions: tuple
    weights: tuple | None = None
    p: Fraction | float = Fraction(1)
    variant: str = "unrelated"
    name: str = ""

    def __post_init__(self):
        speeds = tuple(tuple(as_fraction(s) for s in row) for row in self.speeds)
        object.__setattr__(self, "speeds", speeds)
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "p", parse_p(self.p))
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(as_fraction(w) for w in self.weights))
        self._validate()

    def _validate(self):
        n = len(self.functions)
        if any(len(row) != n for row in self.speeds):
            raise ModelError("speed matrix must have one column per job")
        if any(s < 0 for row in self.speeds for s in row):
            raise ModelError("speeds must be non-negative")
        for j in range(n):
            if not any(self.speeds[i][j] > 0 for i in range(self.m)):
                raise ModelError(f"job {j} has no machine with positive speed")
        for j, fn in enumerate(self.functions):
            if not isinstance(fn, ProcTimeFn):
                raise ModelError(f"job {j}: not a processing-time function")
            bad = validate_proc_fn(fn)
            if bad is not None:
                raise ModelError(f"job {j}: {bad}")
        if self.weights is not None:
            if len(self.weights) != n or any(w < 0 for w in self.weights):
                raise ModelError("weights must be n non-negative values")
        if self.variant not in VARIANTS:
            raise ModelError(f"unknown variant {self.variant!r}")
        if self.variant == "restricted":
            if any(s not in (0, 1) for row in self.speeds for s in row):
                raise ModelError("restricted instances need speeds in {0, 1}")
        if self.variant == "uniform":
            if any(len(set(row)) > 1 for row in self.speeds):
                raise ModelError("uniform instances need s_ij = s_i for all jobs")

    @property
    def m(self) -> int:
        return len(self.speeds)

    @property
    def n(self) -> int:
        return len(self.functions)

    @property
    def machine_speeds(self) -> tuple | None:
        if self.variant != "uniform":
            return None
        return tuple(row[0] if row else Fraction(0) for row in self.speeds)

    @property
    def speed_grain(self) -> Fraction:
        """1/D with D the lcm of all speed denominators.

        Every additive total speed is a multiple of this value; scaling all
        speeds by D gives an equivalent integer-speed instance.
        """
        den = reduce(_lcm, (s.denominator for row in self.speeds for s in row), 1)
        return Fraction(1, den)

    def weight(self, j: int) -> Fraction:
        return Fraction(1) if self.weights is None else self.weights[j]

    def machines_for(self, j: int) -> list[int]:
        return [i for i in range(self.m) if self.speeds[i][j] > 0]

    def sigma(self, j: int, machines: Iterable[int], p=None) -> Fraction:
        return effective_speed((self.speeds[i][j] for i in machines), self.p if p is None else p)

    def proc_time(self, j: int, machines: Iterable[int], p=None) -> Fraction:
        return eval_proc_time(self.functions[j], self.sigma(j, machines, p))

    def full_speed_time(self, j: int) -> Fraction:
        return self.proc_time(j, self.machines_for(j))

    @property
    def exact(self) -> bool:
        """True when every time this instance produces is an exact rational."""
        p_ok = self.p == 1 or self.p == INF
        return p_ok and all(fn.exact for fn in self.functions)

    def with_weights(self, weights) -> "Instance":
        return Instance(self.speeds, self.functions, tuple(weights), self.p, self.variant, self.name)

    def with_p(self, p) -> "Instance":
        return Instance(self.speeds, self.functions, self.weights, p, self.variant, self.name)

    def subinstance(self, jobs: Sequence[int]) -> "Instance":
        speeds = tuple(tuple(row[j] for j in jobs) for row in self.speeds)
        fns = tuple(self.functions[j] for j in jobs)
        weights = None if self.weights is None else tuple(self.weights[j] for j in jobs)
        return Instance(speeds, fns, weights, self.p, self.variant, self.name)


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class JobSlot:
    machines: tuple
    start: Fraction
    end: Fraction

    @property
    def duration(self) -> Fraction:
        return self.end - self.start


@dataclass(frozen=True)
class Schedule:
    """``slots[j]`` describes job j; ``None`` marks an unscheduled job."""

    slots: tuple

    @classmethod
    def build(cls, instance: Instance, plan: Mapping[int, tuple]) -> "Schedule":
        """Fill in end times from ``{job: (machines, start)}``."""
        slots = [None] * instance.n
        for j, (machines, start) in plan.items():
            machines = tuple(sorted(machines))
            start = as_fraction(start)
            slots[j] = JobSlot(machines, start, start + instance.proc_time(j, machines))
        return cls(tuple(slots))

    @property
    def makespan(self) -> Fraction:
        return max((s.end for s in self.slots if s is not None), default=Fraction(0))

    def completion(self, j: int) -> Fraction:
        return self.slots[j].end

    def shifted(self, offset: Fraction) -> "Schedule":
        return Schedule(tuple(
            None if s is None else JobSlot(s.machines, s.start + offset, s.end + offset)
            for s in self.slots
        ))


@dataclass(frozen=True)
class Violation:
    kind: str
    job: int | None = None
    machine: int | None = None
    detail: str = ""

    def __str__(self):
        where = []
        if self.job is not None:
            where.append(f"job {self.job}")
        if self.machine is not None:
            where.append(f"machine {self.machine}")
        return f"{self.kind} ({', '.join(where)}): {self.detail}"


def _close(a: Fraction, b: Fraction, exact: bool) -> bool:
    if exact:
        return a == b
    return abs(a - b) <= TOL * max(1, abs(a), abs(b))


def verify_schedule(instance: Instance, schedule: Schedule) -> list[Violation]:
    """Return every violation found; an empty list means the schedule is valid.

    Durations are compared exactly when the instance only uses rational
    closed forms and within :data:`TOL` (relative) otherwise.
    """
    out: list[Violation] = []
    if len(schedule.slots) != instance.n:
        out.append(Violation("job-count", detail=f"{len(schedule.slots)} slots for {instance.n} jobs"))
    busy: dict[int, list] = {}
    for j, slot in enumerate(schedule.slots[: instance.n]):
        if slot is None:
            out.append(Violation("unscheduled", j))
            continue
        if not slot.machines:
            out.append(Violation("empty-set", j))
            continue
        if len(set(slot.machines)) != len(slot.machines):
            out.append(Violation("duplicate-machine", j, detail=str(slot.machines)))
        bad = False
        for i in slot.machines:
            if not 0 <= i < instance.m:
                out.append(Violation("bad-machine", j, i))
                bad = True
            elif instance.speeds[i][j] == 0:
                out.append(Violation("zero-speed", j, i, "machine cannot process job"))
                bad = True
        if bad:
            continue
        if slot.start < 0:
            out.append(Violation("negative-start", j, detail=str(slot.start)))
        want = instance.proc_time(j, slot.machines)
        if not _close(slot.duration, want, instance.exact):
            out.append(Violation(
                "duration", j,
                detail=f"interval [{slot.start}, {slot.end}) has length {slot.duration}, expected {want}",
            ))
        for i in set(slot.machines):
            busy.setdefault(i, []).append((slot.start, slot.end, j))
    for i, ivs in sorted(busy.items()):
        ivs.sort()
        for (s0, e0, j0), (s1, e1, j1) in zip(ivs, ivs[1:]):
            # open intervals; touching endpoints are fine
            if s1 < e0 and not (not instance.exact and e0 - s1 <= TOL * max(1, e0)):
                out.append(Violation(
                    "overlap", j1, i,
                    detail=f"job {j0} on [{s0}, {e0}) overlaps job {j1} on [{s1}, {e1})",
                ))
    return out


def objectives(instance: Instance, schedule: Schedule) -> tuple[Fraction, Fraction]:
    """``(makespan, sum_j w_j C_j)``; missing weights count as 1."""
    total = sum((instance.weight(j) * s.end for j, s in enumerate(schedule.slots) if s is not None),
                Fraction(0))
    return schedule.makespan, total


# ---------------------------------------------------------------------------
# formatting


def fmt(q) -> str:
    """Exact ``num/den`` rendering (integers without denominator)."""
    if isinstance(q, float) and math.isinf(q):
        return "infinity"
    q = as_fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def fmt_dec(q, digits: int = 12) -> str:
    if isinstance(q, float):
        return f"{q:.{digits}g}"
    with mpmath.workdps(digits + 5):
        return mpmath.nstr(_mpf(as_fraction(q)), digits)
