"""Instance generators and the JSON formats for instances and schedules.

Instance file::

    {"machines": m, "jobs": n,
     "speeds": [[ "num/den", ... n entries ], ... m rows],
     "functions": [{"family": "capped_inverse", "work": "2", "floor": "1"}, ...],
     "weights": ["1", ...],          # optional
     "p": "1" | "infinity",          # optional, default 1
     "variant": "unrelated" | "restricted" | "uniform",
     "name": "..."}                  # optional

Schedule file::

    {"jobs": {"0": {"machines": [0, 2], "start": "0", "completion": "3/2"}, ...}}
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .model import (
    INF, Amdahl, CappedInverse, Instance, JobSlot, ModelError, PowerLaw, ProcTimeFn,
    Schedule, Table, as_fraction, fmt, fn_from_dict,
)

PHI = Fraction(121393, 75025)
NONMALLEABLE_EXPONENT_CAP = 64
FUNCTION_FAMILIES = ("capped_inverse", "amdahl", "power_law", "mixed")


class ExponentTooLarge(ModelError):
    """The non-malleable encoding would need speeds too large to represent."""


# ---------------------------------------------------------------------------
# integrality-gap families


def gen_gap_restricted(k: int) -> Instance:
    """k jobs with ``max(2/s, 1)``; one dedicated machine each plus a shared pool of k-1."""
    if k < 1:
        raise ValueError("k must be at least 1")
    m = 2 * k - 1
    speeds = [[1 if (i == j or i >= k) else 0 for j in range(k)] for i in range(m)]
    fns = [CappedInverse(2, 1)] * k
    return Instance(speeds, fns, variant="restricted", name=f"gap-restricted-k{k}")


def gen_gap_uniform(k: int) -> Instance:
    """2k+1 jobs with ``max(2/s, 1)`` on 2k machines of speed 1 and k of speed 2."""
    if k < 1:
        raise ValueError("k must be at least 1")
    n = 2 * k + 1
    speeds = [[1] * n for _ in range(2 * k)] + [[2] * n for _ in range(k)]
    fns = [CappedInverse(2, 1)] * n
    return Instance(speeds, fns, variant="uniform", name=f"gap-uniform-k{k}")


def gen_gap_unrelated(k: int, phi=PHI) -> Instance:
    """2k paired jobs plus one extra job; the optimal makespan is ``1 + phi``.

    Machines ``0..k-1`` serve pair ``l = (2l, 2l+1)`` at speed ``2/phi`` and the
    extra job ``2k`` at speed 1; machine ``k + j`` is dedicated to job j at
    speed ``2 - phi``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    phi = as_fraction(phi)
    if not 1 < phi < 2:
        raise ValueError("phi must lie in (1, 2)")
    n, m = 2 * k + 1, 3 * k
    speeds = [[Fraction(0)] * n for _ in range(m)]
    for g in range(k):
        speeds[g][2 * g] = speeds[g][2 * g + 1] = 2 / phi
        speeds[g][2 * k] = Fraction(1)
    for j in range(2 * k):
        speeds[k + j][j] = 2 - phi
    fns = [CappedInverse(1, phi / 2)] * (2 * k) + [CappedInverse(1, 1)]
    return Instance(speeds, fns, variant="unrelated", name=f"gap-unrelated-k{k}")


GAP_FAMILIES = {
    "restricted": gen_gap_restricted,
    "uniform": gen_gap_uniform,
    "unrelated": gen_gap_unrelated,
}


def gap_threshold(family: str, k: int) -> Fraction:
    """Known smallest feasible LP target (for unrelated: a feasible target)."""
    if family == "restricted":
        return Fraction(2 * k, 2 * k - 1)
    if family == "uniform":
        return Fraction(2 * k + 1, 2 * k)
    if family == "unrelated":
        return 1 + Fraction(1, k)
    raise ValueError(family)


# ---------------------------------------------------------------------------
# non-malleable transformation


def from_nonmalleable(ptimes) -> Instance:
    """Encode integer processing times ``ptimes[i][j]`` as a malleable instance.

    With ``N = pmax * n * m`` every job gets ``f(s) = pmax * s**(-1/N)`` and
    machine i speed ``(pmax / p_ij) ** N``, so that running j alone on i takes
    exactly ``p_ij``.  Speeds grow like ``pmax ** N``; inputs with
    ``N > 64`` are refused.
    """
    rows = [[int(v) for v in row] for row in ptimes]
    if not rows or not rows[0]:
        raise ValueError("processing-time matrix must be non-empty")
    if any(len(r) != len(rows[0]) for r in rows):
        raise ValueError("processing-time matrix must be rectangular")
    if any(v <= 0 for r in rows for v in r):
        raise ValueError("processing times must be positive integers")
    m, n = len(rows), len(rows[0])
    pmax = max(max(r) for r in rows)
    N = pmax * n * m
    if N > NONMALLEABLE_EXPONENT_CAP:
        raise ExponentTooLarge(
            f"pmax*n*m = {N} exceeds {NONMALLEABLE_EXPONENT_CAP}; speeds would need "
            f"about {N} * log2(pmax) bits. Scale the processing times down first"
        )
    speeds = [[Fraction(pmax, v) ** N for v in r] for r in rows]
    fns = [PowerLaw(pmax, Fraction(1, N))] * n
    return Instance(speeds, fns, variant="unrelated", name=f"nonmalleable-{m}x{n}")


# ---------------------------------------------------------------------------
# random instances


@dataclass(frozen=True)
class RandomSpec:
    seed: int
    machines: int
    jobs: int
    family: str = "capped_inverse"
    variant: str = "unrelated"
    weighted: bool = False
    p: object = 1
    unit_floor: bool = False  # every job needs at least one time unit


def _rand_speed(rng: random.Random) -> Fraction:
    d = rng.randint(1, 8)
    return Fraction(rng.randint(d, 10 * d), d)


def _rand_fn(rng: random.Random, family: str, unit_floor: bool) -> ProcTimeFn:
    if family == "mixed":
        family = rng.choice(("capped_inverse", "amdahl", "power_law"))
    if family == "capped_inverse":
        work = Fraction(rng.randint(1, 24), rng.choice((1, 2)))
        floor = Fraction(rng.randint(1, 8), 4)
        return CappedInverse(work, max(floor, Fraction(1)) if unit_floor else floor)
    if family == "amdahl":
        return Amdahl(Fraction(rng.randint(1, 12)), Fraction(rng.randint(0, 8), 8))
    if family == "power_law":
        return PowerLaw(Fraction(rng.randint(1, 12)), rng.choice((Fraction(1, 2), Fraction(2, 3), Fraction(1))))
    raise ValueError(f"unknown function family {family!r}")


def gen_random(spec: RandomSpec) -> Instance:
    """Seeded instance; speeds lie in ``{0} U [1, 10]`` with denominators up to 8."""
    if not (1 <= spec.machines <= 64 and 1 <= spec.jobs <= 64):
        raise ValueError("random instances need 1..64 machines and jobs")
    rng = random.Random(f"{spec.seed}:{spec.machines}:{spec.jobs}:{spec.family}:{spec.variant}")
    m, n = spec.machines, spec.jobs
    if spec.variant == "uniform":
        per_machine = [_rand_speed(rng) for _ in range(m)]
        speeds = [[s] * n for s in per_machine]
    elif spec.variant == "restricted":
        speeds = [[Fraction(rng.random() < 0.6) for _ in range(n)] for _ in range(m)]
    elif spec.variant == "unrelated":
        speeds = [[Fraction(0) if rng.random() < 0.2 else _rand_speed(rng) for _ in range(n)]
                  for _ in range(m)]
    else:
        raise ValueError(f"unknown variant {spec.variant!r}")
    for j in range(n):
        if not any(speeds[i][j] for i in range(m)):
            i = rng.randrange(m)
            speeds[i][j] = Fraction(1) if spec.variant == "restricted" else _rand_speed(rng)
    fns = [_rand_fn(rng, spec.family, spec.unit_floor) for _ in range(n)]
    weights = [Fraction(rng.randint(1, 10)) for _ in range(n)] if spec.weighted else None
    inst = Instance(speeds, fns, weights, spec.p, spec.variant,
                    name=f"random-{spec.variant}-{spec.family}-{m}x{n}-s{spec.seed}")
    if spec.unit_floor:
        inst = rescale_to_unit(inst)
    return inst


def scale_fn(fn: ProcTimeFn, factor) -> ProcTimeFn:
    """Multiply every processing time of ``fn`` by ``factor``."""
    c = as_fraction(factor)
    if isinstance(fn, CappedInverse):
        return CappedInverse(fn.work * c, fn.floor * c)
    if isinstance(fn, (Amdahl,)):
        return Amdahl(fn.work * c, fn.parallel)
    if isinstance(fn, PowerLaw):
        return PowerLaw(fn.work * c, fn.exponent)
    if isinstance(fn, Table):
        return Table(tuple((s, v * c) for s, v in fn.points))
    raise TypeError(type(fn).__name__)


def rescale_to_unit(instance: Instance) -> Instance:
    """Scale all times by one common factor so the fastest job needs exactly 1 unit."""
    low = min(instance.full_speed_time(j) for j in range(instance.n))
    if low >= 1:
        return instance
    fns = tuple(scale_fn(fn, 1 / low) for fn in instance.functions)
    return Instance(instance.speeds, fns, instance.weights, instance.p, instance.variant, instance.name)


# ---------------------------------------------------------------------------
# JSON


def _p_to_json(p):
    return "infinity" if p == INF else fmt(p)


def instance_to_dict(inst: Instance) -> dict:
    d = {
        "machines": inst.m,
        "jobs": inst.n,
        "speeds": [[fmt(s) for s in row] for row in inst.speeds],
        "functions": [fn.to_dict() for fn in inst.functions],
        "p": _p_to_json(inst.p),
        "variant": inst.variant,
    }
    if inst.weights is not None:
        d["weights"] = [fmt(w) for w in inst.weights]
    if inst.name:
        d["name"] = inst.name
    return d


def _rational(value, where: str) -> Fraction:
    try:
        return as_fraction(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ModelError(f"{where}: not a rational number: {value!r}") from exc


def instance_from_dict(d: dict) -> Instance:
    if not isinstance(d, dict):
        raise ModelError("instance: expected a JSON object")
    for key in ("speeds", "functions"):
        if key not in d:
            raise ModelError(f"instance: missing key {key!r}")
    speeds = []
    for i, row in enumerate(d["speeds"]):
        if not isinstance(row, list):
            raise ModelError(f"speeds[{i}]: expected a list")
        speeds.append([_rational(v, f"speeds[{i}][{j}]") for j, v in enumerate(row)])
    fns = []
    for j, rec in enumerate(d["functions"]):
        try:
            fns.append(fn_from_dict(rec))
        except (ModelError, TypeError, ValueError) as exc:
            raise ModelError(f"functions[{j}]: {exc}") from exc
    if "machines" in d and d["machines"] != len(speeds):
        raise ModelError(f"machines: header says {d['machines']}, speeds has {len(speeds)} rows")
    if "jobs" in d and d["jobs"] != len(fns):
        raise ModelError(f"jobs: header says {d['jobs']}, functions has {len(fns)} entries")
    weights = d.get("weights")
    if weights is not None:
        weights = [_rational(w, f"weights[{j}]") for j, w in enumerate(weights)]
    return Instance(speeds, fns, weights, d.get("p", 1), d.get("variant", "unrelated"), d.get("name", ""))


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=1, sort_keys=True) + "\n"


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(dumps_instance(inst))


def _read_json(path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def load_instance(path) -> Instance:
    try:
        return instance_from_dict(_read_json(path))
    except ModelError as exc:
        raise ModelError(f"{path}: {exc}") from exc


def schedule_to_dict(schedule: Schedule) -> dict:
    jobs = {}
    for j, slot in enumerate(schedule.slots):
        if slot is not None:
            jobs[str(j)] = {"machines": list(slot.machines), "start": fmt(slot.start),
                            "completion": fmt(slot.end)}
    return {"jobs": jobs}


def schedule_from_dict(d: dict, n: int | None = None) -> Schedule:
    if not isinstance(d, dict) or not isinstance(d.get("jobs"), dict):
        raise ModelError("schedule: expected an object with a 'jobs' map")
    recs = d["jobs"]
    try:
        idx = {int(k): v for k, v in recs.items()}
    except ValueError as exc:
        raise ModelError(f"schedule: job keys must be integers ({exc})") from exc
    size = (max(idx) + 1 if idx else 0) if n is None else n
    slots = [None] * max(size, max(idx) + 1 if idx else 0)
    for j, rec in idx.items():
        where = f"jobs[{j}]"
        try:
            machines = tuple(int(i) for i in rec["machines"])
            start = _rational(rec["start"], f"{where}.start")
            end = _rational(rec["completion"], f"{where}.completion")
        except (KeyError, TypeError) as exc:
            raise ModelError(f"{where}: malformed record {rec!r}") from exc
        slots[j] = JobSlot(machines, start, end)
    return Schedule(tuple(slots))


def save_schedule(schedule: Schedule, path) -> None:
    Path(path).write_text(json.dumps(schedule_to_dict(schedule), indent=1, sort_keys=True) + "\n")


def load_schedule(path, n: int | None = None) -> Schedule:
    try:
        return schedule_from_dict(_read_json(path), n)
    except ModelError as exc:
        raise ModelError(f"{path}: {exc}") from exc
