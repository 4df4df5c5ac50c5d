from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import exact_fns, rationals
from msched.model import (
    INF, Amdahl, CappedInverse, Instance, ModelError, PowerLaw, Schedule, Table,
    effective_speed, fmt, fmt_dec, objectives, parse_p, validate_proc_fn, verify_schedule,
)


def two_machine_instance():
    fn = CappedInverse(2, 1)
    return Instance([[1, 1], [1, 1]], [fn, fn])


@given(exact_fns, rationals(1, 20), rationals(1, 6))
def test_speedup_never_superlinear(fn, q, alpha):
    assert fn(alpha * q) >= fn(q) / alpha
    assert fn(alpha * q) <= fn(q)


@given(exact_fns, rationals(1, 20), rationals(1, 20))
def test_time_nonincreasing_work_nondecreasing(fn, a, b):
    lo, hi = sorted((a, b))
    assert fn(hi) <= fn(lo)
    assert lo * fn(lo) <= hi * fn(hi)


def test_family_values():
    assert CappedInverse(2, 1)(Fraction(3, 2)) == Fraction(4, 3)
    assert CappedInverse(2, 1)(4) == 1
    assert Amdahl(10, Fraction(1, 2))(5) == 6
    assert PowerLaw(8, 1)(4) == 2
    assert abs(float(PowerLaw(8, Fraction(1, 3))(8)) - 4) < 1e-20


def test_table_interpolation_keeps_work_flat():
    t = Table(((1, 4), (4, 2)))
    assert t(Fraction(1, 2)) == 4
    assert t(2) == 2  # work 1*4 = 4 stays flat, 4/2 = 2 meets v2 = 2
    assert t(Fraction(3, 2)) == Fraction(8, 3)
    assert t(100) == 2


def test_invalid_functions_rejected():
    with pytest.raises(ModelError):
        PowerLaw(1, 2)
    with pytest.raises(ModelError):
        Amdahl(1, Fraction(3, 2))
    with pytest.raises(ModelError):
        CappedInverse(0, 1)
    assert validate_proc_fn(Table(((1, 1), (2, 2)))).prop == "nonincreasing"
    assert validate_proc_fn(Table(((1, 4), (2, 1)))).prop == "work"


def test_effective_speed_norms():
    assert effective_speed([3, 4], 1) == 7
    assert effective_speed([3, 4], 2) == 5
    assert effective_speed([3, 4], INF) == 4
    assert abs(float(effective_speed([1, 1], 2)) - 2 ** 0.5) < 1e-20
    assert parse_p("inf") == INF
    with pytest.raises(ModelError):
        parse_p(Fraction(1, 2))


def test_speed_grain_is_lcm_of_denominators():
    fn = CappedInverse(1, 1)
    inst = Instance([[Fraction(1, 2)], [Fraction(2, 3)]], [fn])
    assert inst.speed_grain == Fraction(1, 6)


def test_verify_accepts_unison_and_sequential():
    inst = two_machine_instance()
    together = Schedule.build(inst, {0: ((0, 1), 0), 1: ((0, 1), 1)})
    apart = Schedule.build(inst, {0: ((0,), 0), 1: ((1,), 0)})
    assert verify_schedule(inst, together) == []
    assert verify_schedule(inst, apart) == []
    assert together.makespan == apart.makespan == 2


def test_verify_flags_overlap_and_missing_job():
    inst = two_machine_instance()
    overlap = Schedule.build(inst, {0: ((0,), 0), 1: ((0, 1), 1)})
    kinds = {v.kind for v in verify_schedule(inst, overlap)}
    assert "overlap" in kinds
    missing = Schedule.build(inst, {0: ((0,), 0)})
    assert verify_schedule(inst, missing)


def test_objectives_use_weights():
    inst = two_machine_instance().with_weights([2, 1])
    sched = Schedule.build(inst, {0: ((0, 1), 0), 1: ((0, 1), 1)})
    assert objectives(inst, sched) == (2, 2 * 1 + 1 * 2)


@given(st.fractions(0, 1000, max_denominator=1000))
def test_fmt_roundtrips(q):
    assert Fraction(fmt(q)) == q
    assert abs(float(fmt_dec(q)) - float(q)) <= 1e-9 * max(1, float(q))
