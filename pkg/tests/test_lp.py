from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from conftest import exact_fns, rationals, small_instances
from msched.instances import gen_gap_restricted, gen_gap_uniform, gen_gap_unrelated
from msched.lp import (
    build_interval_lp, build_lp, check_extreme_structure, critical_speed, lp_feasible,
    assignment_rows_hold, horizon_length, pair_coefficients, solve_assignment_lp,
    structure_report, UndefinedCriticalSpeed,
)
from msched.model import INF, CappedInverse, Instance, ModelError


@given(exact_fns, rationals(1, 12))
def test_critical_speed_is_minimal_on_the_lattice(fn, C):
    g = critical_speed(fn, C)
    if g is None:
        assert fn(2 ** 20) > C
        return
    assert fn(g) <= C
    assert g == 1 or fn(g - 1) > C


def test_critical_speed_respects_grain():
    fn = CappedInverse(4, Fraction(3, 2))
    assert critical_speed(fn, Fraction(8, 5)) == 3
    assert critical_speed(fn, Fraction(8, 5), Fraction(1, 4)) == Fraction(5, 2)


def test_unreachable_target_has_no_column():
    inst = Instance([[1]], [CappedInverse(1, 2)])
    assert solve_assignment_lp(inst, Fraction(3, 2)) is None


def test_pair_classes():
    inst = Instance([[1], [4]], [CappedInverse(4, 1)])
    gamma, classes, coef = pair_coefficients(inst, 2)
    assert gamma[0] == 2
    assert classes == {(0, 0): "-", (1, 0): "+"}
    assert coef[0, 0] == 2 * 2 and coef[1, 0] == 1
    _, _, coef_inf = pair_coefficients(inst, 2, p=INF)
    assert (0, 0) not in coef_inf


def lp_feasible_scipy(inst, C):
    try:
        alp = build_lp(inst, C)
    except UndefinedCriticalSpeed:
        return False
    cols = list(alp.problem.columns)
    if not cols:
        return False
    A_eq = [[float(r.coefs.get(c, 0)) for c in cols] for r in alp.problem.eq_rows]
    A_ub = [[float(r.coefs.get(c, 0)) for c in cols] for r in alp.problem.ub_rows]
    b_ub = [float(r.rhs) * (1 + 1e-9) for r in alp.problem.ub_rows]
    res = linprog(np.zeros(len(cols)), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0] * len(A_eq),
                  bounds=[(0, None)] * len(cols), method="highs")
    return res.status == 0


@pytest.mark.parametrize("inst", small_instances(25, seed0=500, max_m=4, max_n=5))
def test_feasibility_agrees_with_float_oracle(inst):
    for C in (Fraction(3, 2), Fraction(3), Fraction(6), Fraction(12)):
        ours = solve_assignment_lp(inst, C)
        assert (ours is not None) == lp_feasible_scipy(inst, C)
        if ours is not None:
            assert check_extreme_structure(ours)
            assert assignment_rows_hold(inst, C, ours.x) == []


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_gap_thresholds(k):
    r = Fraction(2 * k, 2 * k - 1) if k > 1 else Fraction(2)
    assert lp_feasible(gen_gap_restricted(k), r)
    assert not lp_feasible(gen_gap_restricted(k), r - Fraction(1, 10**6))
    u = Fraction(2 * k + 1, 2 * k)
    assert lp_feasible(gen_gap_uniform(k), u)
    assert not lp_feasible(gen_gap_uniform(k), u - Fraction(1, 10**6))
    assert lp_feasible(gen_gap_unrelated(k), 1 + Fraction(1, k))


def test_structure_report_counts_cycles():
    fa = solve_assignment_lp(gen_gap_uniform(3), Fraction(7, 6))
    rep = structure_report(fa)
    assert rep["support"] <= rep["bound"] and rep["max_cycles"] <= 1


def test_rows_hold_detects_overload():
    inst = Instance([[1]], [CappedInverse(2, 1)])
    assert assignment_rows_hold(inst, 2, {(0, 0): Fraction(1)}) == []
    assert assignment_rows_hold(inst, 1, {(0, 0): Fraction(1)})


def test_interval_lp_shape():
    inst = Instance([[1, 2]], [CappedInverse(2, 1), CappedInverse(3, 1)], weights=(1, 2))
    ilp = build_interval_lp(inst)
    assert ilp.L == horizon_length(2, Fraction(2) + Fraction(3, 2)) == 2
    assert all(k[2] in (1, 2) for k in ilp.problem.columns)
    assert ilp.problem.objective[(0, 1, 2)] == 2 * 2


def test_interval_lp_requires_unit_times():
    with pytest.raises(ModelError, match="rescale"):
        build_interval_lp(Instance([[4]], [CappedInverse(2, Fraction(1, 4))]))
