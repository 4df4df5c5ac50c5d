import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import small_instances
from msched.instances import gen_gap_restricted, gen_gap_uniform, gen_gap_unrelated
from msched.lp import solve_assignment_lp
from msched.model import INF, verify_schedule
from msched.rounding import (
    SCHEMES, assemble_schedule, canonicalize_uniform, guarantee, is_uniform_canonical, orient,
    parent_loads_bounded, pnorm_asymptotic, pnorm_beta, pnorm_factor, round_filtered,
    round_restricted, round_simple, round_solution, round_uniform, shared_slow_count, tuned_beta,
    uniform_violations,
)
from msched.search import bisect_threshold


def feasible_point(inst):
    _, C, fa = bisect_threshold(inst, Fraction(1, 1000))
    return fa


def schemes_for(inst):
    out = ["simple", "filtered", "beta"]
    if inst.variant == "restricted":
        out.append("restricted")
    if inst.variant == "uniform":
        out.append("uniform")
    return out


@pytest.mark.parametrize("inst", small_instances(30, seed0=7000))
def test_orientation_has_in_degree_at_most_one(inst):
    fa = feasible_point(inst)
    forest = orient(fa)
    assert all(d <= 1 for d in forest.in_degrees().values())
    # every support edge is oriented exactly once
    assert len(forest.edges) == len(fa.x)
    for j in range(inst.n):
        got = set(forest.children[j]) | ({forest.parent[j]} if forest.parent[j] is not None else set())
        assert got == set(fa.machines_of(j))


@pytest.mark.parametrize("inst", small_instances(30, seed0=7100))
def test_every_scheme_is_valid_and_within_bound(inst):
    fa = feasible_point(inst)
    for scheme in schemes_for(inst):
        rounded = round_solution(inst, fa, scheme)
        sched = assemble_schedule(inst, rounded)
        assert verify_schedule(inst, sched) == []
        assert sched.makespan <= guarantee(scheme) * fa.C * (1 + 1e-12)


@pytest.mark.parametrize("inst", small_instances(20, seed0=7200))
def test_group_one_work_bounded_by_load_over_beta(inst):
    fa = feasible_point(inst)
    assert parent_loads_bounded(inst, round_simple(inst, fa))
    assert parent_loads_bounded(inst, round_filtered(inst, fa))


def test_group_two_sets_are_disjoint():
    inst = gen_gap_unrelated(3)
    fa = solve_assignment_lp(inst, Fraction(4, 3))
    r = round_simple(inst, fa)
    used = [i for S in r.j2.values() for i in S]
    assert len(used) == len(set(used))


@pytest.mark.parametrize("k", [2, 3, 5])
def test_restricted_gap_rounds_to_two(k):
    inst = gen_gap_restricted(k)
    fa = solve_assignment_lp(inst, Fraction(2 * k, 2 * k - 1))
    sched = assemble_schedule(inst, round_restricted(inst, fa))
    assert verify_schedule(inst, sched) == []
    assert sched.makespan == 2


@pytest.mark.parametrize("k", [2, 3])
def test_uniform_canonicalization(k):
    inst = gen_gap_uniform(k)
    fa = solve_assignment_lp(inst, Fraction(2 * k + 1, 2 * k))
    can = canonicalize_uniform(inst, fa)
    assert is_uniform_canonical(inst, can) and uniform_violations(inst, can) == []
    assert shared_slow_count(inst, can) <= inst.n
    sched = assemble_schedule(inst, round_uniform(inst, can, canonical=True))
    assert verify_schedule(inst, sched) == []
    assert sched.makespan <= 3 * can.C


def test_uniform_rejects_other_variants():
    inst = gen_gap_restricted(2)
    fa = solve_assignment_lp(inst, Fraction(4, 3))
    with pytest.raises(ValueError):
        canonicalize_uniform(inst, fa)


def test_guarantee_values():
    assert guarantee("simple") == 4
    assert guarantee("filtered") == pytest.approx(2 * math.e / (math.e - 1))
    beta, factor = tuned_beta()
    assert 0.46 < beta < 0.47 and factor < guarantee("filtered")
    assert guarantee("restricted") == pytest.approx(7 / 3)
    assert guarantee("uniform") == 3
    with pytest.raises(ValueError):
        guarantee("nope")


def test_pnorm_endpoints():
    assert pnorm_beta(1) == Fraction(1, 2)
    assert pnorm_factor(1, Fraction(1, 2)) == 4
    assert pnorm_beta(INF) == 1
    assert guarantee("pnorm", INF) == 2


@given(st.floats(1.5, 200))
def test_pnorm_beta_is_a_minimiser(p):
    b = float(pnorm_beta(Fraction(p)))
    best = pnorm_factor(Fraction(p), b)
    for d in (1e-4, 1e-3, 1e-2):
        for x in (b - d, b + d):
            if 0 < x < 1:
                assert best <= pnorm_factor(Fraction(p), x) + 1e-12
    if p >= 2:
        assert best <= pnorm_asymptotic(p) + 1e-9


def test_scheme_names_complete():
    assert set(SCHEMES) == {"simple", "filtered", "beta", "restricted", "uniform", "pnorm"}
