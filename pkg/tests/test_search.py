from fractions import Fraction

import pytest

from conftest import small_instances
from msched.instances import gen_gap_restricted, gen_gap_uniform
from msched.lp import lp_feasible
from msched.search import (
    SearchConfig, bisect_threshold, exact_threshold, farey_candidates, iteration_cap,
    makespan_bounds, minimize_makespan,
)


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(eps=0)
    with pytest.raises(ValueError):
        SearchConfig(scheme="greedy")
    with pytest.raises(ValueError):
        SearchConfig(candidates=(2, 1))


@pytest.mark.parametrize("inst", small_instances(20, seed0=300))
def test_bisection_brackets_the_threshold(inst):
    eps = Fraction(1, 10**4)
    lo, hi, fa = bisect_threshold(inst, eps)
    lb, _ = makespan_bounds(inst)
    assert fa is not None and fa.C == hi
    assert hi <= (1 + eps) * lo
    if lo != hi:
        assert not lp_feasible(inst, lo)
    assert lo >= lb


def test_iteration_cap_is_logarithmic():
    assert iteration_cap(Fraction(1), Fraction(1), Fraction(1, 10)) == 2
    assert iteration_cap(Fraction(1), Fraction(2), Fraction(1, 1024)) == 12


def test_farey_grid():
    grid = farey_candidates(1, 2, 3)
    assert grid == [1, Fraction(4, 3), Fraction(3, 2), Fraction(5, 3), 2]


def test_exact_mode_finds_grid_threshold():
    inst = gen_gap_uniform(2)
    below, C, _ = exact_threshold(inst, farey_candidates(1, 3, 8))
    assert C == Fraction(5, 4) and below == Fraction(6, 5)
    res = minimize_makespan(inst, SearchConfig(scheme="uniform", candidates=farey_candidates(1, 3, 8)))
    assert res.C == Fraction(5, 4) and res.lower == Fraction(6, 5)


def test_exact_mode_without_feasible_candidate():
    with pytest.raises(ValueError):
        exact_threshold(gen_gap_restricted(2), [Fraction(1)])


def test_minimize_records_probes():
    res = minimize_makespan(gen_gap_restricted(3), SearchConfig(scheme="restricted"))
    assert res.probes[0] == (makespan_bounds(gen_gap_restricted(3))[0], False)
    assert abs(res.C - Fraction(6, 5)) <= Fraction(6, 5) * Fraction(1, 10**6)
    assert res.makespan == 2 and res.ratio <= 7 / 3
