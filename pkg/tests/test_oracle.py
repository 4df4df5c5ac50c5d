import itertools
from fractions import Fraction

import pytest

from conftest import random_instance
from msched.instances import PHI, gen_gap_restricted, gen_gap_uniform, gen_gap_unrelated
from msched.model import CappedInverse, Instance, verify_schedule
from msched.oracle import (
    Bracket, BudgetExceeded, OracleBudget, brute_force_makespan, brute_force_weighted,
    candidate_sets, min_feasible_C,
)
from msched.search import farey_candidates


def test_budget_validation_and_refusal():
    with pytest.raises(ValueError):
        OracleBudget(max_jobs=0)
    with pytest.raises(BudgetExceeded):
        brute_force_makespan(gen_gap_uniform(2))
    with pytest.raises(BudgetExceeded):
        brute_force_makespan(gen_gap_restricted(3), OracleBudget(max_combinations=10))


def test_two_unit_jobs_two_machines():
    fn = CappedInverse(2, Fraction(1, 100))
    opt, sched = brute_force_makespan(Instance([[1, 1], [1, 1]], [fn, fn]))
    assert opt == 2 and verify_schedule(Instance([[1, 1], [1, 1]], [fn, fn]), sched) == []


@pytest.mark.parametrize("gen,k", [(gen_gap_restricted, 1), (gen_gap_restricted, 2),
                                   (gen_gap_restricted, 3), (gen_gap_uniform, 1)])
def test_gap_families_have_optimum_two(gen, k):
    assert brute_force_makespan(gen(k))[0] == 2


def test_unrelated_gap_optimum():
    opt, _ = brute_force_makespan(gen_gap_unrelated(1))
    assert abs(float(opt) - (1 + float(PHI))) < 1e-6


def test_dominated_sets_pruned():
    inst = Instance([[1], [1], [1]], [CappedInverse(2, 1)])
    sets = candidate_sets(inst, 0)
    assert (0, 1) in sets and (0, 1, 2) not in sets


def test_weighted_smith_order():
    fn = CappedInverse(1, 1)
    inst = Instance([[1, 1]], [fn, fn], weights=(2, 1))
    val, sched = brute_force_weighted(inst)
    assert val == 2 * 1 + 1 * 2 and sched.completion(0) == 1


def test_weighted_single_job_picks_fastest_set():
    inst = Instance([[1], [3]], [CappedInverse(6, 1)], weights=(3,))
    assert brute_force_weighted(inst)[0] == 3 * Fraction(6, 4)


@pytest.mark.parametrize("seed", range(6))
def test_permutation_invariance(seed):
    inst = random_instance(seed, 3, 3, weighted=True)
    mperm, jperm = [2, 0, 1], [1, 2, 0]
    speeds = [[inst.speeds[mperm[i]][jperm[j]] for j in range(3)] for i in range(3)]
    permuted = Instance(speeds, [inst.functions[j] for j in jperm],
                        [inst.weights[j] for j in jperm])
    assert brute_force_makespan(inst)[0] == brute_force_makespan(permuted)[0]
    assert brute_force_weighted(inst)[0] == brute_force_weighted(permuted)[0]


@pytest.mark.parametrize("seed", range(10))
def test_oracle_matches_naive_enumeration(seed):
    inst = random_instance(seed, 2, 2, family="amdahl")
    sets = [[S for r in (1, 2) for S in itertools.combinations(inst.machines_for(j), r)]
            for j in range(2)]
    best = None
    for order in itertools.permutations(range(2)):
        for pick in itertools.product(*sets):
            free = [Fraction(0)] * 2
            for j in order:
                S = pick[j]
                end = max(free[i] for i in S) + inst.proc_time(j, S)
                for i in S:
                    free[i] = end
            mk = max(free)
            best = mk if best is None else min(best, mk)
    assert brute_force_makespan(inst)[0] == best


def test_min_feasible_C_examples():
    grid = farey_candidates(1, 4, 24)
    assert min_feasible_C(gen_gap_restricted(2), grid) == Fraction(4, 3)
    assert min_feasible_C(gen_gap_uniform(2), grid) == Fraction(5, 4)
    br = min_feasible_C(gen_gap_unrelated(2))
    assert isinstance(br, Bracket) and br.hi <= Fraction(3, 2)
