from fractions import Fraction

import pytest

from conftest import random_instance
from msched.lp import assignment_rows_hold
from msched.model import CappedInverse, Instance, ModelError
from msched.rounding import guarantee
from msched.weighted import WeightedConfig, plan_buckets, solve_weighted


def unit_instances(count, seed0=0):
    out = []
    for s in range(seed0, seed0 + count):
        variant = ("unrelated", "restricted", "uniform")[s % 3]
        out.append(random_instance(s, 1 + s % 4, 1 + (s // 4) % 4, variant,
                                   ("capped_inverse", "amdahl")[s % 2], weighted=True, unit_floor=True))
    return out


def test_config_validation():
    with pytest.raises(ValueError):
        WeightedConfig(tau=1)
    assert WeightedConfig().stretch == 16


def test_single_unit_job():
    inst = Instance([[1]], [CappedInverse(1, 1)])
    res = solve_weighted(inst)
    assert res.value == 1
    assert res.value <= 16 * guarantee("filtered") * res.plan.lp_value


@pytest.mark.parametrize("inst", unit_instances(12, 40))
def test_bucket_plan_invariants(inst):
    plan, _ = plan_buckets(inst)
    jobs = sorted(j for js in plan.buckets.values() for j in js)
    assert jobs == list(range(inst.n))
    for ell, js in plan.buckets.items():
        for j in js:
            c = plan.frac_completion[j]
            assert plan.tau ** (ell - 1) <= plan.alpha * c < plan.tau ** ell
            tail = sum(v for (i, jj, l), v in plan.x.items() if jj == j and l > ell)
            assert tail <= 1 / plan.alpha
        sub = inst.subinstance(js)
        assert assignment_rows_hold(sub, plan.target(ell), plan.folded[ell],
                                    grain=inst.speed_grain) == []


@pytest.mark.parametrize("inst", unit_instances(12, 60))
def test_completion_bounds_and_bucket_order(inst):
    scheme = "uniform" if inst.variant == "uniform" else "filtered"
    res = solve_weighted(inst, config=WeightedConfig(scheme=scheme))
    for j in range(inst.n):
        assert float(res.schedule.completion(j)) <= res.job_bound(j) * (1 + 1e-12)
    spans = list(res.bucket_spans.values())
    for (_, end), (start, _) in zip(spans, spans[1:]):
        assert start >= end
    for ell, js in res.plan.buckets.items():
        start, _ = res.bucket_spans[ell]
        assert all(res.schedule.slots[j].start >= start for j in js)


def test_rejects_sub_unit_jobs_and_negative_weights():
    with pytest.raises(ModelError, match="rescale"):
        solve_weighted(Instance([[2]], [CappedInverse(1, Fraction(1, 4))]))
    with pytest.raises(ModelError):
        solve_weighted(Instance([[1]], [CappedInverse(1, 1)]), weights=[-1])
