import json
from fractions import Fraction

import pytest

from msched.instances import (
    ExponentTooLarge, PHI, RandomSpec, dumps_instance, from_nonmalleable, gen_gap_restricted,
    gen_gap_uniform, gen_gap_unrelated, gen_random, gap_threshold, instance_from_dict,
    instance_to_dict, load_instance, load_schedule, rescale_to_unit, save_instance, save_schedule,
)
from msched.model import ModelError, Schedule


def test_gap_family_sizes():
    u = gen_gap_unrelated(1)
    assert (u.m, u.n) == (3, 3)
    r = gen_gap_restricted(1)
    assert (r.m, r.n) == (1, 1)
    g = gen_gap_uniform(1)
    assert (g.m, g.n) == (3, 3)
    assert gen_gap_uniform(2).machine_speeds == (1, 1, 1, 1, 2, 2)
    assert abs(float(PHI) - (1 + 5 ** 0.5) / 2) < 2e-10


def test_gap_thresholds():
    assert gap_threshold("restricted", 2) == Fraction(4, 3)
    assert gap_threshold("uniform", 2) == Fraction(5, 4)
    assert gap_threshold("unrelated", 2) == Fraction(3, 2)


def test_random_is_deterministic():
    spec = RandomSpec(42, 3, 4)
    assert dumps_instance(gen_random(spec)) == dumps_instance(gen_random(spec))
    assert gen_random(RandomSpec(1, 3, 3, variant="uniform")).machine_speeds is not None


def test_roundtrip(tmp_path):
    inst = gen_gap_restricted(3)
    save_instance(inst, tmp_path / "i.json")
    assert load_instance(tmp_path / "i.json") == inst
    w = gen_random(RandomSpec(5, 2, 3, "mixed", weighted=True, p=2))
    assert instance_from_dict(json.loads(dumps_instance(w))) == w


def test_schedule_roundtrip(tmp_path):
    inst = gen_gap_restricted(2)
    sched = Schedule.build(inst, {0: ((0,), 0), 1: ((1, 2), Fraction(1, 3))})
    save_schedule(sched, tmp_path / "s.json")
    assert load_schedule(tmp_path / "s.json", inst.n) == sched


def test_parse_errors_carry_location(tmp_path):
    bad = instance_to_dict(gen_gap_restricted(2))
    bad["speeds"][1][0] = "x/y"
    with pytest.raises(ModelError, match=r"speeds\[1\]\[0\]"):
        instance_from_dict(bad)
    (tmp_path / "broken.json").write_text('{"speeds": [[1]],\n "functions": }')
    with pytest.raises(ModelError, match="broken.json:2"):
        load_instance(tmp_path / "broken.json")


def test_nonmalleable_encoding():
    inst = from_nonmalleable([[1]])
    assert inst.proc_time(0, (0,)) == 1
    P = [[1, 2], [2, 1]]
    inst = from_nonmalleable(P)
    for i in range(2):
        for j in range(2):
            assert abs(float(inst.proc_time(j, (i,))) - P[i][j]) < 1e-9
    with pytest.raises(ExponentTooLarge):
        from_nonmalleable([[4] * 5] * 4)


def test_rescale_to_unit():
    inst = gen_random(RandomSpec(3, 2, 3))
    scaled = rescale_to_unit(inst)
    assert min(scaled.full_speed_time(j) for j in range(3)) >= 1
