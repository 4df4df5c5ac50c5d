import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from msched.instances import RandomSpec, gen_random
from msched.model import Amdahl, CappedInverse, PowerLaw, Table

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def rationals(lo=1, hi=10, max_den=8):
    return st.builds(
        lambda d, t: Fraction(lo * d + t, d),
        st.integers(1, max_den), st.integers(0, (hi - lo) * 8),
    ).filter(lambda q: lo <= q <= hi)


@st.composite
def tables(draw):
    k = draw(st.integers(1, 4))
    speeds = sorted(set(draw(st.lists(rationals(1, 12), min_size=k, max_size=k))))
    pts, v = [], draw(rationals(1, 10))
    for idx, s in enumerate(speeds):
        if idx:
            # keep time non-increasing and work non-decreasing at breakpoints
            lo_v = pts[-1][0] * pts[-1][1] / s
            v = lo_v + draw(st.fractions(0, 1)) * (pts[-1][1] - lo_v)
        pts.append((s, v))
    return Table(tuple(pts))


exact_fns = st.one_of(
    st.builds(CappedInverse, rationals(1, 10), rationals(1, 4)),
    st.builds(Amdahl, rationals(1, 10), st.fractions(0, 1, max_denominator=8)),
    st.builds(PowerLaw, rationals(1, 10), st.just(Fraction(1))),
    tables(),
)


def random_instance(seed, machines, jobs, variant="unrelated", family="capped_inverse", **kw):
    return gen_random(RandomSpec(seed, machines, jobs, family, variant, **kw))


def small_instances(count, seed0=0, max_m=5, max_n=7, families=("capped_inverse", "amdahl"),
                    variants=("unrelated", "restricted", "uniform"), **kw):
    """Deterministic stream of small random instances."""
    out = []
    for s in range(seed0, seed0 + count):
        r = random.Random(f"suite:{s}")
        out.append(random_instance(s, r.randint(1, max_m), r.randint(1, max_n),
                                   r.choice(variants), r.choice(families), **kw))
    return out


@pytest.fixture
def tmp_json(tmp_path):
    return lambda name: tmp_path / name


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
