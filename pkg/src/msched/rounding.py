"""Rounding an extreme point of the assignment LP into a schedule.

Every scheme splits the jobs in two.  Jobs in ``j1`` run alone on their
parent machine; jobs in ``j2`` run in unison on a subset of their children.
Each machine is the child of at most one job, so the ``j2`` jobs can all
start at time 0, and the ``j1`` jobs are appended machine by machine.
"""
from __future__ import annotations

import dataclasses
import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import networkx as nx
from scipy.optimize import minimize_scalar

from .lp import FractionalAssignment
from .model import INF, Instance, Schedule, as_fraction, fmt, parse_p
from .simplex import check_feasible, purify, solve_lp, vertex_search

SCHEMES = ("simple", "filtered", "beta", "restricted", "uniform", "pnorm")


class RoundingError(AssertionError):
    """An internal contract of the rounding pipeline was violated."""


# ---------------------------------------------------------------------------
# orientation


def _key(node):
    kind, idx = node
    return (0 if kind == "m" else 1, idx)


@dataclass(frozen=True)
class OrientedPseudoforest:
    """Support graph of ``x`` with every node of in-degree at most one.

    ``parent[j]`` is the machine pointing at job j (or ``None``),
    ``children[j]`` the machines j points at, and ``incoming[i]`` the job
    pointing at machine i, if any.
    """

    parent: dict
    children: dict
    incoming: dict
    edges: tuple

    def in_degrees(self) -> dict:
        deg: dict = {}
        for _, v in self.edges:
            deg[v] = deg.get(v, 0) + 1
        return deg


def _cycle_walk(sub: nx.Graph, core: set) -> list:
    start = min((v for v in core if v[0] == "m"), key=_key)
    order, prev, cur = [start], None, start
    while True:
        nxt = min((v for v in sub.neighbors(cur) if v in core and v != prev), key=_key)
        if nxt == start:
            return order
        order.append(nxt)
        prev, cur = cur, nxt


def orient(fa: FractionalAssignment) -> OrientedPseudoforest:
    """Orient each component: trees away from their lowest-index machine,
    unicyclic components around the cycle and then away from it."""
    g = fa.graph()
    edges = []
    for comp in sorted(nx.connected_components(g), key=lambda c: min(map(_key, c))):
        sub = g.subgraph(comp)
        n_e, n_v = sub.number_of_edges(), sub.number_of_nodes()
        if n_e == 0:
            continue
        if n_e == n_v - 1:
            roots = [min((v for v in comp if v[0] == "m"), key=_key)]
        elif n_e == n_v:
            core = set(nx.k_core(sub, 2).nodes)
            roots = _cycle_walk(sub, core)
            edges.extend(zip(roots, roots[1:] + roots[:1]))
        else:
            raise RoundingError(
                f"support component has {n_e - n_v + 1} independent cycles; "
                "the LP solution is not an extreme point"
            )
        seen = set(roots)
        queue = deque(roots)
        while queue:
            u = queue.popleft()
            for v in sorted(sub.neighbors(u), key=_key):
                if v not in seen:
                    seen.add(v)
                    edges.append((u, v))
                    queue.append(v)
    parent = {j: None for j in range(fa.n)}
    children = {j: [] for j in range(fa.n)}
    incoming = {}
    for u, v in edges:
        if u[0] == "m":
            parent[v[1]] = u[1]
        else:
            children[u[1]].append(v[1])
            incoming[v[1]] = u[1]
    forest = OrientedPseudoforest(parent, {j: tuple(sorted(c)) for j, c in children.items()},
                                  incoming, tuple(edges))
    if any(d > 1 for d in forest.in_degrees().values()):
        raise RoundingError("orientation produced a node with in-degree above one")
    return forest


# ---------------------------------------------------------------------------
# rounded assignments and assembly


@dataclass(frozen=True)
class RoundedAssignment:
    scheme: str
    C: Fraction
    beta: Fraction
    j1: dict  # job -> machine
    j2: dict  # job -> tuple of machines
    loads: dict  # machine -> fractional load of j1 jobs in the LP solution
    theta: dict = field(default_factory=dict)
    rule: dict = field(default_factory=dict)

    def machines_of(self, j: int) -> tuple:
        return (self.j1[j],) if j in self.j1 else self.j2[j]

    def to_dict(self) -> dict:
        jobs = {}
        for j in sorted(set(self.j1) | set(self.j2)):
            rec = {"machines": list(self.machines_of(j)), "group": 1 if j in self.j1 else 2}
            if j in self.theta:
                rec["theta"] = fmt(self.theta[j])
            if j in self.rule:
                rec["rule"] = self.rule[j]
            jobs[str(j)] = rec
        return {"scheme": self.scheme, "C": fmt(self.C), "beta": fmt(self.beta), "jobs": jobs}


def assemble_schedule(instance: Instance, rounded: RoundedAssignment) -> Schedule:
    """Group-2 jobs start at 0; each machine then runs its group-1 jobs by job index."""
    owner: dict = {}
    free = {i: Fraction(0) for i in range(instance.m)}
    plan = {}
    for j in sorted(rounded.j2):
        S = tuple(sorted(rounded.j2[j]))
        if not S:
            raise RoundingError(f"job {j} was rounded to an empty machine set")
        for i in S:
            if i in owner:
                raise RoundingError(f"machine {i} chosen by jobs {owner[i]} and {j}")
            owner[i] = j
        t = instance.proc_time(j, S)
        plan[j] = (S, Fraction(0))
        for i in S:
            free[i] = t
    for j in sorted(rounded.j1):
        i = rounded.j1[j]
        plan[j] = ((i,), free[i])
        free[i] += instance.proc_time(j, (i,))
    return Schedule.build(instance, plan)


def _parent_share(fa: FractionalAssignment, forest: OrientedPseudoforest, j: int) -> Fraction:
    p = forest.parent[j]
    return Fraction(0) if p is None else fa.x.get((p, j), Fraction(0))


def _split(fa, forest, in_group_one):
    j1, j2 = {}, {}
    for j in range(fa.n):
        if forest.parent[j] is not None and in_group_one(_parent_share(fa, forest, j)):
            j1[j] = forest.parent[j]
        else:
            j2[j] = forest.children[j]
            if not j2[j]:
                raise RoundingError(f"job {j} has neither parent share nor children")
    loads = {i: fa.load(i, set(j1)) for i in range(fa.m)}
    return j1, j2, loads


def _prepare(fa, forest):
    return orient(fa) if forest is None else forest


# ---------------------------------------------------------------------------
# schemes


def round_threshold(instance: Instance, fa: FractionalAssignment, forest=None,
                    beta=Fraction(1, 2), scheme="simple") -> RoundedAssignment:
    """Parent if ``x[p(j), j] >= beta``, else all children."""
    forest = _prepare(fa, forest)
    beta = as_fraction(beta)
    j1, j2, loads = _split(fa, forest, lambda share: share >= beta)
    rule = {j: "parent" if j in j1 else "children" for j in range(fa.n)}
    return RoundedAssignment(scheme, fa.C, beta, j1, j2, loads, rule=rule)


def round_simple(instance, fa, forest=None) -> RoundedAssignment:
    return round_threshold(instance, fa, forest, Fraction(1, 2), "simple")


def round_filtered(instance: Instance, fa: FractionalAssignment, forest=None,
                   beta=Fraction(1, 2), scheme="filtered") -> RoundedAssignment:
    """Threshold split, then drop heavily loaded children.

    For a group-2 job, ``S(theta)`` keeps the children whose spare LP
    capacity ``1 - load/C`` is at least ``theta``; theta minimises
    ``(1 - theta) C / beta + f(S(theta))`` over the spare capacities and 1.
    """
    forest = _prepare(fa, forest)
    beta = as_fraction(beta)
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    C = fa.C
    j1, j2, loads = _split(fa, forest, lambda share: share >= beta)
    theta, rule = {}, {j: "parent" for j in j1}
    for j, T in list(j2.items()):
        spare = {i: 1 - loads[i] / C for i in T}
        best = None
        for th in sorted(set(spare.values()) | {Fraction(1)}):
            S = tuple(i for i in T if spare[i] >= th)
            if not S:
                continue
            val = (1 - th) * C / beta + instance.proc_time(j, S)
            if best is None or val < best[0]:
                best = (val, th, S)
        if best is None:
            raise RoundingError(f"job {j}: every filtered set is empty")
        _, theta[j], j2[j] = best
        rule[j] = "filtered"
    return RoundedAssignment(scheme, C, beta, j1, j2, loads, theta, rule)


def round_beta(instance, fa, forest=None) -> RoundedAssignment:
    return round_filtered(instance, fa, forest, tuned_beta()[0], "beta")


def round_restricted(instance: Instance, fa: FractionalAssignment, forest=None) -> RoundedAssignment:
    """Restricted assignment: group 1 only for integrally assigned jobs;
    two-child jobs pick the cheapest of the three subsets given realized loads."""
    if instance.variant != "restricted":
        raise ValueError("round_restricted needs a restricted-assignment instance")
    forest = _prepare(fa, forest)
    j1, j2, loads = _split(fa, forest, lambda share: share == 1)
    realized = {i: Fraction(0) for i in range(instance.m)}
    for j, i in j1.items():
        realized[i] += instance.proc_time(j, (i,))
    rule = {j: "parent" for j in j1}
    for j, T in list(j2.items()):
        if len(T) != 2:
            rule[j] = "children"
            continue
        a, b = T
        options = [(a,), (a, b), (b,)]  # lexicographic order for ties
        j2[j] = min(options, key=lambda S: instance.proc_time(j, S) + max(realized[i] for i in S))
        rule[j] = "pair-best"
    return RoundedAssignment("restricted", fa.C, Fraction(1), j1, j2, loads, rule=rule)


def round_pnorm(instance: Instance, fa: FractionalAssignment, forest=None, p=None) -> RoundedAssignment:
    p = instance.p if p is None else parse_p(p)
    beta = pnorm_beta(p)
    forest = _prepare(fa, forest)
    j1, j2, loads = _split(fa, forest, lambda share: share >= beta)
    rule = {j: "parent" if j in j1 else "children" for j in range(fa.n)}
    return RoundedAssignment("pnorm", fa.C, beta, j1, j2, loads, rule=rule)


# ---------------------------------------------------------------------------
# uniform machines


def _support_by_machine(x):
    on = {}
    for (i, j) in x:
        on.setdefault(i, set()).add(j)
    return on


def _slow_profile(instance, fa, x):
    """Per job: slow support sorted slowest first, and which of those are shared."""
    s = instance.machine_speeds
    on = _support_by_machine(x)
    prof = {}
    for j in range(fa.n):
        slow = sorted((i for (i, jj) in x if jj == j and fa.classes[i, j] == "-"),
                      key=lambda i: (s[i], i))
        prof[j] = (slow, [i for i in slow if len(on[i]) > 1])
    return prof, on


def _violating(instance, slow, shared) -> bool:
    s = instance.machine_speeds
    return bool(shared) and (len(shared) >= 2 or s[slow[0]] < s[shared[0]])


def uniform_violations(instance: Instance, fa: FractionalAssignment) -> list:
    """Jobs breaking the canonical shape.

    A job is canonical when at most one of its slow machines also carries
    other jobs, and that machine is among its slowest.
    """
    prof, _ = _slow_profile(instance, fa, fa.x)
    return [j for j, (slow, shared) in prof.items() if _violating(instance, slow, shared)]


def shared_slow_count(instance: Instance, fa: FractionalAssignment, x=None) -> int:
    prof, _ = _slow_profile(instance, fa, fa.x if x is None else x)
    return sum(len(shared) for _, shared in prof.values())


def is_uniform_canonical(instance, fa) -> bool:
    return not uniform_violations(instance, fa)


def _exchange(fa, x, j, i1, i2, j2):
    """Move j's mass from i1 to i2 and load-equivalent j2 mass from i2 to i1."""
    a = fa.coef
    if (i1, j2) not in a:
        return None
    eps = min(x[i1, j], x[i2, j2] * a[i2, j2] / a[i2, j])
    eps2 = eps * a[i2, j] / a[i2, j2]
    y = dict(x)
    y[i1, j] -= eps
    y[i2, j] = y.get((i2, j), Fraction(0)) + eps
    y[i2, j2] -= eps2
    y[i1, j2] = y.get((i1, j2), Fraction(0)) + eps2
    y = purify(fa.problem, y)
    if check_feasible(fa.problem, y):
        return None
    return {k: v for k, v in y.items() if v}


def canonicalize_uniform(instance: Instance, fa: FractionalAssignment,
                         max_states: int = 2000) -> FractionalAssignment:
    """Return a vertex of the same LP in canonical uniform shape.

    First the exchange step: job j moves mass from a slow machine i1 to a
    machine i2 at least as fast, while a job j2 sharing i2 moves
    load-equivalent mass from i2 back to i1.  Machine i2's load stays fixed,
    i1's never grows, and the point is purified back to a vertex.  Exchanges
    are explored best-first by (violating jobs, shared slow pairs) and never
    raise the shared count.

    Exchanges keep every job's total slow mass, which can rule out all
    canonical vertices reachable that way.  In that case the search
    continues over the LP's vertex graph, pivot by pivot, from the simplex
    vertex.
    """
    if instance.variant != "uniform":
        raise ValueError("canonicalize_uniform needs a uniform-machines instance")
    if fa.problem is None:
        raise ValueError("fractional assignment carries no LP to re-check against")
    speeds = instance.machine_speeds

    def score(x):
        x = {k: v for k, v in x.items() if v}
        prof, _ = _slow_profile(instance, fa, x)
        bad = sum(_violating(instance, *v) for v in prof.values())
        return bad, sum(len(v[1]) for v in prof.values())

    start = dict(fa.x)
    heap = [(score(start), 0, start)]
    seen = {frozenset(start.items())}
    tick = 0
    while heap and len(seen) <= max_states:
        (bad, count), _, x = heapq.heappop(heap)
        if bad == 0:
            return dataclasses.replace(fa, x=x, basis=() if x != fa.x else fa.basis)
        prof, on = _slow_profile(instance, fa, x)
        for j, (slow, shared) in prof.items():
            if not _violating(instance, slow, shared):
                continue
            for i2 in shared:
                for i1 in slow:
                    if i1 == i2 or speeds[i1] > speeds[i2]:
                        continue
                    for j2 in sorted(on[i2] - {j}):
                        y = _exchange(fa, x, j, i1, i2, j2)
                        if y is None:
                            continue
                        key = frozenset(y.items())
                        if key in seen:
                            continue
                        seen.add(key)
                        sc = score(y)
                        if sc[1] > count:
                            continue
                        tick += 1
                        heapq.heappush(heap, (sc, tick, y))

    res = solve_lp(fa.problem)
    values, sc = vertex_search(fa.problem, res, score, budget=max_states)
    if sc[0] != 0:
        raise RoundingError(f"no canonical vertex found ({sc[0]} jobs still violate)")
    x = {k: v for k, v in values.items() if v}
    bad = check_feasible(fa.problem, x)
    if bad:
        raise RoundingError(f"vertex walk left the feasible region: {bad}")
    return dataclasses.replace(fa, x=x, basis=())


def round_uniform(instance: Instance, fa: FractionalAssignment, forest=None,
                  canonical: bool = False) -> RoundedAssignment:
    if not canonical:
        fa = canonicalize_uniform(instance, fa)
        forest = None
    forest = _prepare(fa, forest)
    s = instance.machine_speeds
    C = fa.C
    on = _support_by_machine(fa.x)
    j1, j2, loads = _split(fa, forest, lambda share: share >= Fraction(1, 2))
    rule = {j: "parent" for j in j1}
    for j, T in list(j2.items()):
        fast = [i for i in T if fa.classes[i, j] == "+"]
        if fast:
            j2[j] = (max(fast, key=lambda i: (s[i], -i)),)
            rule[j] = "fast"
            continue
        excl = [i for i in T if on[i] == {j}]
        shared = [i for i in T if on[i] != {j}]
        if len(shared) > 1:
            raise RoundingError(f"job {j} shares {len(shared)} slow children")
        g = fa.gamma[j]
        need = g * instance.functions[j](g) / (3 * C)
        if excl and sum((s[i] for i in excl), Fraction(0)) >= need:
            j2[j] = tuple(excl)
            rule[j] = "exclusive"
        else:
            j2[j] = tuple(sorted(excl + shared))
            rule[j] = "exclusive+shared"
    return RoundedAssignment("uniform", C, Fraction(1, 2), j1, j2, loads, rule=rule)


# ---------------------------------------------------------------------------
# guarantees


def _golden(fn, lo, mid, hi):
    try:
        res = minimize_scalar(fn, bracket=(lo, mid, hi), method="golden", tol=1e-9)
    except ValueError:
        res = minimize_scalar(fn, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return float(res.x)


def pnorm_factor(p, beta) -> float:
    p = parse_p(p)
    beta = float(beta)
    if p == INF:
        return 1 / beta + 1.0
    return 1 / beta + (1 - beta) ** (-1 / float(p))


@lru_cache(maxsize=None)
def pnorm_beta(p) -> Fraction:
    """Threshold minimising ``1/beta + (1 - beta)**(-1/p)``."""
    p = parse_p(p)
    if p == 1:
        return Fraction(1, 2)
    if p == INF:
        return Fraction(1)
    pf = float(p)
    start = 1 - math.log(pf) / pf if pf >= 2 else 0.5
    x = _golden(lambda b: pnorm_factor(p, b), 1e-9, start, 1 - 1e-9)
    return Fraction(x).limit_denominator(10**12)


def pnorm_asymptotic(p) -> float:
    pf = float(p)
    return pf / (pf - math.log(pf)) + (pf / math.log(pf)) ** (1 / pf)


def _tuned_alpha(beta: float) -> float:
    e = math.exp(1 / beta - 1)
    return e / (beta * (e - 1))


@lru_cache(maxsize=None)
def tuned_beta() -> tuple:
    """``(beta, factor)`` for the filtered scheme with optimised threshold."""
    x = _golden(_tuned_alpha, 0.2, 0.5, 0.8)
    beta = Fraction(x).limit_denominator(10**12)
    return beta, _tuned_alpha(float(beta))


def guarantee(scheme: str, p=1) -> float:
    """Proven makespan factor relative to the LP target C."""
    if scheme == "simple":
        return 4.0
    if scheme == "filtered":
        return 2 * math.e / (math.e - 1)
    if scheme == "beta":
        return tuned_beta()[1]
    if scheme == "restricted":
        return 7 / 3
    if scheme == "uniform":
        return 3.0
    if scheme == "pnorm":
        return pnorm_factor(p, pnorm_beta(parse_p(p)))
    raise ValueError(f"unknown scheme {scheme!r}")


def round_solution(instance: Instance, fa: FractionalAssignment, scheme: str) -> RoundedAssignment:
    if scheme == "simple":
        return round_simple(instance, fa)
    if scheme == "filtered":
        return round_filtered(instance, fa)
    if scheme == "beta":
        return round_beta(instance, fa)
    if scheme == "restricted":
        return round_restricted(instance, fa)
    if scheme == "uniform":
        return round_uniform(instance, fa)
    if scheme == "pnorm":
        return round_pnorm(instance, fa)
    raise ValueError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")


def parent_loads_bounded(instance: Instance, rounded: RoundedAssignment) -> bool:
    """Group-1 work on each machine is at most ``load / beta``."""
    beta = rounded.beta
    for i in range(instance.m):
        work = sum((instance.proc_time(j, (i,)) for j, p in rounded.j1.items() if p == i), Fraction(0))
        if work * beta > rounded.loads[i]:
            return False
    return True
