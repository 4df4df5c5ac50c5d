"""Two-phase dense tableau simplex over exact rationals, Bland's rule.

Internally everything is a ``gmpy2.mpq``; inputs and outputs are
``fractions.Fraction``.  Problems are small (tens of rows, a few hundred
columns), so a dense tableau with sparse row updates is plenty.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping

from gmpy2 import mpq

ZERO = mpq(0)


@dataclass(frozen=True)
class Row:
    coefs: Mapping[Hashable, Fraction]
    rhs: Fraction
    label: Hashable = None


@dataclass(frozen=True)
class LpProblem:
    """``eq_rows`` hold with equality, ``ub_rows`` as ``<=``; all columns >= 0.

    ``objective`` (minimised) is optional; without it any basic feasible
    solution is returned.  ``meta`` carries provenance for callers.
    """

    columns: tuple
    eq_rows: tuple
    ub_rows: tuple
    objective: Mapping[Hashable, Fraction] | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n_rows(self) -> int:
        return len(self.eq_rows) + len(self.ub_rows)


@dataclass(frozen=True)
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    values: dict  # column key -> Fraction
    slacks: tuple  # one per ub row
    objective: Fraction | None
    basis: tuple  # basic column keys; slacks appear as ("slack", k)
    phase_one: Fraction  # sum of artificials at the phase-one optimum
    pivots: int = 0

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"

    def support(self) -> dict:
        return {k: v for k, v in self.values.items() if v != 0}


def _q(x) -> mpq:
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


def _f(x: mpq) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


class _Tableau:
    def __init__(self, rows, rhs, basis, ncols):
        self.rows = rows  # list of lists of mpq, length ncols
        self.rhs = rhs
        self.basis = basis
        self.ncols = ncols
        self.pivots = 0

    def pivot(self, r: int, c: int, cost: list, obj: list):
        row = self.rows[r]
        piv = row[c]
        if piv != 1:
            inv = 1 / piv
            for k in range(self.ncols):
                if row[k]:
                    row[k] *= inv
            self.rhs[r] *= inv
        nz = [k for k in range(self.ncols) if row[k]]
        rr = self.rhs[r]
        for t, other in enumerate(self.rows):
            if t == r:
                continue
            fac = other[c]
            if fac:
                for k in nz:
                    other[k] -= fac * row[k]
                self.rhs[t] -= fac * rr
        fac = cost[c]
        if fac:
            for k in nz:
                cost[k] -= fac * row[k]
            obj[0] -= fac * rr
        self.basis[r] = c
        self.pivots += 1

    def run(self, cost: list, obj: list, allowed) -> str:
        """Minimise; ``cost`` holds reduced costs, ``obj[0]`` minus the value."""
        while True:
            enter = next((c for c in range(self.ncols) if allowed[c] and cost[c] < 0), None)
            if enter is None:
                return "optimal"
            best = None
            for r, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = self.rhs[r] / a
                    key = (ratio, self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                return "unbounded"
            self.pivot(best[1], enter, cost, obj)


def solve_lp(problem: LpProblem) -> LpResult:
    cols = list(problem.columns)
    index = {k: t for t, k in enumerate(cols)}
    n_struct = len(cols)
    n_ub = len(problem.ub_rows)
    rows_spec = [(r, False) for r in problem.eq_rows] + [(r, True) for r in problem.ub_rows]

    # decide which rows need an artificial
    n_art = 0
    prepared = []
    for k, (row, is_ub) in enumerate(rows_spec):
        rhs = _q(row.rhs)
        sign = -1 if rhs < 0 else 1
        needs_art = (not is_ub) or sign < 0
        prepared.append((row, is_ub, sign, needs_art))
        n_art += needs_art
    ncols = n_struct + n_ub + n_art

    rows, rhs, basis = [], [], []
    art = n_struct + n_ub
    ub_k = 0
    art_cols = []
    for row, is_ub, sign, needs_art in prepared:
        vec = [ZERO] * ncols
        for key, val in row.coefs.items():
            if val:
                vec[index[key]] = _q(val) * sign
        if is_ub:
            vec[n_struct + ub_k] = mpq(sign)
            slack_col = n_struct + ub_k
            ub_k += 1
        if needs_art:
            vec[art] = mpq(1)
            basis.append(art)
            art_cols.append(art)
            art += 1
        else:
            basis.append(slack_col)
        rows.append(vec)
        rhs.append(_q(row.rhs) * sign)

    tab = _Tableau(rows, rhs, basis, ncols)
    is_art = [False] * (n_struct + n_ub) + [True] * n_art

    # phase one: minimise the sum of artificials
    cost = [ZERO] * ncols
    obj = [ZERO]
    for r, b in enumerate(basis):
        if is_art[b]:
            for c in range(ncols):
                if not is_art[c] and rows[r][c]:
                    cost[c] -= rows[r][c]
            obj[0] -= rhs[r]
    allowed = [True] * ncols
    tab.run(cost, obj, allowed)
    phase_one = -obj[0]
    if phase_one > 0:
        return LpResult("infeasible", {}, (), None, (), _f(phase_one), tab.pivots)

    # drive zero-level artificials out of the basis; drop redundant rows
    r = 0
    while r < len(tab.rows):
        b = tab.basis[r]
        if is_art[b]:
            c = next((c for c in range(ncols) if not is_art[c] and tab.rows[r][c]), None)
            if c is None:
                del tab.rows[r], tab.rhs[r], tab.basis[r]
                continue
            tab.pivot(r, c, [ZERO] * ncols, [ZERO])
        r += 1
    allowed = [not a for a in is_art]

    status = "optimal"
    value = None
    if problem.objective is not None:
        c_full = [ZERO] * ncols
        for key, val in problem.objective.items():
            c_full[index[key]] = _q(val)
        cost = list(c_full)
        obj = [ZERO]
        for r, b in enumerate(tab.basis):
            cb = c_full[b]
            if cb:
                row = tab.rows[r]
                for c in range(ncols):
                    if row[c]:
                        cost[c] -= cb * row[c]
                obj[0] -= cb * tab.rhs[r]
        status = tab.run(cost, obj, allowed)
        value = _f(-obj[0])

    full = [ZERO] * ncols
    for r, b in enumerate(tab.basis):
        full[b] = tab.rhs[r]
    values = {k: _f(full[t]) for t, k in enumerate(cols)}
    slacks = tuple(_f(full[n_struct + k]) for k in range(n_ub))

    def label(c):
        if c < n_struct:
            return cols[c]
        return ("slack", c - n_struct)

    return LpResult(status, values, slacks, value, tuple(label(b) for b in tab.basis),
                    _f(phase_one), tab.pivots)


# ---------------------------------------------------------------------------
# checks and support reduction


def _system(problem: LpProblem):
    """Rows of ``[A | I_ub]`` and the rhs, as mpq."""
    cols = list(problem.columns)
    index = {k: t for t, k in enumerate(cols)}
    n_struct, n_ub = len(cols), len(problem.ub_rows)
    mat, rhs = [], []
    for k, row in enumerate(list(problem.eq_rows) + list(problem.ub_rows)):
        vec = [ZERO] * (n_struct + n_ub)
        for key, val in row.coefs.items():
            vec[index[key]] = _q(val)
        if k >= len(problem.eq_rows):
            vec[n_struct + k - len(problem.eq_rows)] = mpq(1)
        mat.append(vec)
        rhs.append(_q(row.rhs))
    return mat, rhs


def check_feasible(problem: LpProblem, values: Mapping) -> list[str]:
    """Exact row-by-row check; returns human-readable failures."""
    bad = []
    for key in problem.columns:
        if values.get(key, 0) < 0:
            bad.append(f"negative {key!r}")
    for row in problem.eq_rows:
        lhs = sum((c * values.get(k, 0) for k, c in row.coefs.items()), Fraction(0))
        if lhs != row.rhs:
            bad.append(f"row {row.label!r}: {lhs} != {row.rhs}")
    for row in problem.ub_rows:
        lhs = sum((c * values.get(k, 0) for k, c in row.coefs.items()), Fraction(0))
        if lhs > row.rhs:
            bad.append(f"row {row.label!r}: {lhs} > {row.rhs}")
    return bad


def _null_vector(mat, cols):
    """A nonzero d with ``sum_c mat[:, c] d_c = 0`` over ``cols``, or None."""
    m = [[row[c] for c in cols] for row in mat]
    ncol = len(cols)
    pivots = []
    r = 0
    for c in range(ncol):
        p = next((t for t in range(r, len(m)) if m[t][c]), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for t in range(len(m)):
            if t != r and m[t][c]:
                fac = m[t][c]
                m[t] = [a - fac * b for a, b in zip(m[t], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    free = next((c for c in range(ncol) if c not in pivots), None)
    if free is None:
        return None
    d = [ZERO] * ncol
    d[free] = mpq(1)
    for t, c in enumerate(pivots):
        d[c] = -m[t][free]
    return d


def purify(problem: LpProblem, values: Mapping) -> dict:
    """Move a feasible point to a basic feasible solution without growing its support.

    Repeatedly finds a dependency among the support columns of ``[A | I]``
    and walks along it until some coordinate reaches zero.  Row activities on
    equality rows never change; slack values may.
    """
    cols = list(problem.columns)
    n_struct = len(cols)
    mat, rhs = _system(problem)
    x = [_q(values.get(k, 0)) for k in cols]
    for k, row in enumerate(problem.ub_rows):
        r = len(problem.eq_rows) + k
        act = sum((mat[r][t] * x[t] for t in range(n_struct)), ZERO)
        x.append(rhs[r] - act)
    if any(v < 0 for v in x):
        raise ValueError("purify needs a feasible point")
    while True:
        supp = [t for t, v in enumerate(x) if v]
        d = _null_vector(mat, supp)
        if d is None:
            break
        if not any(v < 0 for v in d):
            d = [-v for v in d]
        step = min(x[c] / -dv for c, dv in zip(supp, d) if dv < 0)
        for c, dv in zip(supp, d):
            if dv:
                x[c] += step * dv
    return {k: _f(x[t]) for t, k in enumerate(cols)}


def is_basic(problem: LpProblem, values: Mapping) -> bool:
    """True when the support columns (slacks included) are linearly independent."""
    cols = list(problem.columns)
    mat, rhs = _system(problem)
    x = [_q(values.get(k, 0)) for k in cols]
    n_struct = len(cols)
    for k in range(len(problem.ub_rows)):
        r = len(problem.eq_rows) + k
        x.append(rhs[r] - sum((mat[r][t] * x[t] for t in range(n_struct)), ZERO))
    supp = [t for t, v in enumerate(x) if v]
    return _null_vector(mat, supp) is None


def to_cplex_lp(problem: LpProblem) -> str:
    """Render in CPLEX LP text format (decimal coefficients) for external cross-checks."""
    names = {k: f"x{t}" for t, k in enumerate(problem.columns)}

    def expr(coefs):
        parts = [f"{'+' if c >= 0 else '-'} {abs(float(c))!r} {names[k]}" for k, c in coefs.items() if c]
        return " ".join(parts) if parts else "0 x0"

    out = ["\\ columns: " + ", ".join(f"{names[k]}={k!r}" for k in problem.columns)]
    out.append("Minimize")
    out.append(" obj: " + (expr(problem.objective) if problem.objective else "0 x0"))
    out.append("Subject To")
    for t, row in enumerate(problem.eq_rows):
        out.append(f" e{t}: {expr(row.coefs)} = {float(row.rhs)!r}")
    for t, row in enumerate(problem.ub_rows):
        out.append(f" u{t}: {expr(row.coefs)} <= {float(row.rhs)!r}")
    out.append("End")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# walking the vertex graph


def _tableau_for_basis(mat, rhs, basis_cols):
    """Gauss-Jordan on the basis columns; drops rows that become all-zero."""
    rows = [list(r) for r in mat]
    b = list(rhs)
    basis = []
    r = 0
    for c in basis_cols:
        p = next((t for t in range(r, len(rows)) if rows[t][c]), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        b[r], b[p] = b[p], b[r]
        inv = 1 / rows[r][c]
        rows[r] = [v * inv for v in rows[r]]
        b[r] *= inv
        for t in range(len(rows)):
            if t != r and rows[t][c]:
                fac = rows[t][c]
                rows[t] = [u - fac * v for u, v in zip(rows[t], rows[r])]
                b[t] -= fac * b[r]
        basis.append(c)
        r += 1
    del rows[r:], b[r:]
    return rows, b, basis


def vertex_search(problem: LpProblem, start: LpResult, score, budget: int = 4000):
    """Best-first walk over feasible bases joined by single pivots.

    ``score(values)`` returns a tuple; the walk stops at the first vertex
    whose first component is 0 and otherwise returns the best vertex seen
    once ``budget`` bases have been expanded.  Returns ``(values, score)``.
    """
    cols = list(problem.columns)
    n_struct = len(cols)
    index = {k: t for t, k in enumerate(cols)}
    mat, rhs = _system(problem)
    ncols = len(mat[0]) if mat else 0
    start_cols = [index[lab] if lab in index else n_struct + lab[1] for lab in start.basis]
    rows, b, basis = _tableau_for_basis(mat, rhs, start_cols)
    if any(v < 0 for v in b):
        raise ValueError("start basis is not feasible")

    def values_of(basis, b):
        full = [ZERO] * ncols
        for r, c in enumerate(basis):
            full[c] = b[r]
        return {k: _f(full[t]) for t, k in enumerate(cols)}

    vals = values_of(basis, b)
    sc = score(vals)
    best = (sc, vals)
    heap = [(sc, 0, rows, b, basis)]
    seen = {frozenset(basis)}
    tick = 0
    expanded = 0
    while heap and expanded < budget:
        sc, _, rows, b, basis = heapq.heappop(heap)
        if sc[0] == 0:
            return values_of(basis, b), sc
        expanded += 1
        in_basis = set(basis)
        for c in range(ncols):
            if c in in_basis:
                continue
            ratios = [(b[r] / rows[r][c], r) for r in range(len(rows)) if rows[r][c] > 0]
            if not ratios:
                continue
            low = min(q for q, _ in ratios)
            for q, r in ratios:
                if q != low:
                    continue
                nb = list(basis)
                nb[r] = c
                key = frozenset(nb)
                if key in seen:
                    continue
                seen.add(key)
                nrows = [list(x) for x in rows]
                nrhs = list(b)
                inv = 1 / nrows[r][c]
                nrows[r] = [v * inv for v in nrows[r]]
                nrhs[r] *= inv
                for t in range(len(nrows)):
                    if t != r and nrows[t][c]:
                        fac = nrows[t][c]
                        nrows[t] = [u - fac * v for u, v in zip(nrows[t], nrows[r])]
                        nrhs[t] -= fac * nrhs[r]
                v = values_of(nb, nrhs)
                s2 = score(v)
                if s2 < best[0]:
                    best = (s2, v)
                tick += 1
                heapq.heappush(heap, (s2, tick, nrows, nrhs, nb))
    return best[1], best[0]
