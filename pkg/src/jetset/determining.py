"""Symmetry determining equations for scalar equations y2 = f(x, y).

The ansatz X = a(x,y) d_x + b(x,y) d_y is prolonged twice and applied to
y2 - f; restricting to y2 = f and collecting powers of y1 yields a linear
overdetermined system on the formal partials of a and b.  One further
prolongation and exact linear elimination over Q(jets of f) produces the
two compatibility constraints; both vanish identically under f_yy = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import PreconditionFailed
from .jetspace import JetContext, X, Y, derive, point_field, prolong, apply
from .ratcore import Poly, RatFun, VarId, formal, jet, var_name


def _fvar(name: str, i: int, j: int) -> Poly:
    return Poly.var(formal(name, i, j))


def dcoord(p: Poly, axis: str) -> Poly:
    """Coordinate derivative d/dx or d/dy of an expression in (x, y) and
    formal partials of functions of (x, y)."""
    one = RatFun.const(1)
    zero = RatFun(Poly())

    def img(v: VarId) -> RatFun:
        if v == X:
            return one if axis == "x" else zero
        if v == Y:
            return zero if axis == "x" else one
        raise PreconditionFailed(f"unexpected coordinate {var_name(v)}")

    return derive(p, img).as_poly()


@dataclass
class DeterminingSystem:
    """Coefficient system of the symmetry condition for y2 = f(x, y)."""

    unknowns: tuple[VarId, ...]
    equations: tuple[Poly, ...]          # coefficients of y1^0..y1^3, = 0
    solved: dict                         # leading 2nd partial -> Poly rhs


def determining_equations(order: int = 2) -> DeterminingSystem:
    """Expand X^(2)(y2 - f)|_{y2=f} and collect powers of y1."""
    if order != 2:
        raise PreconditionFailed("only the scalar 2nd-order case is implemented")
    ctx = JetContext(num_dependent=1, max_order=3)
    a = RatFun(_fvar("a", 0, 0))
    b = RatFun(_fvar("b", 0, 0))
    f = _fvar("f", 0, 0)
    Xf = point_field([a, b], num_dependent=1)
    X2 = prolong(Xf, 2, ctx)
    target = Poly.var(jet(0, 2)) - f
    expanded = apply(X2, target).as_poly()
    restricted = expanded.substitute({jet(0, 2): RatFun(f)}).as_poly()
    coeffs = restricted.coefficients_in(jet(0, 1))
    equations = tuple(coeffs.get(d, Poly()) for d in range(4))
    if any(coeffs.get(d) for d in range(4, max(coeffs, default=0) + 1)):
        raise PreconditionFailed("symmetry condition is not cubic in y1")
    leading = {0: formal("b", 2, 0), 1: formal("a", 2, 0),
               2: formal("b", 0, 2), 3: formal("a", 0, 2)}
    solved = {}
    for d, eq in enumerate(equations):
        lead = leading[d]
        parts = eq.coefficients_in(lead)
        if parts.get(1) is None or not parts[1].is_constant():
            raise PreconditionFailed("leading second partial is not isolated")
        c = parts[1].constant_value()
        solved[lead] = parts.get(0, Poly()).scale(Fraction(-1) / c)
    unknowns = tuple(sorted(
        v for eq in equations for v in eq.variables() if v[1] in ("a", "b")))
    return DeterminingSystem(unknowns, equations, solved)


def _ab_rows(eqs: list[Poly]) -> tuple[list[dict], list]:
    """Write equations as linear forms in the a/b formal partials."""
    rows = []
    cols = set()
    for eq in eqs:
        row: dict[VarId, Poly] = {}
        for m, c in eq.t.items():
            ab = [(v, e) for v, e in m if v[0] == 3 and v[1] in ("a", "b")]
            if len(ab) != 1 or ab[0][1] != 1:
                raise PreconditionFailed("system is not linear in a, b")
            rest = tuple(p for p in m if not (p[0][0] == 3 and p[0][1] in ("a", "b")))
            v = ab[0][0]
            row[v] = row.get(v, Poly()) + Poly({rest: c})
            cols.add(v)
        rows.append(row)
    return rows, sorted(cols)


def _rref(rows: list[list[RatFun]], ncols: int,
          pivot_cols: Optional[int] = None) -> list[list[RatFun]]:
    """Row reduction over the field of rational functions.

    When ``pivot_cols`` is given, pivoting stops after that many leading
    columns: rows are fully cleared there but later columns stay
    untouched, preserving polynomial structure of the residual rows.
    """
    m = [r[:] for r in rows]
    r = 0
    for c in range(ncols if pivot_cols is None else pivot_cols):
        pivot = None
        for i in range(r, len(m)):
            if not m[i][c].is_zero():
                # prefer constant pivots: cheaper arithmetic
                if m[i][c].num.is_constant() and m[i][c].den.is_constant():
                    pivot = i
                    break
                if pivot is None:
                    pivot = i
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        pv = m[r][c]
        m[r] = [e / pv for e in m[r]]
        for i in range(len(m)):
            if i != r and not m[i][c].is_zero():
                fctr = m[i][c]
                m[i] = [e - fctr * g for e, g in zip(m[i], m[r])]
        r += 1
        if r == len(m):
            break
    return m


def compatibility_constraints(sys: DeterminingSystem) -> list[Poly]:
    """Prolong the system once (all 2nd coordinate derivatives), eliminate
    every a/b-partial of order >= 2 except a_xy and b_xy, and return the
    surviving constraints as cleared linear forms."""
    prolonged: list[Poly] = []
    for eq in sys.equations:
        prolonged.append(eq)
        dx = dcoord(eq, "x")
        dy = dcoord(eq, "y")
        prolonged.extend([dx, dy, dcoord(dx, "x"), dcoord(dx, "y"),
                          dcoord(dy, "y")])
    rows_dict, cols = _ab_rows(prolonged)

    def is_parametric(v: VarId) -> bool:
        return v[2] + v[3] < 2 or (v[2], v[3]) == (1, 1)

    elim = [v for v in cols if not is_parametric(v)]
    keep = [v for v in cols if is_parametric(v)]
    order = elim + keep
    dense = [[RatFun(row.get(v, Poly())) for v in order] for row in rows_dict]
    reduced = _rref(dense, len(order), pivot_cols=len(elim))
    constraints = []
    for row in reduced:
        if any(not e.is_zero() for e in row[: len(elim)]):
            continue
        if all(e.is_zero() for e in row):
            continue
        constraints.append(_clear_row(row[len(elim):], keep))
    return constraints


def _clear_row(entries: list[RatFun], keep: list[VarId]) -> Poly:
    den = Poly.const(1)
    for e in entries:
        if not e.is_zero():
            den = den * e.den
    total = Poly()
    for e, v in zip(entries, keep):
        if not e.is_zero():
            total = total + e.num * den.exact_div(e.den) * Poly.var(v)
    _, lc = total.leading()
    return total.scale(1 / lc)


def constraints_span_match(got: list[Poly], expected: list[Poly]) -> bool:
    """The two constraint sets generate the same linear span over Q(f-jets)."""
    rows_dict, cols = _ab_rows(got + expected)
    dense = [[RatFun(row.get(v, Poly())) for v in cols] for row in rows_dict]

    def rank_of(rows) -> int:
        red = _rref([r[:] for r in rows], len(cols))
        return sum(1 for row in red if any(not e.is_zero() for e in row))

    n_got, n_exp = len(got), len(expected)
    r_got = rank_of(dense[:n_got])
    r_exp = rank_of(dense[n_got:])
    r_all = rank_of(dense)
    return r_got == r_exp == r_all


def substitute_f_partials(p: Poly, rules: dict) -> Poly:
    """Substitute formal partials of f, e.g. {('f',0,2): 0} for f_yy = 0.

    Keys give (name, i, j); every higher partial reachable by further
    differentiation is substituted consistently when the value is 0.
    """
    subs = {}
    for v in p.variables():
        if v[0] != 3:
            continue
        name, i, j = v[1], v[2], v[3]
        for (rn, ri, rj), val in rules.items():
            if name == rn and i >= ri and j >= rj and val == 0:
                subs[v] = RatFun(Poly())
    return p.substitute(subs).as_poly() if subs else p
