"""Orbit ranks at rational points, Lie determinants, stabilizers, metrics.

Rank computations evaluate the prolonged generator coefficients at exact
rational points and row-reduce over Q, so a reported rank is a certified
lower bound and, maximized over random samples, the generic orbit
dimension with Schwartz-Zippel confidence.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, floor
from typing import Optional, Sequence, Union

from .chains import ChainRing
from .errors import DomainError, EvaluationFailure, NotSquare, PreconditionFailed
from .invariants import Algebra, CheckResult
from .jetspace import JetContext, VectorField, _ratfun_partial, prolong
from .linalg import det_bareiss, rank
from .ratcore import Poly, Rat, RatFun, VarId


@dataclass
class OrbitReport:
    """Sampled rank data for one (algebra, order, locus) combination."""

    algebra: str
    order: int
    generic_rank: int
    sample_count: int
    locus: Optional[str] = None
    ranks: tuple = ()


def random_point(ctx: JetContext, k: int, rng: random.Random,
                 box: tuple[int, int] = (-9, 9)) -> dict:
    """Random integer point of J^k; extension generators get nonzero values."""
    point = {}
    for v in ctx.jet_coords(k):
        point[v] = Fraction(rng.randint(*box))
    for g in ctx.extensions:
        val = 0
        while val == 0:
            val = rng.randint(*box)
        point[g.var] = Fraction(val)
    return point


def coefficient_matrix(A: Algebra, k: int, point: dict) -> list[list[Fraction]]:
    coords = A.ctx.jet_coords(k)
    rows = []
    for Pk in A.prolonged(k):
        try:
            rows.append([Pk.images[v].evaluate(point) for v in coords])
        except ZeroDivisionError as exc:
            raise EvaluationFailure(str(exc)) from None
    return rows


def orbit_rank_at(A: Algebra, k: int, point: dict) -> int:
    """Exact rank of the prolonged-generator matrix at the point."""
    return rank(coefficient_matrix(A, k, point))


def generic_orbit_dim(A: Algebra, k: int, trials: int = 5,
                      rng: Optional[random.Random] = None) -> int:
    """Max rank over random integer points (probabilistically exact)."""
    if trials < 1:
        raise PreconditionFailed("trials must be >= 1")
    rng = rng or random.Random(0)
    best = 0
    bound = min(A.dim, len(A.ctx.jet_coords(k)))
    attempts = 0
    while attempts < trials * 4 and best < bound:
        attempts += 1
        try:
            best = max(best, orbit_rank_at(A, k, random_point(A.ctx, k, rng)))
        except EvaluationFailure:
            continue
        if attempts >= trials and best:
            break
    return best


def locus_rank_profile(A: Algebra, chain: ChainRing, k: int,
                       trials: int = 5,
                       rng: Optional[random.Random] = None,
                       locus_name: str = "") -> OrbitReport:
    """Max rank over sampled rational points of the chain's locus."""
    rng = rng or random.Random(0)
    ranks = []
    for _ in range(trials):
        pt = chain.sample(k, rng)
        try:
            ranks.append(orbit_rank_at(A, k, pt))
        except EvaluationFailure:
            continue
    if not ranks:
        raise EvaluationFailure("all locus samples hit singular coefficients")
    return OrbitReport(A.id, k, max(ranks), len(ranks), locus_name, tuple(ranks))


def lie_determinant(A: Algebra, s: int) -> Poly:
    """Determinant of the prolonged coefficient matrix on J^s."""
    coords = A.ctx.jet_coords(s)
    if len(coords) != A.dim:
        raise NotSquare(
            f"dim J^{s} = {len(coords)} but the algebra has {A.dim} generators")
    rows = []
    for Pk in A.prolonged(s):
        row = []
        for v in coords:
            c = Pk.images[v]
            if not c.is_poly():
                raise PreconditionFailed("non-polynomial prolonged coefficient")
            row.append(c.as_poly())
        rows.append(row)
    return det_bareiss(rows)


def stabilizer_field(A: Algebra, multipliers: Sequence[RatFun],
                     point: dict) -> VectorField:
    """Constant-coefficient combination sum_i c_i(point) * X_i."""
    cs = [m.evaluate(point) for m in multipliers]
    coords = A.generators[0].coords
    coeffs = []
    for j in range(len(coords)):
        total = RatFun(Poly())
        for c, g in zip(cs, A.generators):
            if c:
                total = total + RatFun.const(c) * g.coeffs[j]
        coeffs.append(total)
    return VectorField(A.generators[0].kind, coords, tuple(coeffs))


def stabilizer_check(A: Algebra, multipliers: Sequence[RatFun], k: int,
                     chain: Optional[ChainRing], trials: int = 5,
                     rng: Optional[random.Random] = None) -> CheckResult:
    """On locus points the combined field must vanish identically at the
    point after prolongation to order k; off locus (chain=None) it must not.
    """
    if k < 4:
        raise PreconditionFailed("stabilizer statement needs k >= 4")
    rng = rng or random.Random(0)
    ctx = A.ctx.extended(k + 1)
    for _ in range(trials):
        pt = chain.sample(k, rng) if chain is not None else \
            random_point(ctx, k, rng)
        U = stabilizer_field(A, multipliers, pt)
        if all(c.is_zero() for c in U.coeffs):
            return CheckResult(False, "stabilizer combination degenerated")
        Uk = prolong(U, k, ctx)
        try:
            vanishes = all(
                Uk.images[v].evaluate(pt) == 0 for v in ctx.jet_coords(k))
        except ZeroDivisionError:
            continue
        if chain is not None and not vanishes:
            return CheckResult(False, "U does not vanish at a locus point")
        if chain is None and vanishes:
            return CheckResult(False, "U vanishes at a generic point")
    return CheckResult(True)


@dataclass
class Metric:
    """Symmetric metric on the base (x, y, z) with rational-function entries."""

    components: dict  # (i, j) with i <= j -> RatFun

    def get(self, i: int, j: int) -> RatFun:
        key = (i, j) if i <= j else (j, i)
        return self.components.get(key, RatFun(Poly()))


def lie_derivative_metric(Xf: VectorField, g: Metric) -> dict:
    """(L_X g)_ij = X(g_ij) + g_kj d_i X^k + g_ik d_j X^k."""
    n = len(Xf.coords)
    out = {}
    for i in range(n):
        for j in range(i, n):
            val = Xf.directional(g.get(i, j))
            for kk in range(n):
                di = _ratfun_partial(Xf.coeffs[kk], Xf.coords[i])
                dj = _ratfun_partial(Xf.coeffs[kk], Xf.coords[j])
                val = val + g.get(kk, j) * di + g.get(i, kk) * dj
            out[(i, j)] = val
    return out


def killing_check(fields: Sequence[VectorField], g: Metric,
                  conformal: bool = False) -> CheckResult:
    """L_X g = 0 (Killing) or L_X g = phi * g (conformal), exactly."""
    n = len(fields[0].coords)
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    anchor = next(p for p in pairs if not g.get(*p).is_zero())
    for idx, Xf in enumerate(fields):
        lg = lie_derivative_metric(Xf, g)
        phi = RatFun(Poly())
        if conformal:
            phi = lg[anchor] / g.get(*anchor)
        for p in pairs:
            if lg[p] != phi * g.get(*p):
                return CheckResult(False, f"X{idx+1} component {p}")
    return CheckResult(True)


def dim_bound(m: int, k: int, l: int) -> int:
    """Closed-form symmetry dimension bound for pairs of ODEs of orders (k, l)."""
    if m != 2:
        raise DomainError("bound implemented for pairs of equations (m = 2)")
    if l < 2 or k < l:
        raise DomainError("requires k >= l >= 2")
    delta = 1 if k == l else 0
    if l == 2:
        return 9 + comb(k + 1, 2) + 3 * delta
    q = floor((k + l - 2) / (l - 1))
    inner = Fraction(k) - Fraction(l - 1, 2) * floor((k - 1) / (l - 1))
    total = Fraction(5 + l) + q * inner + delta
    if total.denominator != 1:
        raise DomainError("bound did not evaluate to an integer")
    return int(total)
