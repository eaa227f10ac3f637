"""Triangular reduction chains and the reduced coordinate ring.

A chain represents an invariant locus {G = 0, D_x G = 0, ...} (one or more
seed equations).  Each seed is either solved for a leading variable or, when
it is quadratic in that variable, kept as a monic rewrite u^2 = alpha*u +
beta; total derivatives of the seeds are solved for successive derivatives
of the same variable, so the rule set is triangular.  Reduction substitutes
all solved variables and folds powers of the quadratic variable, landing in

    Q(free variables)           or       Q(free)[u] / (u^2 - alpha*u - beta).

Elements of the reduced ring are pairs a + b*u of rational functions; they
form a field (division by a nonzero element uses the conjugate), which is
what makes exact conditional-invariant checks possible without any
polynomial gcd.  Chains also know how to sample exact rational points of
their locus, used for the probabilistic cross-checks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .errors import (
    DenominatorVanishesOnLocus,
    PreconditionFailed,
    SamplerExhausted,
)
from .jetspace import JetContext, ProlongedField, apply, total_derivative
from .ratcore import Poly, Rat, RatFun, VarId, jet, var_name

ExprLike = Union[Poly, RatFun]


class Elem:
    """Element a + b*u of the reduced ring of a chain."""

    __slots__ = ("ring", "a", "b")

    def __init__(self, ring: "ChainRing", a: RatFun, b: Optional[RatFun] = None):
        self.ring = ring
        self.a = a
        self.b = b if b is not None else RatFun(Poly())

    def is_zero(self) -> bool:
        return self.a.is_zero() and self.b.is_zero()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Elem):
            other = self.ring.const(other)
        return self.a == other.a and self.b == other.b

    def __add__(self, other) -> "Elem":
        other = self._coerce(other)
        return Elem(self.ring, self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __neg__(self) -> "Elem":
        return Elem(self.ring, -self.a, -self.b)

    def __sub__(self, other) -> "Elem":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Elem":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Elem":
        other = self._coerce(other)
        a1, b1, a2, b2 = self.a, self.b, other.a, other.b
        cross = b1 * b2
        if cross.is_zero():
            return Elem(self.ring, a1 * a2, a1 * b2 + b1 * a2)
        alpha, beta = self.ring.alpha, self.ring.beta
        return Elem(self.ring,
                    a1 * a2 + cross * beta,
                    a1 * b2 + b1 * a2 + cross * alpha)

    __rmul__ = __mul__

    def inverse(self) -> "Elem":
        c, d = self.a, self.b
        if d.is_zero():
            if c.is_zero():
                raise ZeroDivisionError("inverse of zero in reduced ring")
            return Elem(self.ring, 1 / c)
        alpha, beta = self.ring.alpha, self.ring.beta
        e = c + d * alpha
        norm = c * e - d * d * beta
        if norm.is_zero():
            raise DenominatorVanishesOnLocus("zero divisor in quadratic extension")
        return Elem(self.ring, e / norm, -d / norm)

    def __truediv__(self, other) -> "Elem":
        other = self._coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("division by zero in reduced ring")
        return self * other.inverse()

    def __rtruediv__(self, other) -> "Elem":
        return self._coerce(other) / self

    def __pow__(self, n: int) -> "Elem":
        if n < 0:
            return self.inverse() ** (-n)
        result = self.ring.const(1)
        sq = self
        while n:
            if n & 1:
                result = result * sq
            n >>= 1
            if n:
                sq = sq * sq
        return result

    def _coerce(self, other) -> "Elem":
        if isinstance(other, Elem):
            return other
        return self.ring.const(other)

    def as_ratfun(self) -> RatFun:
        """Assembled representative a + b*u as a rational function."""
        if self.b.is_zero():
            return self.a
        return self.a + self.b * RatFun(Poly.var(self.ring.quad_var))

    def evaluate(self, point) -> Rat:
        val = self.a.evaluate(point)
        if not self.b.is_zero():
            val += self.b.evaluate(point) * Fraction(point[self.ring.quad_var])
        return val

    def __str__(self) -> str:
        return str(self.as_ratfun())

    def __repr__(self) -> str:
        return f"Elem({self})"


@dataclass
class SeedSpec:
    """One defining equation of a chain."""

    poly: Poly            # G, as a polynomial on the ambient jet space
    var: VarId            # leading variable solved (or rewritten) in G
    quadratic: bool = False


@dataclass
class Rule:
    var: VarId
    value: Elem           # expression in free variables (and u)
    ratfun: RatFun        # same value assembled, for bulk substitution


class ChainRing:
    """Reduction machinery for one invariant locus."""

    def __init__(self, ctx: JetContext, seeds: Sequence[SeedSpec],
                 sampler: Optional[str] = None,
                 sample_box: tuple[int, int] = (-9, 9)):
        self.ctx = ctx
        self.seeds = list(seeds)
        self.sampler = sampler or "direct"
        self.sample_box = sample_box
        self.quad_var: Optional[VarId] = None
        self.alpha = RatFun(Poly())
        self.beta = RatFun(Poly())
        self.rules: dict[VarId, Rule] = {}
        self.rule_order: list[VarId] = []
        self.extra_rules: list[Rule] = []     # from extend_with, free-var solves
        self._depth: dict[int, int] = {}      # seed index -> last derived order
        self._derivs: dict[int, Poly] = {}    # seed index -> D_x^i(G) at depth
        for i, seed in enumerate(self.seeds):
            self._install_seed(i, seed)

    # -- construction ---------------------------------------------------

    def const(self, c) -> Elem:
        return Elem(self, RatFun.const(c))

    def _install_seed(self, idx: int, seed: SeedSpec) -> None:
        G, v = seed.poly, seed.var
        deg = G.degree_in(v)
        if seed.quadratic:
            if deg != 2:
                raise PreconditionFailed(f"seed not quadratic in {var_name(v)}")
            if self.quad_var is not None:
                raise PreconditionFailed("at most one quadratic rule per chain")
            coeffs = G.coefficients_in(v)
            A = RatFun(coeffs.get(2, Poly()))
            B = RatFun(coeffs.get(1, Poly()))
            C = RatFun(coeffs.get(0, Poly()))
            self.quad_var = v
            self.alpha = -B / A
            self.beta = -C / A
        else:
            if deg != 1:
                raise PreconditionFailed(
                    f"seed has degree {deg} in {var_name(v)}, expected 1")
            if v[0] != 1:
                raise PreconditionFailed("seed must solve a jet variable")
            coeffs = G.coefficients_in(v)
            value = self.reduce(RatFun(-coeffs.get(0, Poly()), coeffs[1]), _skip=v)
            self._add_rule(v, value)
        self._depth[idx] = seed.poly.max_jet_order()
        self._derivs[idx] = G

    def _add_rule(self, v: VarId, value: Elem) -> None:
        if v in self.rules or v == self.quad_var:
            raise PreconditionFailed(f"duplicate rule for {var_name(v)}")
        self.rules[v] = Rule(v, value, value.as_ratfun())
        self.rule_order.append(v)

    def ensure_order(self, k: int) -> None:
        """Derive rules for all seed branches up to jet order k."""
        if k > self.ctx.max_order:
            self.ctx = self.ctx.extended(k + 1)
        for idx, seed in enumerate(self.seeds):
            while self._depth[idx] < k:
                if self._derivs[idx].max_jet_order() >= self.ctx.max_order:
                    self.ctx = self.ctx.extended(self.ctx.max_order + 4)
                E = total_derivative(self._derivs[idx], self.ctx)
                self._derivs[idx] = E
                self._depth[idx] += 1
                w = jet(seed.var[1], self._depth[idx])
                value = self._solve_for(self.reduce(E, _skip=w), w)
                self._add_rule(w, value)

    def _solve_for(self, h: Elem, w: VarId) -> Elem:
        """Solve the linear (in w) reduced equation h = 0 for w."""
        a_num = h.a.num.coefficients_in(w)
        b_num = h.b.num.coefficients_in(w)
        if max(a_num, default=0) > 1 or max(b_num, default=0) > 1 or \
                w in h.a.den.variables() or w in h.b.den.variables():
            raise PreconditionFailed(f"equation not linear in {var_name(w)}")
        lead = Elem(self, RatFun(a_num.get(1, Poly()), h.a.den),
                    RatFun(b_num.get(1, Poly()), h.b.den))
        rest = Elem(self, RatFun(a_num.get(0, Poly()), h.a.den),
                    RatFun(b_num.get(0, Poly()), h.b.den))
        if lead.is_zero():
            raise PreconditionFailed(f"leading coefficient of {var_name(w)} vanishes")
        return (-rest) / lead

    # -- reduction --------------------------------------------------------

    def reduce(self, e: ExprLike, _skip: Optional[VarId] = None) -> Elem:
        e = RatFun.of(e)
        top = 0
        for v in e.variables():
            if v[0] == 1:
                top = max(top, v[2])
        if _skip is None and top:
            self.ensure_order(top)
        rules = {v: r.ratfun for v, r in self.rules.items()}
        num = e.num.substitute(rules)
        den = e.den.substitute(rules)
        n = self._fold(num)
        d = self._fold(den)
        if d.is_zero():
            raise DenominatorVanishesOnLocus("denominator reduces to 0 on the locus")
        return n / d

    def _fold(self, e: RatFun) -> Elem:
        """Collapse powers of the quadratic variable to degree <= 1."""
        u = self.quad_var
        if u is None or u not in e.num.variables():
            if u is not None and u in e.den.variables():
                num = self._fold(RatFun(e.num))
                den = self._fold(RatFun(e.den))
                return num / den
            return Elem(self, e)
        if u in e.den.variables():
            return self._fold(RatFun(e.num)) / self._fold(RatFun(e.den))
        coeffs = e.num.coefficients_in(u)
        result = self.const(0)
        ubasis = Elem(self, RatFun(Poly()), RatFun(Poly.const(1)))
        for d in range(max(coeffs), -1, -1):
            result = result * ubasis
            if d in coeffs:
                result = result + Elem(self, RatFun(coeffs[d], e.den))
        return result

    def dx(self, h: Elem) -> Elem:
        """Total derivative within the reduced ring."""
        rep = h.as_ratfun()
        k = rep.max_jet_order()
        self.ensure_order(k + 1)
        return self.reduce(total_derivative(rep, self.ctx))

    def apply_field(self, Pk: ProlongedField, h: Elem) -> Elem:
        """Directional derivative along a prolonged field, reduced."""
        return self.reduce(apply(Pk, h.as_ratfun()))

    # -- locus extension --------------------------------------------------

    def extend_with(self, h: Elem) -> "ChainRing":
        """New chain whose locus additionally imposes h = 0.

        The cleared numerator of h must be linear in its leading free
        variable; that variable becomes solved.
        """
        P_a = h.a.num * h.b.den
        P_b = h.b.num * h.a.den
        cand: set[VarId] = set()
        for p in (P_a, P_b):
            for v in p.variables():
                if v[0] == 1 and v not in self.rules and v != self.quad_var:
                    cand.add(v)
        if not cand:
            raise PreconditionFailed("extension equation has no free jet variable")
        w = max(cand)
        new = self._clone()
        value = new._solve_for(Elem(new, RatFun(P_a), RatFun(P_b)), w)
        rule = Rule(w, value, value.as_ratfun())
        new.rules[w] = rule
        new.extra_rules.append(rule)
        return new

    def _clone(self) -> "ChainRing":
        new = ChainRing.__new__(ChainRing)
        new.ctx = self.ctx
        new.seeds = self.seeds
        new.sampler = self.sampler
        new.sample_box = self.sample_box
        new.quad_var = self.quad_var
        new.alpha = self.alpha
        new.beta = self.beta
        new.rules = dict(self.rules)
        new.rule_order = list(self.rule_order)
        new.extra_rules = list(self.extra_rules)
        new._depth = dict(self._depth)
        new._derivs = dict(self._derivs)
        return new

    # -- sampling ----------------------------------------------------------

    def sample(self, k: int, rng: random.Random, tries: int = 400) -> dict:
        """Exact rational point of the locus in J^k (plus extension values)."""
        self.ensure_order(k)
        coords = self.ctx.jet_coords(k)
        solved = set(self.rules) | {r.var for r in self.extra_rules}
        for _ in range(tries):
            point: dict[VarId, Fraction] = {}
            try:
                for g in self.ctx.extensions:
                    point[g.var] = self._nonzero(rng)
                self._seed_quad(point, rng)
                free = [v for v in coords
                        if v not in solved and v not in point]
                for v in free:
                    point[v] = Fraction(rng.randint(*self.sample_box))
                for rule in self.extra_rules:
                    point[rule.var] = rule.value.evaluate(point)
                for v in self.rule_order:
                    if v in point:
                        continue
                    point[v] = self.rules[v].value.evaluate(point)
                for seed in self.seeds:
                    if seed.poly.evaluate(point) != 0:
                        raise ZeroDivisionError("seed residual")  # retry
                return point
            except ZeroDivisionError:
                continue
        raise SamplerExhausted(f"no rational point found in {tries} tries")

    def _nonzero(self, rng: random.Random) -> Fraction:
        lo, hi = self.sample_box
        while True:
            v = rng.randint(lo, hi)
            if v:
                return Fraction(v)

    def _seed_quad(self, point: dict, rng: random.Random) -> None:
        if self.sampler == "direct":
            if self.quad_var is not None:
                raise PreconditionFailed(
                    "quadratic chain requires a parametrizing sampler")
            return
        if self.sampler == "circle":
            # y1^2 + z1^2 = 1 via the rational parametrization
            t = Fraction(rng.randint(-9, 9), rng.randint(1, 9))
            den = 1 + t * t
            point[jet(0, 1)] = (1 - t * t) / den
            point[self.quad_var] = 2 * t / den
            return
        sampler = _EXTRA_SAMPLERS.get(self.sampler)
        if sampler is None:
            raise PreconditionFailed(f"unknown sampler {self.sampler!r}")
        sampler(self, point, rng)


# Registry for locus-specific rational parametrizations (filled by catalog).
_EXTRA_SAMPLERS: dict[str, Callable] = {}


def register_sampler(name: str):
    def deco(fn):
        _EXTRA_SAMPLERS[name] = fn
        return fn
    return deco


def reduce_expr(e: ExprLike, chain: ChainRing) -> RatFun:
    """Normal form of e modulo the chain, as a rational function."""
    return chain.reduce(e).as_ratfun()


# -- ring adapters for the expression parser -----------------------------


class RatRing:
    """Plain rational-function arithmetic with the ambient total derivative."""

    def __init__(self, ctx: JetContext):
        self.ctx = ctx

    def const(self, c) -> RatFun:
        return RatFun.const(c)

    def lift(self, e: RatFun) -> RatFun:
        return e

    def dx(self, e: RatFun) -> RatFun:
        return total_derivative(e, self.ctx)


class ChainAdapter:
    """Arithmetic in the reduced ring of a chain; D is the on-locus D_x."""

    def __init__(self, chain: ChainRing):
        self.chain = chain
        self.ctx = chain.ctx

    def const(self, c) -> Elem:
        return self.chain.const(c)

    def lift(self, e: RatFun) -> Elem:
        return self.chain.reduce(e)

    def dx(self, e: Elem) -> Elem:
        return self.chain.dx(e)
