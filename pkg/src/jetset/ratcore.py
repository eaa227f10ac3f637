"""Exact sparse multivariate polynomial arithmetic over the rationals.

Variables are tagged tuples (``VarId``) covering four kinds:

  (0, i)              base coordinate: x, y, z, q  (i = 0..3)
  (1, a, k)           jet coordinate: k-th derivative of dependent var a
                      (a = 0 for y, a = 1 for z; k >= 1)
  (2, name)           exponential extension generator, e.g. e^(x/2)
  (3, name, i, j)     formal partial d^i/dx^i d^j/dy^j of an unknown
                      function of (x, y), e.g. a_xy

The tag values fix the global variable order: base < jet < extension <
formal, jets ordered by (dependent var, order).  A monomial is a sorted
tuple of (VarId, exponent) pairs with nonzero exponents; extension
generators are units and may carry negative exponents, all other kinds
require positive ones.  A polynomial maps monomials to nonzero Fractions;
the zero polynomial is the empty map.  Two polynomials are equal iff the
maps are identical, so this form is canonical.

Rational functions are unreduced numerator/denominator pairs compared by
cross-multiplication; no polynomial gcd is ever computed.  Only trivial
normalizations are applied: sign, rational content and common *monomial*
factors, which keeps iterated quotient rules from inflating degrees.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Union

from .errors import MissingAssignment, NotDivisible, ZeroDenominator

Rat = Fraction
VarId = tuple
Monomial = tuple  # tuple[tuple[VarId, int], ...]

BASE_NAMES = ("x", "y", "z", "q")
DEP_NAMES = ("y", "z")

X = (0, 0)
Y = (0, 1)
Z = (0, 2)
Q = (0, 3)


def base(i: int) -> VarId:
    return (0, i)


def jet(alpha: int, order: int) -> VarId:
    if order < 1:
        raise ValueError("jet order must be >= 1; order 0 is the base variable")
    return (1, alpha, order)


def ext(name: str) -> VarId:
    return (2, name)


def formal(name: str, i: int, j: int) -> VarId:
    return (3, name, i, j)


def var_name(v: VarId) -> str:
    kind = v[0]
    if kind == 0:
        return BASE_NAMES[v[1]]
    if kind == 1:
        return f"{DEP_NAMES[v[1]]}{v[2]}"
    if kind == 2:
        return v[1]
    name, i, j = v[1], v[2], v[3]
    if i == 0 and j == 0:
        return name
    return name + "_" + "x" * i + "y" * j


def jet_order(v: VarId) -> int:
    """Jet order of a variable: k for y_k/z_k, 0 for everything else."""
    return v[2] if v[0] == 1 else 0


@dataclass(frozen=True)
class ExtensionGen:
    """Exponential generator u with derivative rule du/dv = gradient[v]*u.

    ``power_of`` marks u as semantically base**n of another generator; such
    aliases are rewritten away at parse time and never appear in stored
    monomials.
    """

    name: str
    gradient: Mapping[VarId, Rat]
    power_of: Optional[tuple[str, int]] = None

    @property
    def var(self) -> VarId:
        return ext(self.name)


KNOWN_EXTENSIONS = {
    g.name: g
    for g in (
        ExtensionGen("E_x", {X: Fraction(1)}),
        ExtensionGen("E_x2", {X: Fraction(1, 2)}),
        ExtensionGen("E_y", {Y: Fraction(1)}),
        ExtensionGen("E_z3", {Z: Fraction(1, 3)}),
    )
}
# Aliases rewritten to a power of a finer generator when that one is in scope.
EXTENSION_ALIASES = {"E_x": ("E_x2", 2)}


def _mono_cmp(m1: Monomial, m2: Monomial) -> int:
    """Graded lexicographic comparison; returns -1/0/+1."""
    d1 = sum(e for _, e in m1)
    d2 = sum(e for _, e in m2)
    if d1 != d2:
        return -1 if d1 < d2 else 1
    i = j = 0
    while i < len(m1) or j < len(m2):
        v1 = m1[i][0] if i < len(m1) else None
        v2 = m2[j][0] if j < len(m2) else None
        if v1 == v2:
            e1, e2 = m1[i][1], m2[j][1]
            if e1 != e2:
                return -1 if e1 < e2 else 1
            i += 1
            j += 1
        elif v2 is None or (v1 is not None and v1 < v2):
            # m1 has a positive power of an earlier variable
            return -1 if m1[i][1] < 0 else 1
        else:
            return 1 if m2[j][1] < 0 else -1
    return 0


_mono_key = functools.cmp_to_key(_mono_cmp)

ONE_MONO: Monomial = ()


def mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for v, e in m2:
        ne = d.get(v, 0) + e
        if ne:
            d[v] = ne
        else:
            del d[v]
    return tuple(sorted(d.items()))


def mono_div(m1: Monomial, m2: Monomial) -> Optional[Monomial]:
    """m1 / m2, or None when a non-extension variable would go negative."""
    d = dict(m1)
    for v, e in m2:
        ne = d.get(v, 0) - e
        if ne:
            if ne < 0 and v[0] != 2:
                return None
            d[v] = ne
        else:
            del d[v]
    return tuple(sorted(d.items()))


PolyLike = Union["Poly", Rat, int]


class Poly:
    """Sparse polynomial; immutable by convention after construction."""

    __slots__ = ("t",)

    def __init__(self, terms: Optional[Mapping[Monomial, Rat]] = None):
        self.t: dict[Monomial, Rat] = dict(terms) if terms else {}

    # -- constructors -------------------------------------------------

    @staticmethod
    def const(c) -> "Poly":
        c = Fraction(c)
        return Poly({ONE_MONO: c} if c else None)

    @staticmethod
    def var(v: VarId, exp: int = 1) -> "Poly":
        if exp == 0:
            return Poly.const(1)
        if exp < 0 and v[0] != 2:
            raise ValueError(f"negative power of non-unit variable {var_name(v)}")
        return Poly({((v, exp),): Fraction(1)})

    @staticmethod
    def _coerce(other: PolyLike) -> "Poly":
        if isinstance(other, Poly):
            return other
        return Poly.const(other)

    # -- structure ----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.t

    def is_constant(self) -> bool:
        return not self.t or (len(self.t) == 1 and ONE_MONO in self.t)

    def constant_value(self) -> Rat:
        if not self.t:
            return Fraction(0)
        if self.is_constant():
            return self.t[ONE_MONO]
        raise ValueError("not a constant polynomial")

    def variables(self) -> set:
        out: set = set()
        for m in self.t:
            for v, _ in m:
                out.add(v)
        return out

    def max_jet_order(self) -> int:
        return max((jet_order(v) for v in self.variables()), default=0)

    def degree_in(self, v: VarId) -> int:
        return max((dict(m).get(v, 0) for m in self.t), default=0)

    def __len__(self) -> int:
        return len(self.t)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Poly.const(other)
        return isinstance(other, Poly) and self.t == other.t

    def __hash__(self):
        return hash(frozenset(self.t.items()))

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other: PolyLike) -> "Poly":
        other = Poly._coerce(other)
        res = dict(self.t)
        for m, c in other.t.items():
            nc = res.get(m, 0) + c
            if nc:
                res[m] = nc
            else:
                res.pop(m, None)
        return Poly(res)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.t.items()})

    def __sub__(self, other: PolyLike) -> "Poly":
        return self + (-Poly._coerce(other))

    def __rsub__(self, other: PolyLike) -> "Poly":
        return Poly._coerce(other) - self

    def __mul__(self, other: PolyLike) -> "Poly":
        other = Poly._coerce(other)
        if not self.t or not other.t:
            return Poly()
        a, b = self.t, other.t
        if len(a) > len(b):
            a, b = b, a
        res: dict[Monomial, Rat] = {}
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                m = mono_mul(m1, m2)
                nc = res.get(m, 0) + c1 * c2
                if nc:
                    res[m] = nc
                else:
                    del res[m]
        return Poly(res)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative power of a polynomial; use RatFun")
        result = Poly.const(1)
        square = self
        while n:
            if n & 1:
                result = result * square
            n >>= 1
            if n:
                square = square * square
        return result

    def scale(self, c) -> "Poly":
        c = Fraction(c)
        if not c:
            return Poly()
        return Poly({m: c * v for m, v in self.t.items()})

    # -- leading data and exact division -------------------------------

    def leading(self) -> tuple[Monomial, Rat]:
        m = max(self.t, key=_mono_key)
        return m, self.t[m]

    def content_monomial(self) -> Monomial:
        """Componentwise-min monomial dividing every term (unit part incl.)."""
        n = len(self.t)
        mins: dict[VarId, int] = {}
        counts: dict[VarId, int] = {}
        for m in self.t:
            for v, e in m:
                counts[v] = counts.get(v, 0) + 1
                mins[v] = min(mins.get(v, e), e)
        out = []
        for v, mv in mins.items():
            if counts[v] < n:
                mv = min(mv, 0)
            if mv:
                out.append((v, mv))
        return tuple(sorted(out))

    def exact_div(self, q: "Poly") -> "Poly":
        """Exact division; raises NotDivisible when p is not in (q)."""
        r = self.try_div(q)
        if r is None:
            raise NotDivisible("polynomial division left a remainder")
        return r

    def try_div(self, q: "Poly") -> Optional["Poly"]:
        if q.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if self.is_zero():
            return Poly()
        if q.is_constant():
            return self.scale(1 / q.constant_value())
        if len(q.t) == 1:
            (mq, cq0), = q.t.items()
            res = {}
            for m, c in self.t.items():
                nm = mono_div(m, mq)
                if nm is None:
                    return None
                res[nm] = c / cq0
            return Poly(res)
        # strip monomial contents so long division runs over N-exponents
        cp = self.content_monomial()
        cq = q.content_monomial()
        unit = mono_div(cp, cq)
        if unit is None:
            return None
        p_hat = Poly({mono_div(m, cp): c for m, c in self.t.items()})
        q_hat = Poly({mono_div(m, cq): c for m, c in q.t.items()})
        lm_q, lc_q = q_hat.leading()
        quot: dict[Monomial, Rat] = {}
        r = p_hat
        while not r.is_zero():
            lm_r, lc_r = r.leading()
            m = mono_div(lm_r, lm_q)
            if m is None or any(e < 0 for _, e in m):
                return None
            c = lc_r / lc_q
            quot[m] = quot.get(m, 0) + c
            r = r - q_hat * Poly({m: c})
        result = Poly({mono_mul(m, unit): c for m, c in quot.items() if c})
        if result * q == self:
            return result
        return None

    # -- calculus -----------------------------------------------------

    def partial(self, v: VarId) -> "Poly":
        """Partial derivative; extension generators use their gradient rule.

        For a base variable v this includes the chain-rule contribution of
        every extension generator u with du/dv = gradient(u)(v) * u.
        """
        res: dict[Monomial, Rat] = {}

        def acc(m: Monomial, c: Rat) -> None:
            nc = res.get(m, 0) + c
            if nc:
                res[m] = nc
            else:
                del res[m]

        for m, c in self.t.items():
            d = dict(m)
            e = d.get(v, 0)
            if e:
                nd = dict(d)
                if e == 1:
                    del nd[v]
                else:
                    nd[v] = e - 1
                acc(tuple(sorted(nd.items())), c * e)
            if v[0] == 0:
                for u, eu in m:
                    if u[0] != 2:
                        continue
                    g = KNOWN_EXTENSIONS[u[1]].gradient.get(v)
                    if g:
                        acc(m, c * eu * g)
        return Poly(res)

    def coefficients_in(self, v: VarId) -> dict[int, "Poly"]:
        """Split into polynomials keyed by the power of v."""
        out: dict[int, dict[Monomial, Rat]] = {}
        for m, c in self.t.items():
            d = dict(m)
            e = d.pop(v, 0)
            nm = tuple(sorted(d.items()))
            out.setdefault(e, {})[nm] = c
        return {e: Poly(t) for e, t in out.items()}

    def substitute(self, rules: Mapping[VarId, "RatFun"]) -> "RatFun":
        """Simultaneous substitution of variables by rational functions."""
        live = {v: r for v, r in rules.items() if v in self.variables()}
        if not live:
            return RatFun(self, Poly.const(1))
        for v, r in live.items():
            if v[0] == 2:
                raise ValueError("cannot substitute an extension generator")
            if r.den.is_zero():
                raise ZeroDenominator(f"substitution rule for {var_name(v)}")
        maxdeg = {v: self.degree_in(v) for v in live}
        den = Poly.const(1)
        den_pows: dict[VarId, list[Poly]] = {}
        num_pows: dict[VarId, list[Poly]] = {}
        for v, r in live.items():
            pows_n = [Poly.const(1)]
            pows_d = [Poly.const(1)]
            for _ in range(maxdeg[v]):
                pows_n.append(pows_n[-1] * r.num)
                pows_d.append(pows_d[-1] * r.den)
            num_pows[v], den_pows[v] = pows_n, pows_d
            den = den * pows_d[maxdeg[v]]
        total = Poly()
        for m, c in self.t.items():
            d = dict(m)
            rest = tuple(sorted((v, e) for v, e in d.items() if v not in live))
            term = Poly({rest: c})
            for v in live:
                e = d.get(v, 0)
                term = term * num_pows[v][e] * den_pows[v][maxdeg[v] - e]
            total = total + term
        return RatFun(total, den).trim()

    def evaluate(self, point: Mapping[VarId, Rat]) -> Rat:
        total = Fraction(0)
        for m, c in self.t.items():
            val = c
            for v, e in m:
                if v not in point:
                    raise MissingAssignment(f"no value for {var_name(v)}")
                base_val = Fraction(point[v])
                if e < 0 and base_val == 0:
                    raise ZeroDivisionError(f"{var_name(v)} = 0 with negative power")
                val *= base_val ** e
            total += val
        return total

    # -- printing -------------------------------------------------------

    def __str__(self) -> str:
        from .parser import format_poly

        return format_poly(self)

    def __repr__(self) -> str:
        return f"Poly({self})"


class RatFun:
    """Unreduced fraction of polynomials; equality by cross-multiplication."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Optional[Poly] = None):
        if den is None:
            den = Poly.const(1)
        if den.is_zero():
            raise ZeroDenominator("rational function with zero denominator")
        self.num = num
        self.den = den

    @staticmethod
    def const(c) -> "RatFun":
        return RatFun(Poly.const(c))

    @staticmethod
    def of(p: Union[Poly, "RatFun", Rat, int]) -> "RatFun":
        if isinstance(p, RatFun):
            return p
        if isinstance(p, Poly):
            return RatFun(p)
        return RatFun.const(p)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_poly(self) -> bool:
        return self.den.is_constant()

    def as_poly(self) -> Poly:
        if not self.is_poly():
            raise ValueError("rational function has a nonconstant denominator")
        return self.num.scale(1 / self.den.constant_value())

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, Poly)):
            other = RatFun.of(other)
        if not isinstance(other, RatFun):
            return NotImplemented
        if self.den == other.den:
            return self.num == other.num
        return self.num * other.den == other.num * self.den

    def __hash__(self):
        raise TypeError("RatFun is unhashable (equality is cross-multiplicative)")

    def __add__(self, other) -> "RatFun":
        other = RatFun.of(other)
        if self.den == other.den:
            return RatFun(self.num + other.num, self.den).trim()
        return RatFun(self.num * other.den + other.num * self.den,
                      self.den * other.den).trim()

    __radd__ = __add__

    def __neg__(self) -> "RatFun":
        return RatFun(-self.num, self.den)

    def __sub__(self, other) -> "RatFun":
        return self + (-RatFun.of(other))

    def __rsub__(self, other) -> "RatFun":
        return RatFun.of(other) - self

    def __mul__(self, other) -> "RatFun":
        other = RatFun.of(other)
        return RatFun(self.num * other.num, self.den * other.den).trim()

    __rmul__ = __mul__

    def __truediv__(self, other) -> "RatFun":
        other = RatFun.of(other)
        if other.num.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return RatFun(self.num * other.den, self.den * other.num).trim()

    def __rtruediv__(self, other) -> "RatFun":
        return RatFun.of(other) / self

    def __pow__(self, n: int) -> "RatFun":
        if n < 0:
            return RatFun(self.den, self.num) ** (-n)
        return RatFun(self.num ** n, self.den ** n)

    def trim(self) -> "RatFun":
        """Cancel sign, rational content and common monomial factors."""
        if self.num.is_zero():
            return RatFun(Poly(), Poly.const(1))
        cn = dict(self.num.content_monomial())
        cd = dict(self.den.content_monomial())
        common = tuple(sorted(
            (v, min(cn[v], cd[v])) for v in set(cn) & set(cd)
            if min(cn[v], cd[v]) != 0
        ))
        num, den = self.num, self.den
        if common:
            num = Poly({mono_div(m, common): c for m, c in num.t.items()})
            den = Poly({mono_div(m, common): c for m, c in den.t.items()})
        _, lc = den.leading()
        if lc != 1:
            num = num.scale(1 / lc)
            den = den.scale(1 / lc)
        return RatFun(num, den)

    def substitute(self, rules: Mapping[VarId, "RatFun"]) -> "RatFun":
        n = self.num.substitute(rules)
        d = self.den.substitute(rules)
        if d.num.is_zero():
            raise ZeroDenominator("denominator vanished under substitution")
        return (n / d).trim()

    def evaluate(self, point: Mapping[VarId, Rat]) -> Rat:
        d = self.den.evaluate(point)
        if d == 0:
            raise ZeroDivisionError("denominator vanished at the point")
        return self.num.evaluate(point) / d

    def variables(self) -> set:
        return self.num.variables() | self.den.variables()

    def max_jet_order(self) -> int:
        return max(self.num.max_jet_order(), self.den.max_jet_order())

    def __str__(self) -> str:
        from .parser import format_ratfun

        return format_ratfun(self)

    def __repr__(self) -> str:
        return f"RatFun({self})"


# -- spec-level operation names ----------------------------------------


def poly_add(p: Poly, q: Poly) -> Poly:
    return p + q


def poly_mul(p: Poly, q: Poly) -> Poly:
    return p * q


def poly_exact_div(p: Poly, q: Poly) -> Poly:
    return p.exact_div(q)


def try_exact_div(p: Poly, q: Poly) -> Optional[Poly]:
    return p.try_div(q)


def partial_derivative(p: Poly, v: VarId) -> Poly:
    return p.partial(v)


def substitute(p: Poly, rules: Mapping[VarId, RatFun]) -> RatFun:
    return p.substitute(rules)


def evaluate(p: Poly, point: Mapping[VarId, Rat]) -> Rat:
    return p.evaluate(point)
