"""Checkers for absolute, relative and conditional differential invariants.

Every check is an exact identity over Q; probabilistic sampling only ever
confirms what the symbolic computation already decided (a consistency check
of samplers against reducers).  Expressions may be given in factored form
(list of (Poly, exponent) pairs): a quotient of relative invariants is
checked through its weight cocycles, which avoids expanding large powers.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .chains import ChainRing, Elem
from .errors import NotDivisible, PreconditionFailed
from .jetspace import (
    JetContext,
    ProlongedField,
    VectorField,
    apply,
    lie_bracket,
    prolong,
    total_derivative,
)
from .linalg import solve
from .ratcore import Poly, Rat, RatFun, VarId, try_exact_div

Factored = Sequence[tuple[Poly, int]]


@dataclass
class Algebra:
    """A realization of a Lie algebra by point or contact vector fields."""

    id: str
    kind: str                      # 'point' | 'contact'
    num_dependent: int
    generators: tuple[VectorField, ...]
    ctx: JetContext
    weight_scheme: dict[int, RatFun] = field(default_factory=dict)
    name: str = ""
    _prolonged: dict = field(default_factory=dict, repr=False)
    _structure: Optional[list] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.generators)

    def prolonged(self, k: int) -> list[ProlongedField]:
        if k not in self._prolonged:
            ctx = self.ctx.extended(k + 1)
            self._prolonged[k] = [prolong(g, k, ctx) for g in self.generators]
        return self._prolonged[k]

    def structure_constants(self):
        """c[i][j] with [X_i, X_j] = sum_k c[i][j][k] X_k; exact, or error."""
        if self._structure is None:
            basis = [_field_poly_coeffs(g) for g in self.generators]
            keys = sorted({key for f in basis for key in f})
            matrix = [[f.get(key, Fraction(0)) for f in basis] for key in keys]
            table = []
            for i in range(self.dim):
                row = []
                for j in range(self.dim):
                    if j <= i:
                        row.append(None)
                        continue
                    br = _field_poly_coeffs(lie_bracket(self.generators[i],
                                                        self.generators[j]))
                    rhs = [br.get(key, Fraction(0)) for key in keys]
                    sol = solve(matrix, rhs)
                    if sol is None:
                        raise PreconditionFailed(
                            f"{self.id}: [X{i+1},X{j+1}] is outside the span")
                    row.append(sol)
                table.append(row)
            self._structure = table
        return self._structure

    def bracket_coeffs(self, i: int, j: int) -> list[Fraction]:
        if i == j:
            return [Fraction(0)] * self.dim
        table = self.structure_constants()
        if i < j:
            return table[i][j]
        return [-c for c in table[j][i]]


def _field_poly_coeffs(f: VectorField) -> dict:
    """Flatten a polynomial vector field into {(coord, monomial): coeff}."""
    out = {}
    for v, c in zip(f.coords, f.coeffs):
        p = c.as_poly()
        for m, val in p.t.items():
            out[(v, m)] = val
    return out


@dataclass
class WeightCocycle:
    """Per-generator multiplier of a relative invariant."""

    algebra: Algebra
    entries: tuple[Poly, ...]

    def __add__(self, other: "WeightCocycle") -> "WeightCocycle":
        return WeightCocycle(self.algebra, tuple(
            a + b for a, b in zip(self.entries, other.entries)))

    def scale(self, c) -> "WeightCocycle":
        return WeightCocycle(self.algebra, tuple(e.scale(c) for e in self.entries))

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.entries)

    def check_cocycle_identity(self) -> Optional[str]:
        """lambda([Xi,Xj]) = Xi(lambda(Xj)) - Xj(lambda(Xi)); None if it holds."""
        A = self.algebra
        k = max((e.max_jet_order() for e in self.entries), default=0)
        pro = A.prolonged(k + 1)
        for i in range(A.dim):
            for j in range(i + 1, A.dim):
                cs = A.bracket_coeffs(i, j)
                lhs = Poly()
                for t, c in enumerate(cs):
                    if c:
                        lhs = lhs + self.entries[t].scale(c)
                rhs = apply(pro[i], self.entries[j]) - apply(pro[j], self.entries[i])
                if RatFun(lhs) != rhs:
                    return f"X{i+1},X{j+1}"
        return None


@dataclass
class CheckResult:
    ok: bool
    witness: str = ""

    def __bool__(self) -> bool:
        return self.ok


def extract_weight(R: Poly, A: Algebra) -> Union[WeightCocycle, CheckResult]:
    """Weight cocycle of a relative invariant, or a failure with witness."""
    if R.is_zero():
        raise PreconditionFailed("zero polynomial has no weight")
    k = R.max_jet_order()
    pro = A.prolonged(max(k, 1))
    entries = []
    for i, Pk in enumerate(pro):
        val = apply(Pk, R)
        if not val.is_poly():
            return CheckResult(False, f"X{i+1}: non-polynomial action")
        lam = try_exact_div(val.as_poly(), R)
        if lam is None:
            return CheckResult(False, f"X{i+1}")
        entries.append(lam)
    return WeightCocycle(A, tuple(entries))


def _as_factors(expr: Union[RatFun, Factored]) -> Optional[list]:
    if isinstance(expr, RatFun):
        return None
    return list(expr)


def check_absolute(I: Union[RatFun, Factored], A: Algebra,
                   k: Optional[int] = None) -> CheckResult:
    """X(I) = 0 for every generator (exact)."""
    factors = _as_factors(I)
    if factors is not None:
        cocycles = []
        for p, e in factors:
            w = extract_weight(p, A)
            if isinstance(w, CheckResult):
                return _check_absolute_direct(_assemble(factors), A, k)
            cocycles.append(w.scale(e))
        total = cocycles[0]
        for c in cocycles[1:]:
            total = total + c
        if total.is_zero():
            return CheckResult(True)
        bad = next(i for i, e in enumerate(total.entries) if not e.is_zero())
        return CheckResult(False, f"X{bad+1}")
    return _check_absolute_direct(I, A, k)


def _assemble(factors: Factored) -> RatFun:
    num = Poly.const(1)
    den = Poly.const(1)
    for p, e in factors:
        if e >= 0:
            num = num * p ** e
        else:
            den = den * p ** (-e)
    return RatFun(num, den)


def _check_absolute_direct(I: RatFun, A: Algebra, k: Optional[int]) -> CheckResult:
    kk = k if k is not None else I.max_jet_order()
    pro = A.prolonged(max(kk, 1))
    for i, Pk in enumerate(pro):
        if not apply(Pk, I).is_zero():
            return CheckResult(False, f"X{i+1}")
    return CheckResult(True)


def check_invariant_derivation(f: Union[RatFun, Factored], A: Algebra,
                               k: Optional[int] = None) -> CheckResult:
    """[X, f D_x] = 0 for all generators, i.e. X(f) = f * D_x(xi)."""
    factors = _as_factors(f)
    ctx = A.ctx
    if factors is not None:
        cocycles = []
        for p, e in factors:
            w = extract_weight(p, A)
            if isinstance(w, CheckResult):
                factors = None
                break
            cocycles.append(w.scale(e))
        if factors is not None:
            for i, g in enumerate(A.generators):
                xi = g.coeffs[0]
                target = total_derivative(xi, ctx)
                got = RatFun(Poly())
                for c in cocycles:
                    got = got + RatFun(c.entries[i])
                if got != target:
                    return CheckResult(False, f"X{i+1}")
            return CheckResult(True)
        f = _assemble(_as_factors(f) or [])
    kk = k if k is not None else f.max_jet_order()
    pro = A.prolonged(max(kk, 1))
    for i, (g, Pk) in enumerate(zip(A.generators, pro)):
        xi = g.coeffs[0]
        if apply(Pk, f) != f * total_derivative(xi, ctx):
            return CheckResult(False, f"X{i+1}")
    return CheckResult(True)


def check_relative_derivation(A: Algebra, w: int, R: Poly, s: Poly, sp: Poly,
                              expected: Optional[Poly] = None,
                              bridge: Optional[tuple[RatFun, Poly, Poly]] = None):
    """Weighted derivation nabla_w(R) = s*D_x(R) - (w/3)*sp*R.

    Verifies that R is relative, computes nabla_w(R), checks the result is
    itself relative (or zero), compares against ``expected`` when given.
    When 3 | w and ``bridge=(f, base, denom)`` is supplied, also confirms
    the localization identity

        nabla_w(R) = (base^(4+w/3) / denom) * f * D_x(R / base^(w/3))

    where f*D_x is the algebra's absolute invariant derivation.
    """
    lam = extract_weight(R, A)
    if isinstance(lam, CheckResult):
        raise PreconditionFailed(f"input is not a relative invariant ({lam.witness})")
    out = s * total_derivative(R, A.ctx) - sp * R.scale(Fraction(w, 3))
    if not out.is_zero():
        lam2 = extract_weight(out, A)
        if isinstance(lam2, CheckResult):
            raise PreconditionFailed(
                f"nabla_w output is not relative ({lam2.witness})")
    ok = expected is None or out == expected
    bridge_ok = True
    if bridge is not None and w % 3 == 0:
        fD, base_poly, denom = bridge
        m = w // 3
        ratio = RatFun(R, base_poly ** m)
        rhs = RatFun(base_poly ** (4 + m), denom) * fD * \
            total_derivative(ratio, A.ctx)
        bridge_ok = RatFun(out) == rhs
    return out, CheckResult(ok and bridge_ok,
                            "" if ok else "value mismatch" if bridge_ok
                            else "bridge identity")


def check_conditional(expr: Union[Elem, Poly, RatFun], A: Algebra,
                      chain: ChainRing, mode: str,
                      rng: Optional[random.Random] = None,
                      samples: int = 5) -> CheckResult:
    """Conditional invariance of expr on the chain's locus.

    mode 'relative': the zero locus of expr within the chain locus is
    invariant - checked by reducing X(expr) on the chain extended with
    expr = 0.  mode 'absolute': X(expr) reduces to 0.  mode 'derivation':
    X(f) - f*D_x(xi) reduces to 0.  All exact; followed by evaluation at
    ``samples`` rational locus points when an rng is given.
    """
    h = expr if isinstance(expr, Elem) else chain.reduce(expr)
    if h.is_zero():
        return CheckResult(False, "expression vanishes identically on the locus")
    rep = h.as_ratfun()
    k = max(rep.max_jet_order(), chain_order(chain), 1)
    pro = A.prolonged(k)
    if mode == "relative":
        extended = chain.extend_with(h)
        raw = [apply(Pk, rep) for Pk in pro]
        for i, val in enumerate(raw):
            if not extended.reduce(val).is_zero():
                return CheckResult(False, f"X{i+1}")
        return _sample_zero(raw, extended, k, rng, samples)
    if mode == "absolute":
        raw = []
        for i, Pk in enumerate(pro):
            val = apply(Pk, rep)
            if not chain.reduce(val).is_zero():
                return CheckResult(False, f"X{i+1}")
            raw.append(val)
        return _sample_zero(raw, chain, k, rng, samples)
    if mode == "derivation":
        for i, (g, Pk) in enumerate(zip(A.generators, pro)):
            xi = g.coeffs[0]
            lhs = chain.apply_field(Pk, h)
            rhs = h * chain.reduce(total_derivative(xi, chain.ctx))
            if not (lhs - rhs).is_zero():
                return CheckResult(False, f"X{i+1}")
        return CheckResult(True)
    raise PreconditionFailed(f"unknown conditional mode {mode!r}")


def _sample_zero(raw: list[RatFun], chain: ChainRing, k: int,
                 rng: Optional[random.Random], samples: int) -> CheckResult:
    """Confirm residual vanishing at rational locus points (sampler check)."""
    if rng is None:
        return CheckResult(True)
    order = max(k, _chain_depth(chain))
    good = 0
    attempts = 0
    while good < samples and attempts < samples * 6:
        attempts += 1
        pt = chain.sample(order, rng)
        try:
            for i, val in enumerate(raw):
                if val.evaluate(pt) != 0:
                    return CheckResult(False, f"X{i+1} at sampled point")
        except ZeroDivisionError:
            continue
        good += 1
    if good < samples:
        return CheckResult(False, "sampler kept hitting singular points")
    return CheckResult(True)


def conditional_weight(expr: Union[Elem, Poly, RatFun], A: Algebra,
                       chain: ChainRing) -> list[Elem]:
    """Multipliers X_i(expr)/expr in the reduced ring (when it divides)."""
    h = expr if isinstance(expr, Elem) else chain.reduce(expr)
    rep = h.as_ratfun()
    k = max(rep.max_jet_order(), chain_order(chain), 1)
    return [chain.apply_field(Pk, h) / h for Pk in A.prolonged(k)]


def chain_order(chain: ChainRing) -> int:
    return max((seed.poly.max_jet_order() for seed in chain.seeds), default=1)


def _chain_depth(chain: ChainRing) -> int:
    depth = max(chain._depth.values(), default=1)
    for rule in chain.extra_rules:
        depth = max(depth, rule.ratfun.max_jet_order())
    return depth


def symmetry_check(A: Algebra, eqs: Sequence[Poly],
                   chain: Optional[ChainRing] = None) -> CheckResult:
    """X(F) = 0 on the locus, for every generator and defining function.

    Without a chain (e.g. when no equation is solvable for a leading jet
    variable) each defining polynomial must be a relative invariant, which
    is the equivalent statement for a single-equation locus.
    """
    if chain is None:
        for j, F in enumerate(eqs):
            lam = extract_weight(F, A)
            if isinstance(lam, CheckResult):
                return CheckResult(False, f"{lam.witness} on equation {j+1}")
        return CheckResult(True)
    k = max(max(F.max_jet_order() for F in eqs), chain_order(chain))
    pro = A.prolonged(k)
    for i, Pk in enumerate(pro):
        for j, F in enumerate(eqs):
            if not chain.reduce(apply(Pk, F)).is_zero():
                return CheckResult(False, f"X{i+1} on equation {j+1}")
    return CheckResult(True)
