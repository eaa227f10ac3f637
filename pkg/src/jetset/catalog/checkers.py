"""Executable checkers for each catalog claim kind.

Each checker takes (data, aspec, catalog, rng) and returns a CheckResult.
Claims with variants are retried per variant by the harness; checkers are
pure and see already-merged data.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional

from ..chains import ChainAdapter, ChainRing, Elem
from ..determining import (
    compatibility_constraints,
    constraints_span_match,
    determining_equations,
    substitute_f_partials,
)
from ..errors import JetsetError, NotDivisible, SchemaError
from ..invariants import (
    CheckResult,
    check_absolute,
    check_conditional,
    check_invariant_derivation,
    check_relative_derivation,
    extract_weight,
    symmetry_check,
)
from ..jetspace import (
    JetMap,
    JetContext,
    VectorField,
    X, Y, Z, Q,
    jet,
    point_field,
    prolong,
    prolong_map,
    pushforward,
)
from ..orbits import (
    Metric,
    dim_bound,
    generic_orbit_dim,
    killing_check,
    lie_determinant,
    locus_rank_profile,
    stabilizer_check,
)
from ..parser import ParseEnv, parse_expr
from ..ratcore import Poly, RatFun, formal

Y1 = jet(0, 1)


class _ChainDefs(dict):
    """Lazy per-chain reduction of an algebra's named definitions."""

    def __init__(self, aspec, chain: ChainRing):
        super().__init__()
        self.aspec = aspec
        self.chain = chain
        self.ring = ChainAdapter(chain)
        self.env = ParseEnv(defs=self)
        self._sources = dict(aspec.defs)
        self._failed: dict[str, Exception] = {}

    def __missing__(self, name: str):
        if name in self._failed:
            raise self._failed[name]
        if name not in self._sources:
            raise KeyError(name)
        try:
            val = parse_expr(self._sources[name], self.chain.ctx, self.env,
                             self.ring)
        except (JetsetError, ZeroDivisionError) as exc:
            self._failed[name] = exc
            raise
        self[name] = val
        return val

    def __contains__(self, name) -> bool:
        return dict.__contains__(self, name) or name in self._sources

    def parse(self, src: str) -> Elem:
        return parse_expr(src, self.chain.ctx, self.env, self.ring)


def _factors(data, aspec) -> list:
    out = []
    for item in data["factors"]:
        if not (isinstance(item, list) and len(item) == 2):
            raise SchemaError(f"factor entries are [expr, exponent]: {item!r}")
        out.append((aspec.poly(str(item[0])), int(item[1])))
    return out


def _chain_factors(data, defs: _ChainDefs) -> list:
    out = []
    for item in data["factors"]:
        out.append((defs.parse(str(item[0])), int(item[1])))
    return out


def check_bracket_closure(data, aspec, catalog, rng) -> CheckResult:
    A = aspec.algebra
    if "count" in data and A.dim != int(data["count"]):
        return CheckResult(False, f"expected {data['count']} generators")
    table = A.structure_constants()  # raises if not closed
    n = A.dim
    c = [[A.bracket_coeffs(i, j) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                for l in range(n):
                    total = Fraction(0)
                    for m in range(n):
                        total += (c[i][j][m] * c[m][k][l]
                                  + c[j][k][m] * c[m][i][l]
                                  + c[k][i][m] * c[m][j][l])
                    if total:
                        return CheckResult(False, f"Jacobi fails at {i+1},{j+1},{k+1}")
    return CheckResult(True)


def check_relative_claim(data, aspec, catalog, rng) -> CheckResult:
    R = aspec.poly(str(data["expr"]))
    lam = extract_weight(R, aspec.algebra)
    if isinstance(lam, CheckResult):
        return lam
    bad = lam.check_cocycle_identity()
    if bad is not None:
        return CheckResult(False, f"cocycle identity fails on {bad}")
    if data.get("w") is not None:
        expected = aspec.scheme_cocycle(data["w"])
        for i, exp in enumerate(expected):
            if exp is None:
                continue
            if RatFun(lam.entries[i]) != exp:
                return CheckResult(
                    False, f"X{i+1}: weight {lam.entries[i]} != {exp}")
    return CheckResult(True)


def check_absolute_claim(data, aspec, catalog, rng) -> CheckResult:
    k = data.get("order")
    return check_absolute(_factors(data, aspec), aspec.algebra, k)


def check_derivation_claim(data, aspec, catalog, rng) -> CheckResult:
    return check_invariant_derivation(_factors(data, aspec), aspec.algebra)


def check_identity_claim(data, aspec, catalog, rng) -> CheckResult:
    lhs = aspec.expr(str(data["lhs"]))
    rhs = aspec.expr(str(data["rhs"]))
    if lhs == rhs:
        return CheckResult(True)
    return CheckResult(False, "sides differ")


def check_rel_derivation_claim(data, aspec, catalog, rng) -> CheckResult:
    A = aspec.algebra
    w = int(data["w"])
    R = aspec.poly(str(data["expr"]))
    s = aspec.poly(str(data["s"]))
    sp = aspec.poly(str(data["sp"]))
    expected = aspec.poly(str(data["expected"]))
    bridge = None
    if "bridge" in data:
        b = data["bridge"]
        fD = aspec.expr(str(b["f"]))
        bridge = (fD, aspec.poly(str(b["base"])), aspec.poly(str(b["denom"])))
    _, res = check_relative_derivation(A, w, R, s, sp, expected, bridge)
    return res


def check_conditional_claim(data, aspec, catalog, rng) -> CheckResult:
    chain = catalog.chain_ring(data["chain"])
    defs = _ChainDefs(aspec, chain)
    mode = data["mode"]
    samples = int(data.get("samples", 5))
    A = aspec.algebra
    if "factors" in data:
        pairs = _chain_factors(data, defs)
        mus = []
        ks = [h.as_ratfun().max_jet_order() for h, _ in pairs]
        k = max(ks + [2])
        pro = A.prolonged(k)
        for h, e in pairs:
            if h.is_zero():
                return CheckResult(False, "factor vanishes on the locus")
            mus.append([chain.apply_field(Pk, h) / h for Pk in pro])
        for i in range(A.dim):
            total = chain.const(0)
            for (h, e), mu in zip(pairs, mus):
                total = total + chain.const(e) * mu[i]
            if mode == "derivation":
                xi = A.generators[i].coeffs[0]
                from ..jetspace import total_derivative

                total = total - chain.reduce(total_derivative(xi, chain.ctx))
            if not total.is_zero():
                return CheckResult(False, f"X{i+1}")
        return _sample_factored(pairs, mode, A, chain, k, rng, samples)
    expr = defs.parse(str(data["expr"]))
    return check_conditional(expr, A, chain, mode, rng=rng, samples=samples)


def _sample_factored(pairs, mode, A, chain, k, rng, samples) -> CheckResult:
    if rng is None:
        return CheckResult(True)
    pro = A.prolonged(k)
    raw = [(h.as_ratfun(), e, [chain.apply_field(Pk, h) for Pk in pro])
           for h, e in pairs]
    good = 0
    attempts = 0
    while good < samples and attempts < samples * 6:
        attempts += 1
        pt = chain.sample(k, rng)
        try:
            for i in range(A.dim):
                total = Fraction(0)
                for rep, e, xh in raw:
                    total += e * xh[i].evaluate(pt) / rep.evaluate(pt)
                if mode == "derivation":
                    from ..jetspace import total_derivative

                    xi = A.generators[i].coeffs[0]
                    total -= total_derivative(xi, chain.ctx).evaluate(pt)
                if total != 0:
                    return CheckResult(False, f"X{i+1} at sampled point")
        except ZeroDivisionError:
            continue
        good += 1
    if good < samples:
        return CheckResult(False, "sampler kept hitting singular points")
    return CheckResult(True)


def check_equation_claim(data, aspec, catalog, rng) -> CheckResult:
    eqs = [aspec.poly(str(e)) for e in data["eqs"]]
    chain = catalog.chain_ring(data["chain"]) if data.get("chain") else None
    return symmetry_check(aspec.algebra, eqs, chain)


def check_orbit_claim(data, aspec, catalog, rng) -> CheckResult:
    k = int(data["k"])
    trials = int(data.get("trials", 5))
    got = generic_orbit_dim(aspec.algebra, k, trials, rng)
    return _compare_rank(got, data)


def check_locus_orbit_claim(data, aspec, catalog, rng) -> CheckResult:
    trials = int(data.get("trials", 5))
    ks = data["k"] if isinstance(data["k"], list) else [data["k"]]
    for k in ks:
        chain = catalog.chain_ring(data["chain"])
        defs = _ChainDefs(aspec, chain)
        for src in data.get("extend", []):
            chain = chain.extend_with(defs.parse(str(src)))
            defs = _ChainDefs(aspec, chain)
        rep = locus_rank_profile(aspec.algebra, chain, int(k), trials, rng,
                                 data.get("locus", ""))
        res = _compare_rank(rep.generic_rank, data, f"k={k}: ")
        if not res.ok:
            return res
    return CheckResult(True)


def _compare_rank(got: int, data, prefix: str = "") -> CheckResult:
    expect = int(data["expect"])
    cmp = data.get("cmp", "eq")
    if cmp == "eq" and got != expect:
        return CheckResult(False, f"{prefix}rank {got} != {expect}")
    if cmp == "le" and got > expect:
        return CheckResult(False, f"{prefix}rank {got} > {expect}")
    return CheckResult(True)


def check_lie_det_claim(data, aspec, catalog, rng) -> CheckResult:
    det = lie_determinant(aspec.algebra, int(data["s"]))
    divisor = Poly.const(1)
    for p, e in _factors(data, aspec):
        divisor = divisor * p ** e
    try:
        q = det.exact_div(divisor)
    except NotDivisible:
        return CheckResult(False, "determinant not divisible by stated factors")
    if not q.is_constant():
        return CheckResult(False, f"cofactor {q} is not constant")
    if data.get("cofactor") is not None:
        want = Fraction(data["cofactor"])
        if abs(q.constant_value()) != abs(want):
            return CheckResult(False, f"cofactor {q.constant_value()} != +-{want}")
    if q.is_zero():
        return CheckResult(False, "determinant vanished")
    return CheckResult(True)


def _build_metric(data, aspec) -> Metric:
    comps = {}
    for key, src in data["metric"].items():
        i, j = (int(p) for p in str(key).split(","))
        comps[(min(i, j), max(i, j))] = aspec.expr(str(src))
    return Metric(comps)


def check_killing_claim(data, aspec, catalog, rng) -> CheckResult:
    g = _build_metric(data, aspec)
    return killing_check(aspec.algebra.generators, g,
                         conformal=bool(data.get("conformal", False)))


def check_stabilizer_claim(data, aspec, catalog, rng) -> CheckResult:
    mult = [aspec.expr(str(m)) for m in data["multipliers"]]
    trials = int(data.get("trials", 5))
    for k in data["ks"]:
        chain = catalog.chain_ring(data["chain"])
        res = stabilizer_check(aspec.algebra, mult, int(k), chain, trials, rng)
        if not res.ok:
            return CheckResult(False, f"k={k}: {res.witness}")
    off_k = int(data.get("off_k", data["ks"][0]))
    res = stabilizer_check(aspec.algebra, mult, off_k, None, trials, rng)
    if not res.ok:
        return CheckResult(False, f"off locus: {res.witness}")
    return CheckResult(True)


def check_dim_bound_claim(data, aspec, catalog, rng) -> CheckResult:
    for k, l, expect in data["cases"]:
        got = dim_bound(2, int(k), int(l))
        if got != int(expect):
            return CheckResult(False, f"(k,l)=({k},{l}): {got} != {expect}")
    return CheckResult(True)


def _parse_map(imgs: dict, ctx, env) -> JetMap:
    coords = (X, Y, Y1)
    names = {"x": X, "y": Y, "y1": Y1}
    images = {names[k]: parse_expr(str(v), ctx, env) for k, v in imgs.items()}
    return JetMap(coords, coords, images)


def check_jetmap_locus_claim(data, aspec, catalog, rng) -> CheckResult:
    ctx = aspec.algebra.ctx
    env = aspec.env
    phi = _parse_map(data["map"], ctx, env)
    k = int(data["order"])
    phik = prolong_map(phi, k, ctx)
    pulled = phik.pullback(parse_expr(str(data["source"]), ctx, env))
    target = parse_expr(str(data["target"]), ctx, env).as_poly()
    q = pulled.num.try_div(target)
    if q is None:
        return CheckResult(False, "pullback numerator is not a multiple of target")
    if len(q.t) != 1:
        return CheckResult(False, f"cofactor {q} is not a unit monomial")
    return CheckResult(True)


def check_map_roundtrip_claim(data, aspec, catalog, rng) -> CheckResult:
    ctx = aspec.algebra.ctx
    phi = _parse_map(data["map"], ctx, aspec.env)
    k = int(data["order"])
    phik = prolong_map(phi, k, ctx)
    # functoriality: prolonging the composition equals composing prolongations
    comp = phi.then(phi)
    comp_k = prolong_map(comp, k, ctx)
    both = phik.then(phik)
    for v, img in comp_k.images.items():
        if both.images[v] != img:
            return CheckResult(False, "prolongation does not commute with composition")
    power = int(data.get("power", 4))
    acc = phik
    for _ in range(power - 1):
        acc = acc.then(phik)
    if not acc.is_identity():
        return CheckResult(False, f"map^{power} is not the identity on J^{k}")
    return CheckResult(True)


def check_twistor_claim(data, aspec, catalog, rng) -> CheckResult:
    """Push the 3D sp(4) action to Darboux coordinates, prolong to J^2,
    straighten by first integrals, project along the new base direction and
    verify the result is conformal Killing for the stated metric."""
    a5 = catalog.algebras["L5"]
    ctx1 = JetContext(num_dependent=1, max_order=6, allow_q=True)
    P = lambda s: parse_expr(s, ctx1)
    Y2 = jet(0, 2)
    darboux = JetMap((X, Y, Z), (X, Y, Y1), {
        X: a5.expr("y"), Y: a5.expr("x + y*z"), Y1: a5.expr("2*z")})
    darboux.inverse = JetMap((X, Y, Y1), (X, Y, Z), {
        X: P("y - x*y1/2"), Y: P("x"), Z: P("y1/2")})
    if not darboux.check_inverse():
        return CheckResult(False, "Darboux change of coordinates is not invertible")
    contact_fields = []
    for g in a5.algebra.generators:
        pushed = pushforward(g, darboux)
        from ..jetspace import contact_field

        contact_fields.append(contact_field(pushed.coeffs))
    coords4 = (X, Y, Y1, Y2)
    straighten = JetMap(coords4, (X, Y, Z, Q), {
        X: P("y - x*y1 + x^2*y2/2"), Y: P("y1 - x*y2"), Z: P("y2"), Q: P("x")})
    straighten.inverse = JetMap((X, Y, Z, Q), coords4, {
        X: P("q"), Y: P("x + q*y + q^2*z/2"), Y1: P("y + q*z"), Y2: P("z")})
    if not straighten.check_inverse():
        return CheckResult(False, "straightening map is not invertible")
    projected = []
    zero = RatFun(Poly())
    qsub = {Q: RatFun(Poly())}
    for i, cf in enumerate(contact_fields):
        lifted = VectorField("generic", coords4,
                             tuple(prolong(cf, 2, ctx1).images[v] for v in coords4))
        pushed = pushforward(lifted, straighten)
        new_coeffs = []
        for v, c in zip(pushed.coords[:3], pushed.coeffs[:3]):
            cq = c.substitute(qsub)
            if cq != c:
                return CheckResult(False, f"X{i+1} is not projectable along d_q")
            new_coeffs.append(cq)
        projected.append(point_field(new_coeffs, num_dependent=2))
    comps = {}
    for key, src in data["metric"].items():
        i, j = (int(p) for p in str(key).split(","))
        comps[(min(i, j), max(i, j))] = parse_expr(
            str(src), JetContext(num_dependent=2, max_order=2))
    return killing_check(projected, Metric(comps), conformal=True)


def check_det_system_claim(data, aspec, catalog, rng) -> CheckResult:
    sys = determining_equations()
    env = ParseEnv(formals={"a", "b", "f"})
    ctx = JetContext(num_dependent=1, max_order=2)
    for key, src in data["solved"].items():
        name, suffix = key.split("_")
        v = formal(name, suffix.count("x"), suffix.count("y"))
        want = parse_expr(str(src), ctx, env).as_poly()
        got = sys.solved.get(v)
        if got is None or got != want:
            return CheckResult(False, f"{key}: {got} != {want}")
    return CheckResult(True)


def check_det_compat_claim(data, aspec, catalog, rng) -> CheckResult:
    sys = determining_equations()
    cons = compatibility_constraints(sys)
    env = ParseEnv(formals={"a", "b", "f"})
    ctx = JetContext(num_dependent=1, max_order=2)
    expected = [parse_expr(str(s), ctx, env).as_poly()
                for s in data["expected"]]
    if len(cons) != len(expected):
        return CheckResult(False, f"{len(cons)} constraints, expected {len(expected)}")
    if not constraints_span_match(cons, expected):
        return CheckResult(False, "constraint spans differ")
    for c in cons:
        if c.is_zero():
            return CheckResult(False, "a computed constraint is trivially zero")
        if not substitute_f_partials(c, {("f", 0, 2): 0}).is_zero():
            return CheckResult(False, "constraint survives f_yy = 0")
    return CheckResult(True)


def check_det_translation_claim(data, aspec, catalog, rng) -> CheckResult:
    sys = determining_equations()
    rules = {}
    for eq in sys.equations:
        for v in eq.variables():
            if v[0] != 3:
                continue
            name, i, j = v[1], v[2], v[3]
            if name == "a":
                rules[v] = RatFun(Poly.const(1 if (i, j) == (0, 0) else 0))
            elif name == "b":
                rules[v] = RatFun(Poly())
            elif (i, j) != (0, 0):
                rules[v] = RatFun(Poly())
    for d, eq in enumerate(sys.equations):
        if not eq.substitute(rules).is_zero():
            return CheckResult(False, f"residual in the y1^{d} equation")
    return CheckResult(True)


KIND_CHECKERS = {
    "bracket-closure": check_bracket_closure,
    "relative": check_relative_claim,
    "absolute": check_absolute_claim,
    "derivation": check_derivation_claim,
    "identity": check_identity_claim,
    "rel-derivation": check_rel_derivation_claim,
    "conditional": check_conditional_claim,
    "equation": check_equation_claim,
    "orbit": check_orbit_claim,
    "locus-orbit": check_locus_orbit_claim,
    "lie-det": check_lie_det_claim,
    "killing": check_killing_claim,
    "stabilizer": check_stabilizer_claim,
    "dim-bound": check_dim_bound_claim,
    "jetmap-locus": check_jetmap_locus_claim,
    "map-roundtrip": check_map_roundtrip_claim,
    "twistor": check_twistor_claim,
    "det-system": check_det_system_claim,
    "det-compat": check_det_compat_claim,
    "det-translation": check_det_translation_claim,
}
