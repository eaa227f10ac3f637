"""Jet-space contexts, total derivative, vector fields and prolongation.

A jet space for m dependent variables (m = 1 or 2) carries coordinates
x, y, y1..yk (and z, z1..zk when m = 2).  Vector fields are stored by
their coefficients on a base space:

  point, m=1:    (xi, eta)            on (x, y)
  point, m=2:    (xi, eta, zeta)      on (x, y, z)
  contact, m=1:  (xi, eta, eta1)      on (x, y, y1)
  generic:       any coordinate tuple; brackets and pushforwards only

Prolongation follows the recursion phi^(i+1) = D(phi^(i)) - y_{i+1} D(xi)
per dependent variable, starting from eta (point) or eta1 (contact).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .errors import (
    NoInverse,
    OrderOverflow,
    PreconditionFailed,
    SingularMap,
    ZeroDenominator,
)
from .ratcore import (
    KNOWN_EXTENSIONS,
    ExtensionGen,
    Poly,
    Rat,
    RatFun,
    VarId,
    X, Y, Z, Q,
    base,
    jet,
    var_name,
)

ExprLike = Union[Poly, RatFun]


@dataclass(frozen=True)
class JetContext:
    """Ambient jet-space data: dependent count, order cap, extensions."""

    num_dependent: int = 1
    max_order: int = 8
    extensions: tuple[ExtensionGen, ...] = ()
    allow_q: bool = False

    @property
    def ext_names(self) -> frozenset:
        return frozenset(g.name for g in self.extensions)

    def extended(self, max_order: int) -> "JetContext":
        """Same context with a (not smaller) order cap."""
        return replace(self, max_order=max(max_order, self.max_order))

    def base_coords(self) -> tuple[VarId, ...]:
        return (X, Y, Z)[: 1 + self.num_dependent]

    def jet_coords(self, k: int) -> tuple[VarId, ...]:
        """Coordinates of J^k in matrix order: x, y(, z), then jets by order."""
        out = list(self.base_coords())
        for i in range(1, k + 1):
            for alpha in range(self.num_dependent):
                out.append(jet(alpha, i))
        return tuple(out)


def _ratfun_partial(e: ExprLike, v: VarId) -> RatFun:
    if isinstance(e, Poly):
        return RatFun(e.partial(v))
    dn = e.num.partial(v)
    dd = e.den.partial(v)
    if dd.is_zero():
        return RatFun(dn, e.den)
    return RatFun(dn * e.den - e.num * dd, e.den * e.den).trim()


def derive(e: ExprLike, img: Callable[[VarId], RatFun]) -> RatFun:
    """Apply the derivation sending each coordinate v to img(v).

    Extension generators are differentiated through the base-variable
    partials (which carry their gradient rule); formal variables f_S of an
    unknown function of (x, y) go to img(x)*f_Sx + img(y)*f_Sy.
    """
    variables = e.variables()
    result = RatFun(Poly())
    seen_base = set()
    for v in sorted(variables):
        if v[0] == 0 or v[0] == 2:
            for b in (X, Y, Z, Q):
                if b in seen_base:
                    continue
                if v == b or (v[0] == 2 and KNOWN_EXTENSIONS[v[1]].gradient.get(b)):
                    seen_base.add(b)
                    p = _ratfun_partial(e, b)
                    if not p.is_zero():
                        result = result + p * img(b)
        elif v[0] == 1:
            p = _ratfun_partial(e, v)
            if not p.is_zero():
                result = result + p * img(v)
        else:
            name, i, j = v[1], v[2], v[3]
            p = _ratfun_partial(e, v)
            if not p.is_zero():
                from .ratcore import formal

                shift = img(X) * RatFun(Poly.var(formal(name, i + 1, j))) + \
                    img(Y) * RatFun(Poly.var(formal(name, i, j + 1)))
                result = result + p * shift
    return result


def total_derivative(e: ExprLike, ctx: JetContext) -> ExprLike:
    """Total derivative D_x; raises OrderOverflow at the context order cap."""
    order = e.max_jet_order()
    if order >= ctx.max_order:
        raise OrderOverflow(
            f"expression of order {order} at context cap {ctx.max_order}")

    one = RatFun.const(1)

    def img(v: VarId) -> RatFun:
        if v == X:
            return one
        if v[0] == 0:
            if v == Q:
                raise PreconditionFailed("q is not a jet coordinate")
            return RatFun(Poly.var(jet(v[1] - 1, 1)))
        return RatFun(Poly.var(jet(v[1], v[2] + 1)))

    res = derive(e, img)
    if isinstance(e, Poly):
        return res.as_poly()
    return res


@dataclass(frozen=True)
class VectorField:
    """Vector field given by coefficients over an ordered coordinate tuple."""

    kind: str
    coords: tuple[VarId, ...]
    coeffs: tuple[RatFun, ...]

    def coeff(self, v: VarId) -> RatFun:
        return self.coeffs[self.coords.index(v)]

    @property
    def num_dependent(self) -> int:
        return len(self.coords) - 1 if self.kind == "point" else 1

    def directional(self, e: ExprLike) -> RatFun:
        """Derivative of a function of this field's own coordinates."""
        table = dict(zip(self.coords, self.coeffs))
        zero = RatFun(Poly())

        def img(v: VarId) -> RatFun:
            return table.get(v, zero)

        return derive(e, img)

    def __str__(self) -> str:
        parts = []
        for v, c in zip(self.coords, self.coeffs):
            if not c.is_zero():
                parts.append(f"({c})*d_{var_name(v)}")
        return " + ".join(parts) if parts else "0"


def point_field(coeffs: Sequence[ExprLike], num_dependent: int = 1) -> VectorField:
    """Point vector field on (x, y) or (x, y, z); base-variable coefficients."""
    coords = (X, Y, Z)[: 1 + num_dependent]
    cs = tuple(RatFun.of(c) for c in coeffs)
    if len(cs) != len(coords):
        raise ValueError("coefficient count does not match base dimension")
    allowed = set(coords)
    for c in cs:
        for v in c.variables():
            if v[0] == 1:
                raise PreconditionFailed(
                    "point-field coefficients must not involve jet variables")
            if v[0] == 0 and v not in allowed:
                raise PreconditionFailed(f"coefficient uses {var_name(v)}")
    return VectorField("point", coords, cs)


Y1 = jet(0, 1)


def contact_field(coeffs: Sequence[ExprLike]) -> VectorField:
    """Contact field (xi, eta, eta1) on (x, y, y1); validates the contact
    condition eta1 = D(eta) - y1 D(xi) through first order."""
    xi, eta, eta1 = (RatFun.of(c) for c in coeffs)
    y1 = RatFun(Poly.var(Y1))
    for c in (xi, eta, eta1):
        for v in c.variables():
            if v[0] == 1 and v != Y1 or v == Z or v == Q:
                raise PreconditionFailed("contact coefficients live on (x, y, y1)")

    def dx1(f: RatFun) -> RatFun:  # truncated total derivative on J^1
        return _ratfun_partial(f, X) + y1 * _ratfun_partial(f, Y)

    if _ratfun_partial(eta, Y1) != y1 * _ratfun_partial(xi, Y1):
        raise PreconditionFailed("contact condition fails: d(eta)/dy1 != y1*d(xi)/dy1")
    if eta1 != dx1(eta) - y1 * dx1(xi):
        raise PreconditionFailed("contact condition fails: eta1 != D(eta) - y1*D(xi)")
    return VectorField("contact", (X, Y, Y1), (xi, eta, eta1))


def generic_field(coords: Sequence[VarId], coeffs: Sequence[ExprLike]) -> VectorField:
    return VectorField("generic", tuple(coords), tuple(RatFun.of(c) for c in coeffs))


@dataclass(frozen=True)
class ProlongedField:
    """A point/contact field lifted to J^k; images for every coordinate."""

    base_field: VectorField
    order: int
    images: dict  # VarId -> RatFun

    def coeff(self, v: VarId) -> RatFun:
        return self.images[v]

    def jet_coeffs(self) -> dict:
        return {v: c for v, c in self.images.items() if v[0] == 1}

    def img(self, v: VarId) -> RatFun:
        try:
            return self.images[v]
        except KeyError:
            raise PreconditionFailed(
                f"prolongation order {self.order} has no coordinate "
                f"{var_name(v)}") from None


def prolong(Xf: VectorField, k: int, ctx: JetContext) -> ProlongedField:
    """Prolong a point or contact field to jet order k."""
    if ctx.max_order < k:
        raise OrderOverflow(f"context caps order at {ctx.max_order} < {k}")
    if Xf.kind == "point":
        m = len(Xf.coords) - 1
        xi = Xf.coeffs[0]
        images = {X: xi}
        dxi = total_derivative(xi, ctx)
        for alpha in range(m):
            images[base(1 + alpha)] = Xf.coeffs[1 + alpha]
            phi = Xf.coeffs[1 + alpha]
            for i in range(1, k + 1):
                phi = total_derivative(phi, ctx) - RatFun(Poly.var(jet(alpha, i))) * dxi
                images[jet(alpha, i)] = phi
        return ProlongedField(Xf, k, images)
    if Xf.kind == "contact":
        xi, eta, eta1 = Xf.coeffs
        images = {X: xi, Y: eta}
        if k >= 1:
            images[Y1] = eta1
        dxi = total_derivative(xi, ctx)
        phi = eta1
        for i in range(2, k + 1):
            phi = total_derivative(phi, ctx) - RatFun(Poly.var(jet(0, i))) * dxi
            images[jet(0, i)] = phi
        return ProlongedField(Xf, k, images)
    raise PreconditionFailed("only point and contact fields prolong")


def apply(Xk: ProlongedField, e: ExprLike) -> RatFun:
    """Directional derivative of e along the prolonged field."""
    order = e.max_jet_order() if isinstance(e, (Poly, RatFun)) else 0
    if order > Xk.order:
        raise PreconditionFailed(
            f"expression order {order} exceeds prolongation order {Xk.order}")
    return derive(e, Xk.img)


def lie_bracket(Xf: VectorField, Yf: VectorField) -> VectorField:
    """Commutator [X, Y], computed coefficientwise on the shared base."""
    if Xf.coords != Yf.coords:
        raise PreconditionFailed("bracket of fields on different spaces")
    coeffs = tuple(
        Xf.directional(cy) - Yf.directional(cx)
        for cx, cy in zip(Xf.coeffs, Yf.coeffs)
    )
    if Xf.kind == Yf.kind and Xf.kind == "point":
        return point_field(coeffs, num_dependent=len(Xf.coords) - 1)
    if Xf.kind == Yf.kind and Xf.kind == "contact":
        return contact_field(coeffs)
    return VectorField("generic", Xf.coords, coeffs)


# -- jet maps -------------------------------------------------------------


@dataclass
class JetMap:
    """Map between coordinate spaces: images of target coords in source vars."""

    src: tuple[VarId, ...]
    dst: tuple[VarId, ...]
    images: dict  # dst VarId -> RatFun in src vars
    inverse: Optional["JetMap"] = None

    def pullback(self, e: ExprLike) -> RatFun:
        """Substitute target coordinates of e by their images."""
        rules = {v: self.images[v] for v in self.images}
        return RatFun.of(e).substitute(rules)

    def then(self, second: "JetMap") -> "JetMap":
        """Composition self;second (apply self first)."""
        images = {v: self.pullback(img) for v, img in second.images.items()}
        inv = None
        if self.inverse is not None and second.inverse is not None:
            inv = second.inverse.then(self.inverse)
        return JetMap(self.src, second.dst, images, inv)

    def is_identity(self) -> bool:
        return all(self.images[v] == RatFun(Poly.var(v)) for v in self.dst)

    def check_inverse(self) -> bool:
        """Composition with the stored inverse reduces to the identity."""
        if self.inverse is None:
            raise NoInverse("map has no stored inverse")
        return self.then(self.inverse).is_identity() and \
            self.inverse.then(self).is_identity()


def prolong_map(phi: JetMap, k: int, ctx: JetContext) -> JetMap:
    """Extend a (contact or point) jet map to order k via Y_{i+1} = D(Y_i)/D(X)."""
    dx_img = total_derivative(phi.images[X], ctx)
    if dx_img.is_zero():
        raise SingularMap("D_x of the x-image vanishes")
    images = dict(phi.images)
    if Y1 not in images:
        images[Y1] = total_derivative(images[Y], ctx) / dx_img
    prev = images[Y1]
    for i in range(2, k + 1):
        v = jet(0, i)
        if v in images:
            prev = images[v]
            continue
        prev = total_derivative(prev, ctx) / dx_img
        images[v] = prev
    dst = (X, Y) + tuple(jet(0, i) for i in range(1, k + 1))
    inv = None
    if phi.inverse is not None:
        bare = JetMap(phi.inverse.src, phi.inverse.dst,
                      dict(phi.inverse.images), None)
        inv = prolong_map(bare, k, ctx)
    result = JetMap(phi.src, dst, images, inv)
    if inv is not None:
        inv.inverse = result
    return result


def pushforward(Xf: VectorField, phi: JetMap) -> VectorField:
    """Transport X through phi; requires the stored inverse."""
    if phi.inverse is None:
        raise NoInverse("pushforward requires an invertible map")
    back = {v: phi.inverse.images[v] for v in phi.src}
    coeffs = []
    for c in phi.dst:
        val = Xf.directional(phi.images[c])
        coeffs.append(val.substitute(back))
    return VectorField("generic", phi.dst, tuple(coeffs))
