"""Catalog of algebra realizations, invariant loci and verification claims.

The dataset lives in YAML files next to this module (``data/``); see
``data/FORMAT.md`` for the record schema.  Loading is strict: every
cross-reference must resolve and every expression must parse, with the
failing record's location reported.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

import yaml

from ..chains import ChainRing, SeedSpec, RatRing
from ..errors import SchemaError
from . import samplers  # noqa: F401  (registers locus parametrizations)
from ..invariants import Algebra
from ..jetspace import JetContext, VectorField, contact_field, point_field
from ..parser import ParseEnv, parse_expr
from ..ratcore import KNOWN_EXTENSIONS, Poly, RatFun, VarId, jet

_JET_NAMES = {f"{b}{i}": jet(a, i) for a, b in enumerate("yz") for i in range(1, 21)}


@dataclass
class ChainSpec:
    id: str
    algebra: str
    seeds: list            # list of (def-or-expr, var name, quadratic flag)
    sampler: str = "direct"
    note: str = ""


@dataclass
class AlgebraSpec:
    """Catalog record for one algebra realization, with named expressions."""

    id: str
    name: str
    kind: str
    num_dependent: int
    extensions: tuple
    generator_exprs: list
    wparams: list
    weight_scheme: list
    defs: list                      # ordered (name, expr) pairs
    algebra: Algebra = None
    env: ParseEnv = None

    def expr(self, src: str) -> RatFun:
        return parse_expr(src, self.algebra.ctx, self.env)

    def poly(self, src: str) -> Poly:
        return self.expr(src).as_poly()

    def scheme_cocycle(self, wvals) -> list:
        """Expected weight entries for parameter values (None = unchecked)."""
        if not isinstance(wvals, (list, tuple)):
            wvals = [wvals]
        params = {p: Fraction(v) for p, v in zip(self.wparams, wvals)}
        env = ParseEnv(params=params)
        out = []
        for tmpl in self.weight_scheme:
            if tmpl is None:
                out.append(None)
            else:
                out.append(parse_expr(str(tmpl), self.algebra.ctx, env))
        return out


@dataclass
class InvariantClaim:
    """One verifiable statement; ``data`` holds kind-specific fields."""

    id: str
    kind: str
    algebra: Optional[str]
    section: str
    data: dict
    variants: list = field(default_factory=list)
    note: str = ""
    tags: list = field(default_factory=list)


@dataclass
class Catalog:
    algebras: dict
    chains: dict
    claims: list

    def chain_ring(self, chain_id: str) -> ChainRing:
        """Fresh reduction chain (chains hold lazy state, so no sharing)."""
        spec = self.chains.get(chain_id)
        if spec is None:
            raise SchemaError(f"unknown chain {chain_id!r}")
        aspec = self.algebras[spec.algebra]
        seeds = []
        for expr, varname, quadratic in spec.seeds:
            p = aspec.poly(expr)
            v = _JET_NAMES.get(varname)
            if v is None:
                raise SchemaError(f"chain {chain_id}: bad variable {varname!r}")
            seeds.append(SeedSpec(p, v, quadratic))
        return ChainRing(aspec.algebra.ctx, seeds, sampler=spec.sampler)

    def claim(self, claim_id: str) -> InvariantClaim:
        for c in self.claims:
            if c.id == claim_id:
                return c
        raise SchemaError(f"unknown claim {claim_id!r}")


def _data_path(name: str, root: Optional[str] = None) -> Path:
    if root is not None:
        return Path(root) / name
    return Path(str(importlib.resources.files("jetset.catalog") / "data" / name))


def _load_yaml(name: str, root: Optional[str]) -> object:
    path = _data_path(name, root)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return yaml.safe_load(fh)
    except FileNotFoundError:
        raise SchemaError(f"catalog file missing: {path}") from None
    except yaml.YAMLError as exc:
        raise SchemaError(f"{path}: {exc}") from None


def _require(record: dict, key: str, where: str):
    if key not in record:
        raise SchemaError(f"{where}: missing field {key!r}")
    return record[key]


def _build_algebra(rec: dict, where: str) -> AlgebraSpec:
    aid = _require(rec, "id", where)
    kind = _require(rec, "kind", where)
    dependents = _require(rec, "dependents", where)
    gens_src = _require(rec, "generators", where)
    ext_names = rec.get("extensions", [])
    try:
        extensions = tuple(KNOWN_EXTENSIONS[n] for n in ext_names)
    except KeyError as exc:
        raise SchemaError(f"{where}: unknown extension {exc}") from None
    ctx = JetContext(num_dependent=dependents, max_order=10,
                     extensions=extensions)
    spec = AlgebraSpec(
        id=aid, name=rec.get("name", aid), kind=kind,
        num_dependent=dependents, extensions=extensions,
        generator_exprs=gens_src, wparams=rec.get("wparams", []),
        weight_scheme=rec.get("weight_scheme", []), defs=[],
    )
    env = ParseEnv()
    fields = []
    ncoords = (2 if dependents == 1 else 3) if kind == "point" else 3
    for gi, coeffs in enumerate(gens_src):
        if len(coeffs) != ncoords:
            raise SchemaError(f"{where}: generator {gi+1} needs {ncoords} "
                              f"coefficients")
        try:
            parsed = [parse_expr(str(c), ctx, env) for c in coeffs]
            if kind == "contact":
                fields.append(contact_field(parsed))
            else:
                fields.append(point_field(parsed, num_dependent=dependents))
        except Exception as exc:
            raise SchemaError(f"{where}: generator {gi+1}: {exc}") from None
    algebra = Algebra(aid, kind, dependents, tuple(fields), ctx,
                      name=spec.name)
    spec.algebra = algebra
    spec.env = env
    for item in rec.get("defs", []):
        if not (isinstance(item, list) and len(item) == 2):
            raise SchemaError(f"{where}: defs entries are [name, expr] pairs")
        name, src = item
        try:
            env.defs[name] = parse_expr(str(src), ctx, env)
        except Exception as exc:
            raise SchemaError(f"{where}: def {name}: {exc}") from None
        spec.defs.append((name, str(src)))
    scheme = spec.weight_scheme
    if scheme and len(scheme) != len(fields):
        raise SchemaError(f"{where}: weight_scheme length != generator count")
    return spec


def load_catalog(root: Optional[str] = None) -> Catalog:
    """Load and validate the full dataset; raises SchemaError with location."""
    algebras = {}
    for i, rec in enumerate(_load_yaml("algebras.yaml", root) or []):
        where = f"algebras.yaml[{i}]"
        if not isinstance(rec, dict):
            raise SchemaError(f"{where}: expected a mapping")
        spec = _build_algebra(rec, where)
        if spec.id in algebras:
            raise SchemaError(f"{where}: duplicate algebra id {spec.id!r}")
        algebras[spec.id] = spec

    chains = {}
    for i, rec in enumerate(_load_yaml("chains.yaml", root) or []):
        where = f"chains.yaml[{i}]"
        cid = _require(rec, "id", where)
        alg = _require(rec, "algebra", where)
        if alg not in algebras:
            raise SchemaError(f"{where}: unknown algebra {alg!r}")
        seeds = []
        for s in _require(rec, "seeds", where):
            seeds.append((str(_require(s, "expr", where)),
                          str(_require(s, "var", where)),
                          bool(s.get("quadratic", False))))
        if cid in chains:
            raise SchemaError(f"{where}: duplicate chain id {cid!r}")
        chains[cid] = ChainSpec(cid, alg, seeds, rec.get("sampler", "direct"),
                                rec.get("note", ""))

    claims = []
    seen = set()
    for i, rec in enumerate(_load_yaml("claims.yaml", root) or []):
        where = f"claims.yaml[{i}]"
        cid = _require(rec, "id", where)
        kind = _require(rec, "kind", where)
        if cid in seen:
            raise SchemaError(f"{where}: duplicate claim id {cid!r}")
        seen.add(cid)
        alg = rec.get("algebra")
        if alg is not None and alg not in algebras:
            raise SchemaError(f"{where} ({cid}): unknown algebra {alg!r}")
        chain = rec.get("chain")
        if chain is not None and chain not in chains:
            raise SchemaError(f"{where} ({cid}): unknown chain {chain!r}")
        data = {k: v for k, v in rec.items()
                if k not in ("id", "kind", "algebra", "section", "variants",
                             "note", "tags")}
        claims.append(InvariantClaim(
            id=cid, kind=kind, algebra=alg,
            section=str(rec.get("section", "misc")), data=data,
            variants=rec.get("variants", []), note=rec.get("note", ""),
            tags=list(rec.get("tags", []))))
    catalog = Catalog(algebras, chains, claims)

    from .checkers import KIND_CHECKERS

    for c in claims:
        if c.kind not in KIND_CHECKERS:
            raise SchemaError(f"claim {c.id}: unknown kind {c.kind!r}")
    return catalog
