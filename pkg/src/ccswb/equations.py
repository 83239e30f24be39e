"""Axiom systems with two-sorted instantiation, saturation closure, and
constructive normalization of finite terms to peer and client normal forms.

Normalization is a constructive recursion (pairwise merging with derivative
unification, then saturation) rather than generic rewriting; its output is
validated semantically by the test suite, never assumed.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Union

from .syntax import (
    DIV,
    EMPTY_ENV,
    NIL,
    OK,
    TAU,
    UNIT,
    Action,
    Const,
    Div,
    Env,
    Nil,
    Ok,
    Prefix,
    Sum,
    Term,
    Unit,
    is_ccsf,
    label_key,
    mk_sum,
    pretty,
    term_key,
)

#: ready-set members: visible actions plus the success marker
FamLabel = Union[Action, Ok]
Family = frozenset[frozenset]


class NotCCSf(ValueError):
    """Normalization is defined on finite terms only."""


# ---------------------------------------------------------------------------
# Saturation
# ---------------------------------------------------------------------------


def saturate(family: Iterable[Iterable[FamLabel]]) -> Family:
    """Least union-closed and convex superset, by the constructive formula
    {Z | X <= Z <= union(family) for some member X}."""
    fam = [frozenset(x) for x in family]
    if not fam:
        return frozenset()
    universe = frozenset().union(*fam)
    out: set[frozenset] = set()
    rest_pool = sorted(universe, key=label_key)
    for x in fam:
        free = [a for a in rest_pool if a not in x]
        for mask in range(1 << len(free)):
            z = set(x)
            for i, a in enumerate(free):
                if mask >> i & 1:
                    z.add(a)
            out.add(frozenset(z))
    return frozenset(out)


def is_saturated(family: Family) -> bool:
    return family == saturate(family)


# ---------------------------------------------------------------------------
# Normal-form trees
# ---------------------------------------------------------------------------


class Pnf:
    """Base class of peer normal forms; `unit` is the optional +1 summand."""

    __slots__ = ()


@dataclass(frozen=True)
class PnfDiv(Pnf):
    unit: bool


@dataclass(frozen=True)
class PnfExt(Pnf):
    branches: tuple[tuple[Action, Pnf], ...]
    unit: bool

    def branch_map(self) -> dict[Action, Pnf]:
        return dict(self.branches)


@dataclass(frozen=True)
class PnfTau(Pnf):
    family: Family
    leaves: tuple[tuple[Action, Pnf], ...]
    unit: bool

    def leaf_map(self) -> dict[Action, Pnf]:
        return dict(self.leaves)


def _sorted_items(d: dict[Action, Pnf]) -> tuple[tuple[Action, Pnf], ...]:
    return tuple(sorted(d.items(), key=lambda kv: label_key(kv[0])))


def okify(n: Pnf) -> Pnf:
    """Add the success summand, pushing success down so the ok-propagation
    side condition keeps holding (repeated unit absorption under prefixes)."""
    if isinstance(n, PnfDiv):
        return PnfDiv(True)
    if isinstance(n, PnfExt):
        return PnfExt(_sorted_items({a: okify(c) for a, c in n.branches}), True)
    if isinstance(n, PnfTau):
        fam = frozenset(A | {OK} for A in n.family)
        return PnfTau(fam, _sorted_items({a: okify(c) for a, c in n.leaves}), True)
    raise TypeError(n)


def make_ext(branches: dict[Action, Pnf], unit: bool) -> PnfExt:
    if unit:
        branches = {a: okify(c) for a, c in branches.items()}
    return PnfExt(_sorted_items(branches), unit)


def make_tau(family: Iterable[Iterable[FamLabel]], leaves: dict[Action, Pnf],
             unit: bool) -> PnfTau:
    fam = saturate(family)
    labels = {a for A in fam for a in A if isinstance(a, Action)}
    leaves = {a: c for a, c in leaves.items() if a in labels}
    node = PnfTau(fam, _sorted_items(leaves), False)
    return okify(node) if unit else node  # type: ignore[return-value]


_ZERO = PnfExt((), False)


def pnf_can_ok(n: Pnf) -> bool:
    return n.unit  # type: ignore[union-attr]


# ---------------------------------------------------------------------------
# Merge machinery
# ---------------------------------------------------------------------------


def _strip(n: Pnf) -> Pnf:
    return replace(n, unit=False)  # type: ignore[arg-type]


def tau_single(n: Pnf) -> Pnf:
    """Normal form of a single internal step onto `n`."""
    if isinstance(n, PnfDiv):
        return n
    if isinstance(n, PnfExt):
        labels: set[FamLabel] = set(n.branch_map())
        if n.unit:
            labels.add(OK)
        # an internal commitment to deadlock keeps an explicit empty branch
        return PnfTau(frozenset({frozenset(labels)}), n.branches, False)
    if isinstance(n, PnfTau):
        return _strip(n) if n.unit else n
    raise TypeError(n)


def _unify(a: Pnf, b: Pnf) -> Pnf:
    """One continuation standing for two merged derivatives of an action."""
    if a == b:
        return a
    merged = plus_pnf(tau_single(a), tau_single(b))
    if pnf_can_ok(a) and pnf_can_ok(b):
        return okify(merged)
    return merged


def plus_pnf(n: Pnf, m: Pnf) -> Pnf:
    """Normal form of the external choice of two normal forms."""
    if n == _ZERO:
        return m
    if m == _ZERO:
        return n
    unit = pnf_can_ok(n) or pnf_can_ok(m)
    n0, m0 = _strip(n), _strip(m)
    out: Pnf
    if isinstance(n0, PnfDiv) or isinstance(m0, PnfDiv):
        # divergence absorbs any prefixed alternative
        out = PnfDiv(False)
    elif isinstance(n0, PnfExt) and isinstance(m0, PnfExt):
        nb, mb = n0.branch_map(), m0.branch_map()
        merged = {a: _unify(nb[a], mb[a]) if a in nb and a in mb else (nb.get(a) or mb[a])
                  for a in set(nb) | set(mb)}
        out = PnfExt(_sorted_items(merged), False)
    elif isinstance(n0, PnfTau) and isinstance(m0, PnfTau):
        nl, ml = n0.leaf_map(), m0.leaf_map()
        leaves = {a: _unify(nl[a], ml[a]) if a in nl and a in ml else (nl.get(a) or ml[a])
                  for a in set(nl) | set(ml)}
        out = make_tau(n0.family | m0.family, leaves, False)
    else:
        ext, tau = (n0, m0) if isinstance(n0, PnfExt) else (m0, n0)
        assert isinstance(ext, PnfExt) and isinstance(tau, PnfTau)
        fam_key = lambda A: tuple(sorted(label_key(x) for x in A))
        nonok_members = [A for A in tau.family if OK not in A]
        if nonok_members:
            b1 = min(nonok_members, key=fam_key)
        else:
            # Lifting the prefixes under a branch that can already succeed
            # shields their unsuccessful steps; the result can sit strictly
            # above the source whenever such a step exists.  Recorded so the
            # caller can tell exact outputs from best-effort ones.
            b1 = min(tau.family, key=fam_key)
            if any(not pnf_can_ok(c) for _, c in ext.branches):
                _MERGE_NOTES["lossy"] = True
        lm = tau.leaf_map()
        ext_b1 = make_ext({a: lm[a] for a in b1 if isinstance(a, Action)}, OK in b1)
        inner = plus_pnf(ext, ext_b1)
        out = plus_pnf(tau_single(inner), tau)
    return okify(out) if unit else out


_MERGE_NOTES: dict = {}


def normalize_pnf(t: Term, env: Env = EMPTY_ENV) -> Pnf:
    """Peer normal form of a finite term."""
    return _normalize(t, env)


def normalize_pnf_info(t: Term, env: Env = EMPTY_ENV) -> tuple[Pnf, bool]:
    """Normal form plus an exactness flag: False when the merge had to shield
    an unsuccessful visible step under a success-capable internal branch."""
    _MERGE_NOTES.clear()
    n = _normalize(t, env)
    return n, not _MERGE_NOTES.get("lossy", False)


def _normalize(t: Term, env: Env) -> Pnf:
    if not is_ccsf(t, env):
        raise NotCCSf(f"not a finite term: {pretty(t)}")

    def go(t: Term) -> Pnf:
        if isinstance(t, Nil):
            return _ZERO
        if isinstance(t, Unit):
            return PnfExt((), True)
        if isinstance(t, Div):
            return PnfDiv(False)
        if isinstance(t, Prefix):
            body = go(t.body)
            if isinstance(t.guard, Action):
                return make_ext({t.guard: body}, False)
            return tau_single(body)
        if isinstance(t, Sum):
            acc = go(t.parts[0])
            for p in t.parts[1:]:
                acc = plus_pnf(acc, go(p))
            return acc
        raise NotCCSf(f"not a finite term: {pretty(t)}")

    return go(t)


def pnf_to_term(n: Pnf) -> Term:
    """Render a normal form back into the term syntax; the success marker in
    a branch set renders as a 1 summand of that branch."""
    if isinstance(n, PnfDiv):
        return mk_sum([DIV, UNIT]) if n.unit else DIV
    if isinstance(n, PnfExt):
        parts: list[Term] = [Prefix(a, pnf_to_term(c)) for a, c in n.branches]
        if n.unit:
            parts.append(UNIT)
        return mk_sum(parts)
    if isinstance(n, PnfTau):
        lm = n.leaf_map()
        parts = []
        for A in sorted(n.family, key=lambda A: tuple(sorted(label_key(x) for x in A))):
            branch = [UNIT if isinstance(lab, Ok) else Prefix(lab, pnf_to_term(lm[lab]))
                      for lab in sorted(A, key=label_key)]
            parts.append(Prefix(TAU, mk_sum(branch)))
        if n.unit:
            parts.append(UNIT)
        return mk_sum(parts)
    raise TypeError(n)


def check_pnf(n: Pnf) -> list[str]:
    """Structural validity report; empty means well formed."""
    errors: list[str] = []

    def go(n: Pnf, path: str) -> None:
        if isinstance(n, PnfDiv):
            return
        if isinstance(n, PnfExt):
            for a, c in n.branches:
                if n.unit and not pnf_can_ok(c):
                    errors.append(f"{path}: success summand without success under {a}")
                go(c, f"{path}.{a}")
            return
        if isinstance(n, PnfTau):
            if not n.family:
                errors.append(f"{path}: empty branch family")
            if not is_saturated(n.family):
                missing = saturate(n.family) - n.family
                ex = sorted("{" + ",".join(sorted(map(str, A))) + "}" for A in missing)
                errors.append(f"{path}: family not saturated, missing {', '.join(ex)}")
            labels = {a for A in n.family for a in A if isinstance(a, Action)}
            keys = {a for a, _ in n.leaves}
            if labels != keys:
                errors.append(f"{path}: leaves do not match the family labels")
            for a, c in n.leaves:
                if n.unit and not pnf_can_ok(c):
                    errors.append(f"{path}: success summand without success under {a}")
                go(c, f"{path}.{a}")
            return
        errors.append(f"{path}: not a normal form node")

    go(n, "nf")
    return errors


# ---------------------------------------------------------------------------
# Client normal forms
# ---------------------------------------------------------------------------


class Cnf:
    __slots__ = ()


@dataclass(frozen=True)
class CnfDiv(Cnf):
    pass


@dataclass(frozen=True)
class CnfUnit(Cnf):
    pass


@dataclass(frozen=True)
class CnfTauUnit(Cnf):
    pass


@dataclass(frozen=True)
class CnfExt(Cnf):
    branches: tuple[tuple[Action, "Cnf"], ...]

    def branch_map(self) -> dict[Action, "Cnf"]:
        return dict(self.branches)


@dataclass(frozen=True)
class CnfTau(Cnf):
    family: Family
    leaves: tuple[tuple[Action, "Cnf"], ...]
    tau_unit: bool

    def leaf_map(self) -> dict[Action, "Cnf"]:
        return dict(self.leaves)


def _pnf_to_cnf(n: Pnf) -> Cnf:
    if pnf_can_ok(n):
        return CnfUnit()
    if isinstance(n, PnfDiv):
        return CnfDiv()
    if isinstance(n, PnfExt):
        return CnfExt(tuple(sorted(((a, _pnf_to_cnf(c)) for a, c in n.branches),
                                   key=lambda kv: label_key(kv[0]))))
    assert isinstance(n, PnfTau)
    plain = frozenset(A for A in n.family if OK not in A)
    if not plain:
        return CnfTauUnit()
    lm = n.leaf_map()
    labels = {a for A in plain for a in A}
    leaves = tuple(sorted(((a, _pnf_to_cnf(lm[a])) for a in labels),
                          key=lambda kv: label_key(kv[0])))
    return CnfTau(plain, leaves, tau_unit=any(OK in A for A in n.family))


def normalize_cnf(t: Term, env: Env = EMPTY_ENV) -> Cnf:
    """Client normal form: the peer normal form simplified by absorbing every
    sibling of an immediate success (x + 1 = 1)."""
    return _pnf_to_cnf(normalize_pnf(t, env))


def cnf_to_term(n: Cnf) -> Term:
    if isinstance(n, CnfDiv):
        return DIV
    if isinstance(n, CnfUnit):
        return UNIT
    if isinstance(n, CnfTauUnit):
        return Prefix(TAU, UNIT)
    if isinstance(n, CnfExt):
        return mk_sum([Prefix(a, cnf_to_term(c)) for a, c in n.branches])
    if isinstance(n, CnfTau):
        lm = n.leaf_map()
        parts: list[Term] = []
        for A in sorted(n.family, key=lambda A: tuple(sorted(label_key(x) for x in A))):
            parts.append(Prefix(TAU, mk_sum([Prefix(a, cnf_to_term(lm[a]))
                                             for a in sorted(A, key=label_key)])))
        if n.tau_unit:
            parts.append(Prefix(TAU, UNIT))
        return mk_sum(parts)
    raise TypeError(n)


def check_cnf(n: Cnf) -> list[str]:
    errors: list[str] = []

    def go(n: Cnf, path: str) -> None:
        if isinstance(n, (CnfDiv, CnfUnit, CnfTauUnit)):
            return
        if isinstance(n, CnfExt):
            for a, c in n.branches:
                go(c, f"{path}.{a}")
            return
        if isinstance(n, CnfTau):
            if not n.family:
                errors.append(f"{path}: empty branch family")
            for A in n.family:
                if any(isinstance(x, Ok) for x in A):
                    errors.append(f"{path}: success marker inside a client family")
            if not is_saturated(n.family):
                errors.append(f"{path}: family not saturated")
            labels = {a for A in n.family for a in A}
            if labels != {a for a, _ in n.leaves}:
                errors.append(f"{path}: leaves do not match the family labels")
            for a, c in n.leaves:
                go(c, f"{path}.{a}")
            return
        errors.append(f"{path}: not a client normal form node")

    go(n, "nf")
    return errors


# ---------------------------------------------------------------------------
# Server-side normalization (success erased first)
# ---------------------------------------------------------------------------


def erase_units(t: Term) -> Term:
    """1 = 0 for servers; the success operator plays no server role."""
    if isinstance(t, Unit):
        return NIL
    if isinstance(t, Prefix):
        return Prefix(t.guard, erase_units(t.body))
    if isinstance(t, Sum):
        return mk_sum(erase_units(p) for p in t.parts)
    return t


def normalize_snf(t: Term, env: Env = EMPTY_ENV) -> Pnf:
    """Server normal form: erase success (it plays no server role), then
    apply the shared normalizer; deadlock commitments stay explicit empty
    branch sets, so nothing client-specific is assumed."""
    return _normalize(erase_units(t), env)


# ---------------------------------------------------------------------------
# Axiom schemas and instantiation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AxiomSchema:
    name: str
    theories: tuple[str, ...]  # subset of ("svr", "clt", "p2p") where postulated
    direction: str  # "leq" | "eq"
    variables: tuple[tuple[str, str], ...]  # (name, sort) with sort any|nook|mu
    build: Callable[[dict], tuple[Term, Term]]


def _ax(name: str, theories: tuple[str, ...], direction: str, variables, build) -> AxiomSchema:
    return AxiomSchema(name, theories, direction, tuple(variables), build)


def _p(g, t: Term) -> Term:
    return Prefix(g, t)


ALL = ("svr", "clt", "p2p")

STANDARD_AXIOMS: tuple[AxiomSchema, ...] = (
    _ax("S1a", ALL, "eq", [("mu", "mu"), ("x", "nook"), ("y", "any")],
        lambda s: (mk_sum([_p(s["mu"], s["x"]), _p(s["mu"], s["y"])]),
                   _p(s["mu"], mk_sum([_p(TAU, s["x"]), _p(TAU, s["y"])])))),
    _ax("S1b", ALL, "leq", [("x", "any")],
        lambda s: (_p(TAU, s["x"]), _p(TAU, _p(TAU, s["x"])))),
    _ax("S2", ALL, "eq", [("x", "nook"), ("y", "nook")],
        lambda s: (mk_sum([s["x"], _p(TAU, s["y"])]),
                   mk_sum([_p(TAU, mk_sum([s["x"], s["y"]])), _p(TAU, s["y"])]))),
    _ax("S3", ALL, "eq", [("mu", "mu"), ("x", "any"), ("y", "any"), ("z", "nook")],
        lambda s: (mk_sum([_p(s["mu"], s["x"]), _p(TAU, mk_sum([_p(s["mu"], s["y"]), s["z"]]))]),
                   _p(TAU, mk_sum([_p(s["mu"], s["x"]), _p(s["mu"], s["y"]), s["z"]])))),
    _ax("S4", ALL, "leq", [("x", "any"), ("y", "any")],
        lambda s: (mk_sum([_p(TAU, s["x"]), _p(TAU, s["y"])]), s["x"])),
    _ax("S5", ALL, "leq", [("x", "any")], lambda s: (DIV, s["x"])),
)

SVR_AXIOMS: tuple[AxiomSchema, ...] = (
    _ax("SVR1", ("svr",), "eq", [], lambda s: (UNIT, NIL)),
)

CLT_AXIOMS: tuple[AxiomSchema, ...] = (
    _ax("Za", ("clt", "p2p"), "leq", [], lambda s: (_p(TAU, NIL), DIV)),
    _ax("Zb", ("clt", "p2p"), "leq", [("mu", "mu")], lambda s: (_p(s["mu"], NIL), NIL)),
    _ax("CLT1a", ("clt",), "leq", [("x", "any")], lambda s: (s["x"], UNIT)),
    _ax("CLT1b", ("clt",), "leq", [("x", "any")], lambda s: (UNIT, mk_sum([s["x"], UNIT]))),
    _ax("CLT1c", ("clt",), "leq", [("mu", "mu")], lambda s: (NIL, _p(s["mu"], UNIT))),
)

P2P_AXIOMS: tuple[AxiomSchema, ...] = (
    _ax("P2P1", ("p2p",), "leq", [], lambda s: (NIL, UNIT)),
    _ax("P2P2", ("p2p",), "leq", [("mu", "mu"), ("x", "any")],
        lambda s: (_p(s["mu"], mk_sum([UNIT, s["x"]])), mk_sum([UNIT, _p(s["mu"], s["x"])]))),
    _ax("P2P3", ("p2p",), "leq", [("mu", "mu"), ("x", "any"), ("y", "any")],
        lambda s: (mk_sum([_p(s["mu"], mk_sum([UNIT, s["x"]])), _p(s["mu"], mk_sum([UNIT, s["y"]]))]),
                   _p(s["mu"], mk_sum([UNIT, _p(TAU, s["x"]), _p(TAU, s["y"])])))),
)

DERIVED_AXIOMS: tuple[AxiomSchema, ...] = (
    _ax("D1", ("clt", "p2p"), "eq", [("x", "any"), ("y", "any")],
        lambda s: (mk_sum([_p(TAU, s["x"]), _p(TAU, s["y"])]),
                   _p(TAU, mk_sum([_p(TAU, s["x"]), _p(TAU, s["y"])])))),
    _ax("D2", ("clt", "p2p"), "eq", [("x", "nook"), ("y", "nook")],
        lambda s: (mk_sum([s["x"], _p(TAU, mk_sum([s["x"], s["y"]]))]),
                   _p(TAU, mk_sum([s["x"], s["y"]])))),
    _ax("D3", ("clt", "p2p"), "eq", [("mu", "mu"), ("x", "any")],
        lambda s: (mk_sum([_p(s["mu"], s["x"]), DIV]), DIV)),
    _ax("D4a", ("clt", "p2p"), "eq", [("x", "nook"), ("y", "any")],
        lambda s: (mk_sum([_p(TAU, s["x"]), _p(TAU, s["y"])]),
                   mk_sum([_p(TAU, s["x"]), _p(TAU, s["y"]),
                           _p(TAU, mk_sum([s["x"], s["y"]]))]))),
    _ax("D5a", ("clt", "p2p"), "eq", [("x", "any"), ("y", "nook"), ("z", "nook")],
        lambda s: (mk_sum([_p(TAU, s["x"]), _p(TAU, mk_sum([s["x"], s["y"], s["z"]]))]),
                   mk_sum([_p(TAU, s["x"]), _p(TAU, mk_sum([s["x"], s["y"]])),
                           _p(TAU, mk_sum([s["x"], s["y"], s["z"]]))]))),
    _ax("DZ1", ("clt", "p2p"), "leq", [("mu", "mu"), ("x", "any")],
        lambda s: (_p(s["mu"], NIL), _p(s["mu"], s["x"]))),
    _ax("DP1", ("clt", "p2p"), "eq", [("mu", "mu"), ("x", "any")],
        lambda s: (mk_sum([UNIT, _p(s["mu"], s["x"])]),
                   mk_sum([UNIT, _p(s["mu"], mk_sum([s["x"], UNIT]))]))),
    _ax("DP2", ("clt", "p2p"), "eq", [("x", "any"), ("y", "any")],
        lambda s: (_p(TAU, mk_sum([UNIT, _p(TAU, s["x"]), _p(TAU, s["y"])])),
                   mk_sum([_p(TAU, mk_sum([UNIT, s["x"]])), _p(TAU, mk_sum([UNIT, s["y"]]))]))),
    _ax("DP3", ("clt", "p2p"), "leq", [("mu", "mu"), ("x", "any")],
        lambda s: (_p(s["mu"], s["x"]), _p(s["mu"], mk_sum([UNIT, _p(TAU, s["x"])])))),
    _ax("D4b", ("clt", "p2p"), "eq", [("x", "nook"), ("y", "nook")],
        lambda s: (mk_sum([_p(TAU, mk_sum([s["x"], UNIT])), _p(TAU, mk_sum([s["y"], UNIT]))]),
                   mk_sum([_p(TAU, mk_sum([s["x"], UNIT])), _p(TAU, mk_sum([s["y"], UNIT])),
                           _p(TAU, mk_sum([s["x"], s["y"], UNIT]))]))),
    _ax("D5b", ("clt", "p2p"), "eq", [("x", "any"), ("y", "nook"), ("z", "any")],
        lambda s: (mk_sum([_p(TAU, s["x"]),
                           _p(TAU, mk_sum([s["x"], s["y"], UNIT, s["z"]]))]),
                   mk_sum([_p(TAU, s["x"]), _p(TAU, mk_sum([s["x"], s["y"], UNIT])),
                           _p(TAU, mk_sum([s["x"], s["y"], UNIT, s["z"]]))]))),
)

THEORY_AXIOMS: dict[str, tuple[AxiomSchema, ...]] = {
    "STD": STANDARD_AXIOMS,
    "SVR": STANDARD_AXIOMS + SVR_AXIOMS,
    "CLT": STANDARD_AXIOMS + CLT_AXIOMS,
    "P2P": STANDARD_AXIOMS + (CLT_AXIOMS[0], CLT_AXIOMS[1]) + P2P_AXIOMS,
    "Derived": DERIVED_AXIOMS,
}


@dataclass(frozen=True)
class GroundInstance:
    axiom: str
    direction: str
    lhs: Term
    rhs: Term

    def to_json(self) -> dict:
        return {
            "axiom": self.axiom,
            "direction": self.direction,
            "lhs": pretty(self.lhs),
            "rhs": pretty(self.rhs),
        }


_POOL_CACHE: dict[tuple, tuple[list[Term], list[Term]]] = {}


def _instance_pool(alphabet: tuple[str, ...], depth: int, pool_limit: int) -> tuple[list[Term], list[Term]]:
    from .lts import can_ok
    from .oracle import EnumSpec, enumerate_terms

    key = (alphabet, depth, pool_limit)
    got = _POOL_CACHE.get(key)
    if got is None:
        pool: list[Term] = []
        for i, t in enumerate(enumerate_terms(EnumSpec(alphabet, depth, allow_unit=True,
                                                       allow_div=True, max_width=2))):
            if i >= pool_limit:
                break
            pool.append(t)
        got = (pool, [t for t in pool if not can_ok(t)])
        _POOL_CACHE[key] = got
    return got


def instantiate_axioms(
    theory: str,
    alphabet: tuple[str, ...] = ("a", "b"),
    depth: int = 2,
    samples: int = 25,
    seed: int = 0,
    axioms: Optional[Iterable[AxiomSchema]] = None,
    pool_limit: int = 400,
) -> list[GroundInstance]:
    """Seeded ground instances respecting variable sorts: plain variables draw
    from the pool (smallest `pool_limit` terms of the corpus), success-free
    variables only from terms that cannot immediately succeed."""
    if samples <= 0:
        raise ValueError("samples must be positive")
    pool, nook_pool = _instance_pool(alphabet, depth, pool_limit)
    guards = [TAU] + [g for name in sorted(alphabet) for g in (Action(name), Action(name, True))]
    rng = random.Random(seed)
    out: list[GroundInstance] = []
    for schema in (axioms if axioms is not None else THEORY_AXIOMS[theory]):
        for _ in range(samples):
            subst: dict = {}
            for var, sort in schema.variables:
                if sort == "mu":
                    subst[var] = guards[rng.randrange(len(guards))]
                elif sort == "nook":
                    subst[var] = nook_pool[rng.randrange(len(nook_pool))]
                else:
                    subst[var] = pool[rng.randrange(len(pool))]
            lhs, rhs = schema.build(subst)
            out.append(GroundInstance(schema.name, schema.direction, lhs, rhs))
    return out


def check_instances(
    kind: str,
    instances: Iterable[GroundInstance],
    env: Env = EMPTY_ENV,
) -> list[tuple[GroundInstance, str]]:
    """Check ground (in)equations under the precongruence of `kind`; returns
    the violations (instance, failed direction)."""
    from .preorders import leq_plus

    failures: list[tuple[GroundInstance, str]] = []
    for inst in instances:
        if not leq_plus(kind, inst.lhs, inst.rhs, env).holds:
            failures.append((inst, "lhs<=rhs"))
        if inst.direction == "eq" and not leq_plus(kind, inst.rhs, inst.lhs, env).holds:
            failures.append((inst, "rhs<=lhs"))
    return failures


# ---------------------------------------------------------------------------
# Unusable-subterm simplification
# ---------------------------------------------------------------------------


def simplify_unusable(t: Term, env: Env = EMPTY_ENV) -> Term:
    """Rewrite prefixed subterms that no partner can satisfy toward 0; under a
    prefix the unusable continuation is interchangeable with deadlock."""
    from .usability import usable

    if not is_ccsf(t, env):
        raise NotCCSf(f"not a finite term: {pretty(t)}")

    def go(t: Term) -> Term:
        if isinstance(t, Prefix):
            body = go(t.body)
            if not isinstance(body, Nil) and not usable(body, env).usable:
                return Prefix(t.guard, NIL)
            return Prefix(t.guard, body)
        if isinstance(t, Sum):
            return mk_sum(go(p) for p in t.parts)
        return t

    return go(t)
