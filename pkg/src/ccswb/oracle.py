"""Brute-force machinery: exhaustive term enumeration, distinguishing-test
search, and cross-validation of the semantic deciders against it."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .lts import DEFAULT_STATE_CAP, cached_lts
from .preorders import SynthesisGap, check_witness, leq, synthesize_witness
from .syntax import (
    DIV,
    Sum,
    EMPTY_ENV,
    NIL,
    TAU,
    UNIT,
    Action,
    Env,
    Prefix,
    Term,
    is_ccsf,
    label_key,
    mk_sum,
    pretty,
    term_key,
    visible_depth,
)
from .testing import must, must_sc


@dataclass(frozen=True)
class EnumSpec:
    """Shape of an exhaustive CCSf term corpus."""

    alphabet: tuple[str, ...]
    max_depth: int
    allow_unit: bool = True
    allow_div: bool = False
    max_width: int = 2

    def guards(self) -> list:
        out = [TAU]
        for name in sorted(self.alphabet):
            out.append(Action(name))
            out.append(Action(name, co=True))
        return sorted(out, key=label_key)


def term_size(t: Term) -> int:
    from .syntax import Prefix as _P, Sum as _S

    if isinstance(t, _P):
        return 1 + term_size(t.body)
    if isinstance(t, _S):
        return 1 + sum(term_size(p) for p in t.parts)
    return 1


def _prefix_depth(t: Term) -> int:
    from .syntax import Prefix as _P, Sum as _S

    if isinstance(t, _P):
        return 1 + _prefix_depth(t.body)
    if isinstance(t, _S):
        return max(_prefix_depth(p) for p in t.parts)
    return 0


def _max_size(spec: EnumSpec) -> int:
    # depth-0 sums of atoms (e.g. success plus divergence) seed the recurrence
    w = max(spec.max_width, 1)
    s = 1 + w
    for _ in range(spec.max_depth):
        s = 1 + w * (1 + s)
    return s


def enumerate_terms(spec: EnumSpec) -> Iterator[Term]:
    """All CCSf terms within the spec, smallest first, lazily.

    Terms come out in increasing node count (then canonical order), so a
    truncated consumer sees the simplest candidates first and deep specs
    stay affordable as long as the consumer stops early.
    """
    guards = spec.guards()
    atoms: list[Term] = [NIL]
    if spec.allow_unit:
        atoms.append(UNIT)
    if spec.allow_div:
        atoms.append(DIV)
    # pieces = candidate sum parts (no Nil, no nested sums), grouped by size
    pieces_by_size: dict[int, list[Term]] = {1: [t for t in atoms if not isinstance(t, type(NIL))]}
    by_size: dict[int, list[Term]] = {1: sorted(atoms, key=term_key)}
    yield from by_size[1]
    for n in range(2, _max_size(spec) + 1):
        fresh: list[Term] = []
        for t in by_size.get(n - 1, ()):
            if _prefix_depth(t) < spec.max_depth:
                fresh.extend(Prefix(g, t) for g in guards)
        pieces_by_size[n] = list(fresh)
        if spec.max_width >= 2:
            sums: list[Term] = []
            sizes = [s for s in sorted(pieces_by_size) if s <= n - 2]

            def pick(target: int, chosen: list[Term], lo_key: tuple) -> None:
                if len(chosen) >= 2 and target == 0:
                    t = mk_sum(list(chosen))
                    if isinstance(t, Sum) and term_size(t) == n:
                        sums.append(t)
                    return
                if target <= 0 or len(chosen) >= spec.max_width:
                    return
                for s in sizes:
                    if s > target:
                        continue
                    for piece in pieces_by_size.get(s, ()):
                        k = (s,) + term_key(piece)
                        if k <= lo_key:
                            continue
                        chosen.append(piece)
                        pick(target - s, chosen, k)
                        chosen.pop()

            pick(n - 1, [], ())
            fresh = fresh + sums
        uniq = sorted(set(fresh), key=term_key)
        by_size[n] = uniq
        yield from uniq


def count_terms(spec: EnumSpec) -> int:
    return sum(1 for _ in enumerate_terms(spec))


def sample_terms(spec: EnumSpec, n: int, seed: int) -> list[Term]:
    pool = list(enumerate_terms(spec))
    rng = random.Random(seed)
    return [pool[rng.randrange(len(pool))] for _ in range(n)]


def det_stable_servers(alphabet: Iterable[Action], max_depth: int, max_width: int = 2) -> Iterator[Term]:
    """Tau-free deterministic sums of distinct prefixes: the canonical shape
    of satisfying servers, used by the bounded usability oracle."""
    acts = sorted(alphabet, key=label_key)
    levels: list[list[Term]] = [[NIL]]
    for d in range(1, max_depth + 1):
        prev = levels[d - 1]
        out: list[Term] = [NIL]

        def combos(start: int, chosen: list[Term]) -> None:
            if chosen:
                out.append(mk_sum(list(chosen)))
            if len(chosen) >= max_width:
                return
            for i in range(start, len(acts)):
                for cont in prev:
                    chosen.append(Prefix(acts[i], cont))
                    combos(i + 1, chosen)
                    chosen.pop()

        combos(0, [])
        levels.append(list(dict.fromkeys(out)))
    yield from sorted(dict.fromkeys(levels[max_depth]), key=term_key)


def search_satisfying_server(
    r: Term,
    env: Env = EMPTY_ENV,
    max_depth: Optional[int] = None,
    max_width: Optional[int] = None,
    state_cap: int = DEFAULT_STATE_CAP,
) -> Optional[Term]:
    """First enumerated deterministic stable server that must-satisfies `r`.

    A server branch nested below the client's visible depth can never be
    engaged, so truncating the search there keeps it exhaustive for finite
    clients while the enumeration stays desk-sized.
    """
    lts = cached_lts(r, env, state_cap)
    co_alpha = sorted({a.complement() for a in lts.alphabet()}, key=label_key)
    if max_depth is None:
        max_depth = min(4, visible_depth(r)) if is_ccsf(r, env) else 4
    if max_width is None:
        if all(len(edges) <= 1 for edges in lts.edges):
            # a chain client meets one stable state per run; a second server
            # branch can never fire
            max_width = 1
        else:
            max_width = min(2, len(co_alpha)) if co_alpha else 1
    for server in det_stable_servers(co_alpha, max_depth, max_width):
        if must(server, r, env, state_cap).holds:
            return server
    return None


def default_test_spec(p: Term, q: Term, env: Env = EMPTY_ENV) -> EnumSpec:
    """Test processes as deep as the subjects plus room for the success and
    divergence guards the standard witness shapes use."""
    lts1, lts2 = cached_lts(p, env), cached_lts(q, env)
    names = tuple(sorted({a.name for a in (lts1.alphabet() | lts2.alphabet())}))
    if is_ccsf(p, env) and is_ccsf(q, env):
        depth = min(max(visible_depth(p), visible_depth(q)) + 2, 3)
    else:
        depth = 3
    return EnumSpec(alphabet=names, max_depth=depth, allow_unit=True, allow_div=True, max_width=2)


def refute_by_search(
    kind: str,
    p: Term,
    q: Term,
    env: Env = EMPTY_ENV,
    spec: Optional[EnumSpec] = None,
    limit: Optional[int] = None,
    state_cap: int = DEFAULT_STATE_CAP,
) -> Optional[Term]:
    """First enumerated test passed with p but not q, else None within spec.

    `limit` truncates the candidate list (smallest terms first); absence of a
    witness is then evidence only up to that bound.
    """
    if spec is None:
        spec = default_test_spec(p, q, env)
    for i, t in enumerate(enumerate_terms(spec)):
        if limit is not None and i >= limit:
            break
        if check_witness(kind, p, q, t, env, state_cap):
            return t
    return None


@dataclass
class SweepRecord:
    kind: str
    left: Term
    right: Term
    holds: bool
    witness: Optional[Term]
    agree: bool

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "left": pretty(self.left),
            "right": pretty(self.right),
            "decided": self.holds,
            "agree": self.agree,
        }
        if self.witness is not None:
            out["witness"] = pretty(self.witness)
        return out


@dataclass
class SweepReport:
    records: list[SweepRecord] = field(default_factory=list)

    @property
    def disagreements(self) -> list[SweepRecord]:
        return [r for r in self.records if not r.agree]

    @property
    def ok(self) -> bool:
        return not self.disagreements


def pass_table(kind: str, terms: list[Term], tests: list[Term], env: Env = EMPTY_ENV,
               state_cap: int = DEFAULT_STATE_CAP) -> dict[Term, int]:
    """Bitmask per term: which tests it passes in the role fixed by `kind`.

    Row inclusion over the test set is exactly the defining quantification of
    the preorder, restricted to that finite set of tests.
    """
    rows: dict[Term, int] = {}
    for term in terms:
        bits = 0
        for i, t in enumerate(tests):
            if kind == "svr":
                passed = must(term, t, env, state_cap).holds
            elif kind == "clt":
                passed = must(t, term, env, state_cap).holds
            else:
                passed = must_sc(term, t, env, state_cap).holds
            if passed:
                bits |= 1 << i
        rows[term] = bits
    return rows


def cross_validate(
    kind: str,
    corpus: Iterable[Term],
    env: Env = EMPTY_ENV,
    tests: Optional[list[Term]] = None,
    test_spec: Optional[EnumSpec] = None,
    test_limit: int = 1500,
    pair_cap: Optional[int] = None,
    seed: int = 0,
    synthesize: bool = True,
    state_cap: int = DEFAULT_STATE_CAP,
) -> SweepReport:
    """Check every ordered corpus pair against the bounded definitional oracle.

    A positive semantic verdict must leave no distinguishing test in the pool;
    a refutation must produce a verified witness, synthesized from the failing
    clause where covered and pulled from the pool otherwise.
    """
    terms = list(dict.fromkeys(corpus))
    if tests is None:
        if test_spec is None:
            names = tuple(sorted({a.name for t in terms for a in cached_lts(t, env).alphabet()}))
            depth = min(3, max((visible_depth(t) for t in terms), default=0) + 2)
            test_spec = EnumSpec(alphabet=names or ("a",), max_depth=depth,
                                 allow_unit=True, allow_div=True, max_width=2)
        tests = []
        for i, t in enumerate(enumerate_terms(test_spec)):
            if i >= test_limit:
                break
            tests.append(t)
    rows = pass_table(kind, terms, tests, env, state_cap)
    pairs = [(a, b) for a in terms for b in terms]
    if pair_cap is not None and len(pairs) > pair_cap:
        rng = random.Random(seed)
        pairs = [pairs[rng.randrange(len(pairs))] for _ in range(pair_cap)]
    report = SweepReport()
    for a, b in pairs:
        verdict = leq(kind, a, b, env, state_cap=state_cap)
        distinguishing = rows[a] & ~rows[b]
        witness: Optional[Term] = None
        if verdict.holds:
            agree = distinguishing == 0
            if not agree:
                witness = tests[(distinguishing & -distinguishing).bit_length() - 1]
        else:
            if synthesize:
                try:
                    witness = synthesize_witness(kind, a, b, env, verdict, state_cap)
                except SynthesisGap:
                    witness = None
            if witness is None and distinguishing:
                witness = tests[(distinguishing & -distinguishing).bit_length() - 1]
            agree = witness is not None and check_witness(kind, a, b, witness, env, state_cap)
        report.records.append(SweepRecord(kind, a, b, verdict.holds, witness, agree))
    return report
