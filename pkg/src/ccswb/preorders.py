"""Refinement preorders for servers, clients and peers, decided through their
trace/ready-set characterisations, plus distinguishing-test synthesis.

The decision walks the trace tree of both processes at once, carrying four
state sets per trace (weak and unsuccessful residuals of each side) together
with incrementally computed convergence and usability guards.  For finite
terms the walk is exhausted exactly; recursive terms get a depth-bounded
verdict that is reported as such.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .lts import DEFAULT_STATE_CAP, Lts, Trace, cached_lts
from .syntax import (
    DIV,
    EMPTY_ENV,
    NIL,
    TAU,
    UNIT,
    Action,
    Env,
    Prefix,
    Term,
    fresh_action,
    is_ccsf,
    label_key,
    mk_sum,
    pretty,
    visible_depth,
)
from .testing import Verdict, must, must_sc
from .usability import usable_set

KINDS = ("svr", "clt", "p2p")


class ModeError(ValueError):
    """Exact decision requested for terms outside the finite fragment."""


class SynthesisGap(RuntimeError):
    """No synthesis rule covers the refuting clause, or verification failed."""


@dataclass(frozen=True)
class FailingClause:
    clause: str  # usability_flow | convergence | acceptance_match | unsuccessful_trace | trace_flow
    part: str  # svr | clt | usmpo
    trace: Trace
    ready_set: Optional[frozenset[Action]] = None
    usable_actions: Optional[frozenset[Action]] = None

    def to_json(self) -> dict:
        out: dict = {
            "clause": self.clause,
            "part": self.part,
            "trace": [str(a) for a in self.trace],
        }
        if self.ready_set is not None:
            out["ready_set"] = sorted(str(a) for a in self.ready_set)
        if self.usable_actions is not None:
            out["usable_actions"] = sorted(str(a) for a in self.usable_actions)
        return out


@dataclass(frozen=True)
class RefinementVerdict:
    kind: str
    holds: bool
    mode: str  # "exact" | "bounded"
    bound: Optional[int] = None
    failing_clause: Optional[FailingClause] = None
    witness_test: Optional[Term] = None

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind, "holds": self.holds, "mode": self.mode}
        if self.bound is not None:
            out["bound"] = self.bound
        if self.failing_clause is not None:
            out["failing_clause"] = self.failing_clause.to_json()
        if self.witness_test is not None:
            out["witness_test"] = pretty(self.witness_test)
        return out


def _ready_key(rs: frozenset[Action]) -> tuple:
    return tuple(sorted(label_key(a) for a in rs))


@dataclass
class _Node:
    trace: Trace
    w1: frozenset[int]
    w2: frozenset[int]
    x1: frozenset[int]
    x2: frozenset[int]
    conv1: bool
    conv2: bool
    usb1: bool
    usb2: bool


class _Engine:
    def __init__(self, lts1: Lts, lts2: Lts, depth_cap: int, usb_depth: Optional[int] = None):
        self.lts1 = lts1
        self.lts2 = lts2
        self.depth_cap = depth_cap
        self.usb_depth = usb_depth
        self.alphabet = sorted(lts1.alphabet() | lts2.alphabet(), key=label_key)

    def root_node(self) -> _Node:
        l1, l2 = self.lts1, self.lts2
        w1 = l1.tau_closure(frozenset({l1.root}))
        w2 = l2.tau_closure(frozenset({l2.root}))
        x1 = l1.unsuccessful_closure(frozenset({l1.root}))
        x2 = l2.unsuccessful_closure(frozenset({l2.root}))
        return _Node(
            trace=(),
            w1=w1,
            w2=w2,
            x1=x1,
            x2=x2,
            conv1=l1.converges_state_set(w1),
            conv2=l2.converges_state_set(w2),
            usb1=l1.ok[l1.root] or usable_set(l1, x1, self.usb_depth)[0],
            usb2=l2.ok[l2.root] or usable_set(l2, x2, self.usb_depth)[0],
        )

    def child(self, node: _Node, a: Action) -> _Node:
        l1, l2 = self.lts1, self.lts2
        w1 = l1.tau_closure(l1.step(node.w1, a))
        w2 = l2.tau_closure(l2.step(node.w2, a))
        x1 = l1.unsuccessful_closure(l1.step(node.x1, a))
        x2 = l2.unsuccessful_closure(l2.step(node.x2, a))
        return _Node(
            trace=node.trace + (a,),
            w1=w1,
            w2=w2,
            x1=x1,
            x2=x2,
            conv1=node.conv1 and (not w1 or l1.converges_state_set(w1)),
            conv2=node.conv2 and (not w2 or l2.converges_state_set(w2)),
            usb1=node.usb1 and (not x1 or usable_set(l1, x1, self.usb_depth)[0]),
            usb2=node.usb2 and (not x2 or usable_set(l2, x2, self.usb_depth)[0]),
        )

    def usable_action(self, node: _Node, a: Action) -> bool:
        """Membership of `a` in the left process's usable actions after the
        current trace; valid under the guard usb1."""
        nxt = self.lts1.unsuccessful_closure(self.lts1.step(node.x1, a))
        return not nxt or usable_set(self.lts1, nxt, self.usb_depth)[0]

    def usable_actions_snapshot(self, node: _Node) -> frozenset[Action]:
        return frozenset(a for a in self.alphabet if self.usable_action(node, a))

    def nodes(self) -> Iterable[_Node]:
        """Breadth-first trace walk with subtree pruning on stabilized nodes."""
        root = self.root_node()
        queue = [root]
        seen = {self._node_key(root)}
        qi = 0
        while qi < len(queue):
            node = queue[qi]
            qi += 1
            yield node
            if len(node.trace) >= self.depth_cap:
                continue
            if not (node.w1 or node.w2 or node.x1 or node.x2):
                continue
            for a in self.alphabet:
                ch = self.child(node, a)
                if not (ch.w1 or ch.w2 or ch.x1 or ch.x2):
                    continue
                key = self._node_key(ch)
                if key not in seen:
                    seen.add(key)
                    queue.append(ch)

    @staticmethod
    def _node_key(node: _Node) -> tuple:
        return (node.w1, node.w2, node.x1, node.x2, node.conv1, node.conv2, node.usb1, node.usb2)

    # -- clause groups ------------------------------------------------------

    def clt_clauses(self, node: _Node) -> Optional[FailingClause]:
        if not node.usb1:
            return None
        if not node.usb2:
            return FailingClause("usability_flow", "clt", node.trace)
        acc2 = sorted(self.lts2.ready_sets_of(node.x2), key=_ready_key)
        if acc2:
            acc1 = self.lts1.ready_sets_of(node.x1)
            for B in acc2:
                if not any(
                    all(c in B or not self.usable_action(node, c) for c in A) for A in acc1
                ):
                    return FailingClause(
                        "acceptance_match", "clt", node.trace, B, self.usable_actions_snapshot(node)
                    )
        if node.x2 and not node.x1:
            return FailingClause("unsuccessful_trace", "clt", node.trace)
        return None

    def svr_clauses(self, node: _Node, include_trace_flow: bool = True) -> Optional[FailingClause]:
        if not node.conv1:
            return None
        if not node.conv2:
            return FailingClause("convergence", "svr", node.trace)
        acc2 = sorted(self.lts2.ready_sets_of(node.w2), key=_ready_key)
        if acc2:
            acc1 = self.lts1.ready_sets_of(node.w1)
            for B in acc2:
                if not any(A <= B for A in acc1):
                    return FailingClause("acceptance_match", "svr", node.trace, B)
        if include_trace_flow and node.w2 and not node.w1:
            return FailingClause("trace_flow", "svr", node.trace)
        return None

    def usmpo_clauses(self, node: _Node) -> Optional[FailingClause]:
        if not (node.conv1 and node.usb1):
            return None
        if not node.conv2:
            return FailingClause("convergence", "usmpo", node.trace)
        acc2 = sorted(self.lts2.ready_sets_of(node.w2), key=_ready_key)
        if acc2:
            acc1 = self.lts1.ready_sets_of(node.w1)
            for B in acc2:
                if not any(
                    all(c in B or not self.usable_action(node, c) for c in A) for A in acc1
                ):
                    return FailingClause(
                        "acceptance_match", "usmpo", node.trace, B, self.usable_actions_snapshot(node)
                    )
        if node.w2 and not node.w1:
            return FailingClause("trace_flow", "usmpo", node.trace)
        return None


def _prepare(kind: str, p: Term, q: Term, env: Env, bound: Optional[int], state_cap: int):
    if kind not in KINDS:
        raise ValueError(f"unknown preorder kind {kind!r}")
    lts1 = cached_lts(p, env, state_cap)
    lts2 = cached_lts(q, env, state_cap)
    finite = is_ccsf(p, env) and is_ccsf(q, env)
    if bound is None:
        if not finite:
            raise ModeError("exact decision requires finite terms; pass a bound")
        mode = "exact"
        depth_cap = max(visible_depth(p), visible_depth(q)) + 1
    else:
        mode = "bounded"
        depth_cap = bound
    return _Engine(lts1, lts2, depth_cap, usb_depth=None if bound is None else bound), mode


def _decide(
    kind: str,
    p: Term,
    q: Term,
    env: Env = EMPTY_ENV,
    bound: Optional[int] = None,
    state_cap: int = DEFAULT_STATE_CAP,
) -> RefinementVerdict:
    engine, mode = _prepare(kind, p, q, env, bound, state_cap)
    for node in engine.nodes():
        fail: Optional[FailingClause] = None
        if kind == "clt":
            fail = engine.clt_clauses(node)
        elif kind == "svr":
            fail = engine.svr_clauses(node)
        else:
            fail = engine.clt_clauses(node) or engine.usmpo_clauses(node)
        if fail is not None:
            return RefinementVerdict(kind, False, mode, bound, fail)
    return RefinementVerdict(kind, True, mode, bound)


def leq_svr(p: Term, q: Term, env: Env = EMPTY_ENV, bound: Optional[int] = None,
            state_cap: int = DEFAULT_STATE_CAP) -> RefinementVerdict:
    """Server refinement: every client satisfied by p is satisfied by q."""
    return _decide("svr", p, q, env, bound, state_cap)


def leq_clt(p: Term, q: Term, env: Env = EMPTY_ENV, bound: Optional[int] = None,
            state_cap: int = DEFAULT_STATE_CAP) -> RefinementVerdict:
    """Client refinement: every server satisfying p satisfies q."""
    return _decide("clt", p, q, env, bound, state_cap)


def leq_p2p(p: Term, q: Term, env: Env = EMPTY_ENV, bound: Optional[int] = None,
            state_cap: int = DEFAULT_STATE_CAP) -> RefinementVerdict:
    """Peer refinement: every peer mutually satisfied with p is with q."""
    return _decide("p2p", p, q, env, bound, state_cap)


def leq(kind: str, p: Term, q: Term, env: Env = EMPTY_ENV, bound: Optional[int] = None,
        state_cap: int = DEFAULT_STATE_CAP) -> RefinementVerdict:
    return _decide(kind, p, q, env, bound, state_cap)


def leq_svr_classical(p: Term, q: Term, env: Env = EMPTY_ENV,
                      state_cap: int = DEFAULT_STATE_CAP) -> bool:
    """Convergence-plus-ready-set-inclusion formulation, without the trace-flow
    clause; coincides with leq_svr on success-free finite terms."""
    engine, _ = _prepare("svr", p, q, env, None, state_cap)
    for node in engine.nodes():
        if engine.svr_clauses(node, include_trace_flow=False) is not None:
            return False
    return True


def leq_plus(kind: str, p: Term, q: Term, env: Env = EMPTY_ENV, bound: Optional[int] = None,
             state_cap: int = DEFAULT_STATE_CAP) -> RefinementVerdict:
    """The precongruence: the preorder applied under a fresh-success summand."""
    f = fresh_action([p, q], env)
    fp = mk_sum([Prefix(f, UNIT), p])
    fq = mk_sum([Prefix(f, UNIT), q])
    inner = _decide(kind, fp, fq, env, bound, state_cap)
    return RefinementVerdict(kind, inner.holds, inner.mode, bound, inner.failing_clause,
                             inner.witness_test)


# ---------------------------------------------------------------------------
# Pedagogical diagnostics: the two tentative client relations
# ---------------------------------------------------------------------------


def _diag(r1: Term, r2: Term, env: Env, relaxed: bool, state_cap: int) -> bool:
    engine, _ = _prepare("clt", r1, r2, env, None, state_cap)
    for node in engine.nodes():
        if not node.conv1:
            continue
        if not node.conv2:
            return False
        acc1 = engine.lts1.ready_sets_of(node.x1)
        for B in sorted(engine.lts2.ready_sets_of(node.x2), key=_ready_key):
            if relaxed:
                matched = any(
                    all(c in B or not (node.usb1 and engine.usable_action(node, c)) for c in A)
                    for A in acc1
                )
            else:
                matched = any(A <= B for A in acc1)
            if not matched:
                return False
    return True


def diag_sbad(r1: Term, r2: Term, env: Env = EMPTY_ENV, state_cap: int = DEFAULT_STATE_CAP) -> bool:
    """Convergence-guarded matching of unsuccessful ready sets by inclusion."""
    return _diag(r1, r2, env, relaxed=False, state_cap=state_cap)


def diag_sbad_prime(r1: Term, r2: Term, env: Env = EMPTY_ENV, state_cap: int = DEFAULT_STATE_CAP) -> bool:
    """Same, with the inclusion relaxed through the left usable actions."""
    return _diag(r1, r2, env, relaxed=True, state_cap=state_cap)


# ---------------------------------------------------------------------------
# Distinguishing-test synthesis
# ---------------------------------------------------------------------------


def _x_sets(lts: Lts, s: Trace) -> list[frozenset[int]]:
    """Unsuccessful residual sets along every prefix of s (length |s|+1)."""
    out = [lts.unsuccessful_closure(frozenset({lts.root}))]
    for a in s:
        out.append(lts.unsuccessful_closure(lts.step(out[-1], a)))
    return out


def _witness_or_nil(lts: Lts, states: frozenset[int]) -> Term:
    if not states:
        return NIL
    ok, wit = usable_set(lts, states)
    if not ok or wit is None:
        raise SynthesisGap("left residual unexpectedly unusable during synthesis")
    return wit


def _pick(actions: Iterable[Action]) -> Action:
    return sorted(actions, key=label_key)[0]


def _svr_witness(lts1: Lts, clause: FailingClause) -> Term:
    s = clause.trace
    if clause.clause == "convergence":
        end: Term = Prefix(TAU, UNIT)
    elif clause.clause == "acceptance_match":
        assert clause.ready_set is not None
        extra = sorted(
            {a for A in lts1.ready_sets_of(lts1.weak_after(s)) for a in A - clause.ready_set},
            key=label_key,
        )
        end = mk_sum(Prefix(a.complement(), UNIT) for a in extra)
    elif clause.clause == "trace_flow":
        end = NIL
    else:
        raise SynthesisGap(f"no server synthesis for clause {clause.clause}")
    t = end
    for a in reversed(s):
        t = mk_sum([Prefix(TAU, UNIT), Prefix(a.complement(), t)])
    return t


def _clt_witness(lts1: Lts, clause: FailingClause) -> Term:
    s = clause.trace
    xs = _x_sets(lts1, s)
    if clause.clause == "usability_flow":
        end: Term = _witness_or_nil(lts1, xs[len(s)])
        upto = len(s)
    elif clause.clause == "acceptance_match":
        assert clause.ready_set is not None and clause.usable_actions is not None
        branches: dict[Action, Term] = {}
        for A in lts1.ready_sets_of(xs[len(s)]):
            a = _pick((A & clause.usable_actions) - clause.ready_set)
            if a not in branches:
                nxt = lts1.unsuccessful_closure(lts1.step(xs[len(s)], a))
                branches[a] = _witness_or_nil(lts1, nxt)
        end = mk_sum(Prefix(a.complement(), cont) for a, cont in branches.items())
        upto = len(s)
    elif clause.clause == "unsuccessful_trace":
        m = max((k for k in range(len(s) + 1) if xs[k]), default=-1)
        if m < 0:
            return DIV
        end = mk_sum([Prefix(TAU, _witness_or_nil(lts1, xs[m])), Prefix(s[m].complement(), DIV)])
        upto = m
    else:
        raise SynthesisGap(f"no client synthesis for clause {clause.clause}")
    t = end
    for k in reversed(range(upto)):
        t = mk_sum([Prefix(TAU, _witness_or_nil(lts1, xs[k])), Prefix(s[k].complement(), t)])
    return t


def _p2p_clt_witness(lts1: Lts, clause: FailingClause) -> Term:
    """Success-capable variants of the client chains, usable as peers."""
    s = clause.trace
    xs = _x_sets(lts1, s)

    def stage(k: int, nxt: Term) -> Term:
        parts: list[Term] = [UNIT, Prefix(s[k].complement(), nxt)]
        if xs[k]:
            parts.append(Prefix(TAU, mk_sum([_witness_or_nil(lts1, xs[k]), UNIT])))
        return mk_sum(parts)

    if clause.clause == "usability_flow":
        end: Term = mk_sum([UNIT, _witness_or_nil(lts1, xs[len(s)])]) if xs[len(s)] else UNIT
        upto = len(s)
    elif clause.clause == "acceptance_match":
        assert clause.ready_set is not None and clause.usable_actions is not None
        branches: dict[Action, Term] = {}
        for A in lts1.ready_sets_of(xs[len(s)]):
            a = _pick((A & clause.usable_actions) - clause.ready_set)
            if a not in branches:
                nxt = lts1.unsuccessful_closure(lts1.step(xs[len(s)], a))
                branches[a] = mk_sum([UNIT, _witness_or_nil(lts1, nxt)])
        end = mk_sum([UNIT] + [Prefix(a.complement(), cont) for a, cont in branches.items()])
        upto = len(s)
    elif clause.clause == "unsuccessful_trace":
        m = max((k for k in range(len(s) + 1) if xs[k]), default=-1)
        if m < 0:
            return mk_sum([UNIT, DIV])
        parts = [UNIT, Prefix(s[m].complement(), DIV)]
        if xs[m]:
            parts.append(Prefix(TAU, mk_sum([_witness_or_nil(lts1, xs[m]), UNIT])))
        end = mk_sum(parts)
        upto = m
    else:
        raise SynthesisGap(f"no peer synthesis for client clause {clause.clause}")
    t = end
    for k in reversed(range(upto)):
        t = stage(k, t)
    return t


def _p2p_usmpo_witness(lts1: Lts, clause: FailingClause) -> Term:
    """Peer chains with tau-guarded success escapes; sound under the
    convergence half of the guard."""
    s = clause.trace
    xs = _x_sets(lts1, s)

    def commit(k: int) -> Term:
        if xs[k]:
            return Prefix(TAU, mk_sum([_witness_or_nil(lts1, xs[k]), UNIT]))
        return Prefix(TAU, UNIT)

    if clause.clause == "convergence":
        end: Term = commit(len(s))
    elif clause.clause == "acceptance_match":
        assert clause.ready_set is not None and clause.usable_actions is not None
        branches: dict[Action, Term] = {}
        for A in lts1.ready_sets_of(lts1.weak_after(s)):
            a = _pick((A & clause.usable_actions) - clause.ready_set)
            if a not in branches:
                nxt = lts1.unsuccessful_closure(lts1.step(xs[len(s)], a))
                branches[a] = mk_sum([UNIT, _witness_or_nil(lts1, nxt)])
        end = mk_sum(Prefix(a.complement(), cont) for a, cont in branches.items())
    elif clause.clause == "trace_flow":
        end = NIL
    else:
        raise SynthesisGap(f"no peer synthesis for clause {clause.clause}")
    t = end
    for k in reversed(range(len(s))):
        t = mk_sum([commit(k), Prefix(s[k].complement(), t)])
    return t


def synthesize_witness(
    kind: str,
    p: Term,
    q: Term,
    env: Env = EMPTY_ENV,
    verdict: Optional[RefinementVerdict] = None,
    state_cap: int = DEFAULT_STATE_CAP,
    verify: bool = True,
) -> Term:
    """Build a test discriminating p from q out of the failing clause, and
    re-check it with the testing module before returning it."""
    if not (is_ccsf(p, env) and is_ccsf(q, env)):
        raise SynthesisGap("synthesis is defined for finite terms only")
    if verdict is None:
        verdict = _decide(kind, p, q, env, None, state_cap)
    if verdict.holds or verdict.failing_clause is None:
        raise ValueError("synthesis needs a refuted verdict")
    clause = verdict.failing_clause
    lts1 = cached_lts(p, env, state_cap)
    if kind == "svr":
        t = _svr_witness(lts1, clause)
    elif kind == "clt":
        t = _clt_witness(lts1, clause)
    else:
        t = _p2p_clt_witness(lts1, clause) if clause.part == "clt" else _p2p_usmpo_witness(lts1, clause)
    if verify and not check_witness(kind, p, q, t, env, state_cap):
        raise SynthesisGap(
            f"synthesized test failed verification: kind={kind} clause={clause.clause} "
            f"p={pretty(p)} q={pretty(q)} t={pretty(t)}"
        )
    return t


def check_witness(kind: str, p: Term, q: Term, t: Term, env: Env = EMPTY_ENV,
                  state_cap: int = DEFAULT_STATE_CAP) -> bool:
    """Does `t` pass with p and fail with q, in the roles fixed by `kind`?"""
    if kind == "svr":
        return must(p, t, env, state_cap).holds and not must(q, t, env, state_cap).holds
    if kind == "clt":
        return must(t, p, env, state_cap).holds and not must(t, q, env, state_cap).holds
    if kind == "p2p":
        return must_sc(p, t, env, state_cap).holds and not must_sc(q, t, env, state_cap).holds
    raise ValueError(f"unknown preorder kind {kind!r}")
