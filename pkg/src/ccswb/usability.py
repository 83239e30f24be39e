"""Usability of clients and peers: which processes can be satisfied at all,
usability along unsuccessful traces, usable actions, and peer convergence.

The core decision works on sets of non-ok states.  Obligations for a visible
action are pooled across the whole unsuccessful closure, because one server
continuation must cope with every residual it may face after that action.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .lts import DEFAULT_STATE_CAP, Lts, Trace, cached_lts
from .syntax import (
    EMPTY_ENV,
    NIL,
    Action,
    Env,
    Prefix,
    Term,
    label_key,
    mk_sum,
)


class VisibleCycle(RuntimeError):
    """Exact usability refused: the non-ok region has a cycle through a
    visible action, so the finite-unfolding decision does not terminate."""


@dataclass(frozen=True)
class UsabilityReport:
    usable: bool
    witness_server: Optional[Term]
    mode: str  # "exact" | "bounded"
    depth: Optional[int] = None

    def to_json(self) -> dict:
        from .syntax import pretty

        out: dict = {"usable": self.usable, "mode": self.mode}
        if self.depth is not None:
            out["depth"] = self.depth
        if self.witness_server is not None:
            out["witness_server"] = pretty(self.witness_server)
        return out


def _nonok_region_visible_acyclic(lts: Lts) -> bool:
    """No cycle of non-ok states that uses a visible edge."""
    nodes = [i for i in range(len(lts)) if not lts.ok[i]]
    node_set = set(nodes)
    # Tarjan over the non-ok subgraph with every label admitted.
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    comp_of: dict[int, int] = {}
    onstack: set[int] = set()
    stack: list[int] = []
    counter = 0
    ncomp = 0

    def successors(i: int) -> list[int]:
        out = [j for j in lts.taus[i] if j in node_set]
        for tgts in lts.vis[i].values():
            out.extend(j for j in tgts if j in node_set)
        return out

    for root in nodes:
        if root in index:
            continue
        work: list[tuple[int, int]] = [(root, 0)]
        while work:
            node, ei = work[-1]
            if ei == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                onstack.add(node)
            succ = successors(node)
            advanced = False
            while ei < len(succ):
                j = succ[ei]
                ei += 1
                if j not in index:
                    work[-1] = (node, ei)
                    work.append((j, 0))
                    advanced = True
                    break
                if j in onstack:
                    low[node] = min(low[node], index[j])
            if advanced:
                continue
            work.pop()
            if low[node] == index[node]:
                while True:
                    w = stack.pop()
                    onstack.discard(w)
                    comp_of[w] = ncomp
                    if w == node:
                        break
                ncomp += 1
            if work:
                pnode, _ = work[-1]
                low[pnode] = min(low[pnode], low[node])
    for i in nodes:
        for a, tgts in lts.vis[i].items():
            for j in tgts:
                if j in node_set and comp_of.get(i) == comp_of.get(j):
                    return False
    return True


def usable_set(lts: Lts, states: frozenset[int], depth: Optional[int] = None) -> tuple[bool, Optional[Term]]:
    """Decide satisfiability of the internal choice over a set of non-ok
    states; on success also return a witness server.

    With `depth` set the recursion over visible actions is cut off at that
    many levels and the cut is reported as not usable (a bounded verdict).
    """
    if depth is not None and depth < 0:
        return False, None
    C = lts.unsuccessful_closure(states)
    if not C:
        # every branch already reached a success-capable state
        return True, NIL
    memo: dict = lts._usable_memo
    key = (C, depth)
    got = memo.get(key)
    if got is not None:
        return got
    if key in getattr(lts, "_usable_stack", ()):  # pragma: no cover - guarded by precheck
        raise VisibleCycle("usability recursion revisited a state set")
    if not hasattr(lts, "_usable_stack"):
        lts._usable_stack = set()
    lts._usable_stack.add(key)
    try:
        result = _usable_closed(lts, C, depth)
    finally:
        lts._usable_stack.discard(key)
    memo[key] = result
    return result


def _usable_closed(lts: Lts, C: frozenset[int], depth: Optional[int]) -> tuple[bool, Optional[Term]]:
    if lts._has_tau_cycle(C):
        return False, None
    actions = sorted({a for i in C for a in lts.vis[i]}, key=label_key)
    usable_act: dict[Action, Optional[Term]] = {}
    for a in actions:
        derivs = frozenset(j for i in C for j in lts.vis[i].get(a, ()) if not lts.ok[j])
        if not derivs:
            usable_act[a] = NIL
            continue
        sub_depth = None if depth is None else depth - 1
        ok, wit = usable_set(lts, derivs, sub_depth)
        if ok:
            usable_act[a] = wit
    needed: set[Action] = set()
    for i in C:
        if not lts.stable(i):
            continue
        offered = [a for a in lts.ready[i] if a in usable_act]
        if not offered:
            return False, None
        needed.update(offered)
    witness = mk_sum(
        Prefix(a.complement(), usable_act[a] if usable_act[a] is not None else NIL)
        for a in sorted(needed, key=label_key)
    )
    return True, witness


def usable(
    r: Term,
    env: Env = EMPTY_ENV,
    depth: Optional[int] = None,
    state_cap: int = DEFAULT_STATE_CAP,
    verify_witness: bool = False,
) -> UsabilityReport:
    """Is there any server that must-satisfies `r`?  Exact unless `depth` given."""
    lts = cached_lts(r, env, state_cap)
    mode = "exact" if depth is None else "bounded"
    if depth is None and not _nonok_region_visible_acyclic(lts):
        raise VisibleCycle(
            "exact usability undecided: non-ok region has a visible-action cycle; rerun bounded"
        )
    if lts.ok[lts.root]:
        report = UsabilityReport(True, NIL, mode, depth)
    else:
        ok, wit = usable_set(lts, frozenset({lts.root}), depth)
        report = UsabilityReport(ok, wit if ok else None, mode, depth)
    if verify_witness and report.usable and report.witness_server is not None:
        from .testing import must

        if not must(report.witness_server, r, env, state_cap).holds:
            raise RuntimeError(f"internal error: witness server failed verification for {r}")
    return report


def _usable_root(lts: Lts, depth: Optional[int] = None) -> bool:
    if lts.ok[lts.root]:
        return True
    return usable_set(lts, frozenset({lts.root}), depth)[0]


def usbut(r: Term, s: Trace, env: Env = EMPTY_ENV, depth: Optional[int] = None,
          state_cap: int = DEFAULT_STATE_CAP) -> bool:
    """Usability along an unsuccessful trace: every residual reachable by an
    unsuccessful prefix of `s` is still satisfiable."""
    lts = cached_lts(r, env, state_cap)
    if depth is None and not _nonok_region_visible_acyclic(lts):
        raise VisibleCycle("exact usability undecided; rerun bounded")
    if not _usable_root(lts, depth):
        return False
    cur = lts.unsuccessful_closure(frozenset({lts.root}))
    for a in s:
        cur = lts.unsuccessful_closure(lts.step(cur, a))
        if not cur:
            return True
        if not usable_set(lts, cur, depth)[0]:
            return False
    return True


def uaut(
    r: Term,
    s: Trace,
    env: Env = EMPTY_ENV,
    alphabet: Optional[frozenset[Action]] = None,
    depth: Optional[int] = None,
    state_cap: int = DEFAULT_STATE_CAP,
) -> frozenset[Action]:
    """Usable actions after `s`: those the client cannot perform unsuccessfully,
    or whose pooled residual is still satisfiable."""
    lts = cached_lts(r, env, state_cap)
    alpha = alphabet if alphabet is not None else lts.alphabet()
    cur = lts.unsuccessful_closure(frozenset({lts.root}))
    for a in s:
        cur = lts.unsuccessful_closure(lts.step(cur, a))
    out: set[Action] = set()
    for a in sorted(alpha, key=label_key):
        nxt = lts.unsuccessful_closure(lts.step(cur, a))
        if not nxt or usbut(r, s + (a,), env, depth, state_cap):
            out.add(a)
    return frozenset(out)


def peer_conv(r: Term, s: Trace, env: Env = EMPTY_ENV, depth: Optional[int] = None,
              state_cap: int = DEFAULT_STATE_CAP) -> bool:
    """Peer convergence: convergence along `s` plus client usability along `s`."""
    lts = cached_lts(r, env, state_cap)
    return lts.converges_along(s) and usbut(r, s, env, depth, state_cap)
