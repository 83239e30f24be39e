"""Operational semantics: transition graphs, weak closures, acceptance sets,
convergence and divergence predicates, and the parallel test composition."""
from __future__ import annotations

from typing import Iterable

from .syntax import (
    OK,
    TAU,
    Action,
    Const,
    Div,
    Env,
    EMPTY_ENV,
    Label,
    Nil,
    Prefix,
    Sum,
    Term,
    Unit,
    label_key,
    NIL,
    pretty,
    term_key,
)

DEFAULT_STATE_CAP = 100_000

Trace = tuple[Action, ...]


class StateCapExceeded(RuntimeError):
    """Reachable state space grew past the configured cap."""

    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"state space exceeds cap of {cap}")


def transitions(t: Term, env: Env = EMPTY_ENV) -> frozenset[tuple[Label, Term]]:
    """One-step derivatives of a term."""
    if isinstance(t, Unit):
        return frozenset({(OK, NIL)})
    if isinstance(t, Nil):
        return frozenset()
    if isinstance(t, Div):
        return frozenset({(TAU, t)})
    if isinstance(t, Prefix):
        return frozenset({(t.guard, t.body)})
    if isinstance(t, Sum):
        out: set[tuple[Label, Term]] = set()
        for p in t.parts:
            out |= transitions(p, env)
        return frozenset(out)
    if isinstance(t, Const):
        return transitions(env.lookup(t.name), env)
    raise TypeError(f"not a term: {t!r}")


def can_ok(t: Term, env: Env = EMPTY_ENV) -> bool:
    """True iff the term can report success immediately."""
    return any(isinstance(lab, type(OK)) for lab, _ in transitions(t, env))


class Lts:
    """Reachable transition graph of a term, states deduplicated structurally.

    Constants are kept folded: a state is the term as written, and its moves
    come from unfolding the definition on demand.
    """

    def __init__(self, root_term: Term, env: Env = EMPTY_ENV, state_cap: int = DEFAULT_STATE_CAP):
        if state_cap <= 0:
            raise ValueError("state_cap must be positive")
        self.env = env
        self.terms: list[Term] = []
        self.index: dict[Term, int] = {}
        self.edges: list[list[tuple[Label, int]]] = []
        self.ok: list[bool] = []
        self.taus: list[tuple[int, ...]] = []
        self.vis: list[dict[Action, tuple[int, ...]]] = []
        self.ready: list[frozenset[Action]] = []

        def intern(t: Term) -> int:
            i = self.index.get(t)
            if i is None:
                if len(self.terms) >= state_cap:
                    raise StateCapExceeded(state_cap)
                i = len(self.terms)
                self.index[t] = i
                self.terms.append(t)
                self.edges.append([])
                queue.append(i)
            return i

        queue: list[int] = []
        self.root = intern(root_term)
        qi = 0
        while qi < len(queue):
            i = queue[qi]
            qi += 1
            outs = sorted(transitions(self.terms[i], env), key=lambda e: (label_key(e[0]), term_key(e[1])))
            self.edges[i] = [(lab, intern(tgt)) for lab, tgt in outs]
        for i in range(len(self.terms)):
            labs = self.edges[i]
            self.ok.append(any(isinstance(lab, type(OK)) for lab, _ in labs))
            self.taus.append(tuple(j for lab, j in labs if isinstance(lab, type(TAU))))
            vis: dict[Action, list[int]] = {}
            for lab, j in labs:
                if isinstance(lab, Action):
                    vis.setdefault(lab, []).append(j)
            self.vis.append({a: tuple(js) for a, js in vis.items()})
            self.ready.append(frozenset(vis))
        # memo tables, keyed per graph
        self._tau_closure: dict[frozenset[int], frozenset[int]] = {}
        self._uclosure: dict[frozenset[int], frozenset[int]] = {}
        self._conv_memo: dict[tuple[frozenset[int], Trace], bool] = {}
        self._usable_memo: dict = {}

    # -- basic views ------------------------------------------------------

    def __len__(self) -> int:
        return len(self.terms)

    def n_edges(self) -> int:
        return sum(len(e) for e in self.edges)

    def term_of(self, i: int) -> Term:
        return self.terms[i]

    def stable(self, i: int) -> bool:
        return not self.taus[i]

    def alphabet(self) -> frozenset[Action]:
        """Visible actions occurring on any edge."""
        out: set[Action] = set()
        for vis in self.vis:
            out |= set(vis)
        return frozenset(out)

    # -- closures ---------------------------------------------------------

    def tau_closure(self, states: frozenset[int]) -> frozenset[int]:
        cached = self._tau_closure.get(states)
        if cached is not None:
            return cached
        seen = set(states)
        stack = list(states)
        while stack:
            for j in self.taus[stack.pop()]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        out = frozenset(seen)
        self._tau_closure[states] = out
        return out

    def unsuccessful_closure(self, states: frozenset[int]) -> frozenset[int]:
        """Tau closure staying within non-ok states; ok-capable inputs are dropped."""
        key = states
        cached = self._uclosure.get(key)
        if cached is not None:
            return cached
        seen = {i for i in states if not self.ok[i]}
        stack = list(seen)
        while stack:
            for j in self.taus[stack.pop()]:
                if not self.ok[j] and j not in seen:
                    seen.add(j)
                    stack.append(j)
        out = frozenset(seen)
        self._uclosure[key] = out
        return out

    def step(self, states: frozenset[int], a: Action) -> frozenset[int]:
        out: set[int] = set()
        for i in states:
            out.update(self.vis[i].get(a, ()))
        return frozenset(out)

    def weak_after_set(self, states: frozenset[int], s: Trace) -> frozenset[int]:
        cur = self.tau_closure(states)
        for a in s:
            cur = self.tau_closure(self.step(cur, a))
        return cur

    def weak_after(self, s: Trace) -> frozenset[int]:
        return self.weak_after_set(frozenset({self.root}), s)

    def unsuccessful_after_set(self, states: frozenset[int], s: Trace) -> frozenset[int]:
        cur = self.unsuccessful_closure(states)
        for a in s:
            cur = self.unsuccessful_closure(self.step(cur, a))
        return cur

    def unsuccessful_after(self, s: Trace) -> frozenset[int]:
        return self.unsuccessful_after_set(frozenset({self.root}), s)

    # -- acceptance sets ----------------------------------------------------

    def ready_sets_of(self, states: Iterable[int]) -> frozenset[frozenset[Action]]:
        return frozenset(self.ready[i] for i in states if self.stable(i))

    def acc(self, s: Trace) -> frozenset[frozenset[Action]]:
        """Ready sets of stable states reachable weakly along `s`."""
        return self.ready_sets_of(self.weak_after(s))

    def acc_ut(self, s: Trace) -> frozenset[frozenset[Action]]:
        """Ready sets of stable states reachable unsuccessfully along `s`."""
        return self.ready_sets_of(self.unsuccessful_after(s))

    # -- convergence / divergence -----------------------------------------

    def _has_tau_cycle(self, region: frozenset[int]) -> bool:
        """A tau cycle whose states all lie in `region`."""
        color: dict[int, int] = {}
        for start in region:
            if color.get(start):
                continue
            stack: list[tuple[int, int]] = [(start, 0)]
            while stack:
                node, ei = stack[-1]
                if ei == 0:
                    color[node] = 1
                succ = [j for j in self.taus[node] if j in region]
                if ei < len(succ):
                    stack[-1] = (node, ei + 1)
                    j = succ[ei]
                    c = color.get(j, 0)
                    if c == 1:
                        return True
                    if c == 0:
                        stack.append((j, 0))
                else:
                    color[node] = 2
                    stack.pop()
        return False

    def converges_state_set(self, states: frozenset[int]) -> bool:
        """No infinite tau run from any of the states."""
        region = self.tau_closure(states)
        return not self._has_tau_cycle(region)

    def converges(self) -> bool:
        return self.converges_state_set(frozenset({self.root}))

    def converges_along_set(self, states: frozenset[int], s: Trace) -> bool:
        key = (states, s)
        cached = self._conv_memo.get(key)
        if cached is not None:
            return cached
        ok = self.converges_state_set(states)
        if ok and s:
            nxt = self.tau_closure(self.step(self.tau_closure(states), s[0]))
            if nxt:
                ok = self.converges_along_set(nxt, s[1:])
        self._conv_memo[key] = ok
        return ok

    def converges_along(self, s: Trace) -> bool:
        return self.converges_along_set(frozenset({self.root}), s)

    def diverges_unsuccessfully(self) -> bool:
        """An infinite tau run all of whose states are non-ok."""
        region = self.unsuccessful_closure(frozenset({self.root}))
        return self._has_tau_cycle(region)

    # -- rendering ----------------------------------------------------------

    def to_dot(self, name: str = "lts") -> str:
        lines = [f"digraph {name} {{", "  rankdir=LR;"]
        for i, t in enumerate(self.terms):
            shape = "doublecircle" if self.ok[i] else "circle"
            label = pretty(t).replace('"', '\\"')
            extra = " penwidth=2" if i == self.root else ""
            lines.append(f'  s{i} [shape={shape} label="{label}"{extra}];')
        for i, outs in enumerate(self.edges):
            for lab, j in outs:
                txt = "ok" if isinstance(lab, type(OK)) else str(lab)
                lines.append(f'  s{i} -> s{j} [label="{txt}"];')
        lines.append("}")
        return "\n".join(lines)


def build_lts(t: Term, env: Env = EMPTY_ENV, state_cap: int = DEFAULT_STATE_CAP) -> Lts:
    return Lts(t, env, state_cap)


# ---------------------------------------------------------------------------
# Parallel composition of a pair (server/peer on the left, client/peer right)
# ---------------------------------------------------------------------------


class Product:
    """Tau-edge graph of a parallel composition.

    Edges are left moves, right moves, and complementary synchronisations;
    success of either component is recorded as a state flag, not an edge.
    """

    def __init__(self, left: Lts, right: Lts, state_cap: int = DEFAULT_STATE_CAP):
        self.left_lts = left
        self.right_lts = right
        self.states: list[tuple[int, int]] = []
        self.index: dict[tuple[int, int], int] = {}
        self.succ: list[tuple[int, ...]] = []

        def intern(st: tuple[int, int]) -> int:
            k = self.index.get(st)
            if k is None:
                if len(self.states) >= state_cap:
                    raise StateCapExceeded(state_cap)
                k = len(self.states)
                self.index[st] = k
                self.states.append(st)
                queue.append(k)
            return k

        queue: list[int] = []
        self.root = intern((left.root, right.root))
        qi = 0
        while qi < len(queue):
            k = queue[qi]
            qi += 1
            i, j = self.states[k]
            nxt: list[tuple[int, int]] = []
            nxt.extend((i2, j) for i2 in left.taus[i])
            nxt.extend((i, j2) for j2 in right.taus[j])
            for a, tis in sorted(left.vis[i].items(), key=lambda kv: label_key(kv[0])):
                tjs = right.vis[j].get(a.complement(), ())
                for i2 in tis:
                    for j2 in tjs:
                        nxt.append((i2, j2))
            seen: set[int] = set()
            ordered: list[int] = []
            for st in nxt:
                k2 = intern(st)
                if k2 not in seen:
                    seen.add(k2)
                    ordered.append(k2)
            # queue order equals intern order, so position k holds succ of state k
            self.succ.append(tuple(ordered))
        self.left_ok = [left.ok[i] for i, _ in self.states]
        self.right_ok = [right.ok[j] for _, j in self.states]

    def __len__(self) -> int:
        return len(self.states)

    def stable(self, k: int) -> bool:
        return not self.succ[k]

    def pretty_state(self, k: int) -> tuple[str, str]:
        i, j = self.states[k]
        return (pretty(self.left_lts.term_of(i)), pretty(self.right_lts.term_of(j)))

    def to_dot(self, name: str = "product") -> str:
        lines = [f"digraph {name} {{", "  rankdir=LR;"]
        for k in range(len(self.states)):
            l, r = self.pretty_state(k)
            flags = ("L" if self.left_ok[k] else "") + ("R" if self.right_ok[k] else "")
            label = f"{l} || {r}" + (f" [{flags}]" if flags else "")
            shape = "doublecircle" if self.right_ok[k] else "circle"
            extra = " penwidth=2" if k == self.root else ""
            lines.append(f'  s{k} [shape={shape} label="{label.replace(chr(34), chr(39))}"{extra}];')
        for k, outs in enumerate(self.succ):
            for k2 in outs:
                lines.append(f'  s{k} -> s{k2} [label="tau"];')
        lines.append("}")
        return "\n".join(lines)


def compose(left: Lts, right: Lts, state_cap: int = DEFAULT_STATE_CAP) -> Product:
    return Product(left, right, state_cap)


_LTS_CACHE: dict[tuple[Env, Term, int], Lts] = {}


def cached_lts(t: Term, env: Env = EMPTY_ENV, state_cap: int = DEFAULT_STATE_CAP) -> Lts:
    """Shared Lts instances; safe because Lts values are immutable once built."""
    key = (env, t, state_cap)
    got = _LTS_CACHE.get(key)
    if got is None:
        if len(_LTS_CACHE) > 200_000:
            _LTS_CACHE.clear()
        got = Lts(t, env, state_cap)
        _LTS_CACHE[key] = got
    return got
