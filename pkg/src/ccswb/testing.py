"""Must testing of composed pairs: verdicts with machine-checkable evidence.

A composition fails a test when some maximal run of tau steps never touches a
state whose tested component can report success.  On finite graphs those runs
are exactly paths to deadlocks and lassos inside the success-free region, so
the check is a reachability/cycle search rather than run enumeration.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .lts import DEFAULT_STATE_CAP, Product, cached_lts, compose
from .syntax import EMPTY_ENV, Env, Term


class NotAcyclic(RuntimeError):
    """The product graph has a cycle; exhaustive run enumeration refused."""


class BoundExceeded(RuntimeError):
    """A maximal run is longer than the enumeration bound."""


@dataclass(frozen=True)
class Counterexample:
    """A maximal unsuccessful computation, as product-state evidence.

    `path` lists product states from the root; a Lasso repeats the state at
    `loop_start` as its final element, a DeadlockEnd stops at a stable state.
    """

    product: Product
    path: tuple[int, ...]
    shape: str  # "deadlock" | "lasso"
    loop_start: Optional[int] = None

    def pretty_path(self) -> list[tuple[str, str]]:
        return [self.product.pretty_state(k) for k in self.path]

    def to_json(self) -> dict:
        out: dict = {
            "shape": self.shape,
            "states": [list(self.product.pretty_state(k)) for k in self.path],
        }
        if self.loop_start is not None:
            out["loop_start"] = self.loop_start
        return out


@dataclass(frozen=True)
class Verdict:
    holds: bool
    evidence: Optional[Counterexample] = None

    def to_json(self) -> dict:
        out: dict = {"holds": self.holds}
        if self.evidence is not None:
            out["evidence"] = self.evidence.to_json()
        return out


def _bfs_path(product: Product, region: frozenset[int], start: int, goals: frozenset[int]) -> Optional[list[int]]:
    """Shortest path within `region` from start to any goal state."""
    if start not in region:
        return None
    parent: dict[int, int] = {start: start}
    queue = [start]
    qi = 0
    while qi < len(queue):
        k = queue[qi]
        qi += 1
        if k in goals:
            path = [k]
            while path[-1] != start:
                path.append(parent[path[-1]])
            return list(reversed(path))
        for k2 in product.succ[k]:
            if k2 in region and k2 not in parent:
                parent[k2] = k
                queue.append(k2)
    return None


def _sccs(product: Product, region: frozenset[int]) -> list[list[int]]:
    """Tarjan strongly connected components of the region subgraph (iterative)."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    onstack: set[int] = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in sorted(region):
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
            succ = [j for j in product.succ[node] if j in region]
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
                comp = []
                while True:
                    w = stack.pop()
                    onstack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                out.append(comp)
            if work:
                pnode, _ = work[-1]
                low[pnode] = min(low[pnode], low[node])
    return out


def _unsuccessful_region(product: Product, ok_flags: list[bool]) -> frozenset[int]:
    """States reachable from the root through states whose flag is off."""
    if ok_flags[product.root]:
        return frozenset()
    seen = {product.root}
    queue = [product.root]
    qi = 0
    while qi < len(queue):
        k = queue[qi]
        qi += 1
        for k2 in product.succ[k]:
            if not ok_flags[k2] and k2 not in seen:
                seen.add(k2)
                queue.append(k2)
    return frozenset(seen)


def find_unsuccessful_maximal(product: Product, side: str = "right") -> Optional[Counterexample]:
    """Shortest evidence that some maximal computation never lets `side` succeed."""
    ok_flags = product.right_ok if side == "right" else product.left_ok
    region = _unsuccessful_region(product, ok_flags)
    if not region:
        return None
    deadlocks = frozenset(k for k in region if product.stable(k))
    path = _bfs_path(product, region, product.root, deadlocks)
    if path is not None:
        return Counterexample(product, tuple(path), "deadlock")
    cyclic: set[int] = set()
    for comp in _sccs(product, region):
        if len(comp) > 1:
            cyclic.update(comp)
        else:
            k = comp[0]
            if k in product.succ[k]:
                cyclic.add(k)
    if not cyclic:
        return None
    entry = _bfs_path(product, region, product.root, frozenset(cyclic))
    assert entry is not None
    c = entry[-1]
    # shortest cycle from c back to c inside the cyclic component's region
    comp_region = frozenset(x for x in cyclic) & region
    best: Optional[list[int]] = None
    for k2 in product.succ[c]:
        if k2 not in comp_region and k2 != c:
            continue
        if k2 == c:
            best = [c]
            break
        back = _bfs_path(product, comp_region, k2, frozenset({c}))
        if back is not None and (best is None or len(back) < len(best)):
            best = back
    assert best is not None
    return Counterexample(product, tuple(entry + best), "lasso", loop_start=len(entry) - 1)


def _product_of(p: Term, r: Term, env: Env, state_cap: int) -> Product:
    return compose(cached_lts(p, env, state_cap), cached_lts(r, env, state_cap), state_cap)


def must(p: Term, r: Term, env: Env = EMPTY_ENV, state_cap: int = DEFAULT_STATE_CAP) -> Verdict:
    """Every maximal computation of p || r lets the client r report success."""
    ce = find_unsuccessful_maximal(_product_of(p, r, env, state_cap), side="right")
    return Verdict(ce is None, ce)


def must_sc(p: Term, r: Term, env: Env = EMPTY_ENV, state_cap: int = DEFAULT_STATE_CAP) -> Verdict:
    """Every maximal computation lets both peers report success (not necessarily together)."""
    product = _product_of(p, r, env, state_cap)
    ce = find_unsuccessful_maximal(product, side="right")
    if ce is None:
        ce = find_unsuccessful_maximal(product, side="left")
    return Verdict(ce is None, ce)


# ---------------------------------------------------------------------------
# Independent oracle: exhaustive enumeration of maximal computations
# ---------------------------------------------------------------------------


def enumerate_computations(
    p: Term,
    r: Term,
    env: Env = EMPTY_ENV,
    step_bound: int = 64,
    state_cap: int = DEFAULT_STATE_CAP,
) -> tuple[Product, list[tuple[int, ...]]]:
    """All maximal computations of an acyclic product, as state-id paths."""
    product = _product_of(p, r, env, state_cap)
    color: dict[int, int] = {}
    stack: list[tuple[int, int]] = [(product.root, 0)]
    while stack:
        node, ei = stack[-1]
        if ei == 0:
            color[node] = 1
        succ = product.succ[node]
        if ei < len(succ):
            stack[-1] = (node, ei + 1)
            j = succ[ei]
            c = color.get(j, 0)
            if c == 1:
                raise NotAcyclic("product graph has a cycle")
            if c == 0:
                stack.append((j, 0))
        else:
            color[node] = 2
            stack.pop()
    paths: list[tuple[int, ...]] = []
    walk: list[int] = [product.root]

    def extend() -> None:
        k = walk[-1]
        if product.stable(k):
            paths.append(tuple(walk))
            return
        if len(walk) > step_bound:
            raise BoundExceeded(f"computation longer than {step_bound} steps")
        for k2 in product.succ[k]:
            walk.append(k2)
            extend()
            walk.pop()

    extend()
    return product, paths


def client_successful(product: Product, path: tuple[int, ...]) -> bool:
    return any(product.right_ok[k] for k in path)


def successful(product: Product, path: tuple[int, ...]) -> bool:
    return client_successful(product, path) and any(product.left_ok[k] for k in path)


def must_by_enumeration(p: Term, r: Term, env: Env = EMPTY_ENV, step_bound: int = 64) -> bool:
    product, paths = enumerate_computations(p, r, env, step_bound)
    return all(client_successful(product, path) for path in paths)


def must_sc_by_enumeration(p: Term, r: Term, env: Env = EMPTY_ENV, step_bound: int = 64) -> bool:
    product, paths = enumerate_computations(p, r, env, step_bound)
    return all(successful(product, path) for path in paths)
