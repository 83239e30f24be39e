import random

import pytest

from conftest import t
from ccswb.lts import cached_lts
from ccswb.oracle import search_satisfying_server
from ccswb.syntax import Action, NIL, parse_defs, Const, pretty
from ccswb.testing import must
from ccswb.usability import VisibleCycle, peer_conv, uaut, usable, usbut

a, b, c, d = Action("a"), Action("b"), Action("c"), Action("d")


def test_usable_examples():
    assert not usable(t("0")).usable
    rep = usable(t("1"))
    assert rep.usable and rep.witness_server == NIL
    assert not usable(t("b.d.0 + b.1")).usable
    assert not usable(t("a.(b.0 + c.1) + a.(b.1 + c.0)")).usable
    assert not usable(t("a.0")).usable
    assert search_satisfying_server(t("a.0"), max_depth=4) is None


def test_usable_witnesses_verify(small_corpus):
    for client in small_corpus:
        rep = usable(client)
        if rep.usable:
            assert rep.witness_server is not None
            assert must(rep.witness_server, client).holds


def test_usable_agrees_with_bounded_server_search(small_corpus, chain_corpus):
    for client in small_corpus + chain_corpus:
        found = search_satisfying_server(client)
        assert usable(client).usable == (found is not None), pretty(client)


def test_nil_not_must_shape():
    # an unusable stable state with no actions is what dooms these clients
    assert not usable(t("tau.0 + tau.1")).usable
    assert usable(t("tau.1 + a.0")).usable  # the a branch is never forced


def test_usbut_examples():
    assert not usbut(t("c.(a.1 + b.0)"), (c, b))
    assert not usbut(t("a.(b.d.0 + b.1)"), (a, c))
    assert usbut(t("1"), (a, b, c))
    assert usbut(t("c.(a.1 + b.0)"), (c, a))


def test_uaut_examples():
    r = t("c.(a.1 + b.0)")
    ua = uaut(r, (c,))
    assert a in ua and b not in ua
    assert uaut(t("1"), (a,)) == cached_lts(t("1")).alphabet()
    assert a in uaut(t("b.(tau.(1 + a.0) + tau.a.tau.1)"), (b,))


def test_peer_conv():
    assert not peer_conv(t("a.0"), ())
    assert not peer_conv(t("1 + div"), ())
    assert peer_conv(t("~a.1"), (a,))


def test_satisfaction_implies_usability(small_corpus):
    rng = random.Random(23)
    hits = 0
    for _ in range(400):
        p = small_corpus[rng.randrange(len(small_corpus))]
        r = small_corpus[rng.randrange(len(small_corpus))]
        if must(p, r).holds:
            hits += 1
            assert usable(r).usable
    assert hits > 50


def test_satisfaction_preserves_usability_along_co_traces(small_corpus):
    # if a server satisfies the client and weakly performs the complement of
    # a trace, the client stays usable along that trace
    rng = random.Random(31)
    traces = [(a,), (b,), (a, b)]
    for _ in range(200):
        p = small_corpus[rng.randrange(len(small_corpus))]
        r = small_corpus[rng.randrange(len(small_corpus))]
        if not must(p, r).holds:
            continue
        lp = cached_lts(p)
        for s in traces:
            co = tuple(x.complement() for x in s)
            if lp.weak_after(co):
                assert usbut(r, s), (pretty(p), pretty(r), s)


def test_exact_mode_refused_on_visible_cycles():
    env, _ = parse_defs("def A = ~a.A")
    with pytest.raises(VisibleCycle):
        usable(Const("A"), env)
    rep = usable(Const("A"), env, depth=3)
    assert rep.mode == "bounded"


def test_bounded_mode_on_recursive_client():
    # a recursive client satisfiable by a finite server is found usable at
    # a depth that covers one unfolding
    env, _ = parse_defs("def B = a.1 + b.B")
    rep = usable(Const("B"), env, depth=2)
    assert rep.usable
    assert must(rep.witness_server, Const("B"), env).holds
