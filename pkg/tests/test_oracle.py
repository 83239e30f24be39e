import itertools

import pytest

from conftest import t
from ccswb.oracle import (
    EnumSpec,
    count_terms,
    cross_validate,
    det_stable_servers,
    enumerate_terms,
    pass_table,
    refute_by_search,
    sample_terms,
    search_satisfying_server,
    term_size,
)
from ccswb.preorders import check_witness
from ccswb.syntax import Action, pretty


def test_enumeration_base_cases():
    assert [pretty(x) for x in enumerate_terms(EnumSpec(("a",), 0))] == ["0", "1"]
    got = {pretty(x) for x in enumerate_terms(EnumSpec(("a",), 1, max_width=1))}
    assert got == {"0", "1", "tau.0", "tau.1", "a.0", "a.1", "~a.0", "~a.1"}


def test_enumeration_counts_are_stable():
    # frozen on first run; exhaustiveness and duplicate-freedom regression
    # atoms {0,1}, six single prefixes, C(7,2) two-part sums
    assert count_terms(EnumSpec(("a",), 1, max_width=2)) == 29
    assert count_terms(EnumSpec(("a", "b"), 1, max_width=2)) == 67
    assert count_terms(EnumSpec(("a", "b"), 2, max_width=1)) == 62
    assert count_terms(EnumSpec(("a",), 2, max_width=2, allow_div=True)) == 51361


def test_enumeration_matches_reference_construction():
    """Independent oracle: close the term universe level by level and compare."""
    from ccswb.syntax import DIV, NIL, Prefix, TAU, UNIT, mk_sum

    def reference(alphabet, depth, atoms):
        guards = [TAU] + [g for n in alphabet for g in (Action(n), Action(n, True))]
        pieces0 = {x for x in atoms if x != NIL}
        level = set(atoms) | {mk_sum([p, q]) for p, q
                              in itertools.combinations(sorted(pieces0, key=pretty), 2)}
        for _ in range(depth):
            prefixes = {Prefix(g, x) for g in guards for x in level}
            pieces = pieces0 | prefixes
            level = set(atoms) | prefixes | level | {
                mk_sum([p, q]) for p, q
                in itertools.combinations(sorted(pieces, key=pretty), 2)}
        return level

    for spec, atoms in [
        (EnumSpec(("a",), 1, max_width=2, allow_div=True), [NIL, UNIT, DIV]),
        (EnumSpec(("a", "b"), 1, max_width=2), [NIL, UNIT]),
        (EnumSpec(("a",), 2, max_width=2), [NIL, UNIT]),
    ]:
        assert set(enumerate_terms(spec)) == reference(spec.alphabet, spec.max_depth, atoms)


def test_enumeration_no_duplicates_and_size_ordered():
    terms = list(enumerate_terms(EnumSpec(("a", "b"), 1, max_width=2)))
    assert len(terms) == len(set(terms))
    sizes = [term_size(x) for x in terms]
    assert sizes == sorted(sizes)


def test_sample_terms_deterministic():
    spec = EnumSpec(("a", "b"), 1, max_width=2)
    assert sample_terms(spec, 10, seed=3) == sample_terms(spec, 10, seed=3)


def test_det_stable_servers():
    servers = [pretty(x) for x in det_stable_servers([Action("a", co=True)], 2, 1)]
    assert servers == ["0", "~a.0", "~a.~a.0"]
    wide = list(det_stable_servers([Action("a", co=True), Action("b", co=True)], 1, 2))
    assert t("~a.0 + ~b.0") in wide


def test_search_finds_the_standard_witnesses():
    assert pretty(refute_by_search("clt", t("a.1"), t("a.0"), limit=400)) == "~a.0"
    assert pretty(refute_by_search("p2p", t("1 + b.0"), t("1"), limit=400)) == "~b.1"
    w = refute_by_search("svr",
                         t("tau.a.(b.0 + c.0) + tau.a.c.0"),
                         t("tau.a.b.0 + tau.a.c.0"), limit=3000)
    assert w is not None and check_witness(
        "svr", t("tau.a.(b.0 + c.0) + tau.a.c.0"), t("tau.a.b.0 + tau.a.c.0"), w)


def test_search_respects_direction():
    # q <=svr p holds, so no test should separate them within the bound
    assert refute_by_search("svr", t("tau.a.b.0 + tau.a.c.0"),
                            t("tau.a.(b.0 + c.0) + tau.a.c.0"), limit=800) is None


def test_pass_table_rows_are_the_definitional_preorder(small_corpus):
    tests = small_corpus[:40]
    rows = pass_table("clt", [t("0"), t("1"), t("a.1")], tests)
    assert rows[t("0")] == 0  # no server satisfies the deadlocked client
    assert rows[t("1")] == (1 << len(tests)) - 1  # everything satisfies success


def test_cross_validate_small(small_corpus):
    report = cross_validate("clt", small_corpus[:25], test_limit=300)
    assert report.ok and len(report.records) == 625
    refuted = [r for r in report.records if not r.holds]
    assert refuted and all(r.witness is not None for r in refuted)


def test_cross_validate_pair_cap_deterministic(small_corpus):
    r1 = cross_validate("svr", small_corpus[:30], test_limit=200, pair_cap=50, seed=5)
    r2 = cross_validate("svr", small_corpus[:30], test_limit=200, pair_cap=50, seed=5)
    assert [(pretty(a.left), pretty(a.right)) for a in r1.records] == \
           [(pretty(a.left), pretty(a.right)) for a in r2.records]
