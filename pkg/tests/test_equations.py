import itertools
import random

import pytest

from conftest import t
from ccswb.equations import (
    GroundInstance,
    NotCCSf,
    PnfDiv,
    PnfExt,
    PnfTau,
    THEORY_AXIOMS,
    check_cnf,
    check_instances,
    check_pnf,
    cnf_to_term,
    erase_units,
    instantiate_axioms,
    is_saturated,
    normalize_cnf,
    normalize_pnf,
    normalize_pnf_info,
    normalize_snf,
    pnf_to_term,
    saturate,
    simplify_unusable,
)
from ccswb.equations import CnfExt, CnfTauUnit, CnfUnit
from ccswb.oracle import EnumSpec, enumerate_terms
from ccswb.preorders import leq_plus
from ccswb.syntax import Action, Const, OK, parse_defs, pretty

a, b, c = Action("a"), Action("b"), Action("c")


def test_saturate_examples():
    assert saturate([{a}, {b}]) == {frozenset({a}), frozenset({b}), frozenset({a, b})}
    assert saturate([{a}, {a, b, c}]) == {
        frozenset({a}), frozenset({a, b}), frozenset({a, c}), frozenset({a, b, c})}
    fam = saturate([{a}, {b}])
    assert saturate(fam) == fam


def test_saturate_is_a_closure_operator():
    rng = random.Random(2)
    labels = [a, b, c, OK]
    for _ in range(60):
        fam = [frozenset(x for x in labels if rng.random() < 0.4) for _ in range(3)]
        fam = [x for x in fam if x] or [frozenset({a})]
        sat = saturate(fam)
        assert set(fam) <= sat                       # extensive
        assert saturate(sat) == sat                  # idempotent
        bigger = saturate(fam + [frozenset({a, b})])
        assert sat <= bigger or not is_saturated(sat)  # monotone


def test_running_example_normal_form():
    term = t("a.(b.0 (+) c.1) + a.(b.1 (+) c.0)")
    n, exact = normalize_pnf_info(term)
    assert exact and check_pnf(n) == []
    assert isinstance(n, PnfExt)
    inner = n.branch_map()[a]
    assert isinstance(inner, PnfTau)
    assert inner.family == {frozenset({b}), frozenset({c}), frozenset({b, c})}
    leaves = inner.leaf_map()
    assert pretty(pnf_to_term(leaves[b])) == "tau.0 + tau.1"
    assert leaves[b] == leaves[c]
    rendered = pnf_to_term(n)
    assert leq_plus("p2p", term, rendered).holds and leq_plus("p2p", rendered, term).holds


def test_pnf_base_cases():
    assert normalize_pnf(t("0")) == PnfExt((), False)
    assert normalize_pnf(t("1")) == PnfExt((), True)
    assert normalize_pnf(t("div")) == PnfDiv(False)
    assert normalize_pnf(t("div + 1")) == PnfDiv(True)
    assert check_pnf(PnfDiv(True)) == []


def test_merge_with_both_successful_derivatives():
    # merging a.1 with a.(1 + b.1) funnels both continuations under one prefix
    n = normalize_pnf(t("a.1 + a.(1 + b.1)"))
    assert check_pnf(n) == []
    rendered = pnf_to_term(n)
    for source in [t("a.1 + a.(1 + b.1)")]:
        assert leq_plus("p2p", source, rendered).holds
        assert leq_plus("p2p", rendered, source).holds


def test_normalize_rejects_recursive_terms():
    env, _ = parse_defs("def A = ~a.A")
    with pytest.raises(NotCCSf):
        normalize_pnf(Const("A"), env)


def test_pnf_idempotent_on_rendering(small_corpus):
    for term in small_corpus:
        n = normalize_pnf(term)
        assert normalize_pnf(pnf_to_term(n)) == n


def test_check_pnf_flags_unsaturated_families():
    bogus = PnfTau(frozenset({frozenset({a}), frozenset({b})}),
                   ((a, PnfExt((), False)), (b, PnfExt((), False))), False)
    errors = check_pnf(bogus)
    assert errors and "not saturated" in errors[0] and "a" in errors[0] and "b" in errors[0]


def test_check_pnf_flags_missing_success_propagation():
    bogus = PnfExt(((a, PnfExt((), False)),), True)
    assert any("success" in e for e in check_pnf(bogus))


def test_cnf_examples():
    assert normalize_cnf(t("1 + a.0")) == CnfUnit()
    assert normalize_cnf(t("tau.(1 + a.1) + tau.1")) == CnfTauUnit()
    n = normalize_cnf(t("a.1"))
    assert isinstance(n, CnfExt) and n.branch_map()[a] == CnfUnit()
    assert pretty(cnf_to_term(n)) == "a.1"


def test_cnf_soundness_on_corpus(small_corpus):
    for term in small_corpus:
        _, exact = normalize_pnf_info(term)
        if not exact:
            continue
        n = normalize_cnf(term)
        assert check_cnf(n) == []
        rendered = cnf_to_term(n)
        assert leq_plus("clt", term, rendered).holds
        assert leq_plus("clt", rendered, term).holds


def test_pnf_soundness_on_corpus(small_corpus):
    for term in small_corpus:
        n, exact = normalize_pnf_info(term)
        assert check_pnf(n) == []
        if not exact:
            continue
        rendered = pnf_to_term(n)
        assert leq_plus("p2p", term, rendered).holds
        assert leq_plus("p2p", rendered, term).holds


def test_snf_is_server_sound(small_corpus):
    # success erased first, then the shared normalizer; validated against
    # the server precongruence
    for term in small_corpus[:60]:
        n = normalize_snf(term)
        rendered = pnf_to_term(n)
        assert leq_plus("svr", term, rendered).holds, pretty(term)
        assert leq_plus("svr", rendered, term).holds, pretty(term)


def test_erase_units():
    assert erase_units(t("a.1 + 1")) == t("a.0")
    assert erase_units(t("tau.(1 + b.1)")) == t("tau.b.0")


def test_instantiator_respects_sorts():
    from ccswb.lts import can_ok

    insts = instantiate_axioms("STD", ("a", "b"), depth=2, samples=60, seed=1)
    s1a = [i for i in insts if i.axiom == "S1a"]
    assert len(s1a) == 60
    # S1a's left summand guards the success-free variable: mu.x with x non-ok
    for inst in s1a:
        lhs_parts = inst.lhs.parts if hasattr(inst.lhs, "parts") else (inst.lhs,)
        assert any(not can_ok(p.body) for p in lhs_parts)


def test_axiom_soundness_sampled():
    for theory, kind in [("STD", "svr"), ("STD", "clt"), ("STD", "p2p"),
                         ("SVR", "svr"), ("CLT", "clt"), ("P2P", "p2p"),
                         ("Derived", "p2p"), ("Derived", "clt")]:
        insts = instantiate_axioms(theory, ("a", "b"), depth=2, samples=12, seed=7)
        assert check_instances(kind, insts) == []


def test_forbidden_s1a_instance_fails_when_forced():
    # substituting a success-capable term for the success-free variable in the
    # tau-distribution law produces a semantically false inequation
    assert not leq_plus("clt", t("1 + tau.a.1"), t("tau.(1 + a.1) + tau.a.1")).holds


def test_simplify_unusable():
    source = t("a.(b.0 (+) c.1) + a.(b.1 (+) c.0)")
    rendered = pnf_to_term(normalize_pnf(source))
    reduced = simplify_unusable(rendered)
    assert pretty(reduced) == "a.0"
    assert leq_plus("p2p", rendered, reduced).holds
    assert leq_plus("p2p", reduced, rendered).holds
    assert simplify_unusable(t("0")) == t("0")
    reduced = simplify_unusable(t("a.(b.d.0 + b.1)"))
    assert leq_plus("p2p", t("a.(b.d.0 + b.1)"), reduced).holds
    assert leq_plus("p2p", reduced, t("a.(b.d.0 + b.1)")).holds
