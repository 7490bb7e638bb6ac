from __future__ import annotations

import pytest

from conftest import load_fixture, rules_of
from modules.clausifier import (
    ConceptAtom, HTRule, RoleAtom, X, clausify_alchiq, clausify_el, feature_profile, is_el_rule,
    nnf, render_fresh_names, render_rules, validate_ht_shape,
)
from modules.errors import UnsupportedConstruct
from modules.kb_parser import parse_concept, parse_kb
from modules.syntax import TOP, And, AtLeast, Atomic, ConceptAssertion, ForAll, Not, Or, Role, named


def _rendered(text: str) -> list[str]:
    rules, _ = rules_of(text)
    return [str(rule) for rule in rules]


@pytest.mark.parametrize(
    "text, expected",
    [
        ("A sub some R B.", "A(x) -> min 1 R B(x)"),
        ("(B and C) sub D.", "B(x), C(x) -> D(x)"),
        ("some R D sub E.", "R(x,y1), D(y1) -> E(x)"),
        ("top sub max 1 R top.", "R(x,y1), R(x,y2) -> y1 = y2"),
        ("A sub bot.", "A(x) -> FALSE"),
        ("A sub (B or C).", "A(x) -> B(x) | C(x)"),
        ("R rsub S.", "R(x,y1) -> S(x,y1)"),
        ("A sub all R B.", "A(x), R(x,y1) -> B(y1)"),
    ],
)
def test_single_axiom_rules(text: str, expected: str) -> None:
    assert _rendered(text) == [expected]


def test_inverse_roles_flip_role_atoms() -> None:
    assert _rendered("some inv R B sub C.") == ["R(y1,x), B(y1) -> C(x)"]


def test_complex_filler_gets_a_fresh_name() -> None:
    rules, abox, fresh = clausify_alchiq(parse_kb("A sub some R (B and C)."))

    assert fresh == {"_q1": ("sub", And(Atomic("B"), Atomic("C")))}
    rendered = render_rules(rules).splitlines()
    assert "A(x) -> min 1 R _q1(x)" in rendered
    assert "_q1(x) -> B(x)" in rendered
    assert "_q1(x) -> C(x)" in rendered
    assert abox == ()


def test_fresh_names_are_reused_for_equal_concepts() -> None:
    _, _, fresh = clausify_alchiq(parse_kb("A sub some R (B and C).\nD sub some S (B and C).\n"))

    assert len(fresh) == 1


def test_at_most_with_complex_filler_uses_a_lower_bound_name() -> None:
    _, _, fresh = clausify_alchiq(parse_kb("A sub max 1 R (B and C)."))

    assert any(direction == "sup" for direction, _ in fresh.values())
    assert "(lower bound)" in render_fresh_names(fresh)


def test_complex_assertions_are_named() -> None:
    rules, abox, _ = clausify_alchiq(parse_kb("(some R B)(a)."))

    assert abox == (ConceptAssertion(Atomic("_q1"), named("a")),)
    assert "_q1(x) -> min 1 R B(x)" in render_rules(rules)


def test_equalities_are_substituted_away() -> None:
    _, abox, _ = clausify_alchiq(parse_kb("A(b).\na = b.\nR(b,c).\n"))

    assert ConceptAssertion(Atomic("A"), named("a")) in abox
    assert all(named("b") not in (getattr(a, "source", None), getattr(a, "individual", None)) for a in abox)


def test_top_assertions_are_dropped_for_mentioned_individuals() -> None:
    _, abox, _ = clausify_alchiq(parse_kb("top(a).\nB(a).\n"))

    assert abox == (ConceptAssertion(Atomic("B"), named("a")),)


def test_nominals_are_rejected() -> None:
    with pytest.raises(UnsupportedConstruct):
        clausify_alchiq(parse_kb("nominal o.\nA sub o.\n"))


@pytest.mark.parametrize(
    "names",
    [
        ("trace_kb.dl",),
        ("unsafe_kv.dl", "unsafe_th2.dl"),
        ("cyclic_kv.dl", "cyclic_th2.dl"),
        ("cardiology_visible.dl", "cardiology_hidden.dl"),
        ("acyc_base.dl", "acyc_ext2.dl"),
    ],
)
def test_fixture_rules_have_ht_shape(names: tuple[str, ...]) -> None:
    rules, _, _ = clausify_alchiq(load_fixture(*names))

    for rule in rules:
        ok, reason = validate_ht_shape(rule)
        assert ok, f"{rule}: {reason}"


def test_validate_ht_shape_rejects_unguarded_variables() -> None:
    rule = HTRule((ConceptAtom(Atomic("A"), "y1"),), (ConceptAtom(Atomic("B"), X),))

    ok, reason = validate_ht_shape(rule)

    assert not ok
    assert "y1" in reason


def test_validate_ht_shape_rejects_role_atoms_between_branch_variables() -> None:
    rule = HTRule((RoleAtom("R", X, "y1"), RoleAtom("R", "y1", "y2")), ())

    assert not validate_ht_shape(rule)[0]


def test_clausify_el_produces_el_rules() -> None:
    rules, abox, _ = clausify_el(load_fixture("chain_kv.dl"))

    assert rules
    assert all(is_el_rule(rule) for rule in rules)
    assert abox == (ConceptAssertion(Atomic("A"), named("a")),)


@pytest.mark.parametrize("text", ["A sub all R B.", "A sub (B or C).", "A sub some inv R B."])
def test_clausify_el_rejects_non_el_input(text: str) -> None:
    with pytest.raises(UnsupportedConstruct):
        clausify_el(parse_kb(text))


def test_feature_profile() -> None:
    rules, _ = rules_of("top sub max 1 R top.\nA sub some inv S B.\n")

    profile = feature_profile(rules)

    assert profile.has_eq_heads
    assert profile.has_inverse_positions
    assert not profile.has_role_heads


def test_nnf_pushes_negation_inwards() -> None:
    concept = nnf(parse_concept("not (A and some R B)"))

    assert concept == Or(Not(Atomic("A")), ForAll(Role("R"), Not(Atomic("B"))))
    assert nnf(parse_concept("not not A")) == Atomic("A")
    assert nnf(parse_concept("some R A")) == AtLeast(1, Role("R"), Atomic("A"))


def test_top_assertion_keeps_an_otherwise_unmentioned_individual() -> None:
    _, abox, _ = clausify_alchiq(parse_kb("top(a).\nB(b).\n"))

    assert ConceptAssertion(TOP, named("a")) in abox
    assert ConceptAssertion(Atomic("B"), named("b")) in abox
