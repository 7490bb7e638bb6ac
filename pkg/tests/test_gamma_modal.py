from __future__ import annotations

import random

import pytest

from conftest import HORN_TEMPLATES, hidden_oracle, random_abox, random_hidden, random_tbox
from modules.clausifier import clausify_alchiq
from modules.errors import ResourceLimit
from modules.gamma_modal import (
    ExpandingOracle, expand_concept, gamma_modal_rewrite, is_gamma_modal, with_expansion,
)
from modules.ibq_engine import IbqMode, ibq_check_sat
from modules.kb_parser import parse_assertions, parse_concept, parse_kb
from modules.oracle import LocalOracle
from modules.syntax import (
    TOP, And, Atomic, ConceptAssertion, ConceptIncl, Exists, ForAll, Not, Role, Signature, named,
)

GAMMA = Signature(frozenset({"C"}), frozenset({"R"}))


def test_public_quantified_concepts_are_replaced() -> None:
    kb = parse_kb("A sub some R C.\n")

    rewritten, extended, expansion = gamma_modal_rewrite(kb, GAMMA)

    assert rewritten.tbox == {ConceptIncl(Atomic("A"), Atomic("_x1"))}
    assert expansion == {"_x1": Exists(Role("R"), Atomic("C"))}
    assert extended.concepts == {"C", "_x1"}
    assert extended.roles == GAMMA.roles


def test_equal_concepts_share_a_name() -> None:
    kb = parse_kb("A sub some R C.\nB sub some R C.\nsome R C sub D.\n")

    _, _, expansion = gamma_modal_rewrite(kb, GAMMA)

    assert list(expansion) == ["_x1"]


def test_only_outermost_public_concepts_are_named() -> None:
    kb = parse_kb("A sub some S some R C.\nB sub all R some R C.\n")

    rewritten, _, expansion = gamma_modal_rewrite(kb, GAMMA)

    assert parse_concept("all R some R C") in expansion.values()
    assert parse_concept("some R C") in expansion.values()
    assert all(axiom.sup != parse_concept("some S some R C") for axiom in rewritten.tbox)


def test_nothing_to_rewrite_returns_the_input() -> None:
    kb = parse_kb("A sub some S B.\n")

    rewritten, extended, expansion = gamma_modal_rewrite(kb, GAMMA)

    assert rewritten is kb
    assert extended == GAMMA
    assert expansion == {}


def test_assertions_are_rewritten() -> None:
    kb = parse_kb("(some R C)(a).\n")

    rewritten, _, expansion = gamma_modal_rewrite(kb, GAMMA)

    (assertion,) = rewritten.abox
    assert assertion.concept == Atomic("_x1")
    assert expansion["_x1"] == parse_concept("some R C")


def test_is_gamma_modal() -> None:
    assert is_gamma_modal(parse_concept("some R C"), GAMMA)
    assert is_gamma_modal(parse_concept("max 1 R top"), GAMMA)
    assert not is_gamma_modal(parse_concept("some R D"), GAMMA)
    assert not is_gamma_modal(parse_concept("C"), GAMMA)


def test_expand_concept_substitutes_inside_constructors() -> None:
    expansion = {"_x1": Exists(Role("R"), TOP)}
    fresh = Atomic("_x1")

    assert expand_concept(And(Atomic("A"), Not(fresh)), expansion) == parse_concept("(A and not some R top)")
    assert expand_concept(ForAll(Role("S"), fresh), expansion) == parse_concept("all S some R top")


def test_expanding_oracle_forwards_expanded_queries() -> None:
    inner = hidden_oracle("runthrough_hidden.dl", "runthrough.sig", "asat", logic="alchiq")
    expansion = {"_x1": Exists(Role("R"), TOP)}

    o = with_expansion(inner, expansion)

    assert isinstance(o, ExpandingOracle)
    assert "_x1" in o.gamma.concepts
    fresh = ConceptAssertion(Atomic("_x1"), named("a"))
    assert o.asat([fresh])
    assert not o.asat([fresh] + parse_assertions("(not C)(a)"))
    assert inner.query_log.snapshot()["queries"] == 2


def test_with_empty_expansion_is_the_inner_oracle() -> None:
    inner = hidden_oracle("runthrough_hidden.dl", "runthrough.sig", "asat")

    assert with_expansion(inner, {}) is inner


REWRITE_CONCEPTS = ["A", "B", "C", "D"]
REWRITE_ROLES = ["R", "S"]


def _rewrite_case(seed: int):
    rng = random.Random(7000 + seed)
    gamma = Signature(frozenset(rng.sample(REWRITE_CONCEPTS, 2)), frozenset({"R"}))
    public = sorted(gamma.concepts)
    forced = f"{rng.choice(REWRITE_CONCEPTS)} sub some R {rng.choice(public)}.\n"
    visible = parse_kb(forced
                       + random_tbox(rng, rng.randint(1, 4), HORN_TEMPLATES, REWRITE_CONCEPTS, REWRITE_ROLES)
                       + random_abox(rng, REWRITE_CONCEPTS, REWRITE_ROLES))
    hidden = random_hidden(rng, rng.randint(1, 4), HORN_TEMPLATES, REWRITE_CONCEPTS, REWRITE_ROLES, gamma)
    return visible, hidden, gamma


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(60))
def test_expanded_queries_match_a_hidden_tbox_that_defines_the_names(seed: int) -> None:
    visible, hidden, gamma = _rewrite_case(seed)
    rewritten, extended, expansion = gamma_modal_rewrite(visible, gamma)
    rv, av, _ = clausify_alchiq(rewritten)
    assert expansion

    o = LocalOracle(hidden, gamma, "aent")
    definitions = [axiom for name, concept in expansion.items()
                   for axiom in (ConceptIncl(Atomic(name), concept), ConceptIncl(concept, Atomic(name)))]
    defined = LocalOracle(hidden.with_axioms(tbox=definitions), extended, "aent", o.logic)

    try:
        through_expansion = ibq_check_sat(extended, rv, av, with_expansion(o, expansion), IbqMode.HORN_OMEGA_E)
        through_definitions = ibq_check_sat(extended, rv, av, defined, IbqMode.HORN_OMEGA_E)
    except ResourceLimit:
        pytest.skip("node budget exhausted")

    assert through_expansion.satisfiable == through_definitions.satisfiable
