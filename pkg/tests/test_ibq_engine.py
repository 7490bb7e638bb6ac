from __future__ import annotations

import pytest

from conftest import hidden_oracle, load_fixture, load_gamma
from modules.clausifier import clausify_el
from modules.el_tableau import check_sat_el
from modules.errors import Inadmissible, NoViableMode
from modules.ibq_engine import (
    IbqMode, IbqOutcome, entailment_kb, entails, ibq_check_sat, project_gamma, select_mode, solve,
    step_omega_a, step_omega_e,
)
from modules.kb_parser import parse_assertions, parse_concept, parse_kb
from modules.oracle import LocalOracle
from modules.syntax import Atomic, ConceptAssertion, LogicProfile, Signature, named
from modules.tableau import DerivationABox, check_ht_abox

EL = LogicProfile.from_name("el")
HORN = LogicProfile.from_name("horn-alchiq")
FULL = LogicProfile.from_name("alchiq")
CONCEPTS = Signature(frozenset({"A"}), frozenset())
WITH_ROLES = Signature(frozenset({"A"}), frozenset({"R"}))


@pytest.mark.parametrize(
    "visible, hidden, oracle_type, gamma, allow_el, expected",
    [
        (EL, EL, "aent", WITH_ROLES, True, IbqMode.EL_OMEGA_E),
        (EL, EL, "aent", WITH_ROLES, False, IbqMode.HORN_OMEGA_E),
        (FULL, HORN, "aent", WITH_ROLES, True, IbqMode.HORN_OMEGA_E),
        (EL, FULL, "aent", WITH_ROLES, True, IbqMode.ALCHIQ_OMEGA_A),
        (EL, EL, "asat", WITH_ROLES, True, IbqMode.ALCHIQ_OMEGA_A),
        (FULL, FULL, "csat", CONCEPTS, True, IbqMode.ALCHIQ_OMEGA_A),
    ],
)
def test_select_mode(visible, hidden, oracle_type, gamma, allow_el, expected) -> None:
    assert select_mode(visible, hidden, oracle_type, gamma, allow_el) is expected


def test_concept_oracle_over_roles_has_no_mode() -> None:
    with pytest.raises(NoViableMode):
        select_mode(FULL, FULL, "csat", WITH_ROLES)
    with pytest.raises(NoViableMode):
        select_mode(FULL, FULL, "csat")


def test_mode_names() -> None:
    assert IbqMode.from_name("auto") is None
    assert IbqMode.from_name("horn-e") is IbqMode.HORN_OMEGA_E
    assert IbqMode.ALCHIQ_OMEGA_A.oracle_type == "asat"
    assert IbqMode.EL_OMEGA_E.oracle_type == "aent"


def test_run_through_with_an_abox_oracle(debug_invariants) -> None:
    o = hidden_oracle("runthrough_hidden.dl", "runthrough.sig", "asat")

    outcome = solve(load_fixture("acyc_base.dl"), o.gamma, o)

    assert outcome.mode is IbqMode.ALCHIQ_OMEGA_A
    assert outcome.cycle is not None and outcome.cycle.acyclic
    assert outcome.satisfiable
    assert outcome.queries["queries"] > 0


@pytest.mark.parametrize("hidden, expected", [("chain_th1.dl", True), ("chain_th2.dl", False)])
def test_el_chain(hidden: str, expected: bool) -> None:
    o = hidden_oracle(hidden, "chain.sig", "aent", logic="el")

    outcome = solve(load_fixture("chain_kv.dl"), o.gamma, o)

    assert outcome.mode is IbqMode.EL_OMEGA_E
    assert outcome.cycle is None
    assert outcome.satisfiable is expected


def test_harmful_cycle_is_inadmissible() -> None:
    o = hidden_oracle("cyclic_th1.dl", "cyclic.sig", "asat")

    with pytest.raises(Inadmissible) as info:
        solve(load_fixture("cyclic_kv.dl"), o.gamma, o)

    outcome = info.value.report
    assert isinstance(outcome, IbqOutcome)
    assert outcome.safety.admissible
    assert str(outcome.cycle.witness) == "v_A"
    assert outcome.result is None
    assert "v_A" in str(info.value)


def test_unknown_safety_is_inadmissible_unless_assumed(debug_invariants) -> None:
    o = hidden_oracle("unknown_th1.dl", "unknown.sig", "asat")

    with pytest.raises(Inadmissible):
        solve(load_fixture("unknown_kv.dl"), o.gamma, o)

    outcome = solve(load_fixture("unknown_kv.dl"), o.gamma, o, assume_admissible=True)
    assert outcome.result is not None


@pytest.mark.parametrize(
    "sub, sup, entailed",
    [
        ("VSD_Patient", "HS_Patient", True),
        ("EA_Patient", "TVD_Patient", True),
        ("AS_Patient", "VSD_Patient", False),
    ],
)
def test_cardiology_subsumptions(sub: str, sup: str, entailed: bool, debug_invariants) -> None:
    o = hidden_oracle("cardiology_hidden.dl", "cardiology.sig", "aent")

    outcome = entails(load_fixture("cardiology_visible.dl"), o.gamma, o,
                      parse_concept(sub), parse_concept(sup), assume_admissible=True)

    assert outcome.mode is IbqMode.HORN_OMEGA_E
    assert (not outcome.satisfiable) is entailed


def test_entailment_is_not_answered_by_the_el_algorithm() -> None:
    o = hidden_oracle("chain_th1.dl", "chain.sig", "aent", logic="el")

    with pytest.raises(NoViableMode):
        entails(load_fixture("chain_kv.dl"), o.gamma, o, Atomic("A"), Atomic("A"), mode=IbqMode.EL_OMEGA_E)


def test_entailment_kb_adds_a_marker() -> None:
    kb = parse_kb("A sub B.\n")

    augmented = entailment_kb(kb, Atomic("A"), Atomic("B"))

    assert ConceptAssertion(Atomic("_e0"), named("a0")) in augmented.abox
    assert len(augmented.tbox) == 3


def test_entailment_kb_avoids_used_individuals() -> None:
    kb = parse_kb("A(a0).\n")

    augmented = entailment_kb(kb, Atomic("A"), Atomic("B"))

    assert ConceptAssertion(Atomic("_e0"), named("a0_1")) in augmented.abox


def test_outcome_stats() -> None:
    o = hidden_oracle("chain_th1.dl", "chain.sig", "aent", logic="el")

    stats = solve(load_fixture("chain_kv.dl"), o.gamma, o).stats()

    assert set(stats) == {
        "queries", "distinct_queries", "max_query_size", "branches", "rule_apps", "individuals",
    }


def test_project_gamma_keeps_public_assertions() -> None:
    abox = DerivationABox.from_assertions(parse_assertions("A(a); C(a); R(a,b); S(b,c); C(c)"))
    gamma = Signature(frozenset({"C"}), frozenset({"R"}))

    projection = project_gamma(abox, gamma)

    assert set(projection.abox) == set(parse_assertions("C(a); R(a,b); C(c)"))
    assert len(projection.components) == 2
    assert projection.component_of(named("c")) == tuple(parse_assertions("C(c)"))
    assert projection.component_of(named("d")) is None


def test_oracle_check_closes_rejected_branches() -> None:
    o = hidden_oracle("unknown_th1.dl", "unknown.sig", "asat")
    abox = DerivationABox.from_assertions(parse_assertions("C(a)"))

    branches = step_omega_a(abox, o.gamma, o, o.logic)

    assert branches == [abox]
    assert abox.clash


def test_concept_cut_tries_the_positive_branch_first() -> None:
    o = hidden_oracle("unknown_th1.dl", "unknown.sig", "asat")
    abox = DerivationABox.from_assertions(parse_assertions("A(a)"))

    first, second = step_omega_a(abox, o.gamma, o, o.logic)

    assert first.has_concept(named("a"), "B")
    assert second.has_neg_concept(named("a"), "B")
    assert not abox.has_concept(named("a"), "B")
    assert check_ht_abox(first) == [] and check_ht_abox(second) == []


def test_completion_adds_entailed_public_concepts() -> None:
    o = hidden_oracle("runthrough_hidden.dl", "runthrough.sig", "aent", logic="alchiq")
    abox = DerivationABox.from_assertions(parse_assertions("R(a,b)"))

    assert step_omega_e(abox, o.gamma, o, "horn")
    assert abox.has_concept(named("a"), "C")
    assert not abox.has_concept(named("b"), "C")
    assert check_ht_abox(abox) == []
    assert not step_omega_e(abox, o.gamma, o, "el")


def test_unknown_completion_variant() -> None:
    o = hidden_oracle("runthrough_hidden.dl", "runthrough.sig", "aent")

    with pytest.raises(ValueError):
        step_omega_e(DerivationABox(), o.gamma, o, "full")


def test_el_completion_leaf_lies_inside_the_direct_el_leaf() -> None:
    visible = parse_kb("A(a).\nA sub some R B.\n")
    hidden = load_fixture("runthrough_hidden.dl")
    o = LocalOracle(hidden, load_gamma("runthrough.sig"), "aent")
    rv, av, _ = clausify_el(visible)
    rh, _, _ = clausify_el(hidden, prefix="_p")

    result = ibq_check_sat(o.gamma, rv, av, o, IbqMode.EL_OMEGA_E)
    direct, final = check_sat_el(rv + rh, av)

    assert result.satisfiable and direct.satisfiable
    assert result.leaf.has_concept(named("a"), "C")
    assert result.leaf.assertions() <= final.assertions()
    assert final.has_concept(named("a"), "E")
