from __future__ import annotations

import pytest

from conftest import hidden_oracle, load_fixture, load_gamma
from modules.errors import NoReduction, NotConnected, SigViolation, UnsupportedQueryForType
from modules.kb_parser import parse_assertions, parse_concept, parse_kb
from modules.oracle import (
    AdaptedOracle, LocalOracle, adapt, canonical_renaming, negate_assertion, reduction_problem,
)
from modules.syntax import FALSUM, LogicProfile, Signature, named


def _abox(text: str):
    return parse_assertions(text)


def _alpha(text: str):
    return parse_assertions(text)[0]


@pytest.fixture
def concept_oracle() -> LocalOracle:
    """asat oracle over 'C sub bot' with public A, B, C."""
    return hidden_oracle("unknown_th1.dl", "unknown.sig", "asat")


@pytest.fixture
def role_oracle() -> LocalOracle:
    """aent oracle over the run-through TBox with public C and R."""
    return hidden_oracle("runthrough_hidden.dl", "runthrough.sig", "aent", logic="alchiq")


def test_asat_answers(concept_oracle: LocalOracle) -> None:
    assert concept_oracle.asat(_abox("A(a); B(a)"))
    assert not concept_oracle.asat(_abox("C(a)"))
    assert not concept_oracle.asat(_abox("A(a); C(a)"))


def test_aent_answers(role_oracle: LocalOracle) -> None:
    assert role_oracle.aent(_abox("R(a,b)"), _alpha("C(a)"))
    assert not role_oracle.aent(_abox("R(a,b)"), _alpha("C(b)"))
    assert not role_oracle.aent(_abox("R(a,b)"), FALSUM)
    assert role_oracle.aent(_abox("R(a,b); (not C)(a)"), FALSUM)


def test_symbols_outside_gamma_are_rejected(concept_oracle: LocalOracle) -> None:
    with pytest.raises(SigViolation):
        concept_oracle.asat(_abox("D(a)"))


def test_falsum_in_the_abox_is_rejected(role_oracle: LocalOracle) -> None:
    with pytest.raises(SigViolation):
        role_oracle.aent(_abox("R(a,b); FALSUM"), FALSUM)


def test_disconnected_queries_are_rejected(role_oracle: LocalOracle) -> None:
    with pytest.raises(NotConnected):
        role_oracle.aent(_abox("R(a,b); C(c)"), FALSUM)


def test_entailment_target_must_stay_inside_the_abox(role_oracle: LocalOracle) -> None:
    with pytest.raises(NotConnected):
        role_oracle.aent(_abox("R(a,b)"), _alpha("C(c)"))


def test_query_type_must_match(concept_oracle: LocalOracle) -> None:
    with pytest.raises(UnsupportedQueryForType):
        concept_oracle.aent(_abox("A(a)"), FALSUM)
    with pytest.raises(UnsupportedQueryForType):
        concept_oracle.csat(parse_concept("A"))


def test_renamed_queries_hit_the_cache(concept_oracle: LocalOracle) -> None:
    concept_oracle.asat(_abox("A(a)"))
    concept_oracle.asat(_abox("A(b)"))
    concept_oracle.asat(_abox("A(x); B(x)"))

    assert concept_oracle.query_log.snapshot() == {
        "queries": 3,
        "distinct_queries": 2,
        "max_query_size": 2,
    }


def test_query_log_reset(concept_oracle: LocalOracle) -> None:
    concept_oracle.asat(_abox("A(a)"))
    concept_oracle.query_log.reset()

    assert concept_oracle.query_log.snapshot()["queries"] == 0


def test_csat_oracle() -> None:
    o = hidden_oracle("unknown_th1.dl", "unknown.sig", "csat")

    assert o.csat(parse_concept("(A and B)"))
    assert not o.csat(parse_concept("(A and C)"))


def test_hidden_kb_with_assertions_is_rejected() -> None:
    with pytest.raises(ValueError):
        LocalOracle(load_fixture("unknown_kv.dl"), load_gamma("unknown.sig"), "asat")


def test_describe(concept_oracle: LocalOracle) -> None:
    assert concept_oracle.describe() == "type=asat gamma=c:A,c:B,c:C logic=el"


def test_canonical_renaming_is_depth_first_from_the_least_individual() -> None:
    mapping = canonical_renaming(_abox("R(b,c); S(a,b)"))

    assert mapping == {named("a"): named("i0"), named("b"): named("i1"), named("c"): named("i2")}


def test_negate_assertion() -> None:
    assert negate_assertion(_alpha("C(a)")) == _alpha("(not C)(a)")
    assert negate_assertion(_alpha("R(a,b)")) == _alpha("not R(a,b)")
    assert negate_assertion(_alpha("a = b")) == _alpha("a != b")


def test_asat_adapted_to_aent(concept_oracle: LocalOracle) -> None:
    o = adapt(concept_oracle, "aent")

    assert isinstance(o, AdaptedOracle)
    assert o.aent(_abox("C(a)"), FALSUM)
    assert not o.aent(_abox("A(a)"), FALSUM)
    assert o.query_log is concept_oracle.query_log
    # 'C sub bot' is in EL, where negated assertions cannot be asked
    with pytest.raises(NoReduction):
        o.aent(_abox("A(a)"), _alpha("B(a)"))


def test_aent_adapted_to_asat(role_oracle: LocalOracle) -> None:
    o = adapt(role_oracle, "asat")

    assert o.asat(_abox("R(a,b)"))
    assert not o.asat(_abox("R(a,b); (not C)(a)"))


def test_asat_adapted_to_aent_with_negation() -> None:
    inner = hidden_oracle("runthrough_hidden.dl", "runthrough.sig", "asat", logic="alchiq")

    o = adapt(inner, "aent")

    assert o.aent(_abox("R(a,b)"), _alpha("C(a)"))
    assert not o.aent(_abox("R(a,b)"), _alpha("C(b)"))


def test_csat_adapted_to_asat_over_concepts() -> None:
    o = adapt(hidden_oracle("unknown_th1.dl", "unknown.sig", "csat"), "asat")

    assert o.asat(_abox("A(a); B(a)"))
    assert o.asat(_abox("A(a); a = b; B(b)"))
    assert not o.asat(_abox("A(a); a = b; C(b)"))


def test_csat_cannot_serve_role_signatures() -> None:
    inner = hidden_oracle("runthrough_hidden.dl", "runthrough.sig", "csat")

    with pytest.raises(NoReduction):
        adapt(inner, "asat")


def test_reduction_problem() -> None:
    gamma = Signature(frozenset({"A"}), frozenset({"R"}))
    horn = LogicProfile.from_name("horn-alchiq")

    assert reduction_problem("asat", "asat", gamma, horn) is None
    assert reduction_problem("csat", "asat", gamma, horn) is not None
    assert reduction_problem("asat", "aent", gamma, horn) is not None
    assert reduction_problem("asat", "aent", gamma, horn, needs_negation=False) is None


@pytest.mark.parametrize("hidden, satisfiable", [("A sub B.\n", True), ("top sub bot.\n", False)])
def test_empty_abox_asks_whether_the_hidden_tbox_has_a_model(hidden: str, satisfiable: bool) -> None:
    gamma = Signature(frozenset({"A"}), frozenset())
    asat = LocalOracle(parse_kb(hidden), gamma, "asat")
    aent = LocalOracle(parse_kb(hidden), gamma, "aent")

    assert asat.asat(()) is satisfiable
    assert aent.aent((), FALSUM) is not satisfiable
