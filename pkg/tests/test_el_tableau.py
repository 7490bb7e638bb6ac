from __future__ import annotations

import pytest

from conftest import load_fixture, rules_of
from modules.clausifier import clausify_el
from modules.el_tableau import ELTableau, check_sat_el, subsumers
from modules.kb_parser import parse_kb
from modules.syntax import canonical_individual, named
from modules.tableau import check_sat


def _el(text: str):
    rules, abox, _ = clausify_el(parse_kb(text))
    return check_sat_el(rules, abox)


def test_existentials_point_to_canonical_individuals() -> None:
    rules, abox, _ = clausify_el(load_fixture("chain_kv.dl"))

    result, final = check_sat_el(rules, abox)

    a_star = canonical_individual("A")
    assert result.satisfiable
    assert final.has_concept(a_star, "A")
    assert "R" in final.roles_between(named("a"), a_star)
    assert "R" in final.roles_between(a_star, a_star)
    assert result.stats.branches == 0


def test_subsumers_of_a_concept() -> None:
    _, final = _el("D(a).\nD sub some R A.\nA sub B.\nB sub C.\n")

    assert subsumers(final, "A") == ["A", "B", "C"]


def test_clash_in_a_canonical_individual() -> None:
    result, _ = _el("A(a).\nA sub some R B.\nB sub bot.\n")

    assert not result.satisfiable
    assert result.verdict == "UNSAT"


def test_conjunctions_on_the_left() -> None:
    result, final = _el("A(a).\nB(a).\n(A and B) sub C.\nsome R C sub D.\nE(b).\nR(b,a).\n")

    assert result.satisfiable
    assert final.has_concept(named("a"), "C")
    assert final.has_concept(named("b"), "D")


def test_non_el_rules_are_rejected() -> None:
    rules, _ = rules_of("A sub (B or C).")

    with pytest.raises(ValueError):
        ELTableau(rules)


@pytest.mark.parametrize(
    "text",
    [
        "A(a).\nA sub some R A.\n",
        "A(a).\nA sub some R A.\nsome R some R some R top sub bot.\n",
        "A(a).\nA sub some R B.\nsome R B sub C.\nC sub bot.\n",
        "D(a).\nD sub some R A.\nA sub some S B.\nsome S B sub E.\n",
    ],
)
def test_agrees_with_the_hypertableau(text: str) -> None:
    rules, abox, _ = clausify_el(parse_kb(text))

    el_result, _ = check_sat_el(rules, abox)

    assert el_result.satisfiable == check_sat(rules, abox).satisfiable
