from __future__ import annotations

import pytest

from conftest import direct_verdict, load_fixture, rules_of
from modules.clausifier import clausify_alchiq
from modules.errors import ResourceLimit
from modules.kb_parser import parse_assertions
from modules.syntax import Individual, Signature, named
from modules.tableau import (
    NO_BLOCKING, BlockKind, DerivationABox, Hypertableau, check_ht_abox, check_sat,
    compute_blocking, gamma_relevant,
)

FIXTURE_PAIRS = [
    ("unknown_kv.dl", "unknown_th1.dl", "unknown_th2.dl"),
    ("unsafe_kv.dl", "unsafe_th1.dl", "unsafe_th2.dl"),
    ("cyclic_kv.dl", "cyclic_th1.dl", "cyclic_th2.dl"),
    ("chain_kv.dl", "chain_th1.dl", "chain_th2.dl"),
]


def _sat(text: str, **kwargs):
    rules, abox = rules_of(text)
    return check_sat(rules, abox, **kwargs)


def test_trace_kb_is_satisfiable_and_merges_successors(debug_invariants) -> None:
    rules, abox, _ = clausify_alchiq(load_fixture("trace_kb.dl"))

    result = check_sat(rules, abox)

    assert result.satisfiable
    assert result.verdict == "SAT"
    assert result.leaf.has_concept(named("a"), "E")


def test_trace_kb_with_clash_is_unsatisfiable(debug_invariants) -> None:
    assert not direct_verdict(["trace_kb.dl", "trace_clash.dl"])


@pytest.mark.parametrize("visible, sat_hidden, unsat_hidden", FIXTURE_PAIRS)
def test_fixture_pairs(visible: str, sat_hidden: str, unsat_hidden: str) -> None:
    assert direct_verdict([visible, sat_hidden])
    assert not direct_verdict([visible, unsat_hidden])


def test_blocking_stops_infinite_successor_chains() -> None:
    result = _sat("A(a).\nA sub some R A.\n")

    assert result.satisfiable
    assert result.stats.individuals <= 3


def test_without_blocking_the_node_limit_is_hit() -> None:
    with pytest.raises(ResourceLimit):
        _sat("A(a).\nA sub some R A.\n", blocking=NO_BLOCKING, max_nodes=20)


def test_disjunction_branches_until_a_clash_free_leaf() -> None:
    result = _sat("A(a).\nA sub (B or C).\nB sub bot.\n")

    assert result.satisfiable
    assert result.stats.branches >= 1
    assert result.leaf.has_concept(named("a"), "C")


@pytest.mark.parametrize(
    "text",
    [
        "A(a).\nA sub min 2 R B.\ntop sub max 1 R top.\n",
        "R(a,b).\nnot R(a,b).\n",
        "a = b.\na != b.\n",
        "A(a).\nA sub some R B.\nB sub all inv R C.\nC sub bot.\n",
        "R(a,b).\nR rsub S.\nsome S top sub bot.\n",
        "A(a).\n(not A)(a).\n",
    ],
)
def test_unsatisfiable_inputs(text: str, debug_invariants) -> None:
    assert not _sat(text).satisfiable


def test_stats_counters() -> None:
    stats = _sat("A(a).\nA sub (B or C).\nB sub bot.\n").stats.as_dict()

    assert set(stats) == {"branches", "rule_apps", "individuals"}
    assert stats["rule_apps"] >= 1


def test_rejects_rules_outside_ht_shape() -> None:
    from modules.clausifier import ConceptAtom, HTRule
    from modules.syntax import Atomic

    bad = HTRule((ConceptAtom(Atomic("A"), "y1"),), ())

    with pytest.raises(ValueError):
        Hypertableau([bad])


def test_derivation_abox_detects_clashes_on_arrival() -> None:
    abox = DerivationABox.from_assertions(parse_assertions("A(a); R(a,b)"))

    assert not abox.clash
    abox.add_assertion(parse_assertions("(not A)(a)")[0])
    assert abox.clash


def test_derivation_abox_copy_is_independent() -> None:
    abox = DerivationABox.from_assertions(parse_assertions("A(a)"))
    other = abox.copy()

    other.add_concept(named("a"), "B")

    assert not abox.has_concept(named("a"), "B")
    assert other.has_concept(named("a"), "B")


def test_merge_into_prunes_descendants() -> None:
    a, child, grandchild, b = named("a"), Individual("a", (1,)), Individual("a", (1, 1)), named("b")
    abox = DerivationABox()
    abox.add_role("R", a, child)
    abox.add_role("R", child, grandchild)
    abox.add_concept(child, "C")

    abox.merge_into(child, b)

    assert grandchild not in abox.order
    assert abox.has_concept(b, "C")
    assert abox.resolve(child) == b


def _chain(labels: list[str]) -> DerivationABox:
    abox = DerivationABox()
    current = named("a")
    abox.add_concept(current, labels[0])
    for label in labels[1:]:
        child = abox.fresh_child(current)
        abox.add_role("R", current, child)
        abox.add_concept(child, label)
        current = child
    return abox


def test_pairwise_blocking() -> None:
    abox = _chain(["A", "A", "A", "A"])

    status = compute_blocking(abox)

    assert status[Individual("a", (1,))].kind is BlockKind.UNBLOCKED
    assert status[Individual("a", (1, 1))].kind is BlockKind.DIRECT
    assert status[Individual("a", (1, 1))].blocker == Individual("a", (1,))
    assert status[Individual("a", (1, 1, 1))].kind is BlockKind.INDIRECT


def test_gamma_relevant_blocking_skips_public_edges() -> None:
    abox = _chain(["A", "A", "A", "A"])

    status = compute_blocking(abox, gamma_relevant(Signature(frozenset(), frozenset({"R"}))))

    assert not any(s.blocked for s in status.values())


def test_no_blocking_mode() -> None:
    status = compute_blocking(_chain(["A", "A", "A"]), NO_BLOCKING)

    assert not any(s.blocked for s in status.values())


def test_check_ht_abox_accepts_derived_leaves() -> None:
    rules, abox, _ = clausify_alchiq(load_fixture("cyclic_kv.dl", "cyclic_th1.dl"))

    result = check_sat(rules, abox)

    assert result.satisfiable
    assert check_ht_abox(result.leaf) == []


def test_check_ht_abox_reports_shape_violations() -> None:
    abox = DerivationABox()
    abox.add_role("R", Individual("a", (1,)), Individual("b", (1,)))

    violations = check_ht_abox(abox)

    assert any("unrelated" in v for v in violations)
    assert any("predecessor" in v for v in violations)
