from __future__ import annotations

import math
import os
import random
from typing import Iterator, Optional, Tuple

import pytest

from conftest import (
    EL_TEMPLATES, HORN_TEMPLATES, random_abox, random_gamma, random_hidden, random_tbox,
)
from modules.acyclicity import is_acyclic
from modules.clausifier import clausify_alchiq, clausify_el
from modules.el_tableau import check_sat_el
from modules.errors import Inadmissible, ResourceLimit
from modules.finite_models import FiniteResult, brute_force_sat
from modules.ibq_engine import IbqMode, IbqOutcome, ibq_check_sat, solve
from modules.kb_parser import parse_kb
from modules.oracle import LocalOracle
from modules.syntax import KnowledgeBase, LogicProfile, Signature
from modules.tableau import check_sat

pytestmark = pytest.mark.slow

SCALE = max(1, int(float(os.getenv("IBQ_DIFF_SCALE", "1"))))
CONCEPTS = ["A", "B", "C", "D"]
ROLES = ["R", "S"]
TEMPLATES = [
    "{0} sub {1}",
    "{0} sub some {r} {1}",
    "{0} sub all {r} {1}",
    "({0} and {1}) sub {2}",
    "{0} sub ({1} or {2})",
    "some {r} {0} sub {1}",
    "{0} sub not {1}",
    "({0} and {1}) sub bot",
    "{0} sub max 1 {r} top",
    "{0} sub min 2 {r} {1}",
]
CORPUS_CONCEPTS = ["A", "B", "C", "D", "E", "F"]
CORPUS_ROLES = ["R", "S", "T"]
BATCH = 25
ATTEMPTS_PER_BATCH = 40 * BATCH

Case = Tuple[KnowledgeBase, KnowledgeBase, Signature]


def _seeds(base: int, batch: int) -> Iterator[int]:
    start = base + batch * ATTEMPTS_PER_BATCH
    return iter(range(start, start + ATTEMPTS_PER_BATCH))


def _case(seed: int, templates, concepts, roles, max_axioms: int) -> Case:
    rng = random.Random(seed)
    gamma = random_gamma(rng, concepts, roles)
    visible = parse_kb(random_tbox(rng, rng.randint(1, max_axioms), templates, concepts, roles)
                       + random_abox(rng, concepts, roles))
    hidden = random_hidden(rng, rng.randint(1, max_axioms), templates, concepts, roles, gamma)
    return visible, hidden, gamma


def _run(case: Case, oracle_type: str, mode: IbqMode, **limits) -> Optional[IbqOutcome]:
    """Outcome of an admissible run; None when the input is refused or too large."""
    visible, hidden, gamma = case
    o = LocalOracle(hidden, gamma, oracle_type)
    try:
        return solve(visible, gamma, o, mode, **limits)
    except (Inadmissible, ResourceLimit):
        return None


def _union_satisfiable(case: Case) -> Optional[bool]:
    visible, hidden, _ = case
    rules, abox, _ = clausify_alchiq(visible.union(hidden))
    try:
        return check_sat(rules, abox, max_nodes=5000).satisfiable
    except ResourceLimit:
        return None


@pytest.mark.parametrize("seed", range(20 * SCALE))
def test_tableau_agrees_with_finite_models(seed: int) -> None:
    rng = random.Random(seed)
    kb = parse_kb(random_tbox(rng, rng.randint(1, 4), TEMPLATES, CONCEPTS, ROLES)
                  + random_abox(rng, CONCEPTS, ROLES))
    rules, abox, _ = clausify_alchiq(kb)

    try:
        result = check_sat(rules, abox, max_nodes=2000)
    except ResourceLimit:
        pytest.skip("node budget exhausted")
    finite = brute_force_sat(kb, max_domain=3)

    # a finite model is a model; no finite model up to the bound is not a refutation
    if finite is FiniteResult.SAT:
        assert result.satisfiable
    if not result.satisfiable:
        assert finite is not FiniteResult.SAT


@pytest.mark.parametrize("seed", range(20 * SCALE))
def test_el_engine_agrees_with_the_hypertableau(seed: int) -> None:
    rng = random.Random(1000 + seed)
    kb = parse_kb(random_tbox(rng, rng.randint(1, 5), EL_TEMPLATES, CONCEPTS, ROLES)
                  + f"{rng.choice(CONCEPTS)}(a).\n")

    rules, abox, _ = clausify_el(kb)
    el_result, _ = check_sat_el(rules, abox)
    ht_rules, ht_abox, _ = clausify_alchiq(kb)

    assert el_result.satisfiable == check_sat(ht_rules, ht_abox, max_nodes=2000).satisfiable


@pytest.mark.parametrize("batch", range(4 * SCALE))
def test_abox_oracle_algorithm_agrees_with_the_union(batch: int, debug_invariants) -> None:
    checked = 0
    for seed in _seeds(2000, batch):
        case = _case(seed, TEMPLATES, CONCEPTS, ROLES, 3)
        outcome = _run(case, "asat", IbqMode.ALCHIQ_OMEGA_A, max_nodes=2000, max_seconds=10)
        expected = _union_satisfiable(case) if outcome is not None else None
        if expected is None:
            continue
        assert outcome.satisfiable == expected, f"seed {seed}"
        checked += 1
        if checked == BATCH:
            break
    assert checked == BATCH


@pytest.mark.parametrize("batch", range(8 * SCALE))
def test_horn_completion_agrees_with_the_union(batch: int, debug_invariants) -> None:
    checked = 0
    for seed in _seeds(50_000, batch):
        case = _case(seed, HORN_TEMPLATES, CORPUS_CONCEPTS, CORPUS_ROLES, 8)
        outcome = _run(case, "aent", IbqMode.HORN_OMEGA_E)
        expected = _union_satisfiable(case) if outcome is not None else None
        if expected is None:
            continue
        assert outcome.satisfiable == expected, f"seed {seed}"
        checked += 1
        if checked == BATCH:
            break
    assert checked == BATCH


@pytest.mark.parametrize("batch", range(20 * SCALE))
def test_el_completion_agrees_with_the_union(batch: int) -> None:
    checked = 0
    for seed in _seeds(100_000, batch):
        case = _case(seed, EL_TEMPLATES, CORPUS_CONCEPTS, CORPUS_ROLES, 8)
        outcome = _run(case, "aent", IbqMode.EL_OMEGA_E)
        expected = _union_satisfiable(case) if outcome is not None else None
        if expected is None:
            continue
        assert outcome.satisfiable == expected, f"seed {seed}"
        _assert_el_leaf_contained(case)
        checked += 1
        if checked == BATCH:
            break
    assert checked == BATCH


def _assert_el_leaf_contained(case: Case) -> None:
    """Every assertion the completion derives is also in the saturation of the union."""
    visible, hidden, gamma = case
    rv, av, _ = clausify_el(visible)
    rh, _, _ = clausify_el(hidden, prefix="_p")
    result = ibq_check_sat(gamma, rv, av, LocalOracle(hidden, gamma, "aent"), IbqMode.EL_OMEGA_E)
    direct, final = check_sat_el(rv + rh, av)
    if not direct.satisfiable:
        return
    assert result.satisfiable
    assert result.leaf.assertions() <= final.assertions()


@pytest.mark.parametrize("depth", [2, 4, 8 * SCALE])
def test_chain_growth_is_linear(depth: int) -> None:
    text = "A0(a).\n" + "".join(f"A{i} sub some R A{i + 1}.\n" for i in range(depth))
    rules, abox, _ = clausify_alchiq(parse_kb(text))

    result = check_sat(rules, abox)

    assert result.satisfiable
    assert depth <= result.stats.individuals <= depth + 2


CHAIN_SIZES = (10, 20, 40)
CHAIN_GAMMA = Signature(frozenset({"B"}), frozenset())


def _chain_family(n: int) -> KnowledgeBase:
    return parse_kb("A0(a).\n" + "".join(f"A{i} sub some R A{i + 1}.\n" for i in range(n)) + f"A{n} sub B.\n")


def _growth_exponent(values) -> float:
    """Slope of log(value) over log(size) between the smallest and largest size."""
    return math.log(values[-1] / values[0]) / math.log(CHAIN_SIZES[-1] / CHAIN_SIZES[0])


def test_el_completion_cost_grows_subquadratically_on_chains() -> None:
    queries, rule_apps = [], []
    for n in CHAIN_SIZES:
        o = LocalOracle(parse_kb("B sub D.\n"), CHAIN_GAMMA, "aent")
        outcome = solve(_chain_family(n), CHAIN_GAMMA, o)
        assert outcome.mode is IbqMode.EL_OMEGA_E
        assert outcome.satisfiable
        stats = outcome.stats()
        queries.append(max(1, stats["queries"]))
        rule_apps.append(max(1, stats["rule_apps"]))

    assert _growth_exponent(queries) < 2
    assert _growth_exponent(rule_apps) < 2


def test_acyclicity_facts_grow_polynomially_on_chains() -> None:
    counts = []
    for n in CHAIN_SIZES:
        rv, av, _ = clausify_alchiq(_chain_family(n))
        report = is_acyclic(rv, av, CHAIN_GAMMA, LogicProfile.from_name("el"))
        assert report.acyclic
        counts.append(report.fact_count)

    assert counts[0] > 0
    assert _growth_exponent(counts) < 3
