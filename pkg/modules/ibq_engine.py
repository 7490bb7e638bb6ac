"""
Import-by-query satisfiability: visible rules reasoned over, hidden TBox queried

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Set, Tuple

from config.settings import QUERY_INDIVIDUAL, QUERY_PREFIX
from modules.acyclicity import CycleReport, build_acyclicity_program, detect_harmful_cycle
from modules.admissibility import SafetyReport, Verdict, check_safety
from modules.clausifier import HTRule, clausify_alchiq, clausify_el
from modules.el_tableau import ELTableau
from modules.errors import Inadmissible, NoViableMode
from modules.gamma_modal import gamma_modal_rewrite, with_expansion
from modules.kb_parser import infer_profile
from modules.oracle import OracleHandle, adapt, canonical_renaming
from modules.syntax import (
    BOTTOM, FALSUM, TOP, And, Atomic, Axiom, Concept, ConceptAssertion, ConceptIncl, Eq,
    Individual, KnowledgeBase, LogicProfile, Neq, NegRoleAssertion, Not, Role, RoleAssertion, Signature,
    connected_components, individuals_of, named, rename_assertion, render, render_abox,
    signature_of,
)
from modules.tableau import (
    UNBLOCKED, BlockStatus, DerivationABox, Hypertableau, SatResult, gamma_relevant,
)

logger = logging.getLogger(__name__)


class IbqMode(Enum):
    ALCHIQ_OMEGA_A = "alchiq-a"
    HORN_OMEGA_E = "horn-e"
    EL_OMEGA_E = "el-e"

    @property
    def oracle_type(self) -> str:
        return 'asat' if self is IbqMode.ALCHIQ_OMEGA_A else 'aent'

    @classmethod
    def from_name(cls, name: str) -> Optional['IbqMode']:
        """Mode for a command-line name; None for 'auto'."""
        if name == 'auto':
            return None
        return cls(name)


# ---------------------------------------------------------------------------
# Projection to the public signature
# ---------------------------------------------------------------------------

@dataclass
class GammaProjection:
    abox: Tuple[Axiom, ...]
    components: List[Tuple[Axiom, ...]]

    def component_of(self, ind: Individual) -> Optional[Tuple[Axiom, ...]]:
        for component in self.components:
            if any(ind in individuals_of(a) for a in component):
                return component
        return None


def project_gamma(abox: DerivationABox, gamma: Signature,
                  status: Optional[Dict[Individual, BlockStatus]] = None) -> GammaProjection:
    """
    Keep the assertions over public symbols that avoid indirectly blocked individuals.

    Args:
        abox: Derivation ABox
        gamma: Public signature
        status: Blocking status per individual; nothing is blocked when omitted

    Returns:
        GammaProjection with the kept assertions split into connected components
    """
    status = status or {}
    kept = []
    for assertion in abox.assertions():
        if assertion == FALSUM:
            continue
        if any(status.get(ind, UNBLOCKED).indirect for ind in individuals_of(assertion)):
            continue
        if signature_of(assertion) <= gamma:
            kept.append(assertion)
    kept.sort(key=render)
    return GammaProjection(tuple(kept), connected_components(kept))


def _query_units(projection: GammaProjection, abox: DerivationABox,
                 status: Dict[Individual, BlockStatus]) -> List[Tuple[Tuple[Axiom, ...], List[Individual]]]:
    """
    Components paired with their individuals, plus top(s) for individuals with no public assertion.
    """
    units = []
    covered: Set[Individual] = set()
    for component in projection.components:
        members = sorted({i for a in component for i in individuals_of(a)}, key=abox.order.__getitem__)
        covered.update(members)
        units.append((component, members))
    for ind in abox.individuals:
        if ind not in covered and not status.get(ind, UNBLOCKED).indirect:
            units.append(((ConceptAssertion(TOP, ind),), [ind]))
    return units


def _canonical_key(abox: Tuple[Axiom, ...], alpha: Optional[Axiom]) -> str:
    mapping = canonical_renaming(abox)
    text = render_abox(sorted({rename_assertion(a, mapping) for a in abox}, key=render), separator=";")
    if alpha is not None:
        text += " ENTAILS " + render(rename_assertion(alpha, mapping))
    return text


class _OracleMemo:
    """Answers per canonical query, shared by every branch of one run."""

    def __init__(self, o: OracleHandle):
        self.o = o
        self.answers: Dict[str, bool] = {}

    def asat(self, component: Tuple[Axiom, ...]) -> bool:
        key = _canonical_key(component, None)
        if key not in self.answers:
            self.answers[key] = self.o.asat(component)
        return self.answers[key]

    def aent(self, component: Tuple[Axiom, ...], alpha: Axiom) -> bool:
        key = _canonical_key(component, alpha)
        if key not in self.answers:
            self.answers[key] = self.o.aent(component, alpha)
        return self.answers[key]


# ---------------------------------------------------------------------------
# ALCHIQ with an ABox satisfiability oracle
# ---------------------------------------------------------------------------

def _memo_of(o) -> _OracleMemo:
    return o if isinstance(o, _OracleMemo) else _OracleMemo(o)


class OmegaAStep:
    """
    Oracle check and cut rules over one ABox.

    The check runs first: a component the hidden TBox rejects closes the
    branch. Otherwise the first applicable cut splits it in two, positive
    branch first. Cuts the hidden profile cannot need are skipped.
    """

    def __init__(self, gamma: Signature, o, hidden: LogicProfile):
        self.gamma = gamma
        self.hidden = hidden
        self.memo = _memo_of(o)
        self.concepts = sorted(gamma.concepts)
        self.roles = sorted(gamma.roles)

    def apply(self, abox: DerivationABox,
              status: Dict[Individual, BlockStatus]) -> Optional[List[DerivationABox]]:
        projection = project_gamma(abox, self.gamma, status)
        for component, _ in _query_units(projection, abox, status):
            if not self.memo.asat(component):
                abox.set_clash(f"hidden TBox rejects {render_abox(component)}")
                return [abox]
        for cut in (self._concept_cut, self._role_cut, self._inverse_cut, self._equality_cut):
            branches = cut(abox, status)
            if branches is not None:
                return branches
        return None

    def _live(self, abox: DerivationABox, status: Dict[Individual, BlockStatus]) -> List[Individual]:
        return [ind for ind in abox.individuals if not status.get(ind, UNBLOCKED).indirect]

    def _public_edges(self, abox: DerivationABox,
                      status: Dict[Individual, BlockStatus]) -> List[Tuple[Individual, Individual, str]]:
        live = set(self._live(abox, status))
        edges = []
        for s in self._live(abox, status):
            for t, names in sorted(abox.out_edges.get(s, {}).items(), key=lambda e: abox.order[e[0]]):
                if t in live:
                    edges.extend((s, t, name) for name in sorted(names) if name in self.gamma.roles)
        return edges

    def _split(self, abox: DerivationABox, positive: Axiom, negative: Axiom) -> List[DerivationABox]:
        first, second = abox.copy(), abox.copy()
        first.add_assertion(positive)
        second.add_assertion(negative)
        logger.debug("Cut on %s", render(positive))
        return [first, second]

    def _concept_cut(self, abox, status):
        for ind in self._live(abox, status):
            for name in self.concepts:
                if not abox.has_concept(ind, name) and not abox.has_neg_concept(ind, name):
                    assertion = ConceptAssertion(Atomic(name), ind)
                    return self._split(abox, assertion, ConceptAssertion(Not(Atomic(name)), ind))
        return None

    def _role_guess(self, abox, name: str, s: Individual, t: Individual):
        if name in abox.roles_between(s, t) or (name, s, t) in abox.neg_roles:
            return None
        role = Role(name)
        return self._split(abox, RoleAssertion(role, s, t), NegRoleAssertion(role, s, t))

    def _role_cut(self, abox, status):
        if not self.hidden.hierarchies:
            return None
        for s, t, _ in self._public_edges(abox, status):
            for name in self.roles:
                branches = self._role_guess(abox, name, s, t)
                if branches is not None:
                    return branches
        return None

    def _inverse_cut(self, abox, status):
        if not self.hidden.inverses:
            return None
        for s, t, used in self._public_edges(abox, status):
            for name in (self.roles if self.hidden.hierarchies else [used]):
                branches = self._role_guess(abox, name, t, s)
                if branches is not None:
                    return branches
        return None

    def _equality_cut(self, abox, status):
        if not self.hidden.cardinalities:
            return None
        for s1, s2 in _equality_candidates(abox, status, self.gamma, self.hidden.inverses):
            if abox.has_eq(s1, s2) or abox.has_neq(s1, s2):
                continue
            return self._split(abox, Eq(s1, s2), Neq(s1, s2))
        return None


def step_omega_a(abox: DerivationABox, gamma: Signature, o, hidden: LogicProfile,
                 status: Optional[Dict[Individual, BlockStatus]] = None) -> Optional[List[DerivationABox]]:
    """
    Apply the oracle check or one cut rule.

    Args:
        abox: Clash-free derivation ABox; closed in place when the oracle rejects it
        gamma: Public signature
        o: asat oracle handle
        hidden: Profile of the hidden TBox, for pruning cuts
        status: Blocking status per individual

    Returns:
        [abox] after a rejection, two branches after a cut, None when nothing applies
    """
    return OmegaAStep(gamma, o, hidden).apply(abox, status or {})


class AlchiqOmegaA(Hypertableau):
    """
    Hypertableau with cut rules that guess public facts and an oracle
    check that rejects guesses the hidden TBox contradicts.
    """

    def __init__(self, rules: Sequence[HTRule], gamma: Signature, o: OracleHandle, **limits):
        super().__init__(rules, gamma_relevant(gamma), **limits)
        self.step = OmegaAStep(gamma, o, o.logic)

    def _extension_rules(self, abox: DerivationABox,
                         status: Dict[Individual, BlockStatus]) -> Optional[List[DerivationABox]]:
        branches = self.step.apply(abox, status)
        if branches is not None:
            self.stats.rule_apps += 1
        return branches


def _equality_candidates(abox: DerivationABox, status: Dict[Individual, BlockStatus], gamma: Signature,
                         inverses: bool) -> List[Tuple[Individual, Individual]]:
    """Pairs s1, s2 that share a public-role neighbour s in one of the merge patterns."""
    pairs: List[Tuple[Individual, Individual]] = []
    seen: Set[Tuple[Individual, Individual]] = set()
    live = [ind for ind in abox.individuals if not status.get(ind, UNBLOCKED).indirect]
    alive = set(live)

    def public(names) -> bool:
        return bool(set(names) & gamma.roles)

    for s in live:
        succ = [t for t, names in abox.out_edges.get(s, {}).items() if t in alive and public(names)]
        pred = [t for t, names in abox.in_edges.get(s, {}).items() if t in alive and public(names)]
        groups = [list(combinations(succ, 2))]
        if inverses:
            groups.append(list(combinations(pred, 2)))
            groups.append([(p, q) for p in pred for q in succ])
        for group in groups:
            for a, b in group:
                if a == b:
                    continue
                pair = tuple(sorted((a, b), key=abox.order.__getitem__))
                if pair not in seen:
                    seen.add(pair)
                    pairs.append(pair)
    return pairs


# ---------------------------------------------------------------------------
# Horn-ALCHIQ and EL with an ABox entailment oracle
# ---------------------------------------------------------------------------

def _complete(abox: DerivationABox, status: Dict[Individual, BlockStatus], gamma: Signature,
              memo: _OracleMemo, hidden: LogicProfile, horn: bool) -> Optional[str]:
    """
    Add the public facts the hidden TBox entails from one component.

    Returns:
        None when nothing was added, 'clash' on an entailed contradiction,
        otherwise 'added'
    """
    projection = project_gamma(abox, gamma, status)
    for component, members in _query_units(projection, abox, status):
        if memo.aent(component, FALSUM):
            abox.set_clash(f"hidden TBox entails a contradiction from {render_abox(component)}")
            return 'clash'
        additions: List[Axiom] = []
        for ind in members:
            for name in sorted(gamma.concepts):
                if abox.has_concept(ind, name):
                    continue
                target = ConceptAssertion(Atomic(name), ind)
                if memo.aent(component, target):
                    additions.append(target)
        if horn and hidden.hierarchies:
            additions.extend(_entailed_roles(abox, component, members, gamma, memo))
        if horn and hidden.cardinalities:
            inside = set(members)
            for s1, s2 in _equality_candidates(abox, status, gamma, hidden.inverses):
                if s1 not in inside or s2 not in inside or abox.has_eq(s1, s2):
                    continue
                target = Eq(s1, s2)
                if memo.aent(component, target):
                    additions.append(target)
        if additions:
            for assertion in additions:
                abox.add_assertion(assertion)
            return 'added'
    return None


def _entailed_roles(abox: DerivationABox, component: Tuple[Axiom, ...], members: List[Individual],
                    gamma: Signature, memo: _OracleMemo) -> List[Axiom]:
    found = []
    inside = set(members)
    linked: Set[Tuple[Individual, Individual]] = set()
    for assertion in component:
        if isinstance(assertion, RoleAssertion) and assertion.source in inside and assertion.target in inside:
            linked.add((assertion.source, assertion.target))
            linked.add((assertion.target, assertion.source))
    for s, t in sorted(linked, key=lambda p: (abox.order[p[0]], abox.order[p[1]])):
        for name in sorted(gamma.roles):
            if name in abox.roles_between(s, t):
                continue
            target = RoleAssertion(Role(name), s, t)
            if memo.aent(component, target):
                found.append(target)
    return found


def step_omega_e(abox: DerivationABox, gamma: Signature, o, variant: str,
                 status: Optional[Dict[Individual, BlockStatus]] = None,
                 hidden: Optional[LogicProfile] = None) -> bool:
    """
    Complete one component with the public facts the hidden TBox entails.

    Args:
        abox: Clash-free derivation ABox, extended in place
        gamma: Public signature
        o: aent oracle handle
        variant: 'horn' adds concepts, roles and equalities; 'el' concepts only
        status: Blocking status per individual
        hidden: Hidden profile; read from the oracle when omitted

    Returns:
        True when something was added or the branch closed
    """
    if variant not in ('horn', 'el'):
        raise ValueError(f"Unknown completion variant: {variant}")
    memo = _memo_of(o)
    profile = hidden if hidden is not None else memo.o.logic
    return _complete(abox, status or {}, gamma, memo, profile, horn=variant == 'horn') is not None


class _CompletingMixin:
    variant = 'horn'

    def _extension_rules(self, abox: DerivationABox,
                         status: Dict[Individual, BlockStatus]) -> Optional[List[DerivationABox]]:
        if not step_omega_e(abox, status=status, gamma=self.gamma, o=self.memo,
                            variant=self.variant, hidden=self.hidden):
            return None
        self.stats.rule_apps += 1
        return [abox]


class HornOmegaE(_CompletingMixin, Hypertableau):
    """Hypertableau whose public facts are completed by entailment queries."""

    def __init__(self, rules: Sequence[HTRule], gamma: Signature, o: OracleHandle, **limits):
        super().__init__(rules, gamma_relevant(gamma), **limits)
        self.gamma = gamma
        self.hidden = o.logic
        self.memo = _OracleMemo(o)


class ElOmegaE(_CompletingMixin, ELTableau):
    """EL saturation extended with entailed public concept assertions."""

    variant = 'el'

    def __init__(self, rules: Sequence[HTRule], gamma: Signature, o: OracleHandle, **limits):
        super().__init__(rules, **limits)
        self.gamma = gamma
        self.hidden = o.logic
        self.memo = _OracleMemo(o)


_ENGINES = {
    IbqMode.ALCHIQ_OMEGA_A: AlchiqOmegaA,
    IbqMode.HORN_OMEGA_E: HornOmegaE,
    IbqMode.EL_OMEGA_E: ElOmegaE,
}


# ---------------------------------------------------------------------------
# Mode selection and entry points
# ---------------------------------------------------------------------------

def _asat_available(oracle_type: str, gamma: Optional[Signature]) -> bool:
    if oracle_type in ('asat', 'aent'):
        return True
    return gamma is not None and gamma.concept_only


def select_mode(visible: LogicProfile, hidden: LogicProfile, oracle_type: str,
                gamma: Optional[Signature] = None, allow_el: bool = True) -> IbqMode:
    """
    Pick the algorithm for the given logics and oracle type.

    Args:
        visible: Profile of the visible knowledge base
        hidden: Profile the oracle advertises
        oracle_type: Native oracle type
        gamma: Public signature; needed to adapt concept satisfiability oracles
        allow_el: Whether the EL algorithm may be chosen

    Returns:
        IbqMode

    Raises:
        NoViableMode: when no algorithm can use this oracle
    """
    if allow_el and visible.el and hidden.el and oracle_type == 'aent':
        return IbqMode.EL_OMEGA_E
    if hidden.horn and oracle_type == 'aent':
        return IbqMode.HORN_OMEGA_E
    if _asat_available(oracle_type, gamma):
        return IbqMode.ALCHIQ_OMEGA_A
    raise NoViableMode(
        f"a {oracle_type} oracle over a signature with roles supports no import-by-query algorithm")


def ibq_check_sat(gamma: Signature, rv: Sequence[HTRule], av: Sequence[Axiom], o: OracleHandle,
                  mode: IbqMode, max_nodes: Optional[int] = None,
                  max_seconds: Optional[float] = None) -> SatResult:
    """
    Decide satisfiability of visible rules and ABox together with the hidden TBox behind o.

    Args:
        gamma: Public signature, already extended by any rewritten concepts
        rv: Visible HT-rules (EL-rules for the EL algorithm)
        av: Normalized visible ABox
        o: Oracle handle; adapted to the type the mode needs
        mode: Algorithm to run

    Returns:
        SatResult
    """
    handle = adapt(o, mode.oracle_type)
    engine = _ENGINES[mode](rv, gamma, handle, max_nodes=max_nodes, max_seconds=max_seconds)
    logger.info("Running %s with %d rules", mode.value, len(rv))
    return engine.run(av)


@dataclass
class IbqOutcome:
    mode: IbqMode
    result: Optional[SatResult] = None
    safety: Optional[SafetyReport] = None
    cycle: Optional[CycleReport] = None
    gamma: Optional[Signature] = None
    rules: Tuple[HTRule, ...] = ()
    queries: Dict[str, int] = field(default_factory=dict)

    @property
    def satisfiable(self) -> bool:
        return bool(self.result and self.result.satisfiable)

    def stats(self) -> Dict[str, int]:
        stats = dict(self.queries)
        if self.result is not None:
            stats.update(self.result.stats.as_dict())
        return stats


def check_admissibility(rv: Sequence[HTRule], av: Sequence[Axiom], gamma: Signature, hidden: LogicProfile,
                        mode: IbqMode) -> Tuple[SafetyReport, Optional[CycleReport]]:
    if mode is IbqMode.EL_OMEGA_E:
        return check_safety(rv, gamma, 'el'), None
    safety = check_safety(rv, gamma, 'ht')
    cycle = detect_harmful_cycle(build_acyclicity_program(rv, av, gamma, hidden))
    return safety, cycle


def admissibility_problem(safety: SafetyReport, cycle: Optional[CycleReport]) -> Optional[str]:
    if safety.verdict is not Verdict.ADMISSIBLE:
        return safety.reason or f"safety verdict {safety.verdict.value}"
    if cycle is not None and not cycle.acyclic:
        return f"harmful cycle through {cycle.witness}"
    return None


def solve(visible: KnowledgeBase, gamma: Signature, o: OracleHandle, mode: Optional[IbqMode] = None,
          assume_admissible: bool = False, allow_el: bool = True,
          max_nodes: Optional[int] = None, max_seconds: Optional[float] = None) -> IbqOutcome:
    """
    Rewrite, clausify, check admissibility and run the selected algorithm.

    Args:
        visible: Visible knowledge base
        gamma: Public signature the oracle advertises
        o: Oracle handle
        mode: Algorithm; picked from the logics when None
        assume_admissible: Run even when the admissibility checks fail

    Returns:
        IbqOutcome

    Raises:
        Inadmissible: when the checks fail and assume_admissible is False
        NoViableMode: when no algorithm fits
    """
    rewritten, extended, expansion = gamma_modal_rewrite(visible, gamma)
    if mode is None:
        mode = select_mode(infer_profile(rewritten), o.logic, o.oracle_type, gamma, allow_el)
    clausify = clausify_el if mode is IbqMode.EL_OMEGA_E else clausify_alchiq
    rv, av, _ = clausify(rewritten)

    safety, cycle = check_admissibility(rv, av, extended, o.logic, mode)
    outcome = IbqOutcome(mode, safety=safety, cycle=cycle, gamma=extended, rules=rv)
    problem = admissibility_problem(safety, cycle)
    if problem:
        if not assume_admissible:
            raise Inadmissible(problem, outcome)
        logger.warning("Proceeding although the input is not known to be admissible: %s", problem)

    handle = with_expansion(o, expansion)
    outcome.result = ibq_check_sat(extended, rv, av, handle, mode, max_nodes, max_seconds)
    outcome.queries = o.query_log.snapshot()
    return outcome


def entailment_kb(visible: KnowledgeBase, sub: Concept, sup: Concept) -> KnowledgeBase:
    """
    Extend a KB so that it is unsatisfiable exactly when it entails sub ⊑ sup.

    A fresh concept X with X(a0), X ⊑ sub and X ⊓ sup ⊑ ⊥ is added.
    """
    used = {str(ind) for ind in visible.individuals}
    name, k = QUERY_INDIVIDUAL, 0
    while name in used:
        k += 1
        name = f"{QUERY_INDIVIDUAL}_{k}"
    marker = Atomic(f"{QUERY_PREFIX}0")
    return visible.with_axioms(
        tbox=[ConceptIncl(marker, sub), ConceptIncl(And(marker, sup), BOTTOM)],
        abox=[ConceptAssertion(marker, named(name))],
    )


def entails(visible: KnowledgeBase, gamma: Signature, o: OracleHandle, sub: Concept, sup: Concept,
            mode: Optional[IbqMode] = None, assume_admissible: bool = False, **limits) -> IbqOutcome:
    """
    Decide whether visible plus the hidden TBox entails sub ⊑ sup.

    The EL algorithm never answers subsumption queries, so auto selection
    falls back to the Horn algorithm for EL inputs.

    Returns:
        IbqOutcome whose result is unsatisfiable exactly when the subsumption holds
    """
    if mode is IbqMode.EL_OMEGA_E:
        raise NoViableMode("subsumption queries are not answered by the EL algorithm")
    augmented = entailment_kb(visible, sub, sup)
    return solve(augmented, gamma, o, mode, assume_admissible, allow_el=False, **limits)
