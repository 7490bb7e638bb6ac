"""
Safety of visible rules towards a public signature

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from config import settings
from modules.clausifier import ConceptAtom, EqAtom, HTRule, RoleAtom, RuleSet, X, is_el_rule
from modules.syntax import AtLeast, Atomic, Not, Signature, Top, signature_of

logger = logging.getLogger(__name__)


class Modularity(Enum):
    PROVEN = "Proven"
    UNKNOWN = "Unknown"


class Verdict(Enum):
    ADMISSIBLE = "Admissible"
    INADMISSIBLE = "Inadmissible"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class GuardViolation:
    rule: HTRule
    atom: RoleAtom
    side: str   # 'x' or 'y'

    def __str__(self) -> str:
        variable = X if self.side == 'x' else (self.atom.second if self.atom.first == X else self.atom.first)
        return f"{self.atom} in [{self.rule}] has no safe guard on {variable}"


@dataclass
class SafetyReport:
    mode: str
    safe_set: FrozenSet[str]
    reduct: RuleSet
    modularity: Modularity
    guard_violations: List[GuardViolation] = field(default_factory=list)
    verdict: Verdict = Verdict.UNKNOWN
    reason: Optional[str] = None
    assignment: Optional[Dict[str, bool]] = None
    refuting_rule: Optional[HTRule] = None

    @property
    def admissible(self) -> bool:
        return self.verdict is Verdict.ADMISSIBLE


# ---------------------------------------------------------------------------
# Safe concepts and reducts
# ---------------------------------------------------------------------------

def _has_gamma_role(rule: HTRule, gamma: Signature) -> bool:
    return any(isinstance(atom, RoleAtom) and atom.role in gamma.roles for atom in rule.body)


def safe_concepts(rv: Sequence[HTRule], gamma: Signature) -> FrozenSet[str]:
    """
    Private atomic concepts that occur in a body next to a public role atom.

    Args:
        rv: Visible HT-rules
        gamma: Public signature

    Returns:
        Set of concept names
    """
    safe: Set[str] = set()
    for rule in rv:
        if not _has_gamma_role(rule, gamma):
            continue
        for atom in rule.body:
            if isinstance(atom, ConceptAtom) and isinstance(atom.concept, Atomic):
                if atom.concept.name not in gamma.concepts:
                    safe.add(atom.concept.name)
    return frozenset(safe)


def _mentions(atom, names: FrozenSet[str]) -> bool:
    if isinstance(atom, ConceptAtom):
        return bool(signature_of(atom.concept).concepts & names)
    return False


def reduct(rv: Sequence[HTRule], gamma: Signature) -> RuleSet:
    """Drop rules with a safe body concept, then safe atoms from the remaining heads."""
    safe = safe_concepts(rv, gamma)
    result = []
    for rule in rv:
        if any(_mentions(atom, safe) for atom in rule.body):
            continue
        head = tuple(atom for atom in rule.head if not _mentions(atom, safe))
        result.append(HTRule(rule.body, head))
    return tuple(dict.fromkeys(result))


# ---------------------------------------------------------------------------
# Sufficient modularity test
# ---------------------------------------------------------------------------

def _private_symbols(rules: Sequence[HTRule], gamma: Signature) -> List[str]:
    names: Set[str] = set()
    for rule in rules:
        for atom in rule.body + rule.head:
            if isinstance(atom, ConceptAtom):
                used = signature_of(atom.concept)
                names |= used.concepts - gamma.concepts
                names |= used.roles - gamma.roles
            elif isinstance(atom, RoleAtom) and atom.role not in gamma.roles:
                names.add(atom.role)
    return sorted(names)


def _constant(name: str, gamma: Signature, assignment: Dict[str, bool]) -> Optional[bool]:
    """Truth value of a symbol that does not depend on the public part, if any."""
    if name in gamma.concepts or name in gamma.roles:
        return None
    return assignment[name]


def _body_false(atom, gamma: Signature, assignment: Dict[str, bool]) -> bool:
    if isinstance(atom, ConceptAtom) and isinstance(atom.concept, Atomic):
        return _constant(atom.concept.name, gamma, assignment) is False
    if isinstance(atom, RoleAtom):
        return _constant(atom.role, gamma, assignment) is False
    return False


def _filler_everywhere(filler, gamma: Signature, assignment: Dict[str, bool]) -> bool:
    if isinstance(filler, Top):
        return True
    if isinstance(filler, Atomic):
        return _constant(filler.name, gamma, assignment) is True
    if isinstance(filler, Not) and isinstance(filler.operand, Atomic):
        return _constant(filler.operand.name, gamma, assignment) is False
    return False


def _head_true(atom, gamma: Signature, assignment: Dict[str, bool]) -> bool:
    if isinstance(atom, ConceptAtom):
        concept = atom.concept
        if isinstance(concept, Atomic):
            return _constant(concept.name, gamma, assignment) is True
        if isinstance(concept, AtLeast):
            return (concept.n == 1
                    and _constant(concept.role.base, gamma, assignment) is True
                    and _filler_everywhere(concept.filler, gamma, assignment))
        return False
    if isinstance(atom, RoleAtom):
        return _constant(atom.role, gamma, assignment) is True
    return isinstance(atom, EqAtom) and atom.left == atom.right


def _rule_passes(rule: HTRule, gamma: Signature, assignment: Dict[str, bool]) -> bool:
    return (any(_body_false(atom, gamma, assignment) for atom in rule.body)
            or any(_head_true(atom, gamma, assignment) for atom in rule.head))


def _passes_all(rules: Sequence[HTRule], gamma: Signature, assignment: Dict[str, bool]) -> bool:
    return all(_rule_passes(rule, gamma, assignment) for rule in rules)


def _greedy(rules: Sequence[HTRule], gamma: Signature, symbols: List[str]) -> Optional[Dict[str, bool]]:
    for start in (False, True):
        assignment = {name: start for name in symbols}
        if _passes_all(rules, gamma, assignment):
            return assignment
        # Flip single symbols while that strictly reduces the failing rules
        failing = sum(not _rule_passes(r, gamma, assignment) for r in rules)
        improved = True
        while failing and improved:
            improved = False
            for name in symbols:
                assignment[name] = not assignment[name]
                now = sum(not _rule_passes(r, gamma, assignment) for r in rules)
                if now < failing:
                    failing, improved = now, True
                    break
                assignment[name] = not assignment[name]
        if not failing:
            return assignment
    return None


def find_modular_assignment(rules: Sequence[HTRule], gamma: Signature) -> Optional[Dict[str, bool]]:
    """
    Interpret each private symbol as empty or everything so that every rule holds.

    Args:
        rules: HT-rules
        gamma: Public signature

    Returns:
        Assignment (True means everything), or None if none was found
    """
    symbols = _private_symbols(rules, gamma)
    if len(symbols) <= settings.MODULARITY_EXHAUSTIVE_LIMIT:
        for values in product((False, True), repeat=len(symbols)):
            assignment = dict(zip(symbols, values))
            if _passes_all(rules, gamma, assignment):
                return assignment
        return None
    logger.info("%d private symbols; trying corner assignments only", len(symbols))
    return _greedy(rules, gamma, symbols)


def check_modularity_sufficient(rules: Sequence[HTRule], gamma: Signature) -> Modularity:
    """Proven when some empty/everything interpretation of private symbols satisfies the rules."""
    if find_modular_assignment(rules, gamma) is not None:
        return Modularity.PROVEN
    return Modularity.UNKNOWN


def refuting_rule(rules: Sequence[HTRule], gamma: Signature) -> Optional[HTRule]:
    """
    A rule over public symbols only that some public interpretation violates.

    The body atoms are made true over pairwise distinct elements and nothing
    else holds; the rule refutes modularity when every head atom stays false.
    """
    for rule in rules:
        used = signature_of([atom.concept for atom in rule.body + rule.head if isinstance(atom, ConceptAtom)])
        roles = {atom.role for atom in rule.body + rule.head if isinstance(atom, RoleAtom)}
        if not (used <= gamma and roles <= gamma.roles):
            continue
        concepts = {(atom.concept.name, atom.var) for atom in rule.body if isinstance(atom, ConceptAtom)}
        edges = {(atom.role, atom.first, atom.second) for atom in rule.body if isinstance(atom, RoleAtom)}
        if not any(_holds_in_body_model(atom, concepts, edges) for atom in rule.head):
            return rule
    return None


def _holds_in_body_model(atom, concepts: Set[Tuple[str, str]], edges: Set[Tuple[str, str, str]]) -> bool:
    if isinstance(atom, RoleAtom):
        return (atom.role, atom.first, atom.second) in edges
    if isinstance(atom, EqAtom):
        return atom.left == atom.right
    concept = atom.concept
    if isinstance(concept, Atomic):
        return (concept.name, atom.var) in concepts
    if isinstance(concept, AtLeast):
        role = concept.role
        if role.inverted:
            pool = {s for name, s, t in edges if name == role.base and t == atom.var}
        else:
            pool = {t for name, s, t in edges if name == role.base and s == atom.var}
        filler = concept.filler
        if isinstance(filler, Atomic):
            pool = {v for v in pool if (filler.name, v) in concepts}
        elif isinstance(filler, Not):
            pool = {v for v in pool if (filler.operand.name, v) not in concepts}
        return len(pool) >= concept.n
    return False


# ---------------------------------------------------------------------------
# Safety
# ---------------------------------------------------------------------------

def _guard_violations(rv: Sequence[HTRule], gamma: Signature, safe: FrozenSet[str], mode: str) -> List[GuardViolation]:
    violations = []
    for rule in rv:
        guarded = {atom.var for atom in rule.body
                   if isinstance(atom, ConceptAtom) and isinstance(atom.concept, Atomic)
                   and atom.concept.name in safe}
        for atom in rule.body:
            if not isinstance(atom, RoleAtom) or atom.role not in gamma.roles:
                continue
            other = atom.second if atom.first == X else atom.first
            if mode == 'ht' and X not in guarded:
                violations.append(GuardViolation(rule, atom, 'x'))
            if other not in guarded:
                violations.append(GuardViolation(rule, atom, 'y'))
    return violations


def check_safety(rv: Sequence[HTRule], gamma: Signature, mode: str = 'ht') -> SafetyReport:
    """
    Check that visible rules may be combined with an unknown hidden TBox.

    Args:
        rv: Visible HT-rules (EL-rules for mode 'el')
        gamma: Public signature
        mode: 'ht' guards both ends of public role atoms, 'el' only the successor

    Returns:
        SafetyReport
    """
    if mode not in ('ht', 'el'):
        raise ValueError(f"Unknown safety mode: {mode}")
    if mode == 'el':
        for rule in rv:
            if not is_el_rule(rule):
                raise ValueError(f"EL safety needs EL-rules: {rule}")

    safe = safe_concepts(rv, gamma)
    reduced = reduct(rv, gamma)
    assignment = find_modular_assignment(reduced, gamma)
    modularity = Modularity.PROVEN if assignment is not None else Modularity.UNKNOWN
    report = SafetyReport(mode, safe, reduced, modularity,
                          _guard_violations(rv, gamma, safe, mode), assignment=assignment)

    if report.guard_violations:
        report.verdict = Verdict.INADMISSIBLE
        report.reason = f"missing safe guard: {report.guard_violations[0]}"
    elif modularity is Modularity.PROVEN:
        report.verdict = Verdict.ADMISSIBLE
    else:
        report.refuting_rule = refuting_rule(reduced, gamma)
        if report.refuting_rule is not None:
            report.verdict = Verdict.INADMISSIBLE
            report.reason = f"reduct is not semantically modular: {report.refuting_rule}"
        else:
            report.verdict = Verdict.UNKNOWN
            report.reason = "semantic modularity of the reduct could not be established"
    logger.info("Safety (%s): %s", mode, report.verdict.value)
    return report
