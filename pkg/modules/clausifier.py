"""
Structural transformation of knowledge bases into HT-rules and EL-rules

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

import logging
import re
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple, Union

from config.settings import FRESH_PREFIX
from modules.errors import UnsupportedConstruct
from modules.kb_parser import infer_profile, walk_concept
from modules.syntax import (
    TOP, BOTTOM, And, AtLeast, AtMost, Atomic, Axiom, Bottom, Concept,
    ConceptAssertion, ConceptIncl, Eq, Exists, Falsum, ForAll, Individual,
    KnowledgeBase, Neq, NegRoleAssertion, Not, Or, Role, RoleAssertion, RoleIncl,
    Top, individuals_of, is_literal, render, role_assertion,
)

logger = logging.getLogger(__name__)

X = 'x'
_BRANCH_VAR = re.compile(r'^y\d+$')


# ---------------------------------------------------------------------------
# Rule atoms and rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConceptAtom:
    concept: Concept
    var: str

    def __str__(self) -> str:
        concept = self.concept
        if isinstance(concept, AtLeast):
            return f"min {concept.n} {concept.role} {render(concept.filler)}({self.var})"
        if isinstance(concept, Not):
            return f"not {render(concept.operand)}({self.var})"
        return f"{render(concept)}({self.var})"


@dataclass(frozen=True)
class RoleAtom:
    role: str
    first: str
    second: str

    def __str__(self) -> str:
        return f"{self.role}({self.first},{self.second})"


@dataclass(frozen=True)
class EqAtom:
    left: str
    right: str

    def __post_init__(self):
        if self.right < self.left:
            left, right = self.right, self.left
            object.__setattr__(self, 'left', left)
            object.__setattr__(self, 'right', right)

    def __str__(self) -> str:
        return f"{self.left} = {self.right}"


RuleAtom = Union[ConceptAtom, RoleAtom, EqAtom]


@dataclass(frozen=True)
class HTRule:
    """Body conjunction implies head disjunction; an empty head means falsum."""
    body: Tuple[RuleAtom, ...]
    head: Tuple[RuleAtom, ...]

    @property
    def variables(self) -> Tuple[str, ...]:
        seen: Dict[str, None] = {}
        for atom in self.body + self.head:
            for var in _atom_vars(atom):
                seen.setdefault(var, None)
        return tuple(seen)

    @property
    def branch_variables(self) -> Tuple[str, ...]:
        return tuple(v for v in self.variables if v != X)

    @property
    def is_horn(self) -> bool:
        return len(self.head) <= 1

    def __str__(self) -> str:
        body = ", ".join(str(a) for a in self.body) or "TRUE"
        head = " | ".join(str(a) for a in self.head) or "FALSE"
        return f"{body} -> {head}"


@dataclass(frozen=True)
class FeatureProfile:
    has_eq_heads: bool = False
    has_inverse_positions: bool = False
    has_role_heads: bool = False


RuleSet = Tuple[HTRule, ...]
# name -> ('sub', C) for name ⊑ C, or ('sup', C) for C ⊑ name
FreshNameMap = Dict[str, Tuple[str, Concept]]


def _atom_vars(atom: RuleAtom) -> Tuple[str, ...]:
    if isinstance(atom, ConceptAtom):
        return (atom.var,)
    if isinstance(atom, RoleAtom):
        return (atom.first, atom.second)
    return (atom.left, atom.right)


def role_atom(role: Role, first: str, second: str) -> RoleAtom:
    """Atomic-role atom that R(first, second) stands for."""
    if role.inverted:
        return RoleAtom(role.base, second, first)
    return RoleAtom(role.base, first, second)


def render_rules(rules: Sequence[HTRule]) -> str:
    return "\n".join(str(rule) for rule in rules)


# ---------------------------------------------------------------------------
# Negation normal form
# ---------------------------------------------------------------------------

def nnf(concept: Concept, negated: bool = False) -> Concept:
    """
    Negation normal form over Top/Bottom/literals/And/Or/AtLeast/ForAll/AtMost.

    Exists becomes AtLeast 1; trivial cardinalities are simplified away.
    """
    if isinstance(concept, Top):
        return BOTTOM if negated else TOP
    if isinstance(concept, Bottom):
        return TOP if negated else BOTTOM
    if isinstance(concept, Atomic):
        return Not(concept) if negated else concept
    if isinstance(concept, Not):
        return nnf(concept.operand, not negated)
    if isinstance(concept, (And, Or)):
        left, right = nnf(concept.left, negated), nnf(concept.right, negated)
        conj = isinstance(concept, And) != negated
        return _make_and(left, right) if conj else _make_or(left, right)
    if isinstance(concept, Exists):
        return nnf(AtLeast(1, concept.role, concept.filler), negated)
    if isinstance(concept, AtLeast):
        if concept.n <= 0:
            return BOTTOM if negated else TOP
        if negated:
            return _make_at_most(concept.n - 1, concept.role, nnf(concept.filler))
        filler = nnf(concept.filler)
        return BOTTOM if isinstance(filler, Bottom) else AtLeast(concept.n, concept.role, filler)
    if isinstance(concept, ForAll):
        if negated:
            filler = nnf(concept.filler, True)
            return BOTTOM if isinstance(filler, Bottom) else AtLeast(1, concept.role, filler)
        filler = nnf(concept.filler)
        return TOP if isinstance(filler, Top) else ForAll(concept.role, filler)
    if isinstance(concept, AtMost):
        if negated:
            filler = nnf(concept.filler)
            return BOTTOM if isinstance(filler, Bottom) else AtLeast(concept.n + 1, concept.role, filler)
        return _make_at_most(concept.n, concept.role, nnf(concept.filler))
    raise TypeError(f"Not a concept: {concept!r}")


def _make_and(left: Concept, right: Concept) -> Concept:
    if isinstance(left, Bottom) or isinstance(right, Bottom):
        return BOTTOM
    if isinstance(left, Top):
        return right
    if isinstance(right, Top):
        return left
    return And(left, right)


def _make_or(left: Concept, right: Concept) -> Concept:
    if isinstance(left, Top) or isinstance(right, Top):
        return TOP
    if isinstance(left, Bottom):
        return right
    if isinstance(right, Bottom):
        return left
    return Or(left, right)


def _make_at_most(n: int, role: Role, filler: Concept) -> Concept:
    if isinstance(filler, Bottom):
        return TOP
    if n == 0:
        negated = nnf(filler, True)
        return TOP if isinstance(negated, Top) else ForAll(role, negated)
    return AtMost(n, role, filler)


def _disjuncts(concept: Concept) -> List[Concept]:
    if isinstance(concept, Or):
        return _disjuncts(concept.left) + _disjuncts(concept.right)
    return [concept]


def _conjuncts(concept: Concept) -> List[Concept]:
    if isinstance(concept, And):
        return _conjuncts(concept.left) + _conjuncts(concept.right)
    return [concept]


def _head_weight(concept: Concept) -> int:
    """Number of head atoms a clause for this NNF concept would carry."""
    if isinstance(concept, Atomic):
        return 1
    if isinstance(concept, (Not, Top, Bottom)):
        return 0
    if isinstance(concept, Or):
        return _head_weight(concept.left) + _head_weight(concept.right)
    if isinstance(concept, And):
        return max(_head_weight(concept.left), _head_weight(concept.right))
    if isinstance(concept, AtLeast):
        return 1
    if isinstance(concept, ForAll):
        weight = 0
        for part in _disjuncts(concept.filler):
            if isinstance(part, Atomic):
                weight += 1
            elif not is_literal(part) and not isinstance(part, (Top, Bottom)):
                weight += 0 if _head_weight(part) == 0 else 1
        return weight
    if isinstance(concept, AtMost):
        count = concept.n + 1
        weight = count * (count - 1) // 2
        if isinstance(concept.filler, Not):
            weight += count
        return weight
    raise TypeError(f"Not an NNF concept: {concept!r}")


# ---------------------------------------------------------------------------
# Clausifier
# ---------------------------------------------------------------------------

class _Clausifier:
    """Accumulates rules and fresh names for one knowledge base."""

    def __init__(self, prefix: str):
        self.prefix = prefix
        self.counter = 0
        self.rules: List[HTRule] = []
        self.fresh: FreshNameMap = {}
        self._subsumee: Dict[Concept, str] = {}
        self._complement: Dict[Concept, str] = {}
        self.log = logger.getChild("Clausifier")

    def _new_name(self) -> str:
        self.counter += 1
        return f"{self.prefix}{self.counter}"

    def name_below(self, concept: Concept) -> Atomic:
        """Fresh Q with Q ⊑ concept."""
        name = self._subsumee.get(concept)
        if name is None:
            name = self._new_name()
            self._subsumee[concept] = name
            self.fresh[name] = ('sub', concept)
            self.add_clause([Not(Atomic(name)), concept])
        return Atomic(name)

    def name_complement(self, concept: Concept) -> Atomic:
        """Fresh Q with not Q ⊑ concept, i.e. nnf(not concept) ⊑ Q."""
        name = self._complement.get(concept)
        if name is None:
            name = self._new_name()
            self._complement[concept] = name
            self.fresh[name] = ('sup', nnf(concept, True))
            self.add_clause([concept, Atomic(name)])
        return Atomic(name)

    def add_clause(self, disjuncts: Sequence[Concept]) -> None:
        """Clausify top ⊑ (d1 or ... or dn) for NNF disjuncts."""
        flat: List[Concept] = []
        for d in disjuncts:
            flat.extend(_disjuncts(d))

        if any(isinstance(d, Top) for d in flat):
            return
        flat = [d for d in flat if not isinstance(d, Bottom)]

        conjunctions = [d for d in flat if isinstance(d, And)]
        if conjunctions:
            first = conjunctions[0]
            rest = []
            for d in flat:
                if d is first:
                    continue
                rest.append(self.name_below(d) if isinstance(d, And) else d)
            for part in _conjuncts(first):
                self.add_clause(rest + [part])
            return

        body: List[RuleAtom] = []
        head: List[RuleAtom] = []
        branch = 0

        def new_var() -> str:
            nonlocal branch
            branch += 1
            return f"y{branch}"

        for d in flat:
            if isinstance(d, Atomic):
                head.append(ConceptAtom(d, X))
            elif isinstance(d, Not):
                body.append(ConceptAtom(d.operand, X))
            elif isinstance(d, AtLeast):
                filler = d.filler
                if not (is_literal(filler) or isinstance(filler, Top)):
                    filler = self.name_below(filler)
                head.append(ConceptAtom(AtLeast(d.n, d.role, filler), X))
            elif isinstance(d, ForAll):
                parts = _disjuncts(d.filler)
                if any(isinstance(p, Top) for p in parts):
                    return
                y = new_var()
                body.append(role_atom(d.role, X, y))
                for part in parts:
                    if isinstance(part, Bottom):
                        continue
                    if isinstance(part, Atomic):
                        head.append(ConceptAtom(part, y))
                    elif isinstance(part, Not):
                        body.append(ConceptAtom(part.operand, y))
                    elif _head_weight(part) == 0:
                        body.append(ConceptAtom(self.name_complement(part), y))
                    else:
                        head.append(ConceptAtom(self.name_below(part), y))
            elif isinstance(d, AtMost):
                ys = [new_var() for _ in range(d.n + 1)]
                filler = d.filler
                for y in ys:
                    body.append(role_atom(d.role, X, y))
                for y in ys:
                    if isinstance(filler, Top):
                        continue
                    if isinstance(filler, Atomic):
                        body.append(ConceptAtom(filler, y))
                    elif isinstance(filler, Not):
                        head.append(ConceptAtom(filler.operand, y))
                    else:
                        body.append(ConceptAtom(self.name_complement(nnf(filler, True)), y))
                for left, right in combinations(ys, 2):
                    head.append(EqAtom(left, right))
            else:
                raise TypeError(f"Unexpected disjunct {d!r}")

        rule = HTRule(tuple(dict.fromkeys(body)), tuple(dict.fromkeys(head)))
        self.rules.append(rule)

    def add_role_inclusion(self, axiom: RoleIncl) -> None:
        self.rules.append(HTRule((role_atom(axiom.sub, X, 'y1'),), (role_atom(axiom.sup, X, 'y1'),)))

    def result_rules(self) -> RuleSet:
        return tuple(dict.fromkeys(self.rules))


def _check_supported(kb: KnowledgeBase) -> None:
    for axiom in kb.tbox | kb.abox:
        concepts: List[Concept] = []
        if isinstance(axiom, ConceptIncl):
            concepts = [axiom.sub, axiom.sup]
        elif isinstance(axiom, ConceptAssertion):
            concepts = [axiom.concept]
        for concept in concepts:
            for node in walk_concept(concept):
                if isinstance(node, Atomic) and node.is_nominal:
                    raise UnsupportedConstruct(f"nominal '{node.name}' is not supported")


def _merge_equalities(abox: Sequence[Axiom]) -> Dict[Individual, Individual]:
    """Union-find over a ≈ b; the lexicographically smaller name survives."""
    parent: Dict[Individual, Individual] = {}

    def find(ind: Individual) -> Individual:
        parent.setdefault(ind, ind)
        while parent[ind] != ind:
            parent[ind] = parent[parent[ind]]
            ind = parent[ind]
        return ind

    for assertion in abox:
        if isinstance(assertion, Eq):
            a, b = find(assertion.left), find(assertion.right)
            if a != b:
                keep, drop = (a, b) if a < b else (b, a)
                parent[drop] = keep
    return {ind: find(ind) for ind in list(parent)}


def normalize_abox(abox: Sequence[Axiom], clausifier: _Clausifier) -> Tuple[Axiom, ...]:
    """
    Rewrite an ABox into A(a), not A(a), R(a,b), not R(a,b), a != b.

    Equalities are substituted away; complex concept assertions get a
    fresh name X with X ⊑ C.
    """
    substitution = _merge_equalities(abox)

    def sub(ind: Individual) -> Individual:
        return substitution.get(ind, ind)

    normalized: List[Axiom] = []
    top_only: List[Individual] = []
    for assertion in abox:
        if isinstance(assertion, ConceptAssertion):
            concept = nnf(assertion.concept)
            ind = sub(assertion.individual)
            if isinstance(concept, Top):
                top_only.append(ind)
                continue
            if not is_literal(concept):
                concept = clausifier.name_below(concept)
            normalized.append(ConceptAssertion(concept, ind))
        elif isinstance(assertion, RoleAssertion):
            normalized.append(role_assertion(assertion.role, sub(assertion.source), sub(assertion.target)))
        elif isinstance(assertion, NegRoleAssertion):
            pos = role_assertion(assertion.role, sub(assertion.source), sub(assertion.target))
            normalized.append(NegRoleAssertion(pos.role, pos.source, pos.target))
        elif isinstance(assertion, Neq):
            normalized.append(Neq(sub(assertion.left), sub(assertion.right)))
        elif isinstance(assertion, (Eq, Falsum)):
            continue
        else:
            raise TypeError(f"Not an assertion: {assertion!r}")
    # top(a) is dropped unless a would otherwise vanish from the ABox
    mentioned = {ind for assertion in normalized for ind in individuals_of(assertion)}
    for ind in top_only:
        if ind not in mentioned:
            mentioned.add(ind)
            normalized.append(ConceptAssertion(TOP, ind))
    return tuple(dict.fromkeys(normalized))


def clausify_assertions(assertions: Sequence[Axiom], prefix: str) -> Tuple[RuleSet, Tuple[Axiom, ...]]:
    """Normalize a query ABox on its own; complex assertions bring their defining rules."""
    clausifier = _Clausifier(prefix)
    abox = normalize_abox(sorted(assertions, key=lambda a: render(a)), clausifier)
    return clausifier.result_rules(), abox


def clausify_alchiq(kb: KnowledgeBase, prefix: str = FRESH_PREFIX) -> Tuple[RuleSet, Tuple[Axiom, ...], FreshNameMap]:
    """
    Transform an ALCHIQ knowledge base into HT-rules and a normalized ABox.

    Args:
        kb: Knowledge base without nominals
        prefix: Prefix for introduced names

    Returns:
        Tuple of (rules, normalized ABox, fresh-name map)
    """
    _check_supported(kb)
    clausifier = _Clausifier(prefix)

    for axiom in kb.axioms:
        if isinstance(axiom, ConceptIncl):
            clausifier.add_clause([nnf(axiom.sub, True), nnf(axiom.sup)])
        elif isinstance(axiom, RoleIncl):
            clausifier.add_role_inclusion(axiom)

    abox = normalize_abox(sorted(kb.abox, key=lambda a: render(a)), clausifier)
    rules = clausifier.result_rules()
    clausifier.log.debug("Clausified %d axioms into %d rules", len(kb.tbox), len(rules))
    return rules, abox, dict(clausifier.fresh)


def is_el_rule(rule: HTRule) -> bool:
    """Form (8): positive atomic body concepts, forward role atoms, one concept head at x."""
    for atom in rule.body:
        if isinstance(atom, ConceptAtom):
            if not isinstance(atom.concept, Atomic):
                return False
        elif isinstance(atom, RoleAtom):
            if atom.first != X or not _BRANCH_VAR.match(atom.second):
                return False
        else:
            return False
    if len(rule.head) > 1:
        return False
    for atom in rule.head:
        if not isinstance(atom, ConceptAtom) or atom.var != X:
            return False
        concept = atom.concept
        if isinstance(concept, AtLeast):
            if concept.n != 1 or concept.role.inverted or not isinstance(concept.filler, (Atomic, Top)):
                return False
        elif not isinstance(concept, Atomic):
            return False
    return True


def clausify_el(kb: KnowledgeBase, prefix: str = FRESH_PREFIX) -> Tuple[RuleSet, Tuple[Axiom, ...], FreshNameMap]:
    """
    Transform an EL knowledge base into EL-rules and a normalized ABox.

    Raises:
        UnsupportedConstruct: if the KB or its rules leave EL
    """
    if not infer_profile(kb).el:
        raise UnsupportedConstruct("knowledge base is not within EL")
    rules, abox, fresh = clausify_alchiq(kb, prefix)
    for rule in rules:
        if not is_el_rule(rule):
            raise UnsupportedConstruct(f"rule leaves EL: {rule}")
    for assertion in abox:
        if not isinstance(assertion, RoleAssertion) and not (
                isinstance(assertion, ConceptAssertion) and isinstance(assertion.concept, (Atomic, Top))):
            raise UnsupportedConstruct(f"assertion leaves EL: {render(assertion)}")
    return rules, abox, fresh


# ---------------------------------------------------------------------------
# Shape checks
# ---------------------------------------------------------------------------

def validate_ht_shape(rule: HTRule) -> Tuple[bool, Optional[str]]:
    """
    Check that a rule has the HT star shape.

    Args:
        rule: Rule to check

    Returns:
        Tuple of (is_valid, error_message)
    """
    guarded = set()
    for atom in rule.body:
        if isinstance(atom, EqAtom):
            return False, f"equality atom in body: {atom}"
        if isinstance(atom, ConceptAtom):
            if not isinstance(atom.concept, Atomic):
                return False, f"body concept atom must be positive atomic: {atom}"
        elif isinstance(atom, RoleAtom):
            pair = (atom.first, atom.second)
            if atom.first == X and _BRANCH_VAR.match(atom.second):
                guarded.add(atom.second)
            elif atom.second == X and _BRANCH_VAR.match(atom.first):
                guarded.add(atom.first)
            else:
                return False, f"body role atom not through x: {atom}"

    for var in rule.variables:
        if var != X and not _BRANCH_VAR.match(var):
            return False, f"unknown variable '{var}'"
        if var != X and var not in guarded:
            return False, f"branch variable {var} does not occur in a body role atom"

    for atom in rule.head:
        if isinstance(atom, EqAtom):
            if X in (atom.left, atom.right):
                return False, f"equality head must relate branch variables: {atom}"
        elif isinstance(atom, RoleAtom):
            if X not in (atom.first, atom.second) or atom.first == atom.second:
                return False, f"head role atom not through x: {atom}"
        elif isinstance(atom, ConceptAtom):
            concept = atom.concept
            if atom.var == X and isinstance(concept, AtLeast):
                if not (is_literal(concept.filler) or isinstance(concept.filler, Top)):
                    return False, f"at-least head needs a literal filler: {atom}"
            elif not isinstance(concept, Atomic):
                return False, f"head concept atom must be atomic: {atom}"
    return True, None


def feature_profile(rules: Sequence[HTRule]) -> FeatureProfile:
    has_eq = has_inverse = has_role = False
    for rule in rules:
        for atom in rule.body + rule.head:
            if isinstance(atom, RoleAtom) and atom.second == X and atom.first != X:
                has_inverse = True
            if isinstance(atom, ConceptAtom) and isinstance(atom.concept, AtLeast) and atom.concept.role.inverted:
                has_inverse = True
        for atom in rule.head:
            if isinstance(atom, EqAtom):
                has_eq = True
            elif isinstance(atom, RoleAtom):
                has_role = True
    return FeatureProfile(has_eq_heads=has_eq, has_inverse_positions=has_inverse, has_role_heads=has_role)


def render_fresh_names(fresh: FreshNameMap) -> str:
    lines = []
    for name in sorted(fresh, key=lambda n: (len(n), n)):
        direction, concept = fresh[name]
        suffix = "" if direction == 'sub' else "  (lower bound)"
        lines.append(f"{name} := {render(concept)}{suffix}")
    return "\n".join(lines)
