"""
Finite-model search over small domains, used as a test oracle

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

import logging
import time
from enum import Enum
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import z3

from config.settings import BRUTE_FORCE_TIMEOUT_MS
from modules.clausifier import ConceptAtom, HTRule, RoleAtom
from modules.syntax import (
    And, AtLeast, AtMost, Atomic, Axiom, Bottom, Concept, ConceptAssertion,
    ConceptIncl, Eq, Exists, Falsum, ForAll, Individual, KnowledgeBase, Neq,
    NegRoleAssertion, Not, Or, Role, RoleAssertion, RoleIncl, Top,
)

logger = logging.getLogger(__name__)


class FiniteResult(Enum):
    SAT = "Sat"
    UNSAT = "Unsat"
    UNKNOWN = "Unknown"


class _Interpretation:
    """Propositional encoding of an interpretation over {0..k-1}."""

    def __init__(self, size: int):
        self.size = size
        self.domain = range(size)
        self._concepts: Dict[Tuple[str, int], z3.BoolRef] = {}
        self._roles: Dict[Tuple[str, int, int], z3.BoolRef] = {}
        self._places: Dict[Tuple[Individual, int], z3.BoolRef] = {}
        self._cache: Dict[Tuple[Concept, int], z3.BoolRef] = {}
        self.nominals: set = set()
        self.constraints: List[z3.BoolRef] = []

    def concept(self, name: str, d: int) -> z3.BoolRef:
        key = (name, d)
        if key not in self._concepts:
            self._concepts[key] = z3.Bool(f"C_{name}_{d}")
        return self._concepts[key]

    def role(self, role: Role, d: int, e: int) -> z3.BoolRef:
        if role.inverted:
            d, e = e, d
        key = (role.base, d, e)
        if key not in self._roles:
            self._roles[key] = z3.Bool(f"R_{role.base}_{d}_{e}")
        return self._roles[key]

    def place(self, ind: Individual, d: int) -> z3.BoolRef:
        """Individual ind is interpreted as element d; exactly one d holds."""
        if (ind, d) not in self._places:
            flags = [z3.Bool(f"P_{ind}_{e}") for e in self.domain]
            self.constraints.append(z3.PbEq([(flag, 1) for flag in flags], 1))
            for e, flag in zip(self.domain, flags):
                self._places[(ind, e)] = flag
        return self._places[(ind, d)]

    def _count(self, role: Role, filler: Concept, d: int) -> List[Tuple[z3.BoolRef, int]]:
        return [(z3.And(self.role(role, d, e), self.holds(filler, e)), 1) for e in self.domain]

    def holds(self, concept: Concept, d: int) -> z3.BoolRef:
        key = (concept, d)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        if isinstance(concept, Top):
            result = z3.BoolVal(True)
        elif isinstance(concept, Bottom):
            result = z3.BoolVal(False)
        elif isinstance(concept, Atomic):
            if concept.is_nominal and concept.name not in self.nominals:
                self.nominals.add(concept.name)
                self.constraints.append(
                    z3.PbEq([(self.concept(concept.name, e), 1) for e in self.domain], 1))
            result = self.concept(concept.name, d)
        elif isinstance(concept, Not):
            result = z3.Not(self.holds(concept.operand, d))
        elif isinstance(concept, And):
            result = z3.And(self.holds(concept.left, d), self.holds(concept.right, d))
        elif isinstance(concept, Or):
            result = z3.Or(self.holds(concept.left, d), self.holds(concept.right, d))
        elif isinstance(concept, Exists):
            result = z3.Or([z3.And(self.role(concept.role, d, e), self.holds(concept.filler, e))
                            for e in self.domain])
        elif isinstance(concept, ForAll):
            result = z3.And([z3.Implies(self.role(concept.role, d, e), self.holds(concept.filler, e))
                             for e in self.domain])
        elif isinstance(concept, AtLeast):
            if concept.n <= 0:
                result = z3.BoolVal(True)
            elif concept.n > self.size:
                result = z3.BoolVal(False)
            else:
                result = z3.PbGe(self._count(concept.role, concept.filler, d), concept.n)
        elif isinstance(concept, AtMost):
            if concept.n >= self.size:
                result = z3.BoolVal(True)
            else:
                result = z3.PbLe(self._count(concept.role, concept.filler, d), concept.n)
        else:
            raise TypeError(f"Not a concept: {concept!r}")
        self._cache[key] = result
        return result

    def axiom(self, axiom: Axiom) -> z3.BoolRef:
        D = self.domain
        if isinstance(axiom, ConceptIncl):
            return z3.And([z3.Implies(self.holds(axiom.sub, d), self.holds(axiom.sup, d)) for d in D])
        if isinstance(axiom, RoleIncl):
            return z3.And([z3.Implies(self.role(axiom.sub, d, e), self.role(axiom.sup, d, e))
                           for d in D for e in D])
        if isinstance(axiom, ConceptAssertion):
            return z3.And([z3.Implies(self.place(axiom.individual, d), self.holds(axiom.concept, d))
                           for d in D])
        if isinstance(axiom, (RoleAssertion, NegRoleAssertion)):
            parts = []
            for d, e in product(D, D):
                fact = self.role(axiom.role, d, e)
                if isinstance(axiom, NegRoleAssertion):
                    fact = z3.Not(fact)
                parts.append(z3.Implies(z3.And(self.place(axiom.source, d), self.place(axiom.target, e)), fact))
            return z3.And(parts)
        if isinstance(axiom, Eq):
            return z3.And([self.place(axiom.left, d) == self.place(axiom.right, d) for d in D])
        if isinstance(axiom, Neq):
            return z3.And([z3.Not(z3.And(self.place(axiom.left, d), self.place(axiom.right, d))) for d in D])
        if isinstance(axiom, Falsum):
            return z3.BoolVal(False)
        raise TypeError(f"Not an axiom: {axiom!r}")

    def rule_atom(self, atom, sigma: Dict[str, int]) -> z3.BoolRef:
        if isinstance(atom, ConceptAtom):
            return self.holds(atom.concept, sigma[atom.var])
        if isinstance(atom, RoleAtom):
            return self.role(Role(atom.role), sigma[atom.first], sigma[atom.second])
        return z3.BoolVal(sigma[atom.left] == sigma[atom.right])

    def rule(self, rule: HTRule) -> z3.BoolRef:
        variables = rule.variables
        parts = []
        for values in product(self.domain, repeat=len(variables)):
            sigma = dict(zip(variables, values))
            body = [self.rule_atom(atom, sigma) for atom in rule.body]
            head = [self.rule_atom(atom, sigma) for atom in rule.head]
            premise = z3.And(body) if body else z3.BoolVal(True)
            conclusion = z3.Or(head) if head else z3.BoolVal(False)
            parts.append(z3.Implies(premise, conclusion))
        return z3.And(parts) if parts else z3.BoolVal(True)


def _search(build, max_domain: int, timeout_ms: Optional[int]) -> FiniteResult:
    budget = timeout_ms if timeout_ms is not None else BRUTE_FORCE_TIMEOUT_MS
    deadline = time.monotonic() + budget / 1000.0
    undecided = False
    for size in range(1, max_domain + 1):
        remaining = int((deadline - time.monotonic()) * 1000)
        if remaining <= 0:
            return FiniteResult.UNKNOWN
        interpretation = _Interpretation(size)
        solver = z3.Solver()
        solver.set("timeout", remaining)
        solver.add(build(interpretation))
        solver.add(interpretation.constraints)
        verdict = solver.check()
        logger.debug("Domain size %d: %s", size, verdict)
        if verdict == z3.sat:
            return FiniteResult.SAT
        if verdict == z3.unknown:
            undecided = True
    return FiniteResult.UNKNOWN if undecided else FiniteResult.UNSAT


def brute_force_sat(kb: KnowledgeBase, max_domain: int = 3,
                    timeout_ms: Optional[int] = None) -> FiniteResult:
    """
    Look for a model of the KB with at most max_domain elements.

    Args:
        kb: Knowledge base (tiny)
        max_domain: Largest domain size tried
        timeout_ms: Solver budget over all sizes

    Returns:
        SAT if a model exists, UNSAT if none exists up to the bound,
        UNKNOWN if the budget ran out
    """
    axioms = list(kb.tbox | kb.abox)
    return _search(lambda i: [i.axiom(a) for a in axioms], max_domain, timeout_ms)


def brute_force_sat_rules(rules: Sequence[HTRule], abox: Iterable[Axiom], max_domain: int = 3,
                          timeout_ms: Optional[int] = None) -> FiniteResult:
    """Same search for HT-rules plus a normalized ABox."""
    assertions = list(abox)
    rules = list(rules)

    def build(interpretation: _Interpretation) -> List[z3.BoolRef]:
        return [interpretation.rule(r) for r in rules] + [interpretation.axiom(a) for a in assertions]

    return _search(build, max_domain, timeout_ms)
