"""
Replace public-signature quantified concepts by fresh names and expand them in queries

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

import logging
from typing import Dict, Optional, Tuple

from config.settings import MODAL_PREFIX
from modules.oracle import ForwardingOracle, OracleHandle
from modules.syntax import (
    And, AtLeast, AtMost, Atomic, Axiom, Concept, ConceptAssertion, ConceptIncl,
    Exists, ForAll, KnowledgeBase, Not, Or, Signature, render, signature_of,
)

logger = logging.getLogger(__name__)

ExpansionMap = Dict[str, Concept]

_QUANTIFIED = (Exists, ForAll, AtLeast, AtMost)


def is_gamma_modal(concept: Concept, gamma: Signature) -> bool:
    """A quantified concept whose every symbol is public."""
    return isinstance(concept, _QUANTIFIED) and signature_of(concept) <= gamma


class _Rewriter:
    def __init__(self, gamma: Signature, prefix: str):
        self.gamma = gamma
        self.prefix = prefix
        self.names: Dict[Concept, str] = {}
        self.expansion: ExpansionMap = {}

    def name_for(self, concept: Concept) -> Atomic:
        name = self.names.get(concept)
        if name is None:
            name = f"{self.prefix}{len(self.names) + 1}"
            self.names[concept] = name
            self.expansion[name] = concept
            logger.debug("%s stands for %s", name, render(concept))
        return Atomic(name)

    def concept(self, concept: Concept) -> Concept:
        if is_gamma_modal(concept, self.gamma):
            return self.name_for(concept)
        if isinstance(concept, Not):
            return Not(self.concept(concept.operand))
        if isinstance(concept, (And, Or)):
            return type(concept)(self.concept(concept.left), self.concept(concept.right))
        if isinstance(concept, _QUANTIFIED):
            if isinstance(concept, (AtLeast, AtMost)):
                return type(concept)(concept.n, concept.role, self.concept(concept.filler))
            return type(concept)(concept.role, self.concept(concept.filler))
        return concept

    def axiom(self, axiom: Axiom) -> Axiom:
        if isinstance(axiom, ConceptIncl):
            return ConceptIncl(self.concept(axiom.sub), self.concept(axiom.sup))
        if isinstance(axiom, ConceptAssertion):
            return ConceptAssertion(self.concept(axiom.concept), axiom.individual)
        return axiom


def gamma_modal_rewrite(visible: KnowledgeBase, gamma: Signature,
                        prefix: str = MODAL_PREFIX) -> Tuple[KnowledgeBase, Signature, ExpansionMap]:
    """
    Replace each outermost public quantified concept by a fresh atomic concept.

    Args:
        visible: Visible knowledge base
        gamma: Public signature
        prefix: Prefix for the fresh names

    Returns:
        Tuple of (rewritten KB, gamma extended by the fresh names, map from
        fresh name to the concept it replaces)
    """
    rewriter = _Rewriter(gamma, prefix)
    tbox = [rewriter.axiom(a) for a in sorted(visible.tbox, key=render)]
    abox = [rewriter.axiom(a) for a in sorted(visible.abox, key=render)]
    if not rewriter.expansion:
        return visible, gamma, {}
    rewritten = KnowledgeBase(
        tbox=frozenset(tbox), abox=frozenset(abox),
        declared_logic=visible.declared_logic,
        logic_header=visible.logic_header,
        declarations=visible.declarations,
    )
    logger.info("Replaced %d public quantified concepts", len(rewriter.expansion))
    return rewritten, gamma.with_concepts(rewriter.expansion), dict(rewriter.expansion)


def expand_concept(concept: Concept, expansion: ExpansionMap) -> Concept:
    if isinstance(concept, Atomic):
        return expansion.get(concept.name, concept)
    if isinstance(concept, Not):
        return Not(expand_concept(concept.operand, expansion))
    if isinstance(concept, (And, Or)):
        return type(concept)(expand_concept(concept.left, expansion), expand_concept(concept.right, expansion))
    if isinstance(concept, (AtLeast, AtMost)):
        return type(concept)(concept.n, concept.role, expand_concept(concept.filler, expansion))
    if isinstance(concept, (Exists, ForAll)):
        return type(concept)(concept.role, expand_concept(concept.filler, expansion))
    return concept


def expand_assertion(assertion: Axiom, expansion: ExpansionMap) -> Axiom:
    if isinstance(assertion, ConceptAssertion):
        return ConceptAssertion(expand_concept(assertion.concept, expansion), assertion.individual)
    return assertion


class ExpandingOracle(ForwardingOracle):
    """
    Accepts queries over the extended signature and forwards them with
    every fresh name replaced by its concept.
    """

    def __init__(self, inner: OracleHandle, expansion: ExpansionMap):
        super().__init__(inner, inner.oracle_type, inner.gamma.with_concepts(expansion))
        self.expansion = dict(expansion)

    def _evaluate(self, kind: str, abox: Tuple[Axiom, ...], alpha: Optional[Axiom]) -> bool:
        expanded = tuple(expand_assertion(a, self.expansion) for a in abox)
        if kind == 'csat':
            return self.inner.csat(expanded[0].concept)
        if kind == 'asat':
            return self.inner.asat(expanded)
        return self.inner.aent(expanded, expand_assertion(alpha, self.expansion))


def with_expansion(o: OracleHandle, expansion: ExpansionMap) -> OracleHandle:
    return ExpandingOracle(o, expansion) if expansion else o
