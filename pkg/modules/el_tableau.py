"""
Single-derivation hypertableau for EL-rules

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

import logging
import time
from typing import Iterable, List, Optional, Sequence, Tuple

from modules.clausifier import HTRule, is_el_rule
from modules.syntax import Atomic, Axiom, Individual, canonical_individual
from modules.tableau import (
    NO_BLOCKING, DerivationABox, DerivationStats, Hypertableau, SatResult,
)

logger = logging.getLogger(__name__)

TOP_KEY = "top"


def canonical_for(filler) -> Individual:
    """a_A for an atomic filler; the top filler gets its own canonical individual."""
    if isinstance(filler, Atomic):
        return canonical_individual(filler.name)
    return canonical_individual(TOP_KEY)


class ELTableau(Hypertableau):
    """
    Hyp, clash and the existential rule over canonical individuals.

    Every rule is Horn, so the derivation never branches and is monotone:
    no rule removes an assertion.
    """

    def __init__(self, rules: Sequence[HTRule], max_nodes: Optional[int] = None,
                 max_seconds: Optional[float] = None, check_invariants: Optional[bool] = None):
        for rule in rules:
            if not is_el_rule(rule) and rule.head:
                raise ValueError(f"Not an EL-rule: {rule}")
        super().__init__(rules, NO_BLOCKING, max_nodes, max_seconds, check_invariants=False)

    def _apply_exists(self, abox: DerivationABox) -> bool:
        changed = False
        for ind in abox.individuals:
            for concept in sorted(abox.at_least.get(ind, ()), key=str):
                target = canonical_for(concept.filler)
                added = abox.add_role(concept.role.base, ind, target)
                if isinstance(concept.filler, Atomic):
                    added = abox.add_concept(target, concept.filler.name) or added
                if added:
                    self.stats.rule_apps += 1
                    changed = True
        return changed

    def saturate(self, abox: DerivationABox) -> DerivationABox:
        """Apply rules until none applies or a clash appears."""
        while not abox.clash:
            self._check_limits(abox)
            status = self.blocking_of(abox)
            if self._apply_hyp(abox, status) is not None:
                continue
            if self._apply_exists(abox):
                continue
            if self._extension_rules(abox, self.blocking_of(abox)) is not None:
                continue
            break
        return abox

    def run(self, abox: Iterable[Axiom]) -> SatResult:
        result, _ = self.run_with_final(abox)
        return result

    def run_with_final(self, abox: Iterable[Axiom]) -> Tuple[SatResult, DerivationABox]:
        self.stats = DerivationStats()
        self._deadline = time.monotonic() + self.max_seconds
        start = abox if isinstance(abox, DerivationABox) else DerivationABox.from_assertions(abox)
        final = self.saturate(start)
        self.stats.individuals = len(final.order)
        if final.clash:
            self.log.debug("EL derivation closed: %s", final.clash_reason)
            return SatResult(False, None, self.stats), final
        self.log.info("EL derivation saturated with %d individuals", len(final.order))
        return SatResult(True, final, self.stats), final


def check_sat_el(rules: Sequence[HTRule], abox: Iterable[Axiom],
                 max_nodes: Optional[int] = None,
                 max_seconds: Optional[float] = None) -> Tuple[SatResult, DerivationABox]:
    """
    Decide satisfiability of EL-rules plus a positive normalized ABox.

    Args:
        rules: EL-rules (empty-head rules allowed)
        abox: Normalized ABox

    Returns:
        Tuple of (SatResult, final ABox)
    """
    return ELTableau(rules, max_nodes, max_seconds).run_with_final(abox)


def subsumers(final: DerivationABox, concept_name: str) -> List[str]:
    """Atomic B with B(a_A) in a final ABox, i.e. the subsumers of A."""
    return sorted(final.label(canonical_individual(concept_name)))
