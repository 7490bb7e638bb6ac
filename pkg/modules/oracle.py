"""
Oracles over a hidden TBox: validation, caching, local evaluation and adapters

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

import logging
import threading
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from config.settings import ORACLE_TYPES, QUERY_INDIVIDUAL
from modules.clausifier import clausify_alchiq, clausify_assertions
from modules.errors import NoReduction, NotConnected, SigViolation, UnsupportedQueryForType
from modules.syntax import (
    FALSUM, TOP, And, Axiom, Concept, ConceptAssertion, Eq, Falsum, Individual,
    KnowledgeBase, LogicProfile, Neq, NegRoleAssertion, Not, RoleAssertion, Signature,
    abox_graph, individuals_of, is_connected, named, rename_assertion, render,
    render_abox, signature_of,
)
from modules.tableau import check_sat

logger = logging.getLogger(__name__)

HIDDEN_PREFIX = "_h"
HIDDEN_QUERY_PREFIX = "_hq"


# ---------------------------------------------------------------------------
# Query log
# ---------------------------------------------------------------------------

@dataclass
class QueryLog:
    """Counters for the queries one handle answered; updates are atomic."""
    queries: int = 0
    distinct: int = 0
    max_size: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def record(self, size: int, fresh: bool) -> None:
        with self._lock:
            self.queries += 1
            if fresh:
                self.distinct += 1
            self.max_size = max(self.max_size, size)

    def snapshot(self) -> Dict[str, int]:
        with self._lock:
            return {
                'queries': self.queries,
                'distinct_queries': self.distinct,
                'max_query_size': self.max_size,
            }

    def reset(self) -> None:
        with self._lock:
            self.queries = self.distinct = self.max_size = 0


# ---------------------------------------------------------------------------
# Query helpers
# ---------------------------------------------------------------------------

def negate_assertion(alpha: Axiom) -> Axiom:
    """neg(α): the assertion whose addition contradicts α."""
    if isinstance(alpha, ConceptAssertion):
        return ConceptAssertion(Not(alpha.concept), alpha.individual)
    if isinstance(alpha, RoleAssertion):
        return NegRoleAssertion(alpha.role, alpha.source, alpha.target)
    if isinstance(alpha, NegRoleAssertion):
        return RoleAssertion(alpha.role, alpha.source, alpha.target)
    if isinstance(alpha, Eq):
        return Neq(alpha.left, alpha.right)
    if isinstance(alpha, Neq):
        return Eq(alpha.left, alpha.right)
    raise ValueError(f"Cannot negate {render(alpha)}")


def canonical_renaming(abox: Sequence[Axiom]) -> Dict[Individual, Individual]:
    """
    Rename individuals to i0, i1, ... in depth-first order.

    The walk starts at the least individual and visits neighbours in
    sorted order; leftover components continue from their least member.
    """
    graph = abox_graph(abox)
    mapping: Dict[Individual, Individual] = {}
    for root in sorted(graph.nodes):
        if root in mapping:
            continue
        stack = [root]
        while stack:
            ind = stack.pop()
            if ind in mapping:
                continue
            mapping[ind] = named(f"i{len(mapping)}")
            stack.extend(sorted((n for n in graph.neighbors(ind) if n not in mapping), reverse=True))
    return mapping


def _query_key(kind: str, abox: Tuple[Axiom, ...], alpha: Optional[Axiom]) -> str:
    text = render_abox(abox, separator=";")
    if alpha is not None:
        text += " ENTAILS " + render(alpha)
    return f"{kind.upper()} {text}"


# ---------------------------------------------------------------------------
# Handles
# ---------------------------------------------------------------------------

class OracleHandle:
    """
    Access point to a hidden TBox through one query type.

    Every query is checked against ``gamma`` and for connectivity, then
    renamed into canonical form; answers are cached on that form.
    Subclasses implement ``_evaluate`` on canonical queries.
    """

    records_queries = True

    def __init__(self, oracle_type: str, gamma: Signature, logic: LogicProfile):
        if oracle_type not in ORACLE_TYPES:
            raise ValueError(f"Unknown oracle type: {oracle_type}")
        self.oracle_type = oracle_type
        self.gamma = gamma
        self.logic = logic
        self._log = QueryLog()
        self._cache: Dict[str, bool] = {}
        self._lock = threading.Lock()
        self.log = logger.getChild(type(self).__name__)

    @property
    def query_log(self) -> QueryLog:
        return self._log

    def describe(self) -> str:
        names = [f"c:{c}" for c in sorted(self.gamma.concepts)]
        names += [f"r:{r}" for r in sorted(self.gamma.roles)]
        return f"type={self.oracle_type} gamma={','.join(names)} logic={self.logic.name}"

    # -- public query functions ----------------------------------------------

    def csat(self, concept: Concept) -> bool:
        return self._dispatch('csat', (ConceptAssertion(concept, named(QUERY_INDIVIDUAL)),), None)

    def asat(self, abox: Iterable[Axiom]) -> bool:
        return self._dispatch('asat', tuple(abox), None)

    def aent(self, abox: Iterable[Axiom], alpha: Axiom = FALSUM) -> bool:
        return self._dispatch('aent', tuple(abox), alpha)

    # -- validation ----------------------------------------------------------

    def validate(self, kind: str, abox: Sequence[Axiom], alpha: Optional[Axiom] = None) -> None:
        """
        Raise if a query is not admissible for this oracle.

        Raises:
            UnsupportedQueryForType: query type differs from the oracle type
            SigViolation: a symbol outside gamma
            NotConnected: disconnected ABox, or α over foreign individuals
        """
        if kind != self.oracle_type:
            raise UnsupportedQueryForType(f"{kind} query sent to a {self.oracle_type} oracle")
        items = list(abox) + ([alpha] if alpha is not None else [])
        if any(isinstance(a, Falsum) for a in abox):
            raise SigViolation("FALSUM is only allowed as an entailment target")
        used = signature_of(items)
        if not used <= self.gamma:
            outside = sorted((used.concepts - self.gamma.concepts) | (used.roles - self.gamma.roles))
            raise SigViolation(f"symbols outside the public signature: {', '.join(outside)}")
        if not is_connected(abox):
            raise NotConnected("query ABox is not connected")
        if alpha is not None and not isinstance(alpha, Falsum):
            known = {ind for a in abox for ind in individuals_of(a)}
            foreign = [str(i) for i in individuals_of(alpha) if i not in known]
            if foreign:
                raise NotConnected(f"entailment target mentions individuals outside the ABox: {', '.join(foreign)}")

    # -- dispatch ------------------------------------------------------------

    def _dispatch(self, kind: str, abox: Tuple[Axiom, ...], alpha: Optional[Axiom]) -> bool:
        self.validate(kind, abox, alpha)
        mapping = canonical_renaming(abox)
        canon = tuple(sorted({rename_assertion(a, mapping) for a in abox}, key=render))
        canon_alpha = rename_assertion(alpha, mapping) if alpha is not None else None
        key = _query_key(kind, canon, canon_alpha)

        if not self.records_queries:
            return self._evaluate(kind, canon, canon_alpha)

        with self._lock:
            cached = self._cache.get(key)
        if cached is None:
            answer = self._evaluate(kind, canon, canon_alpha)
            with self._lock:
                fresh = key not in self._cache
                answer = self._cache.setdefault(key, answer)
        else:
            answer, fresh = cached, False
        self._log.record(len(abox), fresh)
        self.log.debug("%s -> %s%s", key, answer, "" if fresh else " (cached)")
        return answer

    def _evaluate(self, kind: str, abox: Tuple[Axiom, ...], alpha: Optional[Axiom]) -> bool:
        raise NotImplementedError


class LocalOracle(OracleHandle):
    """Answers queries by running the tableau on the hidden TBox plus the query."""

    def __init__(self, hidden: KnowledgeBase, gamma: Signature, oracle_type: str,
                 logic: Optional[LogicProfile] = None):
        if hidden.abox:
            raise ValueError("hidden knowledge base must not contain assertions")
        super().__init__(oracle_type, gamma, logic or hidden.declared_logic)
        self.rules, _, _ = clausify_alchiq(hidden, HIDDEN_PREFIX)
        self.log.info("Hidden TBox clausified into %d rules", len(self.rules))

    def _satisfiable(self, assertions: Sequence[Axiom]) -> bool:
        if not assertions:
            # the empty ABox asks whether the hidden TBox has a model at all
            assertions = (ConceptAssertion(TOP, named(QUERY_INDIVIDUAL)),)
        query_rules, abox = clausify_assertions(assertions, HIDDEN_QUERY_PREFIX)
        return check_sat(self.rules + query_rules, abox).satisfiable

    def _evaluate(self, kind: str, abox: Tuple[Axiom, ...], alpha: Optional[Axiom]) -> bool:
        if kind in ('csat', 'asat'):
            return self._satisfiable(abox)
        if alpha is None or isinstance(alpha, Falsum):
            return not self._satisfiable(abox)
        return not self._satisfiable(abox + (negate_assertion(alpha),))


def local_oracle(hidden: KnowledgeBase, gamma: Signature, oracle_type: str) -> LocalOracle:
    """
    Build an oracle of the given type over a hidden TBox.

    Args:
        hidden: TBox-only knowledge base without nominals
        gamma: Public signature
        oracle_type: 'csat', 'asat' or 'aent'

    Returns:
        LocalOracle
    """
    return LocalOracle(hidden, gamma, oracle_type)


# ---------------------------------------------------------------------------
# Adapters between oracle types
# ---------------------------------------------------------------------------

class ForwardingOracle(OracleHandle):
    """A handle that answers through another one and shares its log."""

    records_queries = False

    def __init__(self, inner: OracleHandle, oracle_type: str, gamma: Optional[Signature] = None):
        super().__init__(oracle_type, gamma if gamma is not None else inner.gamma, inner.logic)
        self.inner = inner

    @property
    def query_log(self) -> QueryLog:
        return self.inner.query_log


def concept_only_asat(o: OracleHandle, abox: Iterable[Axiom]) -> bool:
    """
    ABox satisfiability through concept satisfiability for a concept-only signature.

    Equalities are merged first; then each individual's concepts must be
    jointly satisfiable.

    Raises:
        SigViolation: the ABox uses symbols outside the signature of o
        NoReduction: the ABox contains role assertions
    """
    assertions = list(abox)
    used = signature_of(assertions)
    if not used <= o.gamma:
        raise SigViolation("ABox uses symbols outside the public signature")
    if any(isinstance(a, (RoleAssertion, NegRoleAssertion)) for a in assertions):
        raise NoReduction("role assertions cannot be decided with concept satisfiability")

    parent: Dict[Individual, Individual] = {}

    def find(ind: Individual) -> Individual:
        parent.setdefault(ind, ind)
        while parent[ind] != ind:
            parent[ind] = parent[parent[ind]]
            ind = parent[ind]
        return ind

    for assertion in assertions:
        for ind in individuals_of(assertion):
            find(ind)
        if isinstance(assertion, Eq):
            a, b = find(assertion.left), find(assertion.right)
            if a != b:
                parent[max(a, b)] = min(a, b)

    concepts: Dict[Individual, List[Concept]] = {find(ind): [] for ind in parent}
    for assertion in assertions:
        if isinstance(assertion, Neq) and find(assertion.left) == find(assertion.right):
            return False
        if isinstance(assertion, ConceptAssertion):
            concepts[find(assertion.individual)].append(assertion.concept)

    if not concepts:
        return o.csat(TOP)
    for ind in sorted(concepts):
        members = sorted(set(concepts[ind]), key=render)
        conjunction: Concept = TOP
        if members:
            conjunction = members[0]
            for concept in members[1:]:
                conjunction = And(conjunction, concept)
        if not o.csat(conjunction):
            return False
    return True


def reduction_problem(source: str, want: str, gamma: Signature, logic: LogicProfile,
                      needs_negation: bool = True) -> Optional[str]:
    """
    Explain why a ``source`` oracle cannot serve ``want`` queries.

    Args:
        source: Native oracle type
        want: Requested oracle type
        gamma: Public signature
        logic: Hidden logic profile
        needs_negation: aent targets other than FALSUM will be asked

    Returns:
        None when a reduction exists, otherwise the reason
    """
    if source == want:
        return None
    if source == 'csat' and want in ('asat', 'aent') and not gamma.concept_only:
        return "concept satisfiability cannot answer queries over a signature with roles"
    if want == 'aent' and needs_negation and not logic.negation_closed:
        return f"negated assertions are not expressible in {logic.name}"
    return None


class AdaptedOracle(ForwardingOracle):
    """Answers ``want`` queries by reduction to the inner oracle's type."""

    def __init__(self, inner: OracleHandle, want: str):
        super().__init__(inner, want)
        self.source = inner.oracle_type

    def _evaluate(self, kind: str, abox: Tuple[Axiom, ...], alpha: Optional[Axiom]) -> bool:
        if kind in ('csat', 'asat'):
            return self._asat(abox)
        if alpha is None or isinstance(alpha, Falsum):
            return not self._asat(abox)
        if not self.logic.negation_closed:
            raise NoReduction(f"cannot negate {render(alpha)} in {self.logic.name}")
        return not self._asat(abox + (negate_assertion(alpha),))

    def _asat(self, abox: Tuple[Axiom, ...]) -> bool:
        """Satisfiability of an ABox, asked in the inner oracle's terms."""
        if self.source == 'asat':
            return self.inner.asat(abox)
        if self.source == 'aent':
            return not self.inner.aent(abox, FALSUM)
        if len(abox) == 1 and isinstance(abox[0], ConceptAssertion):
            return self.inner.csat(abox[0].concept)
        return concept_only_asat(self.inner, abox)


def adapt(o: OracleHandle, want: str) -> OracleHandle:
    """
    Make an oracle of type ``want`` out of o.

    Raises:
        NoReduction: no reduction from o's type to want exists for its signature
    """
    if want not in ORACLE_TYPES:
        raise ValueError(f"Unknown oracle type: {want}")
    if o.oracle_type == want:
        return o
    problem = reduction_problem(o.oracle_type, want, o.gamma, o.logic, needs_negation=False)
    if problem:
        raise NoReduction(problem)
    logger.debug("Adapting %s oracle to %s", o.oracle_type, want)
    return AdaptedOracle(o, want)
