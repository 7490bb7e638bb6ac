"""
Hypertableau satisfiability for HT-rules

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations, product
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from config import settings
from modules.clausifier import ConceptAtom, HTRule, RoleAtom, X, validate_ht_shape
from modules.errors import ResourceLimit
from modules.syntax import (
    FALSUM, AtLeast, Atomic, Axiom, ConceptAssertion, Eq, Falsum, Individual, Neq,
    NegRoleAssertion, Not, Role, RoleAssertion, Signature, Top, individuals_of,
    rename_assertion, render_abox, role_assertion,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Derivation ABox
# ---------------------------------------------------------------------------

class DerivationABox:
    """
    Mutable assertion set over path-structured individuals.

    Clashes are detected as assertions arrive, so ``clash`` is True exactly
    when FALSUM is present.
    """

    def __init__(self):
        self.order: Dict[Individual, int] = {}
        self.child_count: Dict[Individual, int] = {}
        self.labels: Dict[Individual, Set[str]] = {}
        self.neg_labels: Dict[Individual, Set[str]] = {}
        self.at_least: Dict[Individual, Set[AtLeast]] = {}
        self.out_edges: Dict[Individual, Dict[Individual, Set[str]]] = {}
        self.in_edges: Dict[Individual, Dict[Individual, Set[str]]] = {}
        self.neg_roles: Set[Tuple[str, Individual, Individual]] = set()
        self.eqs: Set[Tuple[Individual, Individual]] = set()
        self.neqs: Set[Tuple[Individual, Individual]] = set()
        self.by_concept: Dict[str, Set[Individual]] = {}
        self.merged: Dict[Individual, Individual] = {}
        self.clash = False
        self.clash_reason: Optional[str] = None
        self.version = 0
        self._seq = 0
        self._blocking: Optional[Tuple[int, 'BlockingMode', Dict[Individual, 'BlockStatus']]] = None

    # -- construction -------------------------------------------------------

    @classmethod
    def from_assertions(cls, assertions: Iterable[Axiom]) -> 'DerivationABox':
        """
        Build a derivation ABox from a normalized ABox.

        Args:
            assertions: A(a), not A(a), min n R B(a), R(a,b), not R(a,b), a = b, a != b, FALSUM

        Returns:
            DerivationABox
        """
        abox = cls()
        for assertion in assertions:
            abox.add_assertion(assertion)
        return abox

    def add_assertion(self, assertion: Axiom) -> bool:
        if isinstance(assertion, ConceptAssertion):
            concept, ind = assertion.concept, assertion.individual
            if isinstance(concept, Atomic):
                return self.add_concept(ind, concept.name)
            if isinstance(concept, Not) and isinstance(concept.operand, Atomic):
                return self.add_neg_concept(ind, concept.operand.name)
            if isinstance(concept, AtLeast):
                return self.add_at_least(ind, concept)
            if isinstance(concept, Top):
                return self.ensure(ind)
            raise ValueError(f"Assertion is not normalized: {assertion}")
        if isinstance(assertion, RoleAssertion):
            atomic = role_assertion(assertion.role, assertion.source, assertion.target)
            return self.add_role(atomic.role.base, atomic.source, atomic.target)
        if isinstance(assertion, NegRoleAssertion):
            atomic = role_assertion(assertion.role, assertion.source, assertion.target)
            return self.add_neg_role(atomic.role.base, atomic.source, atomic.target)
        if isinstance(assertion, Eq):
            return self.add_eq(assertion.left, assertion.right)
        if isinstance(assertion, Neq):
            return self.add_neq(assertion.left, assertion.right)
        if isinstance(assertion, Falsum):
            return self.set_clash("FALSUM asserted")
        raise ValueError(f"Not an assertion: {assertion!r}")

    def _touch(self) -> None:
        self.version += 1

    def ensure(self, ind: Individual) -> bool:
        if ind in self.order:
            return False
        self.order[ind] = self._seq
        self._seq += 1
        self._touch()
        return True

    def fresh_child(self, parent: Individual) -> Individual:
        index = self.child_count.get(parent, 0) + 1
        self.child_count[parent] = index
        child = parent.child(index)
        self.ensure(child)
        return child

    def set_clash(self, reason: str) -> bool:
        if self.clash:
            return False
        self.clash = True
        self.clash_reason = reason
        self._touch()
        return True

    def add_concept(self, ind: Individual, name: str) -> bool:
        self.ensure(ind)
        label = self.labels.setdefault(ind, set())
        if name in label:
            return False
        label.add(name)
        self.by_concept.setdefault(name, set()).add(ind)
        self._touch()
        if name in self.neg_labels.get(ind, ()):
            self.set_clash(f"{name}({ind}) and not {name}({ind})")
        return True

    def add_neg_concept(self, ind: Individual, name: str) -> bool:
        self.ensure(ind)
        label = self.neg_labels.setdefault(ind, set())
        if name in label:
            return False
        label.add(name)
        self._touch()
        if name in self.labels.get(ind, ()):
            self.set_clash(f"{name}({ind}) and not {name}({ind})")
        return True

    def add_at_least(self, ind: Individual, concept: AtLeast) -> bool:
        self.ensure(ind)
        existing = self.at_least.setdefault(ind, set())
        if concept in existing:
            return False
        existing.add(concept)
        self._touch()
        return True

    def add_role(self, name: str, source: Individual, target: Individual) -> bool:
        self.ensure(source)
        self.ensure(target)
        label = self.out_edges.setdefault(source, {}).setdefault(target, set())
        if name in label:
            return False
        label.add(name)
        self.in_edges.setdefault(target, {}).setdefault(source, set()).add(name)
        self._touch()
        if (name, source, target) in self.neg_roles:
            self.set_clash(f"{name}({source},{target}) and not {name}({source},{target})")
        return True

    def add_neg_role(self, name: str, source: Individual, target: Individual) -> bool:
        self.ensure(source)
        self.ensure(target)
        key = (name, source, target)
        if key in self.neg_roles:
            return False
        self.neg_roles.add(key)
        self._touch()
        if name in self.roles_between(source, target):
            self.set_clash(f"{name}({source},{target}) and not {name}({source},{target})")
        return True

    def add_eq(self, left: Individual, right: Individual) -> bool:
        self.ensure(left)
        self.ensure(right)
        if left == right:
            return False
        pair = (left, right) if left < right else (right, left)
        if pair in self.eqs:
            return False
        self.eqs.add(pair)
        self._touch()
        return True

    def add_neq(self, left: Individual, right: Individual) -> bool:
        self.ensure(left)
        self.ensure(right)
        pair = (left, right) if left < right else (right, left)
        if pair in self.neqs:
            return False
        self.neqs.add(pair)
        self._touch()
        if left == right:
            self.set_clash(f"{left} != {left}")
        return True

    # -- queries ------------------------------------------------------------

    @property
    def individuals(self) -> List[Individual]:
        return sorted(self.order, key=self.order.__getitem__)

    def label(self, ind: Individual) -> FrozenSet[str]:
        return frozenset(self.labels.get(ind, ()))

    def has_concept(self, ind: Individual, name: str) -> bool:
        return name in self.labels.get(ind, ())

    def has_neg_concept(self, ind: Individual, name: str) -> bool:
        return name in self.neg_labels.get(ind, ())

    def roles_between(self, source: Individual, target: Individual) -> FrozenSet[str]:
        return frozenset(self.out_edges.get(source, {}).get(target, ()))

    def successors(self, ind: Individual, name: str) -> List[Individual]:
        return [t for t, names in self.out_edges.get(ind, {}).items() if name in names]

    def predecessors(self, ind: Individual, name: str) -> List[Individual]:
        return [s for s, names in self.in_edges.get(ind, {}).items() if name in names]

    def neighbours(self, ind: Individual) -> Set[Individual]:
        return set(self.out_edges.get(ind, {})) | set(self.in_edges.get(ind, {}))

    def has_eq(self, left: Individual, right: Individual) -> bool:
        if left == right:
            return True
        pair = (left, right) if left < right else (right, left)
        return pair in self.eqs

    def has_neq(self, left: Individual, right: Individual) -> bool:
        pair = (left, right) if left < right else (right, left)
        return pair in self.neqs

    def resolve(self, ind: Individual) -> Individual:
        """Follow merges from an input individual to its current name."""
        seen = set()
        while ind in self.merged and ind not in seen:
            seen.add(ind)
            ind = self.merged[ind]
        return ind

    def assertions(self) -> Set[Axiom]:
        result: Set[Axiom] = set()
        for ind, names in self.labels.items():
            result.update(ConceptAssertion(Atomic(n), ind) for n in names)
        for ind, names in self.neg_labels.items():
            result.update(ConceptAssertion(Not(Atomic(n)), ind) for n in names)
        for ind, concepts in self.at_least.items():
            result.update(ConceptAssertion(c, ind) for c in concepts)
        for source, targets in self.out_edges.items():
            for target, names in targets.items():
                result.update(RoleAssertion(Role(n), source, target) for n in names)
        result.update(NegRoleAssertion(Role(n), s, t) for n, s, t in self.neg_roles)
        result.update(Eq(s, t) for s, t in self.eqs)
        result.update(Neq(s, t) for s, t in self.neqs)
        if self.clash:
            result.add(FALSUM)
        return result

    def __len__(self) -> int:
        return len(self.assertions())

    def render(self) -> str:
        return render_abox(self.assertions(), separator="\n")

    # -- copying and merging -----------------------------------------------

    def copy(self) -> 'DerivationABox':
        other = DerivationABox.__new__(DerivationABox)
        other.order = dict(self.order)
        other.child_count = dict(self.child_count)
        other.labels = {k: set(v) for k, v in self.labels.items()}
        other.neg_labels = {k: set(v) for k, v in self.neg_labels.items()}
        other.at_least = {k: set(v) for k, v in self.at_least.items()}
        other.out_edges = {k: {t: set(n) for t, n in v.items()} for k, v in self.out_edges.items()}
        other.in_edges = {k: {s: set(n) for s, n in v.items()} for k, v in self.in_edges.items()}
        other.neg_roles = set(self.neg_roles)
        other.eqs = set(self.eqs)
        other.neqs = set(self.neqs)
        other.by_concept = {k: set(v) for k, v in self.by_concept.items()}
        other.merged = dict(self.merged)
        other.clash = self.clash
        other.clash_reason = self.clash_reason
        other.version = self.version
        other._seq = self._seq
        other._blocking = None
        return other

    def merge_into(self, source: Individual, target: Individual) -> None:
        """prune(source), then replace source by target in every assertion."""
        doomed = {u for u in self.order if source.is_ancestor_of(u)}
        doomed.add(source)

        pruned = doomed - {source}
        kept = [a for a in self.assertions()
                if not isinstance(a, Falsum) and not set(individuals_of(a)) & pruned]

        order = {ind: seq for ind, seq in self.order.items() if ind not in doomed}
        child_count = dict(self.child_count)
        merged = dict(self.merged)
        merged[source] = target
        clash, clash_reason, seq = self.clash, self.clash_reason, self._seq

        self.__init__()
        self.order = order
        self.child_count = child_count
        self.merged = merged
        self._seq = seq
        if clash:
            self.set_clash(clash_reason or "clash")
        for assertion in kept:
            self.add_assertion(rename_assertion(assertion, {source: target}))
        self._touch()


def merge(abox: DerivationABox, source: Individual, target: Individual) -> DerivationABox:
    """
    merge(source -> target) on a copy of the ABox.

    Args:
        abox: ABox to merge in
        source: Individual that disappears, together with its descendants
        target: Individual that takes over the assertions of source

    Returns:
        New DerivationABox
    """
    if source == target:
        raise ValueError("cannot merge an individual into itself")
    result = abox.copy()
    result.merge_into(source, target)
    return result


# ---------------------------------------------------------------------------
# Blocking
# ---------------------------------------------------------------------------

class BlockKind(Enum):
    UNBLOCKED = "unblocked"
    DIRECT = "directly_blocked"
    INDIRECT = "indirectly_blocked"


@dataclass(frozen=True)
class BlockStatus:
    kind: BlockKind = BlockKind.UNBLOCKED
    blocker: Optional[Individual] = None

    @property
    def blocked(self) -> bool:
        return self.kind is not BlockKind.UNBLOCKED

    @property
    def indirect(self) -> bool:
        return self.kind is BlockKind.INDIRECT


UNBLOCKED = BlockStatus()


@dataclass(frozen=True)
class BlockingMode:
    """Pairwise anywhere blocking; with ``gamma`` set, only blocking-relevant individuals take part."""
    gamma: Optional[Signature] = None
    enabled: bool = True

    @property
    def name(self) -> str:
        if not self.enabled:
            return "none"
        return "gamma_relevant" if self.gamma is not None else "standard"


STANDARD = BlockingMode()
NO_BLOCKING = BlockingMode(enabled=False)


def gamma_relevant(gamma: Signature) -> BlockingMode:
    return BlockingMode(gamma=gamma)


def _is_blocking_relevant(abox: DerivationABox, ind: Individual, parent: Individual, gamma: Signature) -> bool:
    return not ((abox.roles_between(ind, parent) | abox.roles_between(parent, ind)) & gamma.roles)


def compute_blocking(abox: DerivationABox, mode: BlockingMode = STANDARD) -> Dict[Individual, BlockStatus]:
    """
    Assign every individual its blocking status, in creation order.

    Args:
        abox: Derivation ABox
        mode: Blocking mode

    Returns:
        Dict from individual to BlockStatus
    """
    cached = abox._blocking
    if cached is not None and cached[0] == abox.version and cached[1] == mode:
        return cached[2]

    status: Dict[Individual, BlockStatus] = {}
    blockers: Dict[Tuple, Individual] = {}
    for ind in abox.individuals:
        parent = ind.parent
        if not mode.enabled or ind.is_named or parent is None or parent not in abox.order:
            status[ind] = UNBLOCKED
            continue
        if status.get(parent, UNBLOCKED).blocked:
            status[ind] = BlockStatus(BlockKind.INDIRECT)
            continue
        if mode.gamma is not None and not _is_blocking_relevant(abox, ind, parent, mode.gamma):
            status[ind] = UNBLOCKED
            continue
        key = (
            abox.label(ind), abox.label(parent),
            abox.roles_between(ind, parent), abox.roles_between(parent, ind),
        )
        blocker = blockers.get(key)
        if blocker is not None:
            status[ind] = BlockStatus(BlockKind.DIRECT, blocker)
        else:
            blockers[key] = ind
            status[ind] = UNBLOCKED

    abox._blocking = (abox.version, mode, status)
    return status


# ---------------------------------------------------------------------------
# HT-ABox shape
# ---------------------------------------------------------------------------

def _is_root(ind: Individual) -> bool:
    return not ind.path


def check_ht_abox(abox: DerivationABox) -> List[str]:
    """
    List the violated HT-ABox shape conditions (extended form).

    Returns:
        Empty list for a well-shaped ABox
    """
    violations = []
    for ind, concepts in abox.at_least.items():
        for concept in concepts:
            filler = concept.filler
            if not (isinstance(filler, (Atomic, Top))
                    or (isinstance(filler, Not) and isinstance(filler.operand, Atomic))):
                violations.append(f"at-least assertion with complex filler on {ind}")

    linked: Set[Individual] = set()
    for source, targets in abox.out_edges.items():
        for target in targets:
            if source == target or (_is_root(source) and _is_root(target)):
                continue
            if target.parent == source:
                linked.add(target)
            elif source.parent == target:
                linked.add(source)
            else:
                violations.append(f"role assertion between unrelated individuals {source} and {target}")

    for ind in abox.order:
        if not _is_root(ind) and ind not in linked:
            violations.append(f"{ind} has no role assertion with its predecessor")

    for left, right in abox.eqs:
        if _equality_shape_ok(left, right) or _equality_shape_ok(right, left):
            continue
        violations.append(f"equality of unexpected shape {left} = {right}")
    return violations


def _equality_shape_ok(left: Individual, right: Individual) -> bool:
    if left == right or (_is_root(left) and _is_root(right)):
        return True
    if left.parent is not None and left.parent == right.parent:
        return True
    if left.parent is not None and (left.parent == right or left.parent.parent == right):
        return True
    return _is_root(right) and left.parent is not None and _is_root(left.parent)


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

@dataclass
class DerivationStats:
    rule_apps: int = 0
    branches: int = 0
    individuals: int = 0

    def as_dict(self) -> Dict[str, int]:
        return {'branches': self.branches, 'rule_apps': self.rule_apps, 'individuals': self.individuals}


@dataclass
class SatResult:
    satisfiable: bool
    leaf: Optional[DerivationABox] = None
    stats: DerivationStats = field(default_factory=DerivationStats)

    def __bool__(self) -> bool:
        return self.satisfiable

    @property
    def verdict(self) -> str:
        return "SAT" if self.satisfiable else "UNSAT"


# ---------------------------------------------------------------------------
# Rule compilation and matching
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Branch:
    var: str
    roles: Tuple[Tuple[str, bool], ...]   # (role, x is the source)
    concepts: Tuple[str, ...]


@dataclass(frozen=True)
class _CompiledRule:
    rule: HTRule
    x_concepts: Tuple[str, ...]
    branches: Tuple[_Branch, ...]


def _compile(rule: HTRule) -> _CompiledRule:
    x_concepts = []
    roles: Dict[str, List[Tuple[str, bool]]] = {}
    concepts: Dict[str, List[str]] = {}
    for atom in rule.body:
        if isinstance(atom, ConceptAtom):
            if atom.var == X:
                x_concepts.append(atom.concept.name)
            else:
                concepts.setdefault(atom.var, []).append(atom.concept.name)
        elif isinstance(atom, RoleAtom):
            if atom.first == X:
                roles.setdefault(atom.second, []).append((atom.role, True))
            else:
                roles.setdefault(atom.first, []).append((atom.role, False))
    branches = tuple(
        _Branch(var, tuple(roles[var]), tuple(concepts.get(var, ())))
        for var in rule.branch_variables if var in roles
    )
    return _CompiledRule(rule, tuple(x_concepts), branches)


class Hypertableau:
    """
    Depth-first hypertableau derivation over a set of HT-rules.

    Rule priority is clash > equality > Hyp > extension rules > at-least.
    Subclasses add rules through ``_extension_rules``.
    """

    def __init__(self, rules: Sequence[HTRule], blocking: BlockingMode = STANDARD,
                 max_nodes: Optional[int] = None, max_seconds: Optional[float] = None,
                 check_invariants: Optional[bool] = None):
        for rule in rules:
            ok, reason = validate_ht_shape(rule)
            if not ok:
                raise ValueError(f"Rule is not an HT-rule ({reason}): {rule}")
        self.rules = tuple(rules)
        self.compiled = [_compile(rule) for rule in self.rules]
        self.blocking = blocking
        self.max_nodes = max_nodes if max_nodes is not None else settings.MAX_NODES
        self.max_seconds = max_seconds if max_seconds is not None else settings.MAX_SECONDS
        self.check_invariants = settings.DEBUG_INVARIANTS if check_invariants is None else check_invariants
        self.stats = DerivationStats()
        self.log = logger.getChild(type(self).__name__)
        self._deadline = 0.0

    # -- driver -------------------------------------------------------------

    def run(self, abox: Iterable[Axiom]) -> SatResult:
        """
        Search for a clash-free leaf.

        Args:
            abox: Normalized ABox

        Returns:
            SatResult; Sat carries the leaf
        """
        self.stats = DerivationStats()
        self._deadline = time.monotonic() + self.max_seconds
        start = abox if isinstance(abox, DerivationABox) else DerivationABox.from_assertions(abox)
        stack = [start]
        while stack:
            current = stack.pop()
            while True:
                self._check_limits(current)
                if current.clash:
                    self.log.debug("Branch closed: %s", current.clash_reason)
                    break
                successors = self._step(current)
                if successors is None:
                    self.log.info("Clash-free leaf with %d individuals after %d rule applications",
                                  len(current.order), self.stats.rule_apps)
                    return SatResult(True, current, self.stats)
                if self.check_invariants:
                    for succ in successors:
                        violations = check_ht_abox(succ)
                        if violations:
                            raise AssertionError("; ".join(violations))
                if not successors:
                    break
                if len(successors) > 1:
                    self.stats.branches += len(successors) - 1
                    stack.extend(reversed(successors[1:]))
                current = successors[0]
        return SatResult(False, None, self.stats)

    def _check_limits(self, abox: DerivationABox) -> None:
        self.stats.individuals = max(self.stats.individuals, len(abox.order))
        if len(abox.order) > self.max_nodes:
            self.log.warning("Node limit %d exceeded", self.max_nodes)
            raise ResourceLimit(f"more than {self.max_nodes} individuals in one derivation")
        if time.monotonic() > self._deadline:
            self.log.warning("Time limit of %ss exceeded", self.max_seconds)
            raise ResourceLimit(f"derivation exceeded {self.max_seconds}s")

    def _step(self, abox: DerivationABox) -> Optional[List[DerivationABox]]:
        """Apply the highest-priority applicable rule; None when none applies."""
        status = self.blocking_of(abox)
        if self._apply_equality(abox, status):
            return [abox]
        result = self._apply_hyp(abox, status)
        if result is not None:
            return result
        result = self._extension_rules(abox, self.blocking_of(abox))
        if result is not None:
            return result
        if self._apply_at_least(abox, self.blocking_of(abox)):
            return [abox]
        return None

    def _extension_rules(self, abox: DerivationABox,
                         status: Dict[Individual, BlockStatus]) -> Optional[List[DerivationABox]]:
        return None

    def blocking_of(self, abox: DerivationABox) -> Dict[Individual, BlockStatus]:
        return compute_blocking(abox, self.blocking)

    # -- equality -----------------------------------------------------------

    def _apply_equality(self, abox: DerivationABox, status: Dict[Individual, BlockStatus]) -> bool:
        for left, right in sorted(abox.eqs):
            if status.get(left, UNBLOCKED).indirect or status.get(right, UNBLOCKED).indirect:
                continue
            s, t = right, left
            if not (t.is_named or t.is_ancestor_of(s)):
                s, t = t, s
            self.log.debug("Merging %s into %s", s, t)
            abox.merge_into(s, t)
            self.stats.rule_apps += 1
            return True
        return False

    # -- Hyp ----------------------------------------------------------------

    def _matches(self, compiled: _CompiledRule, abox: DerivationABox,
                 status: Dict[Individual, BlockStatus]) -> List[Dict[str, Individual]]:
        if compiled.x_concepts:
            candidates = set(abox.by_concept.get(compiled.x_concepts[0], ()))
        elif compiled.branches:
            name, forward = compiled.branches[0].roles[0]
            edges = abox.out_edges if forward else abox.in_edges
            candidates = {s for s, targets in edges.items() if any(name in n for n in targets.values())}
        else:
            candidates = set(abox.order)

        matches = []
        for x in sorted(candidates, key=abox.order.__getitem__):
            if status.get(x, UNBLOCKED).indirect:
                continue
            label = abox.labels.get(x, set())
            if any(c not in label for c in compiled.x_concepts):
                continue
            options = []
            for branch in compiled.branches:
                pool: Optional[Set[Individual]] = None
                for name, forward in branch.roles:
                    found = set(abox.successors(x, name) if forward else abox.predecessors(x, name))
                    pool = found if pool is None else pool & found
                    if not pool:
                        break
                chosen = [
                    y for y in sorted(pool or (), key=abox.order.__getitem__)
                    if not status.get(y, UNBLOCKED).indirect
                    and all(c in abox.labels.get(y, ()) for c in branch.concepts)
                ]
                if not chosen:
                    break
                options.append(chosen)
            else:
                for values in product(*options):
                    sigma = {X: x}
                    sigma.update(zip((b.var for b in compiled.branches), values))
                    matches.append(sigma)
        return matches

    @staticmethod
    def _atom_holds(atom, sigma: Dict[str, Individual], abox: DerivationABox) -> bool:
        if isinstance(atom, ConceptAtom):
            ind = sigma[atom.var]
            if isinstance(atom.concept, AtLeast):
                return atom.concept in abox.at_least.get(ind, ())
            return abox.has_concept(ind, atom.concept.name)
        if isinstance(atom, RoleAtom):
            return atom.role in abox.roles_between(sigma[atom.first], sigma[atom.second])
        return abox.has_eq(sigma[atom.left], sigma[atom.right])

    @staticmethod
    def _add_atom(atom, sigma: Dict[str, Individual], abox: DerivationABox) -> bool:
        if isinstance(atom, ConceptAtom):
            ind = sigma[atom.var]
            if isinstance(atom.concept, AtLeast):
                return abox.add_at_least(ind, atom.concept)
            return abox.add_concept(ind, atom.concept.name)
        if isinstance(atom, RoleAtom):
            return abox.add_role(atom.role, sigma[atom.first], sigma[atom.second])
        return abox.add_eq(sigma[atom.left], sigma[atom.right])

    def _apply_hyp(self, abox: DerivationABox,
                   status: Dict[Individual, BlockStatus]) -> Optional[List[DerivationABox]]:
        applied = False
        choice = None
        for compiled in self.compiled:
            rule = compiled.rule
            for sigma in self._matches(compiled, abox, status):
                if any(self._atom_holds(atom, sigma, abox) for atom in rule.head):
                    continue
                if not rule.head:
                    abox.set_clash(f"rule {rule} fired at {sigma[X]}")
                    self.stats.rule_apps += 1
                    return [abox]
                if len(rule.head) == 1:
                    self._add_atom(rule.head[0], sigma, abox)
                    self.stats.rule_apps += 1
                    applied = True
                    if abox.clash:
                        return [abox]
                elif choice is None:
                    choice = (rule, sigma)
        if applied:
            return [abox]
        if choice is None:
            return None

        rule, sigma = choice
        self.stats.rule_apps += 1
        self.log.debug("Branching on %s at %s", rule, sigma[X])
        branches = []
        for atom in rule.head:
            branch = abox.copy()
            self._add_atom(atom, sigma, branch)
            branches.append(branch)
        return branches

    # -- at-least -----------------------------------------------------------

    @staticmethod
    def _filler_holds(filler, ind: Individual, abox: DerivationABox) -> bool:
        if isinstance(filler, Top):
            return True
        if isinstance(filler, Atomic):
            return abox.has_concept(ind, filler.name)
        return abox.has_neg_concept(ind, filler.operand.name)

    @staticmethod
    def _add_filler(filler, ind: Individual, abox: DerivationABox) -> None:
        if isinstance(filler, Atomic):
            abox.add_concept(ind, filler.name)
        elif isinstance(filler, Not):
            abox.add_neg_concept(ind, filler.operand.name)

    def _witnessed(self, concept: AtLeast, ind: Individual, abox: DerivationABox) -> bool:
        role = concept.role
        if role.inverted:
            pool = abox.predecessors(ind, role.base)
        else:
            pool = abox.successors(ind, role.base)
        pool = [u for u in pool if self._filler_holds(concept.filler, u, abox)]
        if len(pool) < concept.n:
            return False
        if concept.n == 1:
            return True
        for group in combinations(pool, concept.n):
            if all(abox.has_neq(u, v) for u, v in combinations(group, 2)):
                return True
        return False

    def _apply_at_least(self, abox: DerivationABox, status: Dict[Individual, BlockStatus]) -> bool:
        for ind in abox.individuals:
            if status.get(ind, UNBLOCKED).blocked:
                continue
            for concept in sorted(abox.at_least.get(ind, ()), key=str):
                if self._witnessed(concept, ind, abox):
                    continue
                fresh = [abox.fresh_child(ind) for _ in range(concept.n)]
                for child in fresh:
                    atomic = role_assertion(concept.role, ind, child)
                    abox.add_role(atomic.role.base, atomic.source, atomic.target)
                    self._add_filler(concept.filler, child, abox)
                for left, right in combinations(fresh, 2):
                    abox.add_neq(left, right)
                self.stats.rule_apps += 1
                return True
        return False


def check_sat(rules: Sequence[HTRule], abox: Iterable[Axiom], blocking: BlockingMode = STANDARD,
              max_nodes: Optional[int] = None, max_seconds: Optional[float] = None) -> SatResult:
    """
    Decide satisfiability of HT-rules plus a normalized ABox.

    Args:
        rules: HT-rules
        abox: Normalized ABox
        blocking: Blocking mode

    Returns:
        SatResult

    Raises:
        ResourceLimit: when the node or time budget runs out
    """
    return Hypertableau(rules, blocking, max_nodes, max_seconds).run(abox)
