"""
Description-logic abstract syntax, signatures and ABox graphs

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import networkx as nx


# ---------------------------------------------------------------------------
# Roles and concepts
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Role:
    base: str
    inverted: bool = False

    def inverse(self) -> 'Role':
        return Role(self.base, not self.inverted)

    def __str__(self) -> str:
        return f"inv {self.base}" if self.inverted else self.base


class Concept:
    """Marker base class for concept expressions."""

    __slots__ = ()

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Top(Concept):
    pass


@dataclass(frozen=True)
class Bottom(Concept):
    pass


@dataclass(frozen=True)
class Atomic(Concept):
    name: str
    is_nominal: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class Not(Concept):
    operand: Concept


@dataclass(frozen=True)
class And(Concept):
    left: Concept
    right: Concept


@dataclass(frozen=True)
class Or(Concept):
    left: Concept
    right: Concept


@dataclass(frozen=True)
class Exists(Concept):
    role: Role
    filler: Concept


@dataclass(frozen=True)
class ForAll(Concept):
    role: Role
    filler: Concept


@dataclass(frozen=True)
class AtLeast(Concept):
    n: int
    role: Role
    filler: Concept


@dataclass(frozen=True)
class AtMost(Concept):
    n: int
    role: Role
    filler: Concept


TOP = Top()
BOTTOM = Bottom()


def is_literal(concept: Concept) -> bool:
    """True for A and not A with A atomic."""
    return isinstance(concept, Atomic) or (
        isinstance(concept, Not) and isinstance(concept.operand, Atomic)
    )


# ---------------------------------------------------------------------------
# Individuals
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Individual:
    """
    Named individual (empty path), unnamed successor (non-empty path)
    or, in EL derivations, the canonical individual of a concept.
    """
    root: str
    path: Tuple[int, ...] = ()
    canonical: bool = False

    @property
    def is_named(self) -> bool:
        return not self.path and not self.canonical

    @property
    def parent(self) -> Optional['Individual']:
        if not self.path:
            return None
        return Individual(self.root, self.path[:-1], self.canonical)

    def child(self, index: int) -> 'Individual':
        return Individual(self.root, self.path + (index,), self.canonical)

    def is_ancestor_of(self, other: 'Individual') -> bool:
        return (
            self.root == other.root
            and self.canonical == other.canonical
            and len(self.path) < len(other.path)
            and other.path[:len(self.path)] == self.path
        )

    def __str__(self) -> str:
        head = f"@{self.root}" if self.canonical else self.root
        if not self.path:
            return head
        return head + "." + ".".join(str(i) for i in self.path)


def named(name: str) -> Individual:
    return Individual(name)


def canonical_individual(concept_name: str) -> Individual:
    return Individual(concept_name, (), True)


# ---------------------------------------------------------------------------
# Axioms and assertions
# ---------------------------------------------------------------------------

class Axiom:
    __slots__ = ()

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class ConceptIncl(Axiom):
    sub: Concept
    sup: Concept


@dataclass(frozen=True)
class RoleIncl(Axiom):
    sub: Role
    sup: Role


@dataclass(frozen=True)
class ConceptAssertion(Axiom):
    concept: Concept
    individual: Individual


@dataclass(frozen=True)
class RoleAssertion(Axiom):
    role: Role
    source: Individual
    target: Individual


@dataclass(frozen=True)
class NegRoleAssertion(Axiom):
    role: Role
    source: Individual
    target: Individual


@dataclass(frozen=True)
class Eq(Axiom):
    left: Individual
    right: Individual

    def __post_init__(self):
        if self.right < self.left:
            left, right = self.right, self.left
            object.__setattr__(self, 'left', left)
            object.__setattr__(self, 'right', right)


@dataclass(frozen=True)
class Neq(Axiom):
    left: Individual
    right: Individual

    def __post_init__(self):
        if self.right < self.left:
            left, right = self.right, self.left
            object.__setattr__(self, 'left', left)
            object.__setattr__(self, 'right', right)


@dataclass(frozen=True)
class Falsum(Axiom):
    """Distinguished nullary assertion; also the entailment target for inconsistency."""


FALSUM = Falsum()

TBoxAxiom = Union[ConceptIncl, RoleIncl]
Assertion = Union[ConceptAssertion, RoleAssertion, NegRoleAssertion, Eq, Neq, Falsum]
ABox = FrozenSet[Axiom]

ASSERTION_TYPES = (ConceptAssertion, RoleAssertion, NegRoleAssertion, Eq, Neq, Falsum)
TBOX_TYPES = (ConceptIncl, RoleIncl)


def role_assertion(role: Role, source: Individual, target: Individual) -> RoleAssertion:
    """ar(R, s, t): the atomic-role assertion that R(s, t) stands for."""
    if role.inverted:
        return RoleAssertion(Role(role.base), target, source)
    return RoleAssertion(role, source, target)


def individuals_of(assertion: Axiom) -> Tuple[Individual, ...]:
    if isinstance(assertion, ConceptAssertion):
        return (assertion.individual,)
    if isinstance(assertion, (RoleAssertion, NegRoleAssertion)):
        return (assertion.source, assertion.target)
    if isinstance(assertion, (Eq, Neq)):
        return (assertion.left, assertion.right)
    return ()


# ---------------------------------------------------------------------------
# Logic profiles and signatures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogicProfile:
    nominals: bool = False
    inverses: bool = False
    hierarchies: bool = False
    cardinalities: bool = False
    horn: bool = False
    el: bool = False
    fl0: bool = False

    def __post_init__(self):
        if self.el and not self.horn:
            object.__setattr__(self, 'horn', True)
        if (self.el or self.fl0) and (self.nominals or self.inverses
                                      or self.hierarchies or self.cardinalities):
            raise ValueError("el and fl0 exclude nominals, inverses, hierarchies and cardinalities")

    @classmethod
    def from_name(cls, name: str) -> 'LogicProfile':
        name = name.strip().lower()
        if name == 'el':
            return cls(horn=True, el=True)
        if name == 'fl0':
            return cls(fl0=True)
        horn = name.startswith('horn-')
        core = name[5:] if horn else name
        if not core.startswith('alc'):
            raise ValueError(f"Unknown logic: {name}")
        letters = core[3:]
        if any(ch not in 'ohiq' for ch in letters):
            raise ValueError(f"Unknown logic: {name}")
        return cls(
            nominals='o' in letters,
            inverses='i' in letters,
            hierarchies='h' in letters,
            cardinalities='q' in letters,
            horn=horn,
        )

    @property
    def name(self) -> str:
        if self.el:
            return 'el'
        if self.fl0:
            return 'fl0'
        letters = 'alc'
        letters += 'h' if self.hierarchies else ''
        letters += 'o' if self.nominals else ''
        letters += 'i' if self.inverses else ''
        letters += 'q' if self.cardinalities else ''
        return f"horn-{letters}" if self.horn else letters

    def within(self, other: 'LogicProfile') -> bool:
        """True if every KB in this profile also lies in other."""
        if other.el and not self.el:
            return False
        if other.fl0 and not self.fl0:
            return False
        if other.horn and not self.horn:
            return False
        return (
            (not self.nominals or other.nominals)
            and (not self.inverses or other.inverses)
            and (not self.hierarchies or other.hierarchies)
            and (not self.cardinalities or other.cardinalities)
        )

    def join(self, other: 'LogicProfile') -> 'LogicProfile':
        el = self.el and other.el
        fl0 = self.fl0 and other.fl0
        return LogicProfile(
            nominals=self.nominals or other.nominals,
            inverses=self.inverses or other.inverses,
            hierarchies=self.hierarchies or other.hierarchies,
            cardinalities=self.cardinalities or other.cardinalities,
            horn=self.horn and other.horn,
            el=el,
            fl0=fl0,
        )

    @property
    def negation_closed(self) -> bool:
        """Whether negated assertions are expressible in this logic."""
        return not (self.horn or self.el or self.fl0)


ALCHIQ = LogicProfile(inverses=True, hierarchies=True, cardinalities=True)
HORN_ALCHIQ = LogicProfile(inverses=True, hierarchies=True, cardinalities=True, horn=True)
EL = LogicProfile(horn=True, el=True)


@dataclass(frozen=True)
class Signature:
    concepts: FrozenSet[str] = frozenset()
    roles: FrozenSet[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, 'concepts', frozenset(self.concepts))
        object.__setattr__(self, 'roles', frozenset(self.roles))
        clash = self.concepts & self.roles
        if clash:
            raise ValueError(f"Names used as both concept and role: {', '.join(sorted(clash))}")

    def __or__(self, other: 'Signature') -> 'Signature':
        return Signature(self.concepts | other.concepts, self.roles | other.roles)

    def __le__(self, other: 'Signature') -> bool:
        return self.concepts <= other.concepts and self.roles <= other.roles

    def __bool__(self) -> bool:
        return bool(self.concepts or self.roles)

    def __len__(self) -> int:
        return len(self.concepts) + len(self.roles)

    def with_concepts(self, names: Iterable[str]) -> 'Signature':
        return Signature(self.concepts | frozenset(names), self.roles)

    @property
    def concept_only(self) -> bool:
        return not self.roles

    def render(self) -> str:
        lines = [f"concept {name}" for name in sorted(self.concepts)]
        lines += [f"role {name}" for name in sorted(self.roles)]
        return "\n".join(lines)


EMPTY_SIGNATURE = Signature()


@dataclass(frozen=True)
class KnowledgeBase:
    tbox: FrozenSet[Axiom] = frozenset()
    abox: FrozenSet[Axiom] = frozenset()
    declared_logic: LogicProfile = field(default_factory=LogicProfile)
    logic_header: Optional[str] = None
    declarations: FrozenSet[Tuple[str, str]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, 'tbox', frozenset(self.tbox))
        object.__setattr__(self, 'abox', frozenset(self.abox))
        object.__setattr__(self, 'declarations', frozenset(self.declarations))
        for axiom in self.tbox:
            if not isinstance(axiom, TBOX_TYPES):
                raise ValueError(f"Assertion in TBox: {render(axiom)}")
        for axiom in self.abox:
            if not isinstance(axiom, ASSERTION_TYPES):
                raise ValueError(f"TBox axiom in ABox: {render(axiom)}")

    @property
    def axioms(self) -> List[Axiom]:
        return sorted(self.tbox, key=sort_key) + sorted(self.abox, key=sort_key)

    def union(self, other: 'KnowledgeBase') -> 'KnowledgeBase':
        from modules.kb_parser import infer_profile

        merged = KnowledgeBase(
            tbox=self.tbox | other.tbox,
            abox=self.abox | other.abox,
            declarations=self.declarations | other.declarations,
        )
        return KnowledgeBase(
            tbox=merged.tbox,
            abox=merged.abox,
            declared_logic=infer_profile(merged),
            declarations=merged.declarations,
        )

    def with_axioms(self, tbox: Iterable[Axiom] = (), abox: Iterable[Axiom] = ()) -> 'KnowledgeBase':
        return KnowledgeBase(
            tbox=self.tbox | frozenset(tbox),
            abox=self.abox | frozenset(abox),
            declared_logic=self.declared_logic,
            logic_header=self.logic_header,
            declarations=self.declarations,
        )

    @property
    def individuals(self) -> FrozenSet[Individual]:
        return frozenset(ind for a in self.abox for ind in individuals_of(a))


# ---------------------------------------------------------------------------
# Signature, desugaring
# ---------------------------------------------------------------------------

def _concept_symbols(concept: Concept, concepts: set, roles: set) -> None:
    stack = [concept]
    while stack:
        node = stack.pop()
        if isinstance(node, Atomic):
            concepts.add(node.name)
        elif isinstance(node, Not):
            stack.append(node.operand)
        elif isinstance(node, (And, Or)):
            stack.extend((node.left, node.right))
        elif isinstance(node, (Exists, ForAll, AtLeast, AtMost)):
            roles.add(node.role.base)
            stack.append(node.filler)


def signature_of(entity) -> Signature:
    """
    Atomic concepts and atomic roles occurring in an entity.

    Args:
        entity: Concept, Role, Axiom, KnowledgeBase or iterable of axioms

    Returns:
        Signature with individuals excluded
    """
    concepts: set = set()
    roles: set = set()

    def visit(item) -> None:
        if isinstance(item, Concept):
            _concept_symbols(item, concepts, roles)
        elif isinstance(item, Role):
            roles.add(item.base)
        elif isinstance(item, ConceptIncl):
            _concept_symbols(item.sub, concepts, roles)
            _concept_symbols(item.sup, concepts, roles)
        elif isinstance(item, RoleIncl):
            roles.update((item.sub.base, item.sup.base))
        elif isinstance(item, ConceptAssertion):
            _concept_symbols(item.concept, concepts, roles)
        elif isinstance(item, (RoleAssertion, NegRoleAssertion)):
            roles.add(item.role.base)
        elif isinstance(item, KnowledgeBase):
            for axiom in item.tbox | item.abox:
                visit(axiom)
        elif isinstance(item, (Eq, Neq, Falsum)):
            pass
        else:
            for sub in item:
                visit(sub)

    visit(entity)
    return Signature(frozenset(concepts), frozenset(roles))


def desugar(concept: Concept) -> Concept:
    """Rewrite surface sugar into Top/Atomic/Not/And/AtLeast."""
    if isinstance(concept, (Top, Atomic)):
        return concept
    if isinstance(concept, Bottom):
        return Not(TOP)
    if isinstance(concept, Not):
        return Not(desugar(concept.operand))
    if isinstance(concept, And):
        return And(desugar(concept.left), desugar(concept.right))
    if isinstance(concept, Or):
        return Not(And(Not(desugar(concept.left)), Not(desugar(concept.right))))
    if isinstance(concept, Exists):
        return AtLeast(1, concept.role, desugar(concept.filler))
    if isinstance(concept, ForAll):
        return Not(AtLeast(1, concept.role, Not(desugar(concept.filler))))
    if isinstance(concept, AtLeast):
        if concept.n <= 0:
            return TOP
        return AtLeast(concept.n, concept.role, desugar(concept.filler))
    if isinstance(concept, AtMost):
        return Not(AtLeast(concept.n + 1, concept.role, desugar(concept.filler)))
    raise TypeError(f"Not a concept: {concept!r}")


# ---------------------------------------------------------------------------
# ABox graphs
# ---------------------------------------------------------------------------

def abox_graph(abox: Iterable[Axiom]) -> nx.Graph:
    """G(A): one node per individual, an edge for each binary assertion."""
    graph = nx.Graph()
    for assertion in abox:
        inds = individuals_of(assertion)
        graph.add_nodes_from(inds)
        if len(inds) == 2 and inds[0] != inds[1]:
            graph.add_edge(inds[0], inds[1])
    return graph


def connected_components(abox: Iterable[Axiom]) -> List[Tuple[Axiom, ...]]:
    """
    Partition an ABox by the connected components of its graph.

    Args:
        abox: Assertions to partition

    Returns:
        One tuple of assertions per component, ordered by least individual;
        assertions without individuals form a trailing component
    """
    assertions = list(abox)
    if not assertions:
        return []

    graph = abox_graph(assertions)
    owner: Dict[Individual, int] = {}
    components = sorted((sorted(c) for c in nx.connected_components(graph)), key=lambda c: c[0])
    for index, members in enumerate(components):
        for ind in members:
            owner[ind] = index

    buckets: List[List[Axiom]] = [[] for _ in components]
    loose: List[Axiom] = []
    for assertion in assertions:
        inds = individuals_of(assertion)
        if inds:
            buckets[owner[inds[0]]].append(assertion)
        else:
            loose.append(assertion)

    result = [tuple(sorted(bucket, key=sort_key)) for bucket in buckets if bucket]
    if loose:
        result.append(tuple(sorted(loose, key=sort_key)))
    return result


def is_connected(abox: Iterable[Axiom]) -> bool:
    graph = abox_graph(abox)
    return graph.number_of_nodes() <= 1 or nx.is_connected(graph)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

_KIND_RANK = {
    ConceptIncl: 0, RoleIncl: 1, ConceptAssertion: 2, RoleAssertion: 3,
    NegRoleAssertion: 4, Eq: 5, Neq: 6, Falsum: 7,
}


def _render_concept(concept: Concept) -> str:
    if isinstance(concept, Top):
        return "top"
    if isinstance(concept, Bottom):
        return "bot"
    if isinstance(concept, Atomic):
        return concept.name
    if isinstance(concept, Not):
        return f"not {_render_concept(concept.operand)}"
    if isinstance(concept, And):
        return f"({_render_concept(concept.left)} and {_render_concept(concept.right)})"
    if isinstance(concept, Or):
        return f"({_render_concept(concept.left)} or {_render_concept(concept.right)})"
    if isinstance(concept, Exists):
        return f"some {concept.role} {_render_concept(concept.filler)}"
    if isinstance(concept, ForAll):
        return f"all {concept.role} {_render_concept(concept.filler)}"
    if isinstance(concept, AtLeast):
        return f"min {concept.n} {concept.role} {_render_concept(concept.filler)}"
    if isinstance(concept, AtMost):
        return f"max {concept.n} {concept.role} {_render_concept(concept.filler)}"
    raise TypeError(f"Not a concept: {concept!r}")


def _render_axiom(axiom: Axiom) -> str:
    if isinstance(axiom, ConceptIncl):
        return f"{_render_concept(axiom.sub)} sub {_render_concept(axiom.sup)}"
    if isinstance(axiom, RoleIncl):
        return f"{axiom.sub} rsub {axiom.sup}"
    if isinstance(axiom, ConceptAssertion):
        concept = axiom.concept
        text = _render_concept(concept)
        if not (isinstance(concept, (Top, Bottom, Atomic, And, Or)) or is_literal(concept)):
            text = f"({text})"
        return f"{text}({axiom.individual})"
    if isinstance(axiom, RoleAssertion):
        return f"{axiom.role}({axiom.source},{axiom.target})"
    if isinstance(axiom, NegRoleAssertion):
        return f"not {axiom.role}({axiom.source},{axiom.target})"
    if isinstance(axiom, Eq):
        return f"{axiom.left} = {axiom.right}"
    if isinstance(axiom, Neq):
        return f"{axiom.left} != {axiom.right}"
    if isinstance(axiom, Falsum):
        return "FALSUM"
    raise TypeError(f"Not an axiom: {axiom!r}")


def sort_key(axiom: Axiom) -> Tuple[int, str]:
    return (_KIND_RANK[type(axiom)], _render_axiom(axiom))


def render_abox(abox: Iterable[Axiom], separator: str = "; ") -> str:
    """Canonical render: kind first, then text."""
    return separator.join(_render_axiom(a) for a in sorted(abox, key=sort_key))


def render(entity) -> str:
    """
    Render an entity in the concrete .dl syntax.

    Args:
        entity: Concept, Role, Axiom, Signature, KnowledgeBase or iterable of assertions

    Returns:
        Text that parses back to the same entity
    """
    if isinstance(entity, Concept):
        return _render_concept(entity)
    if isinstance(entity, (Role, Individual)):
        return str(entity)
    if isinstance(entity, Axiom):
        return _render_axiom(entity)
    if isinstance(entity, Signature):
        return entity.render()
    if isinstance(entity, KnowledgeBase):
        lines = []
        if entity.logic_header:
            lines.append(f"logic {entity.logic_header}.")
        for kind, name in sorted(entity.declarations):
            lines.append(f"{kind} {name}.")
        lines += [f"{_render_axiom(a)}." for a in entity.axioms]
        return "\n".join(lines)
    return render_abox(entity)


def rename_assertion(assertion: Axiom, mapping: Dict[Individual, Individual]) -> Axiom:
    """Substitute individuals in an assertion; unmapped individuals stay."""
    def sub(ind: Individual) -> Individual:
        return mapping.get(ind, ind)

    if isinstance(assertion, ConceptAssertion):
        return ConceptAssertion(assertion.concept, sub(assertion.individual))
    if isinstance(assertion, RoleAssertion):
        return RoleAssertion(assertion.role, sub(assertion.source), sub(assertion.target))
    if isinstance(assertion, NegRoleAssertion):
        return NegRoleAssertion(assertion.role, sub(assertion.source), sub(assertion.target))
    if isinstance(assertion, Eq):
        return Eq(sub(assertion.left), sub(assertion.right))
    if isinstance(assertion, Neq):
        return Neq(sub(assertion.left), sub(assertion.right))
    return assertion
