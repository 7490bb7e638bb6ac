"""
Datalog abstraction of visible rules and harmful-cycle detection

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

from modules.clausifier import ConceptAtom, HTRule, RoleAtom, X
from modules.syntax import (
    AtLeast, Atomic, Axiom, ConceptAssertion, Eq, LogicProfile, Not,
    RoleAssertion, Signature, individuals_of, role_assertion, signature_of,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Terms, predicates and atoms
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Const:
    """A named individual, or the representative v_A, v_notA or v_top."""
    kind: str   # 'ind', 'pos', 'neg' or 'top'
    name: str = ""

    @property
    def is_representative(self) -> bool:
        return self.kind != 'ind'

    def __str__(self) -> str:
        if self.kind == 'ind':
            return self.name
        if self.kind == 'pos':
            return f"v_{self.name}"
        if self.kind == 'neg':
            return f"v_not_{self.name}"
        return "v_top"


V_TOP = Const('top')


@dataclass(frozen=True, order=True)
class Pred:
    kind: str   # 'concept', 'role', 'succ', 'desc' or 'eq'
    name: str = ""

    def __str__(self) -> str:
        if self.kind == 'succ':
            return "Succ"
        if self.kind == 'desc':
            return "Gamma-Desc"
        if self.kind == 'eq':
            return "="
        return self.name


SUCC = Pred('succ')
DESC = Pred('desc')
EQUALS = Pred('eq')

Term = Union[str, Const]


@dataclass(frozen=True, order=True)
class DAtom:
    pred: Pred
    args: Tuple[Term, ...]

    def __str__(self) -> str:
        if self.pred == EQUALS:
            return f"{self.args[0]} = {self.args[1]}"
        return f"{self.pred}({', '.join(str(a) for a in self.args)})"


Fact = DAtom


def concept_atom(name: str, term: Term) -> DAtom:
    return DAtom(Pred('concept', name), (term,))


def role_fact(name: str, first: Term, second: Term) -> DAtom:
    return DAtom(Pred('role', name), (first, second))


@dataclass(frozen=True)
class DatalogRule:
    label: str
    body: Tuple[DAtom, ...]
    head: Tuple[DAtom, ...]
    source: Optional[HTRule] = None

    def __str__(self) -> str:
        body = " & ".join(str(a) for a in self.body) or "TRUE"
        return f"({self.label}) {body} -> {' & '.join(str(a) for a in self.head)}"


@dataclass
class AcyclicityProgram:
    constants: FrozenSet[Const]
    facts: Tuple[DAtom, ...]
    rules: Tuple[DatalogRule, ...]
    gamma: Signature
    hidden: LogicProfile

    def rules_labelled(self, label: str) -> List[DatalogRule]:
        return [rule for rule in self.rules if rule.label == label]

    def __len__(self) -> int:
        return len(self.facts) + len(self.rules)


@dataclass
class CycleReport:
    acyclic: bool
    witness: Optional[Const] = None
    fact_count: int = 0
    trace: List[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Program construction
# ---------------------------------------------------------------------------

def _representative(filler) -> Const:
    if isinstance(filler, Atomic):
        return Const('pos', filler.name)
    if isinstance(filler, Not):
        return Const('neg', filler.operand.name)
    return V_TOP


def _tt_filler(filler, term: Term) -> List[DAtom]:
    if isinstance(filler, Atomic):
        return [concept_atom(filler.name, term)]
    return []


def _tt_at_least(concept: AtLeast, term: Term) -> List[DAtom]:
    v = _representative(concept.filler)
    role = concept.role
    edge = role_fact(role.base, v, term) if role.inverted else role_fact(role.base, term, v)
    return [edge] + _tt_filler(concept.filler, v) + [DAtom(SUCC, (term, v))]


def tt_head_atom(atom) -> List[DAtom]:
    """Translate one HT-rule atom; negated concepts contribute nothing."""
    if isinstance(atom, ConceptAtom):
        concept = atom.concept
        if isinstance(concept, AtLeast):
            return _tt_at_least(concept, atom.var)
        if isinstance(concept, Atomic):
            return [concept_atom(concept.name, atom.var)]
        return []
    if isinstance(atom, RoleAtom):
        return [role_fact(atom.role, atom.first, atom.second)]
    return [DAtom(EQUALS, (atom.left, atom.right))]


def tt_assertion(assertion: Axiom) -> List[DAtom]:
    if isinstance(assertion, ConceptAssertion):
        concept, ind = assertion.concept, Const('ind', str(assertion.individual))
        if isinstance(concept, AtLeast):
            return _tt_at_least(concept, ind)
        if isinstance(concept, Atomic):
            return [concept_atom(concept.name, ind)]
        return []
    if isinstance(assertion, RoleAssertion):
        atomic = role_assertion(assertion.role, assertion.source, assertion.target)
        return [role_fact(atomic.role.base, Const('ind', str(atomic.source)), Const('ind', str(atomic.target)))]
    if isinstance(assertion, Eq):
        return [DAtom(EQUALS, (Const('ind', str(assertion.left)), Const('ind', str(assertion.right))))]
    return []


def _fixed_rules(gamma: Signature, hidden: LogicProfile) -> List[DatalogRule]:
    rules = []
    for name in sorted(gamma.concepts):
        rules.append(DatalogRule("32", (DAtom(SUCC, ('z1', 'z2')),), (concept_atom(name, 'z2'),)))
    roles = sorted(gamma.roles)
    for r, r2 in product(roles, roles):
        if hidden.hierarchies and r != r2:
            rules.append(DatalogRule("33", (role_fact(r2, 'z1', 'z2'),), (role_fact(r, 'z1', 'z2'),)))
        if hidden.inverses and hidden.hierarchies:
            rules.append(DatalogRule("34", (role_fact(r2, 'z1', 'z2'),), (role_fact(r, 'z2', 'z1'),)))
        if hidden.cardinalities:
            eq = (DAtom(EQUALS, ('z1', 'z2')),)
            rules.append(DatalogRule("35", (role_fact(r, 'z', 'z1'), role_fact(r2, 'z', 'z2')), eq))
            if hidden.inverses:
                rules.append(DatalogRule("36", (role_fact(r, 'z1', 'z'), role_fact(r2, 'z2', 'z')), eq))
                rules.append(DatalogRule("37", (role_fact(r, 'z1', 'z'), role_fact(r2, 'z', 'z2')), eq))
    for name in roles:
        rules.append(DatalogRule(
            "38", (DAtom(SUCC, ('z1', 'z2')), role_fact(name, 'z1', 'z2')), (DAtom(DESC, ('z1', 'z2')),)))
    if roles:
        rules.append(DatalogRule(
            "39", (DAtom(DESC, ('z1', 'z2')), DAtom(DESC, ('z2', 'z3'))), (DAtom(DESC, ('z1', 'z3')),)))
    return rules


def build_acyclicity_program(rv: Sequence[HTRule], av: Sequence[Axiom], gamma: Signature,
                             hidden: LogicProfile) -> AcyclicityProgram:
    """
    Build the datalog abstraction of visible rules and ABox.

    Rules that only a hidden TBox with role hierarchies, inverses or
    cardinalities could need are left out when its profile lacks them.

    Args:
        rv: Visible HT-rules
        av: Normalized visible ABox
        gamma: Public signature
        hidden: Logic profile of the hidden TBox

    Returns:
        AcyclicityProgram
    """
    facts: List[DAtom] = []
    for assertion in av:
        facts.extend(tt_assertion(assertion))
    individuals = sorted({str(ind) for a in av for ind in individuals_of(a)})
    for ind in individuals:
        for name in sorted(gamma.concepts):
            facts.append(concept_atom(name, Const('ind', ind)))

    rules: List[DatalogRule] = []
    for rule in rv:
        body = tuple(atom for b in rule.body for atom in tt_head_atom(b))
        for disjunct in rule.head:
            head = tuple(tt_head_atom(disjunct))
            if head:
                rules.append(DatalogRule("31", body, head, rule))
    rules.extend(_fixed_rules(gamma, hidden))

    names = set(signature_of(list(av)).concepts)
    for rule in rv:
        for atom in rule.body + rule.head:
            if isinstance(atom, ConceptAtom):
                names |= signature_of(atom.concept).concepts
    constants = {Const('ind', ind) for ind in individuals} | {V_TOP}
    constants |= {Const(kind, name) for name in names for kind in ('pos', 'neg')}

    program = AcyclicityProgram(frozenset(constants), tuple(dict.fromkeys(facts)), tuple(rules), gamma, hidden)
    logger.debug("Acyclicity program: %d facts, %d rules", len(program.facts), len(program.rules))
    return program


# ---------------------------------------------------------------------------
# Fixpoint with equality
# ---------------------------------------------------------------------------

class _Classes:
    """Union-find over constants; named individuals win as representatives."""

    def __init__(self):
        self.parent: Dict[Const, Const] = {}
        self.members: Dict[Const, Set[Const]] = {}

    def find(self, c: Const) -> Const:
        root = c
        while self.parent.get(root, root) != root:
            root = self.parent[root]
        while c != root:
            c, self.parent[c] = self.parent.get(c, c), root
        return root

    def union(self, a: Const, b: Const) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        keep, drop = sorted((ra, rb), key=lambda c: (c.is_representative, c))
        self.parent[drop] = keep
        self.members.setdefault(keep, {keep}).update(self.members.pop(drop, {drop}))
        return True

    def class_of(self, c: Const) -> Set[Const]:
        return self.members.get(self.find(c), {self.find(c)})

    def bears_representative(self, c: Const) -> bool:
        return any(m.is_representative for m in self.class_of(c))


class _Model:
    def __init__(self):
        self.classes = _Classes()
        self.facts: Set[DAtom] = set()
        self.unary: Dict[Pred, Set[Const]] = {}
        self.forward: Dict[Pred, Dict[Const, Set[Const]]] = {}
        self.backward: Dict[Pred, Dict[Const, Set[Const]]] = {}
        self.why: Dict[DAtom, Tuple[str, Tuple[DAtom, ...]]] = {}

    def canon(self, atom: DAtom) -> DAtom:
        return DAtom(atom.pred, tuple(self.classes.find(a) for a in atom.args))

    def add(self, atom: DAtom, label: str, premises: Tuple[DAtom, ...]) -> bool:
        atom = self.canon(atom)
        if atom in self.facts:
            return False
        self.facts.add(atom)
        self.why.setdefault(atom, (label, premises))
        if len(atom.args) == 1:
            self.unary.setdefault(atom.pred, set()).add(atom.args[0])
        else:
            s, t = atom.args
            self.forward.setdefault(atom.pred, {}).setdefault(s, set()).add(t)
            self.backward.setdefault(atom.pred, {}).setdefault(t, set()).add(s)
        return True

    def rebuild(self) -> None:
        old, why = self.facts, self.why
        self.facts, self.unary, self.forward, self.backward, self.why = set(), {}, {}, {}, {}
        for atom in sorted(old):
            label, premises = why[atom]
            self.add(atom, label, premises)
        for atom, reason in why.items():
            if atom.pred == EQUALS:
                self.why.setdefault(atom, reason)

    def has_unary(self, pred: Pred, c: Const) -> bool:
        return c in self.unary.get(pred, ())

    def succ(self, pred: Pred, c: Const) -> Set[Const]:
        return self.forward.get(pred, {}).get(c, set())

    def pred_of(self, pred: Pred, c: Const) -> Set[Const]:
        return self.backward.get(pred, {}).get(c, set())


def _bind(atom: DAtom, sigma: Dict[str, Const]) -> DAtom:
    return DAtom(atom.pred, tuple(sigma[a] if isinstance(a, str) else a for a in atom.args))


def _join(body: Sequence[DAtom], model: _Model, sigma: Dict[str, Const]) -> Iterable[Dict[str, Const]]:
    if not body:
        yield sigma
        return
    atom, rest = body[0], body[1:]
    args = [sigma.get(a, a) if isinstance(a, str) else model.classes.find(a) for a in atom.args]
    if len(args) == 1:
        (term,) = args
        candidates = [term] if isinstance(term, Const) else sorted(model.unary.get(atom.pred, ()))
        for c in candidates:
            if model.has_unary(atom.pred, c):
                yield from _join(rest, model, {**sigma, **({term: c} if isinstance(term, str) else {})})
        return
    first, second = args
    if isinstance(first, Const):
        pairs = [(first, t) for t in sorted(model.succ(atom.pred, first))]
    elif isinstance(second, Const):
        pairs = [(s, second) for s in sorted(model.pred_of(atom.pred, second))]
    else:
        pairs = [(s, t) for s, targets in sorted(model.forward.get(atom.pred, {}).items()) for t in sorted(targets)]
    for s, t in pairs:
        extra = {}
        if isinstance(first, str):
            extra[first] = s
        if isinstance(second, str):
            if second in extra and extra[second] != t:
                continue
            extra[second] = t
        yield from _join(rest, model, {**sigma, **extra})


def _match_ht_body(rule: DatalogRule, model: _Model) -> Iterable[Dict[str, Const]]:
    """
    Bindings for a translated HT-rule body, enumerating only the variables
    the head uses.

    Each branch variable is constrained by its own atoms and x alone, so its
    candidates are computed per value of x and never combined unless needed.
    """
    x_atoms = [a for a in rule.body if a.args == (X,)]
    by_var: Dict[str, List[DAtom]] = {}
    for atom in rule.body:
        variables = [a for a in atom.args if isinstance(a, str) and a != X]
        if variables:
            by_var.setdefault(variables[0], []).append(atom)
    head_vars = sorted({a for atom in rule.head for a in atom.args if isinstance(a, str) and a != X})

    if x_atoms:
        xs = sorted(model.unary.get(x_atoms[0].pred, ()))
    else:
        xs = sorted(model.classes.find(c) for c in _all_constants(model))
    for x in xs:
        if not all(model.has_unary(a.pred, x) for a in x_atoms):
            continue
        pools: Dict[str, List[Const]] = {}
        for var, atoms in by_var.items():
            pool = None
            for atom in atoms:
                if len(atom.args) == 2:
                    if atom.args[0] == X:
                        found = model.succ(atom.pred, x)
                    else:
                        found = model.pred_of(atom.pred, x)
                    pool = set(found) if pool is None else pool & found
            pool = sorted(c for c in pool or () if all(
                model.has_unary(a.pred, c) for a in atoms if len(a.args) == 1))
            if not pool:
                break
            pools[var] = pool
        else:
            for values in product(*(pools[v] for v in head_vars)):
                sigma = {X: x}
                sigma.update(zip(head_vars, values))
                yield sigma


def _all_constants(model: _Model) -> Set[Const]:
    found: Set[Const] = set()
    for atom in model.facts:
        found.update(atom.args)
    return found


def _premises(rule: DatalogRule, sigma: Dict[str, Const], model: _Model) -> Tuple[DAtom, ...]:
    bound = []
    for atom in rule.body:
        if all(not isinstance(a, str) or a in sigma for a in atom.args):
            bound.append(model.canon(_bind(atom, sigma)))
    return tuple(bound)


def _fire(rule: DatalogRule, model: _Model, naive_constants: Optional[List[Const]]) -> Tuple[List, List]:
    new_facts, equalities = [], []
    if naive_constants is not None:
        variables = sorted({a for atom in rule.body + rule.head for a in atom.args if isinstance(a, str)})
        matches = (dict(zip(variables, values)) for values in product(naive_constants, repeat=len(variables)))
        matches = (s for s in matches if all(model.canon(_bind(a, s)) in model.facts for a in rule.body))
    elif rule.label == "31":
        matches = _match_ht_body(rule, model)
    else:
        matches = _join(rule.body, model, {})
    for sigma in matches:
        premises = _premises(rule, sigma, model)
        for atom in rule.head:
            ground = _bind(atom, sigma)
            if ground.pred == EQUALS:
                if model.classes.find(ground.args[0]) != model.classes.find(ground.args[1]):
                    equalities.append((ground, rule.label, premises))
            elif model.canon(ground) not in model.facts:
                new_facts.append((ground, rule.label, premises))
    return new_facts, equalities


def _saturate(program: AcyclicityProgram, naive: bool = False) -> _Model:
    model = _Model()
    for fact in program.facts:
        if fact.pred != EQUALS:
            model.add(fact, "fact", ())
    pending = [(f, "fact", ()) for f in program.facts if f.pred == EQUALS]
    rounds = 0
    while True:
        merged = False
        for eq, label, premises in pending:
            if model.classes.union(*eq.args):
                logger.debug("Merged %s (%s)", eq, label)
                model.why.setdefault(eq, (label, premises))
                merged = True
        if merged:
            model.rebuild()
        constants = sorted({model.classes.find(c) for c in program.constants}) if naive else None
        found, pending = [], []
        for rule in program.rules:
            facts, eqs = _fire(rule, model, constants)
            found.extend(facts)
            pending.extend(eqs)
        added = sum(model.add(fact, label, premises) for fact, label, premises in found)
        rounds += 1
        if not added and not pending:
            break
    logger.debug("Fixpoint after %d rounds with %d facts", rounds, len(model.facts))
    return model


def fixpoint(program: AcyclicityProgram) -> Set[DAtom]:
    """All facts of the least fixpoint, over canonical representatives."""
    return set(_saturate(program).facts)


def naive_fixpoint(program: AcyclicityProgram) -> Set[DAtom]:
    """Fixpoint computed by grounding every rule over all constants; only for small programs."""
    return set(_saturate(program, naive=True).facts)


def _trace(model: _Model, goal: DAtom) -> List[str]:
    lines: List[str] = []
    seen: Set[DAtom] = set()

    def visit(atom: DAtom) -> None:
        atom = model.canon(atom) if atom.pred != EQUALS else atom
        if atom in seen:
            return
        seen.add(atom)
        label, premises = model.why.get(atom, ("fact", ()))
        for premise in premises:
            visit(premise)
        if premises:
            lines.append(f"{atom}  <= ({label}) {', '.join(str(p) for p in premises)}")
        else:
            lines.append(f"{atom}  <= {label}")

    visit(goal)
    return lines


def detect_harmful_cycle(program: AcyclicityProgram) -> CycleReport:
    """
    Compute the least fixpoint and look for Gamma-Desc(v, v) on a representative.

    Args:
        program: Datalog abstraction

    Returns:
        CycleReport with a witness and its derivation when a cycle exists
    """
    model = _saturate(program)
    for c in sorted(_all_constants(model)):
        if c not in model.succ(DESC, c):
            continue
        if not model.classes.bears_representative(c):
            continue
        witness = c if c.is_representative else min(
            m for m in model.classes.class_of(c) if m.is_representative)
        goal = DAtom(DESC, (c, c))
        logger.info("Harmful cycle through %s", witness)
        return CycleReport(False, witness, len(model.facts), _trace(model, goal))
    return CycleReport(True, None, len(model.facts))


def is_acyclic(rv: Sequence[HTRule], av: Sequence[Axiom], gamma: Signature, hidden: LogicProfile) -> CycleReport:
    return detect_harmful_cycle(build_acyclicity_program(rv, av, gamma, hidden))
