"""
Parse .dl knowledge bases and .sig signature files

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

from lark import Lark, Transformer, Tree
from lark.exceptions import UnexpectedEOF, UnexpectedInput, VisitError

from config.settings import LOGIC_NAMES
from modules.errors import BadSyntax, DuplicateDeclaration, UnsupportedConstruct
from modules.syntax import (
    FALSUM, TOP, BOTTOM, And, AtLeast, AtMost, Atomic, Axiom, Bottom, Concept,
    ConceptAssertion, ConceptIncl, Eq, Exists, ForAll, Individual, KnowledgeBase,
    LogicProfile, Neq, NegRoleAssertion, Not, Or, Role, RoleAssertion, RoleIncl,
    Signature, Top,
)
from utils.validators import validate_kb_file, validate_signature_file

logger = logging.getLogger(__name__)

dl_grammar = r"""
    start: _statement*
    _statement: header | declaration | axiom_stmt | assertion_stmt

    header: "logic" LOGIC "."
    declaration: DECL_KIND NAME "."
    axiom_stmt: axiom "."
    assertion_stmt: assertion "."

    ?axiom: concept "sub" concept       -> concept_incl
          | concept "equiv" concept     -> concept_equiv
          | role "rsub" role            -> role_incl

    ?assertion: concept "(" NAME ")"                  -> concept_assertion
              | role "(" NAME "," NAME ")"            -> role_assertion
              | "not" role "(" NAME "," NAME ")"      -> neg_role_assertion
              | NAME "=" NAME                         -> equality
              | NAME "!=" NAME                        -> inequality

    concept_query: concept
    axiom_query: axiom
    assertion_list: [_assertion_item (";" _assertion_item)*]
    _assertion_item: assertion | falsum
    falsum: "FALSUM"

    ?concept: "top"                          -> top
            | "bot"                          -> bot
            | NAME                           -> atomic
            | "not" concept                  -> negation
            | "(" concept "and" concept ")"  -> conjunction
            | "(" concept "or" concept ")"   -> disjunction
            | "(" concept ")"
            | "some" role concept            -> some
            | "all" role concept             -> only
            | "min" INT role concept         -> at_least
            | "max" INT role concept         -> at_most

    role: NAME          -> role_name
        | "inv" NAME    -> inverse_role

    DECL_KIND: "concept" | "role" | "nominal" | "individual"
    LOGIC: /horn-[a-z0-9]+|[a-z0-9]+/
    NAME: /(?!(?:top|bot|not|and|or|some|all|min|max|inv|sub|equiv|rsub|logic|concept|role|nominal|individual|FALSUM|ENTAILS)\b)[A-Za-z][A-Za-z0-9_]*/
    COMMENT: /#[^\n]*/

    %import common.INT
    %import common.WS
    %ignore WS
    %ignore COMMENT
"""


class DLParser:
    """Earley parser for the .dl language; one instance serves every entry point."""

    def __init__(self):
        self.parser = Lark(
            dl_grammar,
            start=['start', 'concept_query', 'axiom_query', 'assertion_list'],
            parser='earley',
            propagate_positions=True,
        )

    def parse(self, text: str, start: str = 'start') -> Tree:
        try:
            return self.parser.parse(text, start=start)
        except UnexpectedEOF as e:
            lines = text.splitlines() or ['']
            raise BadSyntax("unexpected end of input", len(lines), len(lines[-1]) + 1,
                            list(getattr(e, 'expected', []) or [])) from None
        except UnexpectedInput as e:
            expected = getattr(e, 'expected', None) or getattr(e, 'allowed', None) or []
            raise BadSyntax("unexpected input", getattr(e, 'line', 0) or 0,
                            getattr(e, 'column', 0) or 0, list(expected)) from None


_parser: Optional[DLParser] = None


def get_parser() -> DLParser:
    global _parser
    if _parser is None:
        _parser = DLParser()
    return _parser


class _Namespaces:
    """Tracks which namespace each name lives in."""

    def __init__(self, nominals: Set[str]):
        self.nominals = nominals
        self.kinds: Dict[str, str] = {}

    def use(self, name: str, kind: str) -> None:
        known = self.kinds.setdefault(name, kind)
        if known != kind:
            raise DuplicateDeclaration(f"'{name}' used as both {known} and {kind}")


class _KBBuilder(Transformer):

    def __init__(self, namespaces: _Namespaces):
        super().__init__()
        self.ns = namespaces

    # Concepts
    def top(self, _):
        return TOP

    def bot(self, _):
        return BOTTOM

    def atomic(self, children):
        name = str(children[0])
        self.ns.use(name, 'concept')
        return Atomic(name, name in self.ns.nominals)

    def negation(self, children):
        return Not(children[0])

    def conjunction(self, children):
        return And(children[0], children[1])

    def disjunction(self, children):
        return Or(children[0], children[1])

    def some(self, children):
        return Exists(children[0], children[1])

    def only(self, children):
        return ForAll(children[0], children[1])

    def at_least(self, children):
        return AtLeast(int(children[0]), children[1], children[2])

    def at_most(self, children):
        return AtMost(int(children[0]), children[1], children[2])

    # Roles and individuals
    def role_name(self, children):
        name = str(children[0])
        self.ns.use(name, 'role')
        return Role(name)

    def inverse_role(self, children):
        name = str(children[0])
        self.ns.use(name, 'role')
        return Role(name, True)

    def _individual(self, token) -> Individual:
        name = str(token)
        self.ns.use(name, 'individual')
        return Individual(name)

    # Axioms
    def concept_incl(self, children):
        return [ConceptIncl(children[0], children[1])]

    def concept_equiv(self, children):
        left, right = children
        return [ConceptIncl(left, right), ConceptIncl(right, left)]

    def role_incl(self, children):
        return [RoleIncl(children[0], children[1])]

    def concept_assertion(self, children):
        return [ConceptAssertion(children[0], self._individual(children[1]))]

    def role_assertion(self, children):
        role, source, target = children
        return [RoleAssertion(role, self._individual(source), self._individual(target))]

    def neg_role_assertion(self, children):
        role, source, target = children
        return [NegRoleAssertion(role, self._individual(source), self._individual(target))]

    def equality(self, children):
        return [Eq(self._individual(children[0]), self._individual(children[1]))]

    def inequality(self, children):
        return [Neq(self._individual(children[0]), self._individual(children[1]))]

    def falsum(self, _):
        return [FALSUM]

    # Statements
    def axiom_stmt(self, children):
        return children[0]

    def assertion_stmt(self, children):
        return children[0]

    def header(self, children):
        return ('header', str(children[0]))

    def declaration(self, children):
        kind, name = str(children[0]), str(children[1])
        namespace = 'concept' if kind in ('concept', 'nominal') else kind
        self.ns.use(name, namespace)
        return ('declaration', kind, name)

    def concept_query(self, children):
        return children[0]

    def axiom_query(self, children):
        return children[0]

    def assertion_list(self, children):
        return [a for group in children if group for a in group]


def _collect_nominals(tree: Tree) -> Set[str]:
    nominals = set()
    for decl in tree.find_data('declaration'):
        kind, name = str(decl.children[0]), str(decl.children[1])
        if kind == 'nominal':
            nominals.add(name)
    return nominals


def _transform(tree: Tree, nominals: Optional[Set[str]] = None):
    builder = _KBBuilder(_Namespaces(nominals if nominals is not None else _collect_nominals(tree)))
    try:
        return builder.transform(tree)
    except VisitError as e:
        raise e.orig_exc from None


def parse_kb(text: str) -> KnowledgeBase:
    """
    Parse a .dl document into a knowledge base.

    Args:
        text: UTF-8 document text

    Returns:
        KnowledgeBase with sugar preserved; declared_logic from the header
        when present, otherwise the inferred minimal profile
    """
    tree = get_parser().parse(text)
    statements = _transform(tree).children

    tbox: List[Axiom] = []
    abox: List[Axiom] = []
    declarations: Set[Tuple[str, str]] = set()
    header: Optional[str] = None

    for statement in statements:
        if isinstance(statement, tuple) and statement[0] == 'header':
            if header is not None:
                raise DuplicateDeclaration("logic header given twice")
            header = statement[1]
            if header not in LOGIC_NAMES:
                raise BadSyntax(f"unknown logic '{header}'", expected=LOGIC_NAMES)
        elif isinstance(statement, tuple) and statement[0] == 'declaration':
            decl = (statement[1], statement[2])
            if decl in declarations or any(name == decl[1] for _, name in declarations):
                raise DuplicateDeclaration(f"'{decl[1]}' declared twice")
            declarations.add(decl)
        else:
            for axiom in statement:
                if isinstance(axiom, (ConceptIncl, RoleIncl)):
                    tbox.append(axiom)
                else:
                    abox.append(axiom)

    kb = KnowledgeBase(tbox=frozenset(tbox), abox=frozenset(abox),
                       logic_header=header, declarations=frozenset(declarations))
    profile = LogicProfile.from_name(header) if header else infer_profile(kb)
    return KnowledgeBase(tbox=kb.tbox, abox=kb.abox, declared_logic=profile,
                         logic_header=header, declarations=kb.declarations)


def parse_concept(text: str) -> Concept:
    return _transform(get_parser().parse(text, start='concept_query'), set())


def parse_axiom(text: str) -> Axiom:
    """Parse a single axiom such as 'C sub D' (no trailing period)."""
    axioms = _transform(get_parser().parse(text.strip().rstrip('.'), start='axiom_query'), set())
    if len(axioms) != 1:
        raise BadSyntax("expected a single inclusion")
    return axioms[0]


def parse_assertions(text: str) -> List[Axiom]:
    """Parse ';'-separated assertions; FALSUM is accepted as an item."""
    return _transform(get_parser().parse(text, start='assertion_list'), set())


def parse_signature(text: str) -> Signature:
    """
    Parse a .sig file: one 'concept NAME' or 'role NAME' per line.

    Args:
        text: Signature file content

    Returns:
        Signature
    """
    concepts: Set[str] = set()
    roles: Set[str] = set()
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] not in ('concept', 'role'):
            raise BadSyntax(f"bad signature line '{line}'", number, 1, ['concept NAME', 'role NAME'])
        kind, name = parts
        if not (name[0].isalpha() and all(ch.isalnum() or ch == '_' for ch in name)):
            raise BadSyntax(f"bad identifier '{name}'", number, len(parts[0]) + 2)
        target, other = (concepts, roles) if kind == 'concept' else (roles, concepts)
        if name in target or name in other:
            raise DuplicateDeclaration(f"'{name}' listed twice in signature")
        target.add(name)
    return Signature(frozenset(concepts), frozenset(roles))


def _read(path: Union[str, Path], validator) -> str:
    is_valid, error_message = validator(path)
    if not is_valid:
        raise FileNotFoundError(error_message)
    return Path(path).read_text(encoding='utf-8')


def load_kb(paths: Union[str, Path, Sequence[Union[str, Path]]]) -> KnowledgeBase:
    """
    Load one or more .dl files; several files are unioned.

    Args:
        paths: File path or list of paths

    Returns:
        KnowledgeBase
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    kbs = [parse_kb(_read(path, validate_kb_file)) for path in paths]
    if not kbs:
        return KnowledgeBase()
    kb = kbs[0]
    for other in kbs[1:]:
        merged = kb.union(other)
        # Disagreeing headers resolve to their join
        kb = KnowledgeBase(tbox=merged.tbox, abox=merged.abox,
                           declared_logic=kb.declared_logic.join(other.declared_logic),
                           declarations=merged.declarations)
    logger.info("Loaded %d axioms from %d file(s)", len(kb.tbox) + len(kb.abox), len(kbs))
    return kb


def load_signature(path: Union[str, Path]) -> Signature:
    return parse_signature(_read(path, validate_signature_file))


# ---------------------------------------------------------------------------
# Profile inference
# ---------------------------------------------------------------------------

def walk_concept(concept: Concept) -> Iterable[Concept]:
    stack = [concept]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Not):
            stack.append(node.operand)
        elif isinstance(node, (And, Or)):
            stack.extend((node.left, node.right))
        elif isinstance(node, (Exists, ForAll, AtLeast, AtMost)):
            stack.append(node.filler)


def _is_el_concept(concept: Concept) -> bool:
    for node in walk_concept(concept):
        if isinstance(node, (Top, Bottom, And)):
            continue
        if isinstance(node, Atomic) and not node.is_nominal:
            continue
        if isinstance(node, Exists) and not node.role.inverted:
            continue
        if isinstance(node, AtLeast) and node.n == 1 and not node.role.inverted:
            continue
        return False
    return True


def _is_fl0_concept(concept: Concept) -> bool:
    for node in walk_concept(concept):
        if isinstance(node, (Top, And)):
            continue
        if isinstance(node, Atomic) and not node.is_nominal:
            continue
        if isinstance(node, ForAll) and not node.role.inverted:
            continue
        return False
    return True


def infer_profile(kb: KnowledgeBase) -> LogicProfile:
    """
    Compute the minimal logic profile of a knowledge base.

    The horn flag is decided by clausifying: the KB is Horn when every
    produced rule has at most one head atom.
    """
    concepts: List[Concept] = []
    el = fl0 = True
    hierarchies = False
    for axiom in kb.tbox | kb.abox:
        if isinstance(axiom, ConceptIncl):
            concepts += [axiom.sub, axiom.sup]
        elif isinstance(axiom, RoleIncl):
            hierarchies = True
            el = fl0 = False
        elif isinstance(axiom, ConceptAssertion):
            concepts.append(axiom.concept)
        elif isinstance(axiom, RoleAssertion):
            pass
        else:
            el = fl0 = False

    nominals = inverses = cardinalities = False
    for concept in concepts:
        for node in walk_concept(concept):
            if isinstance(node, Atomic) and node.is_nominal:
                nominals = True
            elif isinstance(node, (Exists, ForAll, AtLeast, AtMost)):
                if node.role.inverted:
                    inverses = True
                if isinstance(node, AtLeast) and node.n >= 2:
                    cardinalities = True
                if isinstance(node, AtMost) and node.n >= 1:
                    cardinalities = True
        el = el and _is_el_concept(concept)
        fl0 = fl0 and _is_fl0_concept(concept)

    if el:
        return LogicProfile(horn=True, el=True)

    horn = False
    if not nominals:
        from modules.clausifier import clausify_alchiq

        try:
            rules, _, _ = clausify_alchiq(kb)
            horn = all(len(rule.head) <= 1 for rule in rules)
        except UnsupportedConstruct:
            horn = False

    if fl0:
        return LogicProfile(fl0=True, horn=horn)
    return LogicProfile(nominals=nominals, inverses=inverses, hierarchies=hierarchies,
                        cardinalities=cardinalities, horn=horn)
