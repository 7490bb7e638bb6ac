from __future__ import annotations

import random
import re
from pathlib import Path
from typing import Dict, Optional, Sequence

import pytest

from modules.clausifier import clausify_alchiq
from modules.kb_parser import load_kb, load_signature, parse_kb
from modules.oracle import LocalOracle
from modules.syntax import KnowledgeBase, LogicProfile, Signature

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def load_fixture(*names: str):
    """Union of the named .dl fixtures."""
    return load_kb([fixture_path(name) for name in names])


def load_gamma(name: str):
    return load_signature(fixture_path(name))


def rules_of(text: str):
    """HT-rules and normalized ABox of an inline .dl document."""
    rules, abox, _ = clausify_alchiq(parse_kb(text))
    return rules, abox


def hidden_oracle(hidden: str, sig: str, oracle_type: str,
                  logic: Optional[str] = None) -> LocalOracle:
    profile = LogicProfile.from_name(logic) if logic else None
    return LocalOracle(load_fixture(hidden), load_gamma(sig), oracle_type, profile)


def direct_verdict(names: Sequence[str]) -> bool:
    """Satisfiability of the union of fixtures with the reference tableau."""
    from modules.tableau import check_sat

    rules, abox, _ = clausify_alchiq(load_fixture(*names))
    return check_sat(rules, abox).satisfiable


@pytest.fixture
def debug_invariants(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr("config.settings.DEBUG_INVARIANTS", True)


# ---------------------------------------------------------------------------
# Random knowledge bases
# ---------------------------------------------------------------------------

HORN_TEMPLATES = [
    "{0} sub {1}",
    "{0} sub some {r} {1}",
    "{0} sub all {r} {1}",
    "({0} and {1}) sub {2}",
    "some {r} {0} sub {1}",
    "{0} sub not {1}",
    "({0} and {1}) sub bot",
    "{0} sub max 1 {r} top",
]
EL_TEMPLATES = [
    "{0} sub {1}",
    "{0} sub some {r} {1}",
    "({0} and {1}) sub {2}",
    "some {r} {0} sub {1}",
    "({0} and {1}) sub bot",
]


def random_tbox(rng: random.Random, size: int, templates: Sequence[str],
                concepts: Sequence[str], roles: Sequence[str]) -> str:
    lines = []
    for _ in range(size):
        names = rng.sample(list(concepts), 3)
        lines.append(rng.choice(templates).format(*names, r=rng.choice(list(roles))) + ".\n")
    return "".join(lines)


def random_abox(rng: random.Random, concepts: Sequence[str], roles: Sequence[str]) -> str:
    lines = [f"{rng.choice(list(concepts))}(a).\n"]
    if rng.random() < 0.5:
        lines.append(f"{rng.choice(list(roles))}(a,b).\n")
        lines.append(f"{rng.choice(list(concepts))}(b).\n")
    return "".join(lines)


def random_gamma(rng: random.Random, concepts: Sequence[str], roles: Sequence[str]) -> Signature:
    return Signature(frozenset(rng.sample(list(concepts), rng.randint(1, len(concepts)))),
                     frozenset(rng.sample(list(roles), rng.randint(1, len(roles)))))


def rename_symbols(text: str, mapping: Dict[str, str]) -> str:
    return re.sub(r"\b[A-Za-z][A-Za-z0-9_]*\b", lambda m: mapping.get(m.group(0), m.group(0)), text)


def random_hidden(rng: random.Random, size: int, templates: Sequence[str], concepts: Sequence[str],
                  roles: Sequence[str], gamma: Signature) -> KnowledgeBase:
    """Hidden TBox whose symbols outside gamma cannot meet the visible ones."""
    private = {name: f"H{name}" for name in concepts if name not in gamma.concepts}
    private.update({name: f"H{name}" for name in roles if name not in gamma.roles})
    return parse_kb(rename_symbols(random_tbox(rng, size, templates, concepts, roles), private))
