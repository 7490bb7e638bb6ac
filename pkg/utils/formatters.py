"""
Text formatting utilities for reports and --stats output

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

from typing import Dict, Iterable, List

RULE_WIDTH = 60

# --stats keys in output order; anything else follows alphabetically
STATS_ORDER = ['queries', 'distinct_queries', 'max_query_size', 'branches', 'rule_apps', 'individuals']


def section(title: str) -> List[str]:
    """
    Start a report section.

    Args:
        title: Section heading

    Returns:
        List of lines to extend
    """
    return [title, "-" * RULE_WIDTH]


def format_symbols(names: Iterable[str]) -> str:
    names = sorted(names)
    return ", ".join(names) if names else "(none)"


def format_assignment(assignment: Dict[str, bool]) -> str:
    """
    Format an empty/everything interpretation of private symbols.

    Args:
        assignment: Symbol to True (everything) or False (empty)

    Returns:
        e.g. "A=everything, R=empty"
    """
    if not assignment:
        return "(no private symbols)"
    return ", ".join(f"{name}={'everything' if value else 'empty'}"
                     for name, value in sorted(assignment.items()))


def format_stats(stats: Dict[str, int]) -> List[str]:
    """
    Format counters as key=value lines.

    Args:
        stats: Counter name to value

    Returns:
        Lines in a stable order
    """
    keys = [k for k in STATS_ORDER if k in stats]
    keys += sorted(k for k in stats if k not in STATS_ORDER)
    return [f"{key}={stats[key]}" for key in keys]


def truncate_text(text: str, max_length: int = 100, suffix: str = "...") -> str:
    """
    Truncate text to maximum length.

    Args:
        text: Text to truncate
        max_length: Maximum length
        suffix: Suffix to add if truncated

    Returns:
        Truncated text
    """
    if len(text) <= max_length:
        return text

    return text[:max_length - len(suffix)] + suffix
