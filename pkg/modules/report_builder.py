"""
Generate plain-text reports for admissibility checks and reasoning runs

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

from typing import Dict, Iterable, List, Optional

from modules.acyclicity import CycleReport
from modules.admissibility import SafetyReport
from modules.clausifier import render_rules
from modules.tableau import DerivationABox
from utils.formatters import format_assignment, format_stats, format_symbols, section


def generate_safety_report(report: SafetyReport) -> str:
    """
    Render a safety check.

    Args:
        report: Result of check_safety

    Returns:
        Formatted text report
    """
    lines = section(f"SAFETY ({report.mode.upper()})")
    lines.append(f"Verdict: {report.verdict.value}")
    if report.reason:
        lines.append(f"Reason: {report.reason}")
    lines.append(f"Safe concepts: {format_symbols(report.safe_set)}")
    lines.append(f"Modularity: {report.modularity.value}")

    if report.assignment is not None:
        lines.append(f"Assignment: {format_assignment(report.assignment)}")

    if report.guard_violations:
        lines.append("")
        lines.append("Guard violations:")
        for violation in report.guard_violations:
            lines.append(f"  • {violation}")

    if report.refuting_rule is not None:
        lines.append(f"Refuting rule: {report.refuting_rule}")

    lines.append("")
    lines.append("Reduct:")
    reduct_text = render_rules(report.reduct)
    lines.extend(f"  {line}" for line in reduct_text.splitlines() or ["(empty)"])
    return "\n".join(lines)


def generate_cycle_report(report: CycleReport) -> str:
    """
    Render an acyclicity check, including the derivation of the cycle if any.
    """
    lines = section("ACYCLICITY")
    lines.append(f"Verdict: {'acyclic' if report.acyclic else 'harmful cycle'}")
    lines.append(f"Derived facts: {report.fact_count}")
    if not report.acyclic:
        lines.append(f"Witness: {report.witness}")
        if report.trace:
            lines.append("")
            lines.append("Derivation:")
            lines.extend(f"  {step}" for step in report.trace)
    return "\n".join(lines)


def generate_admissibility_report(safety: SafetyReport, cycle: Optional[CycleReport]) -> str:
    parts = [generate_safety_report(safety)]
    if cycle is not None:
        parts.append(generate_cycle_report(cycle))
    return "\n\n".join(parts)


def generate_stats_lines(stats: Dict[str, int]) -> List[str]:
    """Machine-readable key=value lines for --stats."""
    return format_stats(stats)


def generate_leaf_dump(leaf: Optional[DerivationABox], limit: Optional[int] = None) -> str:
    """
    Render the assertions of a final ABox, one per line.

    Args:
        leaf: Clash-free leaf of a derivation
        limit: Print at most this many assertions

    Returns:
        Text dump
    """
    if leaf is None:
        return "(no leaf)"
    assertions: Iterable = leaf.assertions()
    rendered = sorted(str(a) for a in assertions)
    if limit is not None and len(rendered) > limit:
        hidden = len(rendered) - limit
        rendered = rendered[:limit] + [f"... {hidden} more"]
    return "\n".join(rendered)
