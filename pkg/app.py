"""
Import-by-Query Reasoner - Command-line application

Reason over a visible knowledge base together with a hidden TBox that is
reachable only through a satisfiability or entailment oracle.

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

import logging
import sys
from typing import List, Optional, Sequence

import click

from version import __version__
from config.settings import (
    APP_DESCRIPTION, APP_NAME, DEFAULT_LISTEN, EXIT_CODES, GRAMMAR_VERSION, LOG_FORMAT,
    LOG_LEVEL, LOGIC_NAMES, MAX_NODES, MAX_SECONDS, MODE_CHOICES, ORACLE_TYPES, PROTOCOL_VERSION,
)
from modules.clausifier import clausify_alchiq, clausify_el, render_fresh_names, render_rules
from modules.el_tableau import check_sat_el
from modules.errors import (
    IbqError, Inadmissible, NoViableMode, ParseError, ResourceLimit,
)
from modules.gamma_modal import gamma_modal_rewrite
from modules.ibq_engine import (
    IbqMode, IbqOutcome, admissibility_problem, check_admissibility, entails, solve,
)
from modules.admissibility import Verdict
from modules.kb_parser import load_kb, load_signature, parse_axiom
from modules.net import connect, serve
from modules.oracle import OracleHandle, local_oracle
from modules.report_builder import (
    generate_admissibility_report, generate_leaf_dump, generate_stats_lines,
)
from modules.syntax import ConceptIncl, LogicProfile
from modules.tableau import check_sat
from utils.formatters import truncate_text
from utils.validators import validate_listen_address

logger = logging.getLogger(APP_NAME)

EPILOG = f"Grammar version {GRAMMAR_VERSION}, wire protocol version {PROTOCOL_VERSION}."


# ---------------------------------------------------------------------------
# Shared options
# ---------------------------------------------------------------------------

def oracle_options(command):
    """Options that name the hidden TBox or a served oracle."""
    options = [
        click.option('--hidden', type=click.Path(exists=True, dir_okay=False),
                     help="Hidden TBox (.dl), queried through a local oracle"),
        click.option('--oracle', 'oracle_address', metavar='tcp:HOST:PORT',
                     help="Served oracle to connect to instead of --hidden"),
        click.option('--gamma', type=click.Path(exists=True, dir_okay=False),
                     help="Public signature (.sig); read from the server with --oracle"),
        click.option('--oracle-type', type=click.Choice(['auto'] + ORACLE_TYPES), default='auto',
                     show_default=True, help="Query type of the local oracle"),
        click.option('--mode', type=click.Choice(list(MODE_CHOICES)), default='auto', show_default=True,
                     help="; ".join(f"{k}: {v}" for k, v in MODE_CHOICES.items())),
        click.option('--assume-admissible', is_flag=True,
                     help="Run even when the admissibility checks fail"),
        click.option('--stats', is_flag=True, help="Print key=value counters after the answer"),
        click.option('--max-nodes', type=click.IntRange(min=1), default=MAX_NODES, show_default=True),
        click.option('--max-seconds', type=click.FloatRange(min=0, min_open=True), default=MAX_SECONDS,
                     show_default=True),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def open_oracle(hidden: Optional[str], oracle_address: Optional[str], gamma_path: Optional[str],
                oracle_type: str, mode: Optional[IbqMode]) -> OracleHandle:
    """
    Build a local oracle over --hidden or connect to --oracle.

    Raises:
        click.UsageError: when the options do not name exactly one oracle
    """
    if bool(hidden) == bool(oracle_address):
        raise click.UsageError("give exactly one of --hidden and --oracle")

    if oracle_address:
        handle = connect(oracle_address)
        if gamma_path and load_signature(gamma_path) != handle.gamma:
            raise click.UsageError("--gamma differs from the signature the server advertises")
        return handle

    if not gamma_path:
        raise click.UsageError("--gamma is required with --hidden")
    hidden_kb = load_kb(hidden)
    if oracle_type == 'auto':
        if mode is not None:
            oracle_type = mode.oracle_type
        else:
            oracle_type = 'aent' if hidden_kb.declared_logic.horn else 'asat'
    try:
        return local_oracle(hidden_kb, load_signature(gamma_path), oracle_type)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--hidden") from None


def _close(handle: OracleHandle) -> None:
    close = getattr(handle, 'close', None)
    if close is not None:
        close()


def _notice_if_forced(outcome: IbqOutcome) -> None:
    problem = admissibility_problem(outcome.safety, outcome.cycle) if outcome.safety else None
    if problem:
        click.echo(f"warning: input not known to be admissible ({problem})", err=True)


def _print_stats(stats: dict) -> None:
    for line in generate_stats_lines(stats):
        click.echo(line)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@click.group(name=APP_NAME, help=APP_DESCRIPTION, epilog=EPILOG)
@click.option('-v', '--verbose', is_flag=True, help="Log at DEBUG level on stderr")
@click.version_option(__version__, prog_name=APP_NAME)
def cli(verbose: bool):
    logging.basicConfig(level=logging.DEBUG if verbose else LOG_LEVEL, format=LOG_FORMAT, stream=sys.stderr)
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)


@cli.command('check-sat', epilog=EPILOG)
@click.option('--visible', required=True, multiple=True, type=click.Path(exists=True, dir_okay=False))
@oracle_options
@click.option('--dump-leaf', is_flag=True, help="Print the final ABox of a satisfiable run")
def check_sat_command(visible, hidden, oracle_address, gamma, oracle_type, mode, assume_admissible,
                      stats, max_nodes, max_seconds, dump_leaf) -> int:
    """Decide satisfiability of the visible KB together with the hidden TBox."""
    ibq_mode = IbqMode.from_name(mode)
    handle = open_oracle(hidden, oracle_address, gamma, oracle_type, ibq_mode)
    try:
        outcome = solve(load_kb(list(visible)), handle.gamma, handle, ibq_mode, assume_admissible,
                        max_nodes=max_nodes, max_seconds=max_seconds)
    finally:
        _close(handle)

    _notice_if_forced(outcome)
    click.echo(outcome.result.verdict)
    if dump_leaf and outcome.satisfiable:
        click.echo(generate_leaf_dump(outcome.result.leaf))
    if stats:
        _print_stats(outcome.stats())
    return EXIT_CODES['sat'] if outcome.satisfiable else EXIT_CODES['unsat']


@cli.command('entails', epilog=EPILOG)
@click.option('--visible', required=True, multiple=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--query', required=True, help='Concept inclusion, e.g. "A sub B"')
@oracle_options
def entails_command(visible, query, hidden, oracle_address, gamma, oracle_type, mode, assume_admissible,
                    stats, max_nodes, max_seconds) -> int:
    """Decide whether the visible KB plus the hidden TBox entails a concept inclusion."""
    axiom = parse_axiom(query)
    if not isinstance(axiom, ConceptIncl):
        raise click.BadParameter("expected a concept inclusion 'C sub D'", param_hint="--query")

    ibq_mode = IbqMode.from_name(mode)
    handle = open_oracle(hidden, oracle_address, gamma, oracle_type, ibq_mode)
    try:
        outcome = entails(load_kb(list(visible)), handle.gamma, handle, axiom.sub, axiom.sup, ibq_mode,
                          assume_admissible, max_nodes=max_nodes, max_seconds=max_seconds)
    finally:
        _close(handle)

    _notice_if_forced(outcome)
    entailed = not outcome.satisfiable
    click.echo("ENTAILED" if entailed else "NOT ENTAILED")
    if stats:
        _print_stats(outcome.stats())
    return EXIT_CODES['entailed'] if entailed else EXIT_CODES['not_entailed']


@cli.command('direct-sat', epilog=EPILOG)
@click.option('--kb', 'kbs', required=True, multiple=True, type=click.Path(exists=True, dir_okay=False),
              help="Knowledge base; repeat to reason over the union")
@click.option('--el', 'use_el', is_flag=True, help="Use the EL engine")
@click.option('--stats', is_flag=True)
@click.option('--max-nodes', type=click.IntRange(min=1), default=MAX_NODES, show_default=True)
@click.option('--max-seconds', type=click.FloatRange(min=0, min_open=True), default=MAX_SECONDS,
              show_default=True)
def direct_sat_command(kbs, use_el, stats, max_nodes, max_seconds) -> int:
    """Decide satisfiability of the union of knowledge bases with the reference tableau."""
    kb = load_kb(list(kbs))
    if use_el:
        if not kb.declared_logic.el:
            raise click.UsageError("--el needs knowledge bases within EL")
        rules, abox, _ = clausify_el(kb)
        result, _ = check_sat_el(rules, abox, max_nodes, max_seconds)
    else:
        rules, abox, _ = clausify_alchiq(kb)
        result = check_sat(rules, abox, max_nodes=max_nodes, max_seconds=max_seconds)

    click.echo(result.verdict)
    if stats:
        _print_stats(result.stats.as_dict())
    return EXIT_CODES['sat'] if result.satisfiable else EXIT_CODES['unsat']


@cli.command('check-admissible', epilog=EPILOG)
@click.option('--visible', required=True, multiple=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--gamma', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--hidden-logic', type=click.Choice(LOGIC_NAMES), default='alchiq', show_default=True)
@click.option('--mode', 'safety_mode', type=click.Choice(['ht', 'el']), default='ht', show_default=True,
              help="ht: HT-safety and acyclicity; el: EL-safety")
def check_admissible_command(visible, gamma, hidden_logic, safety_mode) -> int:
    """Check that the visible KB may be combined with any hidden TBox over the signature."""
    rewritten, extended, _ = gamma_modal_rewrite(load_kb(list(visible)), load_signature(gamma))
    if safety_mode == 'el':
        rv, av, _ = clausify_el(rewritten)
        engine_mode = IbqMode.EL_OMEGA_E
    else:
        rv, av, _ = clausify_alchiq(rewritten)
        engine_mode = IbqMode.ALCHIQ_OMEGA_A
    safety, cycle = check_admissibility(rv, av, extended, LogicProfile.from_name(hidden_logic), engine_mode)

    if safety.verdict is Verdict.INADMISSIBLE or (cycle is not None and not cycle.acyclic):
        verdict, code = "INADMISSIBLE", EXIT_CODES['inadmissible']
    elif safety.verdict is Verdict.UNKNOWN:
        verdict, code = "UNKNOWN", EXIT_CODES['unknown']
    else:
        verdict, code = "ADMISSIBLE", EXIT_CODES['admissible']
    click.echo(verdict)
    click.echo(generate_admissibility_report(safety, cycle))
    return code


@cli.command('clausify', epilog=EPILOG)
@click.option('--kb', 'kbs', required=True, multiple=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--el', 'use_el', is_flag=True, help="Produce EL-rules")
@click.option('--show-fresh', is_flag=True, help="Also print what each fresh name stands for")
def clausify_command(kbs, use_el, show_fresh) -> int:
    """Print the HT-rules of a knowledge base."""
    kb = load_kb(list(kbs))
    rules, _, fresh = (clausify_el if use_el else clausify_alchiq)(kb)
    if rules:
        click.echo(render_rules(rules))
    if show_fresh and fresh:
        click.echo("")
        click.echo(render_fresh_names(fresh))
    return EXIT_CODES['ok']


@cli.command('serve', epilog=EPILOG)
@click.option('--hidden', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--gamma', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--type', 'oracle_type', type=click.Choice(ORACLE_TYPES), default='asat', show_default=True)
@click.option('--listen', default=DEFAULT_LISTEN, show_default=True, metavar='HOST:PORT')
def serve_command(hidden, gamma, oracle_type, listen) -> int:
    """Answer oracle queries over the hidden TBox on a TCP port until interrupted."""
    is_valid, error_message = validate_listen_address(listen)
    if not is_valid:
        raise click.BadParameter(error_message, param_hint="--listen")

    handle = local_oracle(load_kb(hidden), load_signature(gamma), oracle_type)
    server = serve(handle, listen)
    click.echo(f"listening on {server.address[0]}:{server.address[1]}")
    try:
        server.wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return EXIT_CODES['ok']


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line and map every outcome to an exit code.

    Args:
        argv: Arguments without the program name; sys.argv[1:] when None

    Returns:
        Exit code
    """
    args: List[str] = list(sys.argv[1:] if argv is None else argv)
    try:
        code = cli.main(args=args, prog_name=APP_NAME, standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_CODES['usage']
    except click.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_CODES['internal']
    except FileNotFoundError as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_CODES['usage']
    except ParseError as e:
        click.echo(f"parse error: {e}", err=True)
        return EXIT_CODES['parse']
    except Inadmissible as e:
        click.echo(f"inadmissible: {truncate_text(str(e), 400)}", err=True)
        return EXIT_CODES['inadmissible']
    except (ResourceLimit, NoViableMode) as e:
        click.echo(f"unknown: {e}", err=True)
        return EXIT_CODES['unknown']
    except IbqError as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_CODES['internal']
    except Exception:
        logger.exception("Unexpected failure")
        return EXIT_CODES['internal']
    return code if isinstance(code, int) else EXIT_CODES['ok']


if __name__ == "__main__":
    sys.exit(run_cli())
