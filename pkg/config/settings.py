"""
Application configuration and constants

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

import os

from dotenv import load_dotenv

load_dotenv()


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or not value.strip():
        return default
    try:
        return int(value)
    except ValueError:
        return default


def _env_flag(name: str, default: bool = False) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in ('1', 'true', 'yes', 'on')


# App metadata
APP_TITLE = "Import-by-Query Reasoner"
APP_NAME = "ibq"
APP_DESCRIPTION = "Satisfiability of a visible knowledge base combined with a hidden TBox reachable only through an oracle"
PROTOCOL_VERSION = "1"
GRAMMAR_VERSION = "1"

# File settings
MAX_FILE_SIZE_MB = 16
KB_EXTENSIONS = ['dl']
SIGNATURE_EXTENSIONS = ['sig']

# Reasoner limits
MAX_NODES = _env_int('IBQ_MAX_NODES', 20000)
MAX_SECONDS = _env_int('IBQ_MAX_SECONDS', 120)
MODULARITY_EXHAUSTIVE_LIMIT = _env_int('IBQ_MODULARITY_EXHAUSTIVE_LIMIT', 20)
BRUTE_FORCE_TIMEOUT_MS = _env_int('IBQ_BRUTE_FORCE_TIMEOUT_MS', 10000)
DEBUG_INVARIANTS = _env_flag('IBQ_DEBUG_INVARIANTS')

# Wire protocol
MAX_LINE_BYTES = _env_int('IBQ_MAX_LINE_BYTES', 1024 * 1024)
DEFAULT_LISTEN = "127.0.0.1:7070"
SOCKET_TIMEOUT_SECONDS = 60

# Logging
LOG_LEVEL = os.getenv('IBQ_LOG_LEVEL', 'WARNING').upper()
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# Fresh-name prefixes (never valid identifiers in .dl files)
FRESH_PREFIX = "_q"
MODAL_PREFIX = "_x"
QUERY_PREFIX = "_e"
QUERY_INDIVIDUAL = "a0"

# Logic header keywords
LOGIC_NAMES = [
    'el', 'fl0', 'alc', 'alch', 'alci', 'alcq',
    'alchi', 'alchq', 'alciq', 'alchiq', 'horn-alchiq',
]

# Oracle types
ORACLE_TYPES = ['csat', 'asat', 'aent']

# Engine modes exposed on the command line
MODE_CHOICES = {
    'auto': 'Pick from the visible/hidden logics and the oracle type',
    'alchiq-a': 'ALCHIQ algorithm with cut rules over an ABox satisfiability oracle',
    'horn-e': 'Horn-ALCHIQ algorithm over an ABox entailment oracle',
    'el-e': 'EL algorithm over an ABox entailment oracle',
}

# Exit codes
EXIT_CODES = {
    'ok': 0,
    'sat': 0,
    'entailed': 0,
    'admissible': 0,
    'unsat': 1,
    'not_entailed': 1,
    'inadmissible': 2,
    'unknown': 3,
    'usage': 64,
    'parse': 65,
    'internal': 70,
}
