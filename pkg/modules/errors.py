"""
Exception hierarchy shared by all reasoner modules

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

from typing import Any, List, Optional


class IbqError(Exception):
    """Base class for every error raised by the reasoner."""

    wire_code = "INTERNAL"


class ParseError(IbqError):
    wire_code = "BAD_SYNTAX"


class BadSyntax(ParseError):
    """Text does not conform to the .dl grammar."""

    def __init__(self, message: str, line: int = 0, column: int = 0,
                 expected: Optional[List[str]] = None):
        self.line = line
        self.column = column
        self.expected = sorted(expected or [])
        location = f"line {line}, column {column}: " if line else ""
        hint = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{location}{message}{hint}")


class DuplicateDeclaration(ParseError):
    """A name is declared twice or used in two namespaces."""


class UnsupportedConstruct(IbqError):
    """Input uses a construct outside the supported logics (nominals, transitivity)."""


class ResourceLimit(IbqError):
    """A derivation exceeded the configured node or time budget."""


class OracleError(IbqError):
    pass


class SigViolation(OracleError):
    wire_code = "SIG_VIOLATION"


class NotConnected(OracleError):
    wire_code = "NOT_CONNECTED"


class UnsupportedQueryForType(OracleError):
    wire_code = "UNSUPPORTED"


class NoReduction(OracleError):
    wire_code = "UNSUPPORTED"


class NoViableMode(IbqError):
    """No algorithm fits the logics and oracle type at hand."""


class Inadmissible(IbqError):
    """Visible rules fail the safety or acyclicity precondition."""

    def __init__(self, message: str, report: Any = None):
        self.report = report
        super().__init__(message)


class NetError(IbqError):
    pass


class ConnectionFailed(NetError):
    pass


class ProtocolError(NetError):
    wire_code = "BAD_SYNTAX"
