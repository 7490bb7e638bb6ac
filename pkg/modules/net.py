"""
Line protocol that puts an oracle behind a TCP socket, and the matching client

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

import logging
import socket
import socketserver
import threading
from typing import Optional, Tuple, Union

from config import settings
from modules.errors import (
    ConnectionFailed, IbqError, NotConnected, ParseError, ProtocolError, SigViolation,
    UnsupportedQueryForType,
)
from modules.kb_parser import parse_assertions, parse_concept
from modules.oracle import OracleHandle
from modules.syntax import FALSUM, Axiom, LogicProfile, Signature, render, render_abox
from utils.validators import parse_host_port

logger = logging.getLogger(__name__)

Address = Union[str, Tuple[str, int]]

ENTAILS = " ENTAILS "
FALSUM_KEYWORD = "FALSUM"

_CLIENT_ERRORS = {
    'SIG_VIOLATION': SigViolation,
    'NOT_CONNECTED': NotConnected,
    'UNSUPPORTED': UnsupportedQueryForType,
}


def _resolve(address: Address) -> Tuple[str, int]:
    if isinstance(address, tuple):
        return address
    parsed, error = parse_host_port(address)
    if parsed is None:
        raise ValueError(error)
    return parsed


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------

def encode_query(kind: str, abox: Tuple[Axiom, ...], alpha: Optional[Axiom] = None) -> str:
    """Request line for a query, without the terminating newline."""
    if kind == 'csat':
        return f"CSAT {render(abox[0].concept)}"
    body = render_abox(abox, separator=";")
    if kind == 'asat':
        return f"ASAT {body}".rstrip()
    target = FALSUM_KEYWORD if alpha is None or alpha == FALSUM else render(alpha)
    return f"AENT {body}{ENTAILS}{target}"


def decode_query(line: str) -> Tuple[str, tuple, Optional[Axiom]]:
    """
    Split a request line into query type, payload and entailment target.

    Returns:
        ('hello', (), None), ('csat', (concept,), None), ('asat', abox, None)
        or ('aent', abox, alpha)

    Raises:
        ParseError: for unknown verbs or malformed payloads
    """
    verb, _, rest = line.strip().partition(" ")
    if verb == "HELLO" and not rest:
        return 'hello', (), None
    if verb == "CSAT":
        return 'csat', (parse_concept(rest),), None
    if verb == "ASAT":
        return 'asat', tuple(parse_assertions(rest)), None
    if verb == "AENT":
        body, sep, target = f" {rest} ".rpartition(ENTAILS)
        if not sep:
            raise ParseError("AENT needs an ENTAILS clause")
        alphas = parse_assertions(target.strip())
        if len(alphas) != 1:
            raise ParseError("AENT needs exactly one entailment target")
        return 'aent', tuple(parse_assertions(body.strip())), alphas[0]
    raise ParseError(f"unknown request '{verb}'")


# ---------------------------------------------------------------------------
# Server
# ---------------------------------------------------------------------------

class OracleRequestHandler(socketserver.StreamRequestHandler):
    """Answers one request line at a time until the client disconnects."""

    def handle(self):
        oracle: OracleHandle = self.server.oracle
        limit = self.server.max_line_bytes
        peer = "%s:%s" % self.client_address[:2]
        logger.debug("Connection from %s", peer)
        while True:
            raw = self.rfile.readline(limit + 1)
            if not raw:
                break
            if len(raw) > limit and not raw.endswith(b"\n"):
                self._reply("ERR BAD_SYNTAX request line too long")
                break
            try:
                line = raw.decode('utf-8').rstrip("\r\n")
            except UnicodeDecodeError:
                self._reply("ERR BAD_SYNTAX request is not UTF-8")
                continue
            self._reply(self.answer(oracle, line))
        logger.debug("Connection from %s closed", peer)

    @staticmethod
    def answer(oracle: OracleHandle, line: str) -> str:
        try:
            kind, payload, alpha = decode_query(line)
            if kind == 'hello':
                return f"OK {oracle.describe()}"
            if kind == 'csat':
                result = oracle.csat(payload[0])
            elif kind == 'asat':
                result = oracle.asat(payload)
            else:
                result = oracle.aent(payload, alpha)
        except IbqError as e:
            message = " ".join(str(e).split())
            return f"ERR {e.wire_code} {message}".rstrip()
        return "TRUE" if result else "FALSE"

    def _reply(self, text: str) -> None:
        self.wfile.write(text.encode('utf-8') + b"\n")
        self.wfile.flush()


class OracleServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, oracle: OracleHandle, address: Tuple[str, int],
                 max_line_bytes: int = settings.MAX_LINE_BYTES):
        self.oracle = oracle
        self.max_line_bytes = max_line_bytes
        self._thread: Optional[threading.Thread] = None
        super().__init__(address, OracleRequestHandler)

    @property
    def address(self) -> Tuple[str, int]:
        return self.server_address[:2]

    def start(self) -> 'OracleServer':
        self._thread = threading.Thread(target=self.serve_forever, name="ibq-serve", daemon=True)
        self._thread.start()
        logger.info("Serving %s oracle on %s:%s", self.oracle.oracle_type, *self.address)
        return self

    def wait(self) -> None:
        if self._thread is not None:
            self._thread.join()

    def shutdown(self) -> None:
        super().shutdown()
        self.server_close()
        logger.info("Oracle server stopped")


def serve(o: OracleHandle, listen_address: Address = settings.DEFAULT_LISTEN,
          max_line_bytes: int = settings.MAX_LINE_BYTES) -> OracleServer:
    """
    Expose an oracle on a TCP address; port 0 picks a free port.

    Args:
        o: Oracle to serve
        listen_address: HOST:PORT text or (host, port)
        max_line_bytes: Longest accepted request line

    Returns:
        Running OracleServer; call shutdown() to stop it
    """
    return OracleServer(o, _resolve(listen_address), max_line_bytes).start()


# ---------------------------------------------------------------------------
# Client
# ---------------------------------------------------------------------------

def parse_hello(line: str) -> Tuple[str, Signature, LogicProfile]:
    """
    Read type, signature and logic from a HELLO response.

    Raises:
        ProtocolError: when the line is not a well-formed OK response
    """
    parts = line.split()
    if not parts or parts[0] != "OK":
        raise ProtocolError(f"unexpected HELLO response: {line!r}")
    fields = {}
    for part in parts[1:]:
        key, sep, value = part.partition("=")
        if not sep:
            raise ProtocolError(f"malformed field in HELLO response: {part!r}")
        fields[key] = value
    if not {'type', 'gamma', 'logic'} <= fields.keys():
        raise ProtocolError("HELLO response lacks type, gamma or logic")

    concepts, roles = set(), set()
    for item in filter(None, fields['gamma'].split(",")):
        kind, sep, name = item.partition(":")
        if not sep or kind not in ('c', 'r') or not name:
            raise ProtocolError(f"malformed signature entry {item!r}")
        (concepts if kind == 'c' else roles).add(name)
    try:
        return fields['type'], Signature(frozenset(concepts), frozenset(roles)), LogicProfile.from_name(fields['logic'])
    except ValueError as e:
        raise ProtocolError(str(e)) from None


class RemoteOracle(OracleHandle):
    """Oracle handle that forwards canonical queries to a server."""

    def __init__(self, address: Tuple[str, int], timeout: float = settings.SOCKET_TIMEOUT_SECONDS):
        self.address = address
        try:
            self._sock = socket.create_connection(address, timeout=timeout)
        except OSError as e:
            raise ConnectionFailed(f"cannot reach oracle at {address[0]}:{address[1]}: {e}") from None
        self._file = self._sock.makefile('rwb')
        self._io_lock = threading.Lock()
        oracle_type, gamma, logic = parse_hello(self._exchange("HELLO"))
        if oracle_type not in settings.ORACLE_TYPES:
            raise ProtocolError(f"server advertises unknown oracle type {oracle_type!r}")
        super().__init__(oracle_type, gamma, logic)
        self.log.info("Connected to %s:%s (%s)", address[0], address[1], self.describe())

    def _exchange(self, line: str) -> str:
        with self._io_lock:
            try:
                self._file.write(line.encode('utf-8') + b"\n")
                self._file.flush()
                raw = self._file.readline()
            except OSError as e:
                raise ConnectionFailed(f"connection to oracle lost: {e}") from None
        if not raw:
            raise ConnectionFailed("oracle closed the connection")
        try:
            return raw.decode('utf-8').rstrip("\r\n")
        except UnicodeDecodeError:
            raise ProtocolError("response is not UTF-8") from None

    def _evaluate(self, kind: str, abox: Tuple[Axiom, ...], alpha: Optional[Axiom]) -> bool:
        response = self._exchange(encode_query(kind, abox, alpha))
        if response == "TRUE":
            return True
        if response == "FALSE":
            return False
        if response.startswith("ERR "):
            _, code, message = (response.split(" ", 2) + [""])[:3]
            raise _CLIENT_ERRORS.get(code, ProtocolError)(f"{code} {message}".strip())
        raise ProtocolError(f"unexpected response: {response!r}")

    def close(self) -> None:
        try:
            self._file.close()
        finally:
            self._sock.close()


def connect(address: Address, timeout: float = settings.SOCKET_TIMEOUT_SECONDS) -> RemoteOracle:
    """
    Open a handle on a served oracle.

    Args:
        address: HOST:PORT text (tcp: prefix allowed) or (host, port)

    Returns:
        RemoteOracle whose type, signature and logic come from the server

    Raises:
        ConnectionFailed: server unreachable
        ProtocolError: server answered HELLO with something else
    """
    try:
        resolved = _resolve(address)
    except ValueError as e:
        raise ConnectionFailed(str(e)) from None
    return RemoteOracle(resolved, timeout)
