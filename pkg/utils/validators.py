"""
Input validation utilities

Copyright (c) 2025 Mattias Nyqvist
Licensed under the MIT License
"""

import os
from pathlib import Path
from typing import Optional, Tuple, Union

from config.settings import KB_EXTENSIONS, MAX_FILE_SIZE_MB, SIGNATURE_EXTENSIONS


def _validate_file(path: Union[str, Path], allowed_extensions, label: str) -> Tuple[bool, Optional[str]]:
    if path is None or not str(path).strip():
        return False, f"No {label} file given"

    if not os.path.isfile(path):
        return False, f"{label} file not found: {path}"

    # Check file extension
    file_ext = str(path).rsplit('.', 1)[-1].lower() if '.' in str(path) else ''
    if file_ext not in allowed_extensions:
        expected = ', '.join(f'.{ext}' for ext in allowed_extensions)
        return False, f"Unsupported {label} file type: .{file_ext}. Expected {expected}."

    # Check file size
    max_size = MAX_FILE_SIZE_MB * 1024 * 1024
    file_size = os.path.getsize(path)
    if file_size > max_size:
        return False, f"File too large ({file_size / (1024*1024):.1f}MB). Maximum size is {MAX_FILE_SIZE_MB}MB."

    return True, None


def validate_kb_file(path: Union[str, Path]) -> Tuple[bool, Optional[str]]:
    """
    Validate a knowledge-base file path.

    Args:
        path: Path to a .dl file

    Returns:
        Tuple of (is_valid, error_message)
    """
    return _validate_file(path, KB_EXTENSIONS, "knowledge base")


def validate_signature_file(path: Union[str, Path]) -> Tuple[bool, Optional[str]]:
    """
    Validate a signature file path.

    Args:
        path: Path to a .sig file

    Returns:
        Tuple of (is_valid, error_message)
    """
    return _validate_file(path, SIGNATURE_EXTENSIONS, "signature")


def parse_host_port(address: str) -> Tuple[Optional[Tuple[str, int]], Optional[str]]:
    """
    Split HOST:PORT (optionally prefixed with tcp:) into its parts.

    Args:
        address: Address text

    Returns:
        Tuple of ((host, port), error_message)
    """
    if not address:
        return None, "No address given"

    text = address[4:] if address.startswith('tcp:') else address
    host, sep, port = text.rpartition(':')
    if not sep or not host:
        return None, f"Address must look like HOST:PORT, got '{address}'"

    if not port.isdigit() or not 0 <= int(port) <= 65535:
        return None, f"Invalid port in '{address}'"

    return (host, int(port)), None


def validate_listen_address(address: str) -> Tuple[bool, Optional[str]]:
    """
    Validate a listen address.

    Args:
        address: HOST:PORT text

    Returns:
        Tuple of (is_valid, error_message)
    """
    parsed, error = parse_host_port(address)
    if parsed is None:
        return False, error
    return True, None
