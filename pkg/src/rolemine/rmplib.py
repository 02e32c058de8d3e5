"""Adapter for RMPlib-style benchmark files.

The published suite has shipped instances in more than one text layout, so
the reader accepts each of these and normalizes to an :class:`AccessMatrix`:

``rows``
    One user per line, ``user: perm perm ...``. The colon may be omitted when
    a line holds three or more tokens. A user with no permissions is dropped.
``matrix``
    A dense 0/1 matrix, one user per row, entries separated by whitespace or
    written as a single ``0101...`` token. An optional first line
    ``n_users n_perms`` is checked against the body. Users are named
    ``u<row>`` and permissions ``p<column>``.
``pairs``
    The canonical ``user perm`` edge list.

Lines starting with ``#`` or ``%`` are comments. Anything else is rejected
with an :class:`InstanceFormatError` that says which expectation failed.
See ``docs/rmplib.md`` for the full mapping.
"""

from __future__ import annotations

import re
import warnings
from pathlib import Path

import numpy as np

from .exceptions import EmptyInstanceError, InstanceFormatError
from .graph import AccessMatrix
from .io import load_edge_list

_COMMENT = ("#", "%")
_BINARY = re.compile(r"^[01]+$")


def _content_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if text and not text.startswith(_COMMENT):
                yield lineno, text


def sniff_layout(path) -> str:
    lines = []
    for item in _content_lines(path):
        lines.append(item)
        if len(lines) >= 3:
            break
    if not lines:
        raise EmptyInstanceError(f"{path}: no content")
    body = lines
    first = lines[0][1].split()
    if len(lines) > 1 and len(first) == 2 and all(t.isdigit() for t in first):
        rest = lines[1][1].split()
        if all(_BINARY.match(t) for t in rest) and (len(rest) > 2 or len(rest[0]) > 2):
            return "matrix"
    for _, text in body:
        if ":" in text:
            return "rows"
    tokens = body[0][1].split()
    if all(_BINARY.match(t) for t in tokens) and (len(tokens) > 2 or len(tokens[0]) > 2):
        return "matrix"
    if all(len(text.split()) == 2 for _, text in body):
        return "pairs"
    return "rows"


def load_rmplib(path, layout: str | None = None) -> AccessMatrix:
    """Read an RMPlib instance file."""
    path = Path(path)
    layout = layout or sniff_layout(path)
    if layout == "rows":
        pairs = _read_rows(path)
    elif layout == "matrix":
        X = _read_matrix(path)
        if not X.any():
            raise EmptyInstanceError(f"{path}: no edges")
        return AccessMatrix.from_dense(X, [f"u{i}" for i in range(X.shape[0])],
                                       [f"p{j}" for j in range(X.shape[1])])
    elif layout == "pairs":
        return load_edge_list(path)
    else:
        raise ValueError(f"unknown layout {layout!r}")
    if not pairs:
        raise EmptyInstanceError(f"{path}: no edges")
    return AccessMatrix.from_pairs(pairs)


def _read_rows(path):
    pairs = []
    empty_users = 0
    for lineno, text in _content_lines(path):
        if ":" in text:
            head, _, tail = text.partition(":")
            user = head.strip()
            perms = tail.split()
            if not user or len(head.split()) != 1:
                raise InstanceFormatError("expected 'user: perm perm ...'", line=lineno, path=path)
        else:
            tokens = text.split()
            if len(tokens) < 2:
                raise InstanceFormatError(
                    "expected a user followed by its permissions", line=lineno, path=path)
            user, perms = tokens[0], tokens[1:]
        if not perms:
            empty_users += 1
        pairs.extend((user, p) for p in perms)
    if empty_users:
        warnings.warn(f"dropping {empty_users} users without permissions", stacklevel=3)
    return pairs


def _read_matrix(path):
    lines = list(_content_lines(path))
    header = None
    first = lines[0][1].split()
    if len(first) == 2 and all(t.isdigit() for t in first) and len(lines) > 1:
        declared = (int(first[0]), int(first[1]))
        second = lines[1][1].split()
        second_width = len(second[0]) if len(second) == 1 else len(second)
        # a 0/1 pair is only a header if it describes the body
        if (any(t not in ("0", "1") for t in first)
                or declared == (len(lines) - 1, second_width)):
            header = declared
            lines = lines[1:]
    rows = []
    width = None
    for lineno, text in lines:
        tokens = text.split()
        if len(tokens) == 1 and len(tokens[0]) > 1:
            tokens = list(tokens[0])
        if not all(t in ("0", "1") for t in tokens):
            raise InstanceFormatError("matrix rows must contain only 0 and 1", line=lineno, path=path)
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise InstanceFormatError(
                f"row has {len(tokens)} entries, expected {width}", line=lineno, path=path)
        rows.append(tokens)
    if header is not None:
        if header != (len(rows), width):
            raise InstanceFormatError(
                f"header declares {header[0]}x{header[1]} but body is {len(rows)}x{width}", path=path)
    return np.array(rows, dtype=np.int8) if rows else np.zeros((0, 0), dtype=np.int8)
