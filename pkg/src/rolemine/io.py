"""Reading and writing instances and policies."""

from __future__ import annotations

import json
from pathlib import Path

from .exceptions import EmptyInstanceError, InstanceFormatError
from .graph import AccessMatrix, RbacPolicy


def load_edge_list(path) -> AccessMatrix:
    """Read a ``user perm`` per line file. Lines starting with ``#`` are comments."""
    path = Path(path)
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            tokens = text.split()
            if len(tokens) != 2:
                raise InstanceFormatError(
                    f"expected 'user permission', got {len(tokens)} tokens", line=lineno, path=path)
            pairs.append((tokens[0], tokens[1]))
    if not pairs:
        raise EmptyInstanceError(f"{path}: no edges")
    return AccessMatrix.from_pairs(pairs)


def export_edge_list(g: AccessMatrix, path, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for u, p in g.edge_pairs():
            fh.write(f"{u} {p}\n")


def load_instance(path, fmt: str = "auto") -> AccessMatrix:
    """Load ``path`` as ``edgelist``, ``rmplib`` or by sniffing (``auto``)."""
    from .rmplib import load_rmplib, sniff_layout

    if fmt == "edgelist":
        return load_edge_list(path)
    if fmt == "rmplib":
        return load_rmplib(path)
    if fmt != "auto":
        raise ValueError(f"unknown format {fmt!r}")
    if sniff_layout(path) == "pairs":
        return load_edge_list(path)
    return load_rmplib(path)


def save_policy(pol: RbacPolicy, g: AccessMatrix, path) -> None:
    Path(path).write_text(pol.to_json(g) + "\n", encoding="utf-8")


def load_policy(path, g: AccessMatrix) -> RbacPolicy:
    with open(path, encoding="utf-8") as fh:
        return RbacPolicy.from_dict(json.load(fh), g)
