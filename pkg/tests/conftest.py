import os
from pathlib import Path

import pytest
from hypothesis import strategies as st

from rolemine import AccessMatrix

# Toy matrix reconstructed from the worked example: five users, five permissions.
TOY = {
    "u0": ["p0", "p1", "p2"],
    "u1": ["p0", "p2", "p3"],
    "u2": ["p0", "p1", "p2", "p4"],
    "u3": ["p0", "p1", "p4"],
    "u4": ["p3", "p4"],
}

CRITERIA: dict[int, tuple[str, str]] = {}


def toy_matrix() -> AccessMatrix:
    return AccessMatrix.from_pairs([(u, p) for u, ps in TOY.items() for p in ps])


@pytest.fixture
def toy():
    return toy_matrix()


@pytest.fixture
def criterion():
    """Record a PASS/FAIL/SKIP line for an acceptance criterion."""

    def record(number: int, status: str, detail: str = ""):
        CRITERIA[number] = (status, detail)

    return record


def rmplib_dir() -> Path | None:
    d = os.environ.get("RMPLIB_DIR")
    return Path(d) if d and Path(d).is_dir() else None


@st.composite
def matrices(draw, max_edges=12, max_side=6):
    n_u = draw(st.integers(1, max_side))
    n_p = draw(st.integers(1, max_side))
    cells = [(u, p) for u in range(n_u) for p in range(n_p)]
    picked = draw(st.lists(st.sampled_from(cells), min_size=1, max_size=max_edges, unique=True))
    return AccessMatrix.from_pairs(sorted((f"u{u}", f"p{p}") for u, p in picked))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        status, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status:4s} {detail}")
