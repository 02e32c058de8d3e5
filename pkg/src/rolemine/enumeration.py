"""Maximal biclique enumeration over the edge-adjacency structure.

A maximal biclique here is a maximal set of pairwise adjacent *active*
edges, where adjacency is judged against a larger edge universe (edges set
aside by the reduction still witness adjacency). The enumerator is the
pivoting Bron-Kerbosch scheme run with an explicit stack, so it is a plain
generator that can be abandoned at any point.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Iterator

from ._bits import iter_bits, lowest_bit
from ._progress import Heartbeat
from .graph import AccessMatrix, Biclique

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 3_000_000


@dataclass
class EnumContext:
    g: AccessMatrix
    active: int
    universe: int | None = None
    count_threshold: int = DEFAULT_THRESHOLD
    _rows: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.universe is None:
            self.universe = self.g.all_edges
        if self.active & ~self.universe:
            raise ValueError("active edges must be a subset of the universe")
        if self.universe & ~self.g.all_edges:
            raise ValueError("universe must be a subset of the matrix edges")
        if self.count_threshold < 1:
            raise ValueError("count_threshold must be >= 1")
        self._adj = self.g.adjacency(self.universe)

    @classmethod
    def from_reduction(cls, state, count_threshold: int = DEFAULT_THRESHOLD) -> "EnumContext":
        return cls(state.g, state.active, state.all_edges, count_threshold)

    def neighbours(self, e: int) -> int:
        """Active open neighbourhood of ``e`` as a bitset."""
        row = self._rows.get(e)
        if row is None:
            row = self._adj.closed(e) & self.active & ~(1 << e)
            self._rows[e] = row
        return row

    def with_active(self, active: int) -> "EnumContext":
        return EnumContext(self.g, active, self.universe, self.count_threshold)


class Hardness(enum.Enum):
    EASY = "easy"
    HARD = "hard"


@dataclass(frozen=True)
class CountResult:
    count: int
    exceeded: bool
    threshold: int

    @property
    def kind(self) -> str:
        return "ExceededThreshold" if self.exceeded else "Exact"

    def __str__(self):
        if self.exceeded:
            return f"ExceededThreshold({self.threshold})"
        return f"Exact({self.count})"


def iter_maximal_masks(ctx: EnumContext) -> Iterator[int]:
    """Yield each maximal biclique of ``ctx`` once, as an edge bitset."""
    if not ctx.active:
        return
    N = ctx.neighbours
    subg = ctx.active
    cand = ctx.active
    u = _pivot(subg, cand, N)
    ext = cand & ~N(u)
    clique: list[int] = []
    stack: list[tuple[int, int, int]] = []
    while True:
        if ext:
            q = lowest_bit(ext)
            ext &= ~(1 << q)
            cand &= ~(1 << q)
            nq = N(q)
            subg_q = subg & nq
            if not subg_q:
                mask = 1 << q
                for x in clique:
                    mask |= 1 << x
                yield mask
            else:
                cand_q = cand & nq
                if cand_q:
                    stack.append((subg, cand, ext))
                    clique.append(q)
                    subg, cand = subg_q, cand_q
                    u = _pivot(subg, cand, N)
                    ext = cand & ~N(u)
        elif stack:
            clique.pop()
            subg, cand, ext = stack.pop()
        else:
            return


def _pivot(subg: int, cand: int, N) -> int:
    best, best_score = -1, -1
    for v in iter_bits(subg):
        score = (cand & N(v)).bit_count()
        if score > best_score:
            best, best_score = v, score
    return best


def enumerate_maximal_bicliques(ctx: EnumContext) -> Iterator[Biclique]:
    """Lazily yield every maximal biclique of the context."""
    for mask in iter_maximal_masks(ctx):
        yield Biclique.from_mask(ctx.g, mask)


def count_with_threshold(ctx: EnumContext) -> CountResult:
    """Count maximal bicliques, stopping once the count passes the threshold."""
    n = 0
    limit = ctx.count_threshold
    beat = Heartbeat("count", logger)
    for _ in iter_maximal_masks(ctx):
        n += 1
        if n > limit:
            return CountResult(n, True, limit)
        if n & 0xFFF == 0:
            beat.tick(f"{n:,} maximal bicliques")
    return CountResult(n, False, limit)


def classify_hardness(ctx: EnumContext) -> Hardness:
    return Hardness.HARD if count_with_threshold(ctx).exceeded else Hardness.EASY
