from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .enumeration import DEFAULT_THRESHOLD
from .graph import RbacPolicy


@dataclass
class MinerConfig:
    """Knobs shared by the mining pipelines."""

    count_threshold: int = DEFAULT_THRESHOLD
    large_edge_threshold: int = 200
    n_pieces: int = 1
    strategy: str = "best"
    seed: int = 0
    time_budget: float | None = None
    backend: str = "bnb"
    bnp_max_new_columns: int = 50
    bnp_max_iterations: int | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.count_threshold < 1 or self.large_edge_threshold < 1:
            raise ValueError("thresholds must be >= 1")
        if self.n_pieces < 1:
            raise ValueError("n_pieces must be >= 1")
        if self.strategy not in ("smallest", "largest", "best"):
            raise ValueError(f"unknown strategy {self.strategy!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MiningResult:
    policy: RbacPolicy
    stats: dict = field(default_factory=dict)

    @property
    def n_roles(self) -> int:
        return self.policy.n_roles
