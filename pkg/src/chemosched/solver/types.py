from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction


class Status(str, Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "FeasibleTimeLimit"
    INFEASIBLE = "Infeasible"
    NO_SOLUTION = "NoSolutionTimeLimit"
    BACKEND_ERROR = "BackendError"

    def __str__(self) -> str:
        return self.value


@dataclass
class SolveOptions:
    time_limit: float = 300.0
    backend: str = "internal"  # internal | external | oracle | highs
    command: str | None = None  # external backend executable (shell-split)
    gap_tolerance: Fraction = Fraction(0)
    deterministic_seed: int = 0

    def __post_init__(self) -> None:
        if not self.time_limit > 0:
            raise ValueError("time_limit must be > 0")
        if self.backend not in ("internal", "external", "oracle", "highs"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "external" and not self.command:
            raise ValueError("external backend requires a command")
        self.gap_tolerance = Fraction(self.gap_tolerance)

    def with_limit(self, seconds: float) -> "SolveOptions":
        return SolveOptions(
            time_limit=max(seconds, 1e-6),
            backend=self.backend,
            command=self.command,
            gap_tolerance=self.gap_tolerance,
            deterministic_seed=self.deterministic_seed,
        )


@dataclass
class SolveResult:
    status: Status
    assignment: dict[int, int] | None = None
    objective: int | None = None
    best_bound: int | None = None
    runtime: float = 0.0
    message: str = ""
    nodes: int = 0

    @property
    def has_solution(self) -> bool:
        return self.assignment is not None


class SolverError(RuntimeError):
    """A backend failed (crashed, produced garbage, or returned an infeasible point)."""

    def __init__(self, message: str, result: SolveResult | None = None):
        super().__init__(message)
        self.result = result


class Deadline:
    def __init__(self, seconds: float):
        self.start = time.perf_counter()
        self.end = self.start + seconds

    def expired(self) -> bool:
        return time.perf_counter() >= self.end

    def remaining(self) -> float:
        return max(0.0, self.end - time.perf_counter())

    def elapsed(self) -> float:
        return time.perf_counter() - self.start
