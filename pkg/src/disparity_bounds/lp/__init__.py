"""Self-contained dense LP solver (two-phase simplex, no external dependency)."""

from ._backend import BACKEND
from .model import EQ, GE, LE, LpProblem, LpSolution, LpStatus
from .simplex import feasible, solve

__all__ = [
    "BACKEND",
    "EQ",
    "GE",
    "LE",
    "LpProblem",
    "LpSolution",
    "LpStatus",
    "feasible",
    "solve",
]
