"""Dense linear-program containers.

A problem is stored in the user's orientation (max or min, rows with <=, =, >=
relations, per-variable [lo, hi] bounds). Canonicalization to standard form
happens inside the solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..errors import DataError

LE, EQ, GE = "<=", "=", ">="
_RELATIONS = (LE, EQ, GE)


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LpProblem:
    """max/min c.x  s.t.  A x (<=,=,>=) b,  lo <= x <= hi.

    ``hi`` entries may be ``np.inf``; ``lo`` entries must be finite and >= 0.
    """

    objective: np.ndarray
    sense: str = "max"  # "max" | "min"
    rows: list = field(default_factory=list)  # (coeffs, relation, rhs)
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=np.float64)
        n = self.objective.shape[0]
        if self.sense not in ("max", "min"):
            raise DataError(f"unknown sense {self.sense!r}")
        if not np.all(np.isfinite(self.objective)):
            raise DataError("objective has NaN/inf coefficients")
        if self.lo is None:
            self.lo = np.zeros(n)
        else:
            self.lo = np.asarray(self.lo, dtype=np.float64)
        if self.hi is None:
            self.hi = np.full(n, np.inf)
        else:
            self.hi = np.asarray(self.hi, dtype=np.float64)
        if self.lo.shape != (n,) or self.hi.shape != (n,):
            raise DataError("bound vectors do not match objective width")
        if not np.all(np.isfinite(self.lo)) or np.any(self.lo < 0):
            raise DataError("lower bounds must be finite and >= 0")
        if np.any(self.hi < self.lo):
            raise DataError("hi < lo for some variable")

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    def add_row(self, coeffs, relation: str, rhs: float) -> None:
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.shape != (self.n_vars,):
            raise DataError("row width does not match objective")
        if relation not in _RELATIONS:
            raise DataError(f"unknown relation {relation!r}")
        if not np.all(np.isfinite(coeffs)) or not np.isfinite(rhs):
            raise DataError("row has NaN/inf entries")
        self.rows.append((coeffs, relation, float(rhs)))

    @classmethod
    def from_matrix(cls, objective, sense, A, rel, b, lo=None, hi=None) -> "LpProblem":
        """Matrix-backed problem; A may be shared read-only across instances."""
        p = cls(objective, sense=sense, lo=lo, hi=hi)
        A = np.asarray(A, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if A.shape != (b.shape[0], p.n_vars) or len(rel) != b.shape[0]:
            raise DataError("matrix dimensions are inconsistent")
        p._matrix = (A, list(rel), b)
        return p

    def matrix_form(self):
        """(A, relations, b) with A dense (m, n)."""
        mat = getattr(self, "_matrix", None)
        if mat is not None:
            return mat
        m = len(self.rows)
        A = np.zeros((m, self.n_vars))
        rel = []
        b = np.zeros(m)
        for i, (coeffs, r, rhs) in enumerate(self.rows):
            A[i] = coeffs
            rel.append(r)
            b[i] = rhs
        return A, rel, b


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    value: float
    point: np.ndarray
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL
