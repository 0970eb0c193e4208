"""Exception hierarchy.

Three semantic families map onto the CLI exit codes: data problems (exit 2),
solver problems (exit 3) and enumeration budgets (exit 4). Everything raised
by this package derives from DisparityBoundsError.
"""

from __future__ import annotations


class DisparityBoundsError(Exception):
    """Base class for all errors raised by this package."""


class DataError(DisparityBoundsError):
    """The inputs (rows, schema, config, problem) violate a contract."""


class SolverError(DisparityBoundsError):
    """An optimization routine failed or was handed an unusable program."""


# --- data / ingestion ---------------------------------------------------


class EmptyInput(DataError):
    pass


class MixedOutcomeAvailability(DataError):
    """Some rows carry a true outcome and some do not."""


class NonBinaryOutcome(DataError):
    def __init__(self, value, row: int):
        super().__init__(f"outcome value {value!r} in row {row} is not 0/1")
        self.value = value
        self.row = row


class ProbabilityRowNotNormalized(DataError):
    def __init__(self, row: int, total: float):
        super().__init__(
            f"class probabilities in row {row} sum to {total!r}, not 1 (tol 1e-6)"
        )
        self.row = row
        self.total = total


class UnknownClassColumn(DataError):
    pass


class InvalidWeight(DataError):
    pass


class SchemaError(DataError):
    pass


class BinOutOfRange(DataError):
    pass


class NoCommonSupport(DataError):
    pass


class SupportMismatch(DataError):
    pass


class NotNormalized(DataError):
    """A probability vector is too far from summing to one to repair."""


# --- measure / problem preconditions -------------------------------------


class ZeroClassPrior(DataError):
    def __init__(self, label: str):
        super().__init__(f"class {label!r} has zero prior probability")
        self.label = label


class WrongClassCount(DataError):
    pass


class WrongMode(DataError):
    """Operation needs the full decision x outcome table but got decisions only."""


class ZeroDenominator(DataError):
    pass


class ZeroDenominatorRisk(DataError):
    def __init__(self, label: str, detail: str = ""):
        super().__init__(
            f"P(A={label!r}, Y=y*) is bounded above by 0; measure undefined"
            + (f" ({detail})" if detail else "")
        )
        self.label = label


class MetricUnavailable(DataError):
    """Lipschitz constraints need numeric proxy coordinates on every cell."""


class TooManyLipschitzPairs(DataError):
    """Pairwise constraint count above cap; re-bin the proxies more coarsely."""


# --- solvers --------------------------------------------------------------


class NumericalBreakdown(SolverError):
    """No acceptable pivot (all candidates below 1e-11)."""


class InfeasibleConstraints(SolverError):
    pass


class EmptyGrid(SolverError):
    pass


class AllGridPointsInfeasible(SolverError):
    pass


class DegenerateProfile(SolverError):
    """Support values are mutually inconsistent; upstream solver failure."""


class NoFeasiblePoint(SolverError):
    """Brute-force enumeration found no valid coupling; upstream bug."""


# --- budgets / reporting ----------------------------------------------------


class BudgetExceeded(DisparityBoundsError):
    pass


class EmptyReport(DataError):
    pass
