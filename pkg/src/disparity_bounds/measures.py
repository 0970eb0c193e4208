"""Disparity measure descriptors and the interval result type."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import SchemaError, SolverError
from .problem import ClassLabel

DD_FAMILY = "dd"
CLASSIFICATION = "classification"

# an interval may invert by at most this much before it is a solver bug;
# smaller inversions (grid underestimation on near-singleton sets) collapse
_INVERSION_TOL = 1e-6


@dataclass(frozen=True)
class Measure:
    """One disparity measure.

    DD has no conditioning. Classification measures condition on the event
    (Yhat=yhat*, Y=y*): the true-positive-rate difference uses (1,1), the
    true-negative-rate difference (0,0). role_swap=True exchanges decision
    and true outcome, giving the predictive-value differences.
    """

    family: str
    conditioning: tuple[int, int] | None = None
    role_swap: bool = False
    name: str = ""

    def __post_init__(self):
        if self.family == DD_FAMILY:
            if self.conditioning is not None or self.role_swap:
                raise SchemaError("DD takes no conditioning or role swap")
        elif self.family == CLASSIFICATION:
            if self.conditioning not in ((0, 0), (1, 1), (0, 1), (1, 0)):
                raise SchemaError("classification measures need a (yhat*, y*) pair")
        else:
            raise SchemaError(f"unknown measure family {self.family!r}")

    @property
    def needs_full_mode(self) -> bool:
        return self.family == CLASSIFICATION


DD = Measure(DD_FAMILY, name="DD")
TPRD = Measure(CLASSIFICATION, (1, 1), False, "TPRD")
TNRD = Measure(CLASSIFICATION, (0, 0), False, "TNRD")
PPVD = Measure(CLASSIFICATION, (1, 1), True, "PPVD")
NPVD = Measure(CLASSIFICATION, (0, 0), True, "NPVD")

_BY_NAME = {m.name: m for m in (DD, TPRD, TNRD, PPVD, NPVD)}


def measure_from_name(name: str) -> Measure:
    try:
        return _BY_NAME[name.upper()]
    except KeyError:
        raise SchemaError(
            f"unknown measure {name!r}; expected one of {sorted(_BY_NAME)}"
        ) from None


@dataclass(frozen=True)
class DisparityInterval:
    """Sharp [lower, upper] for one measure and one ordered class pair."""

    measure: Measure
    pair: tuple[ClassLabel, ClassLabel]
    lower: float
    upper: float
    method: str  # ClosedForm | LP | FractionalGrid | Oracle
    gap_hint: float | None = None
    notes: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if lo > hi:
            if lo - hi > _INVERSION_TOL:
                raise SolverError(
                    f"interval endpoints inverted by {lo - hi:.3g} "
                    f"({self.measure.name} {self.pair[0]}-{self.pair[1]})"
                )
            lo = hi = 0.5 * (lo + hi)
        if lo < -1.0 - _INVERSION_TOL or hi > 1.0 + _INVERSION_TOL:
            raise SolverError(
                f"interval [{lo}, {hi}] escapes [-1, 1] "
                f"({self.measure.name} {self.pair[0]}-{self.pair[1]})"
            )
        lo = min(max(lo, -1.0), 1.0)
        hi = min(max(hi, -1.0), 1.0)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= value <= self.upper + slack
