"""Sharp interval and polygon bounds for fairness disparity measures when the
protected class is unobserved and must be combined in from a second dataset.

The decision-side dataset identifies P(Yhat[, Y] | Z) and the class-side
dataset P(A | Z); every disparity value consistent with those marginals is
bracketed exactly, either in closed form (binary class) or by linear and
linear-fractional programming (multi-class, smoothness constraints).
"""

from .closed_form import (
    CellBounds,
    IdentificationReport,
    ci_point_estimate,
    classification_interval_binary,
    dd_interval_binary,
    fh_bounds,
    is_point_identified,
)
from .errors import DisparityBoundsError
from .geometry import (
    AuditReport,
    HullPolygon,
    SupportProfile,
    emit,
    load_report,
    polygon_from_support,
    sweep,
)
from .measures import DD, NPVD, PPVD, TNRD, TPRD, DisparityInterval, Measure
from .oracle import OracleSpec, oracle_class, oracle_dd, oracle_hull
from .problem import (
    ClassLabel,
    ClassMarginal,
    CombinedProblem,
    OutcomeMarginal,
    ProxyCell,
    ProxySchema,
    align,
    class_priors,
    ingest_aux,
    ingest_main,
    make_problem,
    negative_entropy,
    read_aux_csv,
    read_main_csv,
)
from .smoothness import LipschitzSpec
from .support_class import FractionalWitness, GridSpec, class_interval, class_support
from .support_dd import (
    Direction,
    WeightField,
    dd_interval_lp,
    dd_support,
    minimal_lipschitz,
)

__version__ = "0.1.0"

__all__ = [
    "AuditReport",
    "CellBounds",
    "ClassLabel",
    "ClassMarginal",
    "CombinedProblem",
    "DD",
    "Direction",
    "DisparityBoundsError",
    "DisparityInterval",
    "FractionalWitness",
    "GridSpec",
    "HullPolygon",
    "IdentificationReport",
    "LipschitzSpec",
    "Measure",
    "NPVD",
    "OracleSpec",
    "OutcomeMarginal",
    "PPVD",
    "ProxyCell",
    "ProxySchema",
    "SupportProfile",
    "TNRD",
    "TPRD",
    "WeightField",
    "align",
    "ci_point_estimate",
    "class_interval",
    "class_priors",
    "class_support",
    "classification_interval_binary",
    "dd_interval_binary",
    "dd_interval_lp",
    "dd_support",
    "emit",
    "fh_bounds",
    "ingest_aux",
    "ingest_main",
    "is_point_identified",
    "load_report",
    "make_problem",
    "minimal_lipschitz",
    "negative_entropy",
    "oracle_class",
    "oracle_dd",
    "oracle_hull",
    "polygon_from_support",
    "read_aux_csv",
    "read_main_csv",
    "sweep",
]
