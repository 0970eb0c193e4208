"""Dataset ingestion and the combined two-dataset problem.

The estimand machinery never sees raw rows: everything downstream consumes a
:class:`CombinedProblem`, i.e. per-proxy-cell marginals P(Yhat[,Y] | Z=z) from
the decision-side dataset, P(A | Z=z) from the class-side dataset, and the
cell masses P(Z=z). Probabilities are estimated empirically per discrete
cell; continuous proxies must be binned via the schema.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    BinOutOfRange,
    EmptyInput,
    InvalidWeight,
    MixedOutcomeAvailability,
    NoCommonSupport,
    NonBinaryOutcome,
    NotNormalized,
    ProbabilityRowNotNormalized,
    SchemaError,
    SupportMismatch,
    UnknownClassColumn,
    WrongMode,
)

DECISION_ONLY = "decision_only"
FULL = "full"

INTERSECT_RENORMALIZE = "intersect"
ERROR_ON_MISMATCH = "error"

_SUM_TOL = 1e-6  # vectors this close to 1 are renormalized, farther is an error
_CELL_TOL = 1e-9


class AlignmentWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# schema


@dataclass(frozen=True)
class ProxyColumn:
    column: str
    kind: str = "categorical"  # "categorical" | "numeric"
    bins: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("categorical", "numeric"):
            raise SchemaError(f"unknown proxy kind {self.kind!r}")
        if self.bins is not None:
            if self.kind != "numeric":
                raise SchemaError("bins only apply to numeric proxies")
            edges = tuple(float(e) for e in self.bins)
            if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
                raise SchemaError("bins must be >= 2 strictly increasing edges")
            object.__setattr__(self, "bins", edges)


@dataclass(frozen=True)
class ProxySchema:
    proxies: tuple[ProxyColumn, ...]
    classes: tuple[str, ...]
    reference_class: str

    def __post_init__(self):
        if not self.proxies:
            raise SchemaError("schema declares no proxy columns")
        if not self.classes:
            raise SchemaError("schema declares no classes")
        if len(set(self.classes)) != len(self.classes):
            raise SchemaError("duplicate class names")
        if self.reference_class not in self.classes:
            raise SchemaError(
                f"reference class {self.reference_class!r} is not a declared class"
            )

    @classmethod
    def from_dict(cls, obj: Mapping) -> "ProxySchema":
        try:
            proxies = tuple(
                ProxyColumn(
                    column=p["column"],
                    kind=p.get("kind", "categorical"),
                    bins=tuple(p["bins"]) if p.get("bins") is not None else None,
                )
                for p in obj["proxies"]
            )
            return cls(
                proxies=proxies,
                classes=tuple(obj["classes"]),
                reference_class=obj["reference_class"],
            )
        except KeyError as exc:
            raise SchemaError(f"schema is missing key {exc}") from exc

    @classmethod
    def from_json(cls, path) -> "ProxySchema":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def ordered_classes(self) -> tuple[str, ...]:
        """Reference class first, the rest in declaration order."""
        rest = tuple(c for c in self.classes if c != self.reference_class)
        return (self.reference_class,) + rest


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class ClassLabel:
    index: int
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ProxyCell:
    key: tuple[str, ...]
    mass: float
    numeric_coord: tuple[float, ...] | None = None

    def __str__(self) -> str:
        return ",".join(self.key)


@dataclass(frozen=True)
class OutcomeMarginal:
    """Per-cell decision(/outcome) marginals.

    mode=decision_only: probs has shape (n, 2) = P(Yhat=yhat | z).
    mode=full: probs has shape (n, 2, 2) = P(Yhat=yhat, Y=y | z).
    """

    mode: str
    probs: np.ndarray

    def __post_init__(self):
        if self.mode not in (DECISION_ONLY, FULL):
            raise WrongMode(f"unknown mode {self.mode!r}")
        want = 2 if self.mode == DECISION_ONLY else 3
        if self.probs.ndim != want:
            raise NotNormalized("outcome probs have the wrong rank for the mode")
        object.__setattr__(self, "probs", _normalized(self.probs, axis_from=1))

    @property
    def n_cells(self) -> int:
        return self.probs.shape[0]


@dataclass(frozen=True)
class ClassMarginal:
    """Per-cell class-membership probabilities, shape (n, K)."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _normalized(self.probs, axis_from=1))

    @property
    def n_cells(self) -> int:
        return self.probs.shape[0]

    @property
    def n_classes(self) -> int:
        return self.probs.shape[1]


@dataclass(frozen=True)
class MainTable:
    """ingest_main output: cell identities plus the outcome marginal."""

    keys: tuple[tuple[str, ...], ...]
    coords: tuple[tuple[float, ...] | None, ...]
    masses: np.ndarray
    outcome: OutcomeMarginal


@dataclass(frozen=True)
class AuxTable:
    """ingest_aux output: cell identities plus the class marginal."""

    keys: tuple[tuple[str, ...], ...]
    coords: tuple[tuple[float, ...] | None, ...]
    masses: np.ndarray
    classes: ClassMarginal
    class_names: tuple[str, ...] = ()


@dataclass(frozen=True)
class CombinedProblem:
    cells: tuple[ProxyCell, ...]
    outcome: OutcomeMarginal
    classes: ClassMarginal
    class_labels: tuple[ClassLabel, ...]
    dropped_mass: float = 0.0

    def __post_init__(self):
        n = len(self.cells)
        if self.outcome.n_cells != n or self.classes.n_cells != n:
            raise NotNormalized("marginals are not indexed by the same cells")
        if len(self.class_labels) != self.classes.n_classes:
            raise NotNormalized("class label count does not match the marginal")
        if not 0.0 <= self.dropped_mass < 1.0:
            raise NotNormalized(f"dropped_mass {self.dropped_mass} outside [0,1)")
        masses = np.array([c.mass for c in self.cells])
        if n and abs(masses.sum() - 1.0) > _CELL_TOL:
            raise NotNormalized("cell masses do not sum to 1")
        pri = masses @ self.classes.probs
        if n and abs(pri.sum() - 1.0) > 1e-8:
            raise NotNormalized("class priors do not sum to 1")
        object.__setattr__(self, "_masses", _readonly(masses))

    # -- views ------------------------------------------------------------

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_classes(self) -> int:
        return self.classes.n_classes

    @property
    def mode(self) -> str:
        return self.outcome.mode

    @property
    def masses(self) -> np.ndarray:
        return self._masses

    @property
    def p_class(self) -> np.ndarray:
        return self.classes.probs

    @property
    def p_table(self) -> np.ndarray:
        """P(Yhat=yhat, Y=y | z), shape (n, 2, 2); full mode only."""
        if self.mode != FULL:
            raise WrongMode(
                "operation needs the joint decision/outcome table; the main "
                "dataset carried no `y` column (decision-only mode)"
            )
        return self.outcome.probs

    @property
    def p_yhat(self) -> np.ndarray:
        """P(Yhat=yhat | z), shape (n, 2) in either mode."""
        if self.mode == DECISION_ONLY:
            return self.outcome.probs
        return self.outcome.probs.sum(axis=2)

    def coords_matrix(self) -> np.ndarray | None:
        if any(c.numeric_coord is None for c in self.cells) or not self.cells:
            return None
        return np.array([c.numeric_coord for c in self.cells], dtype=float)

    def labels_by_name(self) -> dict[str, ClassLabel]:
        return {lab.name: lab for lab in self.class_labels}

    def pair(self, a: str, b: str) -> tuple[ClassLabel, ClassLabel]:
        by = self.labels_by_name()
        try:
            return by[a], by[b]
        except KeyError as exc:
            raise UnknownClassColumn(f"unknown class {exc}") from exc

    # -- derived problems ---------------------------------------------------

    def swap_roles(self) -> "CombinedProblem":
        """Exchange decision and true outcome (transposes each 2x2 cell table)."""
        table = np.ascontiguousarray(self.p_table.transpose(0, 2, 1))
        return CombinedProblem(
            cells=self.cells,
            outcome=OutcomeMarginal(FULL, table),
            classes=self.classes,
            class_labels=self.class_labels,
            dropped_mass=self.dropped_mass,
        )

    def complement_outcome(self) -> "CombinedProblem":
        """Relabel yhat -> 1-yhat and y -> 1-y."""
        if self.mode == FULL:
            probs = np.ascontiguousarray(self.outcome.probs[:, ::-1, ::-1])
        else:
            probs = np.ascontiguousarray(self.outcome.probs[:, ::-1])
        return CombinedProblem(
            cells=self.cells,
            outcome=OutcomeMarginal(self.mode, probs),
            classes=self.classes,
            class_labels=self.class_labels,
            dropped_mass=self.dropped_mass,
        )

    def main_table(self) -> MainTable:
        return MainTable(
            keys=tuple(c.key for c in self.cells),
            coords=tuple(c.numeric_coord for c in self.cells),
            masses=self.masses.copy(),
            outcome=self.outcome,
        )

    def aux_table(self) -> AuxTable:
        return AuxTable(
            keys=tuple(c.key for c in self.cells),
            coords=tuple(c.numeric_coord for c in self.cells),
            masses=self.masses.copy(),
            classes=self.classes,
            class_names=tuple(lab.name for lab in self.class_labels),
        )

    def digest(self) -> str:
        blob = {
            "keys": [list(c.key) for c in self.cells],
            "masses": [repr(m) for m in self.masses],
            "mode": self.mode,
            "outcome": [repr(v) for v in self.outcome.probs.ravel()],
            "classes": [repr(v) for v in self.classes.probs.ravel()],
            "labels": [lab.name for lab in self.class_labels],
        }
        raw = json.dumps(blob, separators=(",", ":")).encode()
        return hashlib.sha256(raw).hexdigest()


# ---------------------------------------------------------------------------
# helpers


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


def _normalized(probs: np.ndarray, axis_from: int) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if np.any(probs < -_SUM_TOL) or np.any(probs > 1.0 + _SUM_TOL):
        raise NotNormalized("probability entries outside [0,1]")
    flat = probs.reshape(probs.shape[0], -1) if probs.ndim > 1 else probs
    sums = flat.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > _SUM_TOL):
        bad = int(np.argmax(np.abs(sums - 1.0)))
        raise NotNormalized(
            f"cell {bad} probabilities sum to {sums[bad]!r}; beyond 1e-6 repair"
        )
    out = probs.copy()
    if np.any(out < 0.0):
        out = np.clip(out, 0.0, None)
    # repair only rows that deviate, so normalization is idempotent
    norm = out.reshape(out.shape[0], -1).sum(axis=1)
    need = np.abs(norm - 1.0) > 1e-12
    if np.any(need):
        scale = np.where(need, norm, 1.0)
        out = out / scale.reshape((-1,) + (1,) * (probs.ndim - 1))
    return _readonly(out)


def _parse_binary(value, row: int) -> int:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise NonBinaryOutcome(value, row) from None
    if v == 0.0:
        return 0
    if v == 1.0:
        return 1
    raise NonBinaryOutcome(value, row)


def _cell_of(row: Mapping, schema: ProxySchema, rownum: int):
    """(key, coord, sortkey) of the proxy cell a record falls in."""
    key, coord, sort = [], [], []
    for p in schema.proxies:
        if p.column not in row or row[p.column] in (None, ""):
            raise SchemaError(f"row {rownum} is missing proxy column {p.column!r}")
        raw = row[p.column]
        if p.kind == "numeric":
            try:
                v = float(raw)
            except (TypeError, ValueError):
                raise SchemaError(
                    f"row {rownum}: {p.column!r} value {raw!r} is not numeric"
                ) from None
            if p.bins is not None:
                edges = p.bins
                if not edges[0] <= v <= edges[-1]:
                    raise BinOutOfRange(
                        f"row {rownum}: {p.column}={v!r} outside bin edges"
                    )
                k = min(int(np.searchsorted(edges, v, side="right")) - 1,
                        len(edges) - 2)
                key.append(f"[{edges[k]!r},{edges[k + 1]!r})")
                mid = 0.5 * (edges[k] + edges[k + 1])
                coord.append(mid)
                sort.append((0, mid, ""))
            else:
                key.append(repr(v))
                coord.append(v)
                sort.append((0, v, ""))
        else:
            tok = str(raw)
            key.append(tok)
            sort.append((1, 0.0, tok))
    return tuple(key), (tuple(coord) if coord else None), tuple(sort)


def _sorted_cells(cells: dict):
    """Deterministic cell order: numeric components numerically, then tokens."""
    return sorted(cells.items(), key=lambda kv: kv[1]["sort"])


# ---------------------------------------------------------------------------
# operations


def ingest_main(rows: Iterable[Mapping], schema: ProxySchema) -> MainTable:
    """Empirical per-cell outcome marginals from decision-side records.

    Rows need a binary ``yhat`` column, optionally a binary ``y`` column
    (present for all rows or for none), and the schema's proxy columns.
    """
    cells: dict = {}
    has_y: bool | None = None
    n = 0
    for i, row in enumerate(rows, start=1):
        n += 1
        if "yhat" not in row or row["yhat"] in (None, ""):
            raise SchemaError(f"row {i} is missing the `yhat` column")
        yhat = _parse_binary(row["yhat"], i)
        row_has_y = row.get("y") not in (None, "")
        if has_y is None:
            has_y = row_has_y
        elif has_y != row_has_y:
            raise MixedOutcomeAvailability(
                f"row {i} {'has' if row_has_y else 'lacks'} a true outcome "
                "while earlier rows do not match"
            )
        y = _parse_binary(row["y"], i) if row_has_y else None
        key, coord, sort = _cell_of(row, schema, i)
        slot = cells.setdefault(
            key, {"coord": coord, "sort": sort, "counts": np.zeros((2, 2))}
        )
        slot["counts"][yhat, 0 if y is None else y] += 1.0
    if n == 0:
        raise EmptyInput("main dataset has no rows")

    ordered = _sorted_cells(cells)
    keys = tuple(k for k, _ in ordered)
    coords = tuple(v["coord"] for _, v in ordered)
    counts = np.array([v["counts"] for _, v in ordered])
    masses = counts.sum(axis=(1, 2))
    masses = masses / masses.sum()
    if has_y:
        probs = counts / counts.sum(axis=(1, 2), keepdims=True)
        outcome = OutcomeMarginal(FULL, probs)
    else:
        dec = counts.sum(axis=2)
        outcome = OutcomeMarginal(DECISION_ONLY, dec / dec.sum(axis=1, keepdims=True))
    return MainTable(keys=keys, coords=coords, masses=masses, outcome=outcome)


def ingest_aux(rows: Iterable[Mapping], schema: ProxySchema) -> AuxTable:
    """Per-cell class marginals from record-level or aggregated class-side rows.

    Record form: an ``a`` column with a declared class name per row.
    Aggregated form: ``weight`` plus one ``p_<class>`` column per declared
    class; each row's probabilities must sum to 1 within 1e-6.
    """
    names = schema.ordered_classes()
    K = len(names)
    cells: dict = {}
    form: str | None = None
    n = 0
    for i, row in enumerate(rows, start=1):
        n += 1
        if form is None:
            form = "record" if row.get("a") not in (None, "") else "aggregated"
        key, coord, sort = _cell_of(row, schema, i)
        slot = cells.setdefault(
            key,
            {"coord": coord, "sort": sort, "w": 0.0, "acc": np.zeros(K)},
        )
        if form == "record":
            label = str(row.get("a", ""))
            if label not in names:
                raise UnknownClassColumn(
                    f"row {i}: class {label!r} is not declared in the schema"
                )
            slot["w"] += 1.0
            slot["acc"][names.index(label)] += 1.0
        else:
            try:
                w = float(row["weight"])
            except (KeyError, TypeError, ValueError):
                raise InvalidWeight(f"row {i}: missing or non-numeric weight") from None
            if not w > 0:
                raise InvalidWeight(f"row {i}: weight must be > 0, got {w!r}")
            p = np.empty(K)
            for k, name in enumerate(names):
                col = f"p_{name}"
                if col not in row or row[col] in (None, ""):
                    raise UnknownClassColumn(
                        f"row {i}: aggregated form needs column {col!r}"
                    )
                p[k] = float(row[col])
            total = float(p.sum())
            if abs(total - 1.0) > _SUM_TOL:
                raise ProbabilityRowNotNormalized(i, total)
            p = p / total
            slot["w"] += w
            slot["acc"] += w * p
    if n == 0:
        raise EmptyInput("auxiliary dataset has no rows")

    ordered = _sorted_cells(cells)
    keys = tuple(k for k, _ in ordered)
    coords = tuple(v["coord"] for _, v in ordered)
    weights = np.array([v["w"] for _, v in ordered])
    acc = np.array([v["acc"] for _, v in ordered])
    probs = acc / weights[:, None]
    return AuxTable(
        keys=keys,
        coords=coords,
        masses=weights / weights.sum(),
        classes=ClassMarginal(probs),
        class_names=names,
    )


def align(
    main: MainTable,
    aux: AuxTable,
    policy: str = INTERSECT_RENORMALIZE,
) -> CombinedProblem:
    """Restrict both tables to the common proxy support.

    Cell masses are taken from the decision side and renormalized; the mass
    removed from the decision side is recorded as ``dropped_mass``.
    """
    main_idx = {k: i for i, k in enumerate(main.keys)}
    aux_idx = {k: i for i, k in enumerate(aux.keys)}
    common = [k for k in main.keys if k in aux_idx]
    if not common:
        raise NoCommonSupport("the two datasets share no proxy cell")
    if policy == ERROR_ON_MISMATCH:
        if len(common) != len(main.keys) or len(common) != len(aux.keys):
            only_main = set(main.keys) - set(aux.keys)
            only_aux = set(aux.keys) - set(main.keys)
            raise SupportMismatch(
                f"{len(only_main)} cells only in main, {len(only_aux)} only in aux"
            )
    elif policy != INTERSECT_RENORMALIZE:
        raise SchemaError(f"unknown alignment policy {policy!r}")

    sel = np.array([main_idx[k] for k in common])
    kept = float(main.masses[sel].sum())
    dropped = max(0.0, 1.0 - kept)
    if dropped > _CELL_TOL:
        warnings.warn(
            f"alignment dropped {dropped:.6g} of the decision-side mass",
            AlignmentWarning,
            stacklevel=2,
        )
    else:
        dropped = 0.0
    masses = main.masses[sel] / kept
    cells = tuple(
        ProxyCell(key=k, mass=float(m), numeric_coord=main.coords[main_idx[k]])
        for k, m in zip(common, masses)
    )
    outcome = OutcomeMarginal(main.outcome.mode, main.outcome.probs[sel])
    aux_sel = np.array([aux_idx[k] for k in common])
    classes = ClassMarginal(aux.classes.probs[aux_sel])
    labels = tuple(
        ClassLabel(index=i, name=nm) for i, nm in enumerate(aux.class_names)
    )
    return CombinedProblem(
        cells=cells,
        outcome=outcome,
        classes=classes,
        class_labels=labels,
        dropped_mass=dropped,
    )


def class_priors(problem: CombinedProblem) -> np.ndarray:
    """P(A=alpha) = sum_z P(z) P(alpha|z). Zero entries are legal here."""
    return problem.masses @ problem.p_class


def negative_entropy(problem: CombinedProblem, target: str = "class") -> float:
    """E_Z[sum_k P(k|Z) ln P(k|Z)] with 0 ln 0 = 0; always <= 0.

    target="class" uses the class marginal; target="outcome" uses the 2x2
    table in full mode and the decision marginal in decision-only mode.
    """
    if target == "class":
        q = problem.p_class
    elif target == "outcome":
        q = problem.outcome.probs.reshape(problem.n_cells, -1)
    else:
        raise SchemaError(f"unknown entropy target {target!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(q > 0.0, q * np.log(np.where(q > 0.0, q, 1.0)), 0.0)
    return float(problem.masses @ terms.sum(axis=1))


# ---------------------------------------------------------------------------
# array-level constructor (tests, synthetic instances, fixtures)


def make_problem(
    masses,
    p_class,
    *,
    p_yhat=None,
    p_table=None,
    class_names: Sequence[str] | None = None,
    coords=None,
    keys: Sequence[tuple[str, ...]] | None = None,
) -> CombinedProblem:
    """Build a CombinedProblem straight from arrays.

    Exactly one of ``p_yhat`` (shape (n,2), decision-only) or ``p_table``
    (shape (n,2,2), full) must be given.
    """
    masses = np.asarray(masses, dtype=float)
    if masses.ndim != 1 or masses.size == 0:
        raise EmptyInput("masses must be a nonempty vector")
    if np.any(masses < 0):
        raise NotNormalized("negative cell mass")
    masses = masses / masses.sum()
    p_class = np.asarray(p_class, dtype=float)
    n, K = p_class.shape
    if masses.shape[0] != n:
        raise NotNormalized("masses and p_class disagree on the cell count")
    if (p_yhat is None) == (p_table is None):
        raise SchemaError("pass exactly one of p_yhat or p_table")
    if p_table is not None:
        outcome = OutcomeMarginal(FULL, np.asarray(p_table, dtype=float))
    else:
        outcome = OutcomeMarginal(DECISION_ONLY, np.asarray(p_yhat, dtype=float))
    if class_names is None:
        class_names = [chr(ord("a") + i) for i in range(K)]
    if coords is None:
        coord_list: list = [None] * n
    else:
        coord_list = [
            tuple(float(x) for x in np.atleast_1d(c)) for c in np.asarray(coords)
        ]
    if keys is None:
        width = max(3, int(math.ceil(math.log10(max(n, 2)))))
        keys = [((f"z{i:0{width}d}"),) for i in range(n)]
    cells = tuple(
        ProxyCell(key=tuple(k) if isinstance(k, tuple) else (str(k),),
                  mass=float(m), numeric_coord=coord_list[i])
        for i, (k, m) in enumerate(zip(keys, masses))
    )
    labels = tuple(ClassLabel(i, str(nm)) for i, nm in enumerate(class_names))
    return CombinedProblem(
        cells=cells,
        outcome=outcome,
        classes=ClassMarginal(p_class),
        class_labels=labels,
    )


def read_main_csv(path, schema: ProxySchema) -> MainTable:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return ingest_main(csv.DictReader(fh), schema)


def read_aux_csv(path, schema: ProxySchema) -> AuxTable:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return ingest_aux(csv.DictReader(fh), schema)
