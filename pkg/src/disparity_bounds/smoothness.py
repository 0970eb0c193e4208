"""Proxy-smoothness (Lipschitz) constraint plumbing.

The metric is a weighted L1 distance on the cells' numeric coordinates,
d0(z, z') = sum_k w_k |z_k - z'_k|, with the overall Lipschitz scale L kept
separate so the minimal feasible L can be searched. Default weights
normalize each dimension by its range over the aligned cells.

Constraint instantiation: for 1-D coordinates only chain-adjacent pairs are
emitted (consecutive cells in coordinate order; the chain inequalities imply
all pairwise ones by the triangle inequality). Multi-dimensional coordinates
emit all pairs, refusing above 2e6 pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MetricUnavailable, SchemaError, TooManyLipschitzPairs
from .problem import CombinedProblem

MINIMAL = "minimal"
_PAIR_CAP = 2_000_000


@dataclass(frozen=True)
class LipschitzSpec:
    """Smoothness constraint request: L * d0 with d0 the weighted L1 metric.

    ``scale`` is the Lipschitz constant L, or "minimal" to use the smallest
    feasible one. ``weights`` override the per-dimension range normalization.
    """

    scale: float | str = MINIMAL
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if isinstance(self.scale, str):
            if self.scale != MINIMAL:
                raise SchemaError(f"unknown Lipschitz scale {self.scale!r}")
        elif not (np.isfinite(self.scale) and self.scale >= 0):
            raise SchemaError("Lipschitz scale must be >= 0")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if any(not np.isfinite(x) or x < 0 for x in w):
                raise SchemaError("metric weights must be finite and >= 0")
            object.__setattr__(self, "weights", w)

    @property
    def minimal(self) -> bool:
        return self.scale == MINIMAL


def metric_weights(problem: CombinedProblem, spec: LipschitzSpec) -> np.ndarray:
    coords = problem.coords_matrix()
    if coords is None:
        raise MetricUnavailable(
            "Lipschitz constraints need numeric proxy coordinates on every cell"
        )
    d = coords.shape[1]
    if spec.weights is not None:
        if len(spec.weights) != d:
            raise SchemaError(
                f"{len(spec.weights)} metric weights for {d} numeric dimensions"
            )
        return np.asarray(spec.weights, dtype=float)
    rng = coords.max(axis=0) - coords.min(axis=0)
    return np.where(rng > 0, 1.0 / np.where(rng > 0, rng, 1.0), 0.0)


def metric_pairs(
    problem: CombinedProblem,
    spec: LipschitzSpec,
    subset: np.ndarray | None = None,
):
    """(i, j, d0) triples to constrain, over ``subset`` cell indices.

    Indices refer to the problem's cell order. 1-D coordinates give the
    chain over the subset sorted by coordinate; otherwise all pairs.
    """
    coords = problem.coords_matrix()
    if coords is None:
        raise MetricUnavailable(
            "Lipschitz constraints need numeric proxy coordinates on every cell"
        )
    w = metric_weights(problem, spec)
    idx = np.arange(problem.n_cells) if subset is None else np.asarray(subset)
    if idx.size < 2:
        return []
    if coords.shape[1] == 1:
        order = idx[np.argsort(coords[idx, 0], kind="stable")]
        pairs = list(zip(order[:-1], order[1:]))
    else:
        npairs = idx.size * (idx.size - 1) // 2
        if npairs > _PAIR_CAP:
            raise TooManyLipschitzPairs(
                f"{npairs} Lipschitz pairs exceed the {_PAIR_CAP} cap; "
                "bin the proxies more coarsely"
            )
        pairs = [(idx[i], idx[j]) for i in range(idx.size) for j in range(i + 1, idx.size)]
    out = []
    for i, j in pairs:
        d0 = float(np.abs(coords[i] - coords[j]) @ w)
        out.append((int(i), int(j), d0))
    return out
