"""Synthetic full joints with known disparities.

Test and verification plumbing: draw a complete joint P(A, Yhat, Y, Z),
marginalize it into the two-dataset view, and keep the true disparities for
containment checks. The sharp intervals computed from the marginal view must
always contain the joint's true disparity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, ZeroDenominator
from .measures import CLASSIFICATION, DD_FAMILY, Measure
from .problem import CombinedProblem, make_problem


@dataclass(frozen=True)
class SyntheticJoint:
    """masses: P(Z=z); cells: P(A=alpha, Yhat=yhat, Y=y | z), shape (n, K, 2, 2)."""

    masses: np.ndarray
    cells: np.ndarray

    @property
    def n_cells(self) -> int:
        return self.masses.shape[0]

    @property
    def n_classes(self) -> int:
        return self.cells.shape[1]

    def priors(self) -> np.ndarray:
        return np.einsum("z,zkab->k", self.masses, self.cells)

    def to_problem(self, full: bool = True, coords=None) -> CombinedProblem:
        p_class = np.einsum("zkab->zk", self.cells)
        if full:
            table = np.einsum("zkab->zab", self.cells)
            return make_problem(self.masses, p_class, p_table=table, coords=coords)
        p_yhat = np.einsum("zkab->za", self.cells)
        return make_problem(self.masses, p_class, p_yhat=p_yhat, coords=coords)

    def true_disparity(self, measure: Measure, a: int = 0, b: int = 1) -> float:
        cells = self.cells
        if measure.role_swap:
            cells = cells.transpose(0, 1, 3, 2)
        m = self.masses
        if measure.family == DD_FAMILY:
            num = np.einsum("z,zkb->k", m, cells[:, :, 1, :])
            den = np.einsum("z,zkab->k", m, cells)
        else:
            yh, y = measure.conditioning
            num = m @ cells[:, :, yh, y]
            den = np.einsum("z,zka->k", m, cells[:, :, :, y])
        for k in (a, b):
            if den[k] <= 0.0:
                raise ZeroDenominator(f"class {k} has no mass on the conditioning event")
        return float(num[a] / den[a] - num[b] / den[b])


def random_joint(
    rng: np.random.Generator,
    n_cells: int,
    n_classes: int = 2,
    *,
    min_prior: float = 0.05,
    min_event_mass: float = 0.02,
    max_tries: int = 200,
) -> SyntheticJoint:
    """Dirichlet joint with class priors and P(A=alpha, Y=y) bounded below."""
    for _ in range(max_tries):
        masses = rng.dirichlet(np.ones(n_cells))
        cells = rng.dirichlet(np.ones(n_classes * 4), size=n_cells)
        cells = cells.reshape(n_cells, n_classes, 2, 2)
        joint = SyntheticJoint(masses, cells)
        if joint.priors().min() < min_prior:
            continue
        ev = np.einsum("z,zkay->ky", masses, cells)
        if ev.min() < min_event_mass:
            continue
        return joint
    raise DataError("could not draw a joint satisfying the mass floors")


def perfect_prediction_joint(
    rng: np.random.Generator,
    n_cells: int,
    n_classes: int = 2,
    *,
    full: bool = True,
    max_tries: int = 500,
) -> SyntheticJoint:
    """Each cell has a degenerate class marginal or a degenerate outcome
    marginal, which point-identifies every disparity measure."""
    for _ in range(max_tries):
        masses = rng.dirichlet(np.ones(n_cells))
        cells = np.zeros((n_cells, n_classes, 2, 2))
        for z in range(n_cells):
            if rng.random() < 0.5:
                k = int(rng.integers(n_classes))
                table = rng.dirichlet(np.ones(4)).reshape(2, 2)
                cells[z, k] = table
            else:
                if full:
                    yh, y = int(rng.integers(2)), int(rng.integers(2))
                else:
                    yh, y = int(rng.integers(2)), 0
                pk = rng.dirichlet(np.ones(n_classes))
                if not full:
                    # degenerate decision, free true outcome per class
                    for k in range(n_classes):
                        split = rng.random()
                        cells[z, k, yh, 0] = pk[k] * split
                        cells[z, k, yh, 1] = pk[k] * (1.0 - split)
                else:
                    cells[z, :, yh, y] = pk
        joint = SyntheticJoint(masses, cells)
        if joint.priors().min() < 1e-3:
            continue
        ev = np.einsum("z,zkay->ky", masses, cells)
        if full and ev.min() < 1e-3:
            continue
        return joint
    raise DataError("could not draw a perfect-prediction joint")


def smooth_joint(
    rng: np.random.Generator,
    n_cells: int,
    *,
    max_slope: float = 1.0,
):
    """Binary-class decision-only joint whose conditional class weights vary
    smoothly along a 1-D numeric proxy.

    Returns (joint, coords, lipschitz_constant) where the constant is the
    exact maximum of |w(yhat, z) - w(yhat, z')| / d0(z, z') over adjacent
    cells under the range-normalized metric, for w(yhat,z) = P(A=a|Yhat,Z).
    """
    x = np.sort(rng.random(n_cells))
    while n_cells > 1 and np.min(np.diff(x)) < 1e-3:
        x = np.sort(rng.random(n_cells))
    q1 = 0.2 + 0.6 * rng.random(n_cells)
    w = np.empty((2, n_cells))
    for yh in (0, 1):
        c = 0.2 + 0.6 * rng.random()
        s = rng.uniform(-max_slope, max_slope)
        w[yh] = np.clip(c + s * (x - 0.5), 0.05, 0.95)
    cells = np.zeros((n_cells, 2, 2, 2))
    q = np.stack([1.0 - q1, q1], axis=0)  # (yhat, z)
    for yh in (0, 1):
        cells[:, 0, yh, 0] = q[yh] * w[yh]
        cells[:, 1, yh, 0] = q[yh] * (1.0 - w[yh])
    masses = rng.dirichlet(np.ones(n_cells))
    joint = SyntheticJoint(masses, cells)
    if n_cells > 1:
        rng_x = x.max() - x.min()
        d0 = np.diff(x) / rng_x
        lip = float(np.max(np.abs(np.diff(w, axis=1)) / d0))
    else:
        lip = 0.0
    return joint, x.reshape(-1, 1), lip


def sample_rows(
    joint: SyntheticJoint,
    n_main: int,
    n_aux: int,
    rng: np.random.Generator,
    *,
    full: bool = True,
):
    """Draw main/aux record rows from the joint (shared proxy column z_0)."""
    n = joint.n_cells
    keys = [f"c{z:03d}" for z in range(n)]
    zs = rng.choice(n, size=n_main, p=joint.masses)
    main_rows = []
    for z in zs:
        flat = joint.cells[z].sum(axis=0).ravel()
        pick = rng.choice(4, p=flat / flat.sum())
        yh, y = divmod(int(pick), 2)
        row = {"z_0": keys[z], "yhat": str(yh)}
        if full:
            row["y"] = str(y)
        main_rows.append(row)
    zs = rng.choice(n, size=n_aux, p=joint.masses)
    aux_rows = []
    names = [chr(ord("a") + k) for k in range(joint.n_classes)]
    for z in zs:
        pk = joint.cells[z].sum(axis=(1, 2))
        k = rng.choice(joint.n_classes, p=pk / pk.sum())
        aux_rows.append({"z_0": keys[z], "a": names[int(k)]})
    return main_rows, aux_rows
