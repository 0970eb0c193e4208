import importlib.resources as resources

import numpy as np
import pytest

from disparity_bounds.problem import make_problem


def fixture_path(name: str) -> str:
    return str(resources.files("disparity_bounds") / "fixtures" / name)


@pytest.fixture
def rng():
    return np.random.default_rng(20240809)


# --- canonical tiny instances used across modules -------------------------


@pytest.fixture
def skew_cell_problem():
    """Single cell, P(a|z)=0.9, P(Yhat=1|z)=0.5; DD interval is +/- 5/9."""
    return make_problem([1.0], [[0.9, 0.1]], p_yhat=[[0.5, 0.5]])


@pytest.fixture
def perfect_class_problem():
    """Two cells with one-hot class marginals; DD identified at 0.4."""
    return make_problem(
        [0.5, 0.5], [[1.0, 0.0], [0.0, 1.0]], p_yhat=[[0.3, 0.7], [0.7, 0.3]]
    )


@pytest.fixture
def uniform_full_problem():
    """Single cell, uniform 2x2 outcome table, P(a|z)=0.5; TPRD is [-1, 1]."""
    return make_problem([1.0], [[0.5, 0.5]], p_table=[[[0.25, 0.25], [0.25, 0.25]]])


@pytest.fixture
def perfect_outcome_problem():
    """Degenerate outcome tables per cell; TPRD identified at 0.2."""
    return make_problem(
        [0.5, 0.5],
        [[0.6, 0.4], [0.4, 0.6]],
        p_table=[[[0, 0], [0, 1]], [[0, 1], [0, 0]]],
    )


@pytest.fixture
def lmin_problem():
    """Two cells at coords 0 and 1; minimal feasible Lipschitz scale is 0.4."""
    return make_problem(
        [0.5, 0.5],
        [[0.3, 0.7], [0.7, 0.3]],
        p_yhat=[[0.5, 0.5], [0.5, 0.5]],
        coords=[[0.0], [1.0]],
    )


# --- random instance generators -------------------------------------------


def random_decision_problem(rng, max_cells=8, n_classes=2, min_prior=0.02):
    while True:
        n = int(rng.integers(1, max_cells + 1))
        masses = rng.dirichlet(np.ones(n))
        p_class = rng.dirichlet(np.ones(n_classes), size=n)
        if (masses @ p_class).min() < min_prior:
            continue
        p_yhat = rng.dirichlet(np.ones(2), size=n)
        return make_problem(masses, p_class, p_yhat=p_yhat)


def random_full_problem(rng, max_cells=3, healthy=True):
    """Binary-class full-mode problem; healthy keeps denominators away from 0."""
    while True:
        n = int(rng.integers(1, max_cells + 1))
        masses = rng.dirichlet(np.ones(n))
        if healthy:
            pa = 0.15 + 0.7 * rng.random(n)
            tbl = rng.dirichlet(np.ones(4) * 2, size=n).reshape(n, 2, 2) * 0.8 + 0.05
            tbl = tbl / tbl.sum(axis=(1, 2), keepdims=True)
        else:
            pa = rng.random(n)
            tbl = rng.dirichlet(np.ones(4), size=n).reshape(n, 2, 2)
        p_class = np.stack([pa, 1.0 - pa], axis=1)
        pr = make_problem(masses, p_class, p_table=tbl)
        pri = masses @ p_class
        if pri.min() < 0.05:
            continue
        return pr
