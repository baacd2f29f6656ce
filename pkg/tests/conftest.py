"""Shared generators: random monotone pairs, Lipschitz pairs, random LPs."""

from __future__ import annotations

import numpy as np
import pytest

from hypodist import Domain, Grid, GridFunction, build_grid
from hypodist.lp import LPModel


def random_monotone(rng: np.random.Generator, grid: Grid) -> GridFunction:
    """Random CDF-like function: nonnegative cell mass, cumulated, scaled so
    the top corner hits a random level in (0, 1]."""
    mass = rng.exponential(size=grid.cell_counts)
    values = mass
    for ax in range(grid.dim):
        values = np.cumsum(values, axis=ax)
        pad = [(1, 0) if a == ax else (0, 0) for a in range(grid.dim)]
        values = np.pad(values, pad)
    top = values.reshape(-1)[-1]
    scale = rng.uniform(0.2, 1.0) / top
    values = values * scale
    # occasional monotone warp for diversity
    if rng.random() < 0.5:
        gamma = rng.uniform(0.5, 2.0)
        values = values ** gamma * float(np.max(values)) ** (1.0 - gamma)
    return GridFunction(grid, 1, values, monotone=True)


def random_lipschitz(
    rng: np.random.Generator, grid: Grid, kappa: float
) -> GridFunction:
    """Monotone function that is genuinely kappa-Lipschitz in the max norm:
    a convex blend of per-coordinate ramps and a min-ramp, then clipped."""
    nodes = grid.node_lattice()
    lo = np.asarray(grid.domain.lower)
    m = grid.dim
    theta = rng.dirichlet(np.ones(m + 1))
    shift = rng.uniform(0.0, 0.5 * grid.domain.diameter())
    rel = nodes - lo
    blend = rel @ theta[:m] + theta[m] * np.min(rel, axis=1)
    values = np.clip(kappa * (blend - shift), 0.0, 1.0).reshape(grid.shape)
    return GridFunction(grid, 1, values, monotone=True)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260816)


@pytest.fixture
def unit_square_grid() -> Grid:
    return build_grid(Domain([0.0, 0.0], [1.0, 1.0]), 11)


@pytest.fixture
def unit_interval_grid() -> Grid:
    return build_grid(Domain([0.0], [1.0]), 11)


def random_feasible_lp(
    rng: np.random.Generator, n_vars: int, n_cons: int
) -> tuple[LPModel, np.ndarray]:
    """Random bounded LP guaranteed feasible: constraints are anchored at a
    known interior point with nonnegative margin.  Returns (model, anchor)."""
    model = LPModel(name=f"random-{n_vars}x{n_cons}")
    upper = rng.uniform(1.0, 5.0, size=n_vars)
    anchor = rng.uniform(0.0, 1.0, size=n_vars) * upper
    cost = rng.normal(size=n_vars)
    for j in range(n_vars):
        model.add_variable(lower=0.0, upper=float(upper[j]),
                           objective=float(cost[j]))
    for _ in range(n_cons):
        k = int(rng.integers(1, min(n_vars, 5) + 1))
        idx = rng.choice(n_vars, size=k, replace=False)
        coef = rng.normal(size=k)
        lhs = float(coef @ anchor[idx])
        margin = float(rng.uniform(0.0, 1.0))
        if rng.random() < 0.5:
            model.add_constraint(idx, coef, "<=", lhs + margin)
        else:
            model.add_constraint(idx, coef, ">=", lhs - margin)
    return model, anchor
