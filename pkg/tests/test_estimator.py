from __future__ import annotations

import numpy as np
import pytest

from hypodist import (
    Domain,
    EstimationProblem,
    GridFunction,
    ShapeConstraints,
    ShapeInfeasibleError,
    UniformBox,
    build_grid,
    estimate,
    eta_plus,
    expected_value,
    min_slack,
    realize,
    refinement_study,
    shape_violation,
    two_uniforms_scenario,
)
from hypodist.estimator import assemble_lp


@pytest.fixture(scope="module")
def two_uniforms_10():
    sc = two_uniforms_scenario(cells_per_axis=10)
    g = build_grid(sc.domain, 11)
    return realize(sc.F0, g), realize(sc.G0, g)


def identity_problem(cells=10, delta=0.5):
    g = build_grid(Domain([0.0], [1.0]), cells + 1)
    F0 = realize(UniformBox([0.0], [1.0]), g)
    return EstimationProblem(F0, F0, delta)


# ---------------------------------------------------------------------------
# LP assembly
# ---------------------------------------------------------------------------


def test_row_counts_two_cell_monotone_only():
    # 1 axis, 2 cells, monotone constraint only: 3 node values + slack,
    # 2 monotone rows, and 2 shift rows per side per anchor = 8
    g = build_grid(Domain([0.0], [1.0]), 3)
    F0 = realize(UniformBox([0.0], [1.0]), g)
    shape = ShapeConstraints(boundary_zero=False, boundary_one=False,
                             distribution_condition=False)
    prob = EstimationProblem(F0, F0, 0.5, shape=shape)
    model, counts = assemble_lp(prob, 0.3)
    assert model.n_variables == 4
    assert counts["monotone"] == 2
    assert counts["distribution"] == 0
    assert counts["growth"] == 0
    distance_rows = (counts["target_lower"] + counts["target_upper"]
                     + counts["ambiguity_lower"] + counts["ambiguity_upper"])
    assert distance_rows == 8
    assert counts["slack_index"] == 3


def test_upper_rows_dropped_when_capped():
    # an upper shift row is vacuous once its right side reaches the
    # truncation level, so a tiny rho drops them all
    g = build_grid(Domain([0.0], [1.0]), 3)
    F0 = realize(UniformBox([0.0], [1.0]), g)
    shape = ShapeConstraints(boundary_zero=False, boundary_one=False,
                             distribution_condition=False)
    tight = EstimationProblem(F0, F0, 0.5, rho=0.05, shape=shape)
    _, counts = assemble_lp(tight, 0.3)
    assert counts["target_upper"] == 0
    assert counts["ambiguity_upper"] == 0
    assert counts["target_lower"] == 2  # lower rows are always kept


def test_growth_rows_counted_once_per_edge():
    g = build_grid(Domain([0.0, 0.0], [1.0, 1.0]), 3)
    F0 = realize(UniformBox([0.0, 0.0], [1.0, 1.0]), g)
    prob = EstimationProblem(F0, F0, 0.5,
                             shape=ShapeConstraints(bounded_growth=2.0))
    _, counts = assemble_lp(prob, 0.3)
    # 2x2 cells: 12 axis edges + 4 diagonals, one directed row each
    assert counts["growth"] == 16


# ---------------------------------------------------------------------------
# min_slack / estimate
# ---------------------------------------------------------------------------


def test_identity_target_needs_half_cell_shift():
    # with F0 == G0 the smallest workable shift is half a cell: the upper
    # row v(u) <= F0(l) + 2 eta chain crosses at eta = h/2
    prob = identity_problem(cells=10)
    s, F = min_slack(prob, 0.05)
    assert s <= 1e-8
    with pytest.raises(ShapeInfeasibleError):
        min_slack(prob, 0.049)
    res = estimate(prob)
    assert res.eta == pytest.approx(0.05, abs=1e-7)
    assert res.slack <= 1e-8


def test_estimate_two_uniforms_small(two_uniforms_10):
    F0, G0 = two_uniforms_10
    prob = EstimationProblem(F0, G0, 0.7)
    res = estimate(prob)
    assert res.eta == pytest.approx(0.3, abs=1e-7)
    assert res.slack <= 1e-6
    ev = expected_value(res.solution, neg_tol=1e-6)
    assert np.all(ev > 1.0) and np.all(ev < 1.6)  # pulled toward the anchor
    # history records the eta=1 probe first, then the bisection path
    assert res.history[0][0] == 1.0
    assert res.wall_time > 0
    assert shape_violation(prob, res.solution) <= 1e-8


def test_eta_nonincreasing_in_delta(two_uniforms_10):
    F0, G0 = two_uniforms_10
    etas = []
    for delta in (1.0, 0.7, 0.4, 0.1):
        res = estimate(EstimationProblem(F0, G0, delta))
        etas.append(res.eta)
    for a, b in zip(etas, etas[1:]):
        assert b >= a - 1e-9


def test_slack_nonincreasing_in_eta(two_uniforms_10):
    F0, G0 = two_uniforms_10
    prob = EstimationProblem(F0, G0, 0.7)
    vals = []
    for eta in (0.3, 0.5, 0.9, 1.0):
        s, _ = min_slack(prob, eta)
        vals.append(s)
    for a, b in zip(vals, vals[1:]):
        assert b <= a + 1e-9


def test_saturated_delta_reports_positive_slack(two_uniforms_10):
    # an ambiguity ball this tight cannot be reached: eta stops at 1 and
    # the residual slack is the certificate
    F0, G0 = two_uniforms_10
    res = estimate(EstimationProblem(F0, G0, 1e-4))
    assert res.eta == 1.0
    assert res.slack > 1e-6
    assert len(res.history) == 1


def test_surrogate_invariants(two_uniforms_10):
    # the solution stays within eta of the target and delta + slack of the
    # anchor, measured by the one-sided partition bound
    F0, G0 = two_uniforms_10
    delta = 0.7
    prob = EstimationProblem(F0, G0, delta)
    res = estimate(prob)
    eps = prob.tol
    assert eta_plus(res.solution, F0, prob.rho) <= res.eta + res.slack + 2 * eps
    assert eta_plus(res.solution, G0, prob.rho) <= delta + res.slack + 2 * eps


def test_fifty_cell_slack_frozen():
    # the saturated two-uniforms problem at desk scale: the certificate
    # slack is stable across solver paths
    sc = two_uniforms_scenario(cells_per_axis=50)
    g = build_grid(sc.domain, 51)
    prob = EstimationProblem(realize(sc.F0, g), realize(sc.G0, g), 1e-4)
    s, F = min_slack(prob, 1.0)
    assert s == pytest.approx(0.116106, abs=2e-3)
    assert shape_violation(prob, F) <= 1e-8


def test_bounded_growth_enforced(two_uniforms_10):
    F0, G0 = two_uniforms_10
    prob = EstimationProblem(F0, G0, 0.7,
                             shape=ShapeConstraints(bounded_growth=1.0))
    res = estimate(prob)
    assert res.eta == pytest.approx(0.3, abs=1e-7)
    V = res.solution.values
    h = 0.3
    assert np.max(np.abs(np.diff(V, axis=0))) <= h * 1.0 + 1e-8
    assert np.max(np.abs(np.diff(V, axis=1))) <= h * 1.0 + 1e-8
    assert np.max(V[1:, 1:] - V[:-1, :-1]) <= h * 1.0 + 1e-8
    assert shape_violation(prob, res.solution) <= 1e-8


def test_impossible_shape_raises(two_uniforms_10):
    # growth bound 0 forces a constant surface, which contradicts the
    # 0-at-lower / 1-at-upper boundary pins at every eta
    F0, G0 = two_uniforms_10
    prob = EstimationProblem(F0, G0, 0.7,
                             shape=ShapeConstraints(bounded_growth=0.0))
    with pytest.raises(ShapeInfeasibleError):
        min_slack(prob, 1.0)
    with pytest.raises(ShapeInfeasibleError):
        estimate(prob)


def test_estimate_is_deterministic(two_uniforms_10):
    F0, G0 = two_uniforms_10
    r1 = estimate(EstimationProblem(F0, G0, 0.4))
    r2 = estimate(EstimationProblem(F0, G0, 0.4))
    assert r1.eta == r2.eta
    assert np.array_equal(r1.solution.values, r2.solution.values)


# ---------------------------------------------------------------------------
# problem validation
# ---------------------------------------------------------------------------


def test_problem_validation(two_uniforms_10, unit_square_grid, rng):
    F0, G0 = two_uniforms_10
    from tests.conftest import random_monotone

    other = random_monotone(rng, unit_square_grid)
    with pytest.raises(ValueError):
        EstimationProblem(F0, other, 0.5)  # different grids
    with pytest.raises(ValueError):
        EstimationProblem(F0, G0, -0.1)
    with pytest.raises(ValueError):
        EstimationProblem(F0, G0, np.inf)
    with pytest.raises(ValueError):
        EstimationProblem(F0, G0, 0.5, rho=-1.0)
    with pytest.raises(ValueError):
        EstimationProblem(F0, G0, 0.5, tol=0.0)
    bare = GridFunction(F0.grid, 1, F0.values)  # monotone flag missing
    with pytest.raises(ValueError):
        EstimationProblem(bare, G0, 0.5)
    big = GridFunction(F0.grid, 1, F0.values * 2.0, monotone=True)
    with pytest.raises(ValueError):
        EstimationProblem(big, G0, 0.5)  # range leaves [0, 1]
    with pytest.raises(ValueError):
        ShapeConstraints(monotone=False)
    with pytest.raises(ValueError):
        ShapeConstraints(bounded_growth=-1.0)
    assert prob_grid_roundtrip(F0, G0)


def prob_grid_roundtrip(F0, G0):
    prob = EstimationProblem(F0, G0, 0.5)
    return prob.grid == F0.grid and prob.rho > 0


# ---------------------------------------------------------------------------
# refinement study
# ---------------------------------------------------------------------------


def test_refinement_study_shape():
    prob = identity_problem(cells=4)
    rep = refinement_study(prob, (1, 2, 4), quad_points=8)
    assert tuple(rep.factors) == (1, 2, 4)
    assert len(rep.results) == 3
    assert len(rep.consecutive_distances) == 2
    # the target is exactly representable at every level, so the refined
    # solutions stay close to each other
    for d in rep.consecutive_distances:
        assert d.value < 0.2


def test_refinement_study_validation():
    prob = identity_problem(cells=4)
    with pytest.raises(ValueError):
        refinement_study(prob, (2,))  # need at least two levels
    with pytest.raises(ValueError):
        refinement_study(prob, (2, 3))  # 2 does not divide 3
    with pytest.raises(ValueError):
        refinement_study(prob, (4, 2))  # not increasing
