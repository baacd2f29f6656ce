from __future__ import annotations

import numpy as np
import pytest

from hypodist import (
    DiracPoint,
    Domain,
    GridFunction,
    RhoBall,
    UniformBox,
    build_grid,
    default_rho,
    dl_rho_oracle,
    eta_minus,
    eta_plus,
    hat_dl_rho,
    hypo_dist_estimate,
    kenmochi_ok,
    mesh_size,
    point_hypo_dist,
    realize,
)
from tests.conftest import random_monotone

# ---------------------------------------------------------------------------
# the two-step pair on [0,1]: F jumps at 1, G jumps at 1/2.  On the 100-cell
# grid each jump becomes a ramp over one cell, which makes every quantity
# below computable by hand (the ramp slope is 1/h = 100).
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def dirac_pair():
    g = build_grid(Domain([0.0], [1.0]), 101)  # 100 cells, h = 0.01
    F = realize(DiracPoint([1.0]), g)
    G = realize(DiracPoint([0.5]), g)
    return F, G, g


def test_point_hypo_dist_hand_values(dirac_pair):
    F, G, g = dirac_pair
    # from (0, 1/2) the cheapest entry into hypo F is straight down: t = 1/2
    assert point_hypo_dist(F, [0.0, 0.5]) == pytest.approx(0.5, abs=1e-12)
    # from (1/2, 1) the ramp is reached diagonally: 100(t - 0.49) + t >= 1
    assert point_hypo_dist(F, [0.5, 1.0]) == pytest.approx(50 / 101, abs=1e-12)
    # same for G's ramp seen from the origin: 101 t >= 49.5
    assert point_hypo_dist(G, [0.0, 0.5]) == pytest.approx(49.5 / 101, abs=1e-12)
    # points already inside the hypograph
    assert point_hypo_dist(F, [1.0, 0.5]) == 0.0
    assert point_hypo_dist(G, [0.5, 1.0]) == 0.0
    # scan and geometric agree
    for P, z in ((F, [0.5, 1.0]), (G, [0.2, 0.3])):
        assert point_hypo_dist(P, z, method="scan") == pytest.approx(
            point_hypo_dist(P, z, method="geometric"), abs=1e-10
        )


def test_oracle_piecewise_values(dirac_pair):
    # the continuous pair has sup values 0, 2*rho - 1/2, 1/2 at these radii;
    # the grid realization shifts each by at most two lattice steps
    F, G, g = dirac_pair
    h = mesh_size(g)
    for rho, want in ((0.2, 0.0), (0.4, 0.3), (0.8, 0.5)):
        got = dl_rho_oracle(F, G, rho, 201)
        assert got == pytest.approx(want, abs=2 * h + 1e-9), rho
    # frozen values of the realized pair (ramp slope 100, so 101 in every
    # denominator): 0 exactly, then 31/101, then 50/101
    assert dl_rho_oracle(F, G, 0.2, 201) == 0.0
    assert dl_rho_oracle(F, G, 0.4, 201) == pytest.approx(31 / 101, abs=1e-12)
    assert dl_rho_oracle(F, G, 0.8, 201) == pytest.approx(50 / 101, abs=1e-12)


def test_oracle_scan_vs_geometric(dirac_pair):
    F, G, g = dirac_pair
    for rho in (0.3, 0.7):
        a = dl_rho_oracle(F, G, rho, 41, method="scan")
        b = dl_rho_oracle(F, G, rho, 41, method="geometric")
        assert a == pytest.approx(b, abs=1e-10)


def test_hat_distance_frozen(dirac_pair):
    F, G, g = dirac_pair
    # binding condition at x = 1/2: eta + 100(eta - 0.49) >= 1, so 50/101
    got = hat_dl_rho(F, G, 1.0)
    assert got == pytest.approx(50 / 101, abs=2e-8)
    em = eta_minus(F, G, 1.0)
    ep = eta_plus(F, G, 1.0)
    assert em == pytest.approx(50 / 101, abs=1e-12)
    assert ep == pytest.approx(51 / 101, abs=1e-12)
    assert em <= got + 2e-8 and got <= ep + 2e-8


def test_kenmochi_ok_threshold(dirac_pair):
    F, G, g = dirac_pair
    assert not kenmochi_ok(F, G, 1.0, 0.49)
    assert kenmochi_ok(F, G, 1.0, 0.5)
    with pytest.raises(ValueError):
        kenmochi_ok(F, G, 1.0, -0.1)


def test_integral_bracket_and_quad_term(dirac_pair):
    F, G, g = dirac_pair
    # closed form for the continuous pair: the integrand is 0 up to 1/4,
    # 2 rho - 1/2 on [1/4, 1/2], then 1/2
    exact = 2 * np.exp(-0.25) - 2 * np.exp(-0.5)
    rep = hypo_dist_estimate(F, G, quad_points=64)
    assert rep.lower_bound <= rep.value <= rep.upper_bound
    assert abs(rep.value - exact) < 0.01
    assert rep.quad_term is not None
    assert rep.width() == pytest.approx(rep.quad_term, abs=1e-12)
    # frozen bracket of the realized pair
    assert rep.lower_bound == pytest.approx(0.300263, abs=1e-5)
    assert rep.upper_bound == pytest.approx(0.391616, abs=1e-5)


def test_identical_functions(dirac_pair):
    F, _, g = dirac_pair
    U = realize(UniformBox([0.0], [1.0]), g)
    assert hat_dl_rho(U, U, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert eta_minus(U, U, 1.0) == 0.0
    # the partition bound pays half a cell of oscillation even at f = g
    assert eta_plus(U, U, 1.0) == pytest.approx(0.005, abs=1e-12)
    # the steep ramp costs a full cell instead
    assert eta_plus(F, F, 1.0) == pytest.approx(1 / 101, abs=1e-12)
    rep = hypo_dist_estimate(U, U, quad_points=16)
    assert rep.value == pytest.approx(0.0, abs=1e-9)


def test_hat_distance_nondecreasing_in_rho(rng, unit_square_grid):
    F = random_monotone(rng, unit_square_grid)
    G = random_monotone(rng, unit_square_grid)
    rhos = (0.25, 0.5, 1.0, 2.0)
    vals = [hat_dl_rho(F, G, r) for r in rhos]
    for lo, hi in zip(vals, vals[1:]):
        assert hi >= lo - 1e-12
    # symmetric in the pair
    assert hat_dl_rho(G, F, 1.0) == pytest.approx(vals[2], abs=1e-12)


def test_sandwich_on_random_pairs(rng):
    g = build_grid(Domain([0.0, 0.0], [1.0, 1.0]), 6)
    rho = default_rho(g.domain)
    for _ in range(25):
        F = random_monotone(rng, g)
        G = random_monotone(rng, g)
        em = eta_minus(F, G, rho)
        hat = hat_dl_rho(F, G, rho)
        ep = eta_plus(F, G, rho)
        assert em <= hat + 2e-8
        assert hat <= ep + 2e-8


def test_ordering_against_oracle(rng):
    # the sampled sup of the truncated distance never exceeds the shift
    # distance at twice the radius
    g = build_grid(Domain([0.0, 0.0], [1.0, 1.0]), 5)
    for _ in range(10):
        F = random_monotone(rng, g)
        G = random_monotone(rng, g)
        for rho in (0.5, 1.0):
            oracle = dl_rho_oracle(F, G, rho, 9)
            hat2 = hat_dl_rho(F, G, 2 * rho)
            assert oracle <= hat2 + 2e-8


def test_eta_plus_tiny_rho(rng, unit_square_grid):
    # the violation cap min(f, rho) collapses as rho -> 0
    F = random_monotone(rng, unit_square_grid)
    G = random_monotone(rng, unit_square_grid)
    assert eta_plus(F, G, 1e-9) <= 2e-9
    assert eta_minus(F, G, 1e-9) <= 2e-9


def test_rho_ball_region_and_default_rho(unit_square_grid):
    ball = RhoBall(0.5)
    lo, hi = ball.region(unit_square_grid.domain)
    assert np.allclose(lo, [0.0, 0.0]) and np.allclose(hi, [0.5, 0.5])
    # a domain entirely outside the ball has no test region
    assert RhoBall(0.5).region(Domain([2.0], [3.0])) is None
    with pytest.raises(ValueError):
        RhoBall(0.0)
    with pytest.raises(ValueError):
        RhoBall(-1.0)
    r = default_rho(unit_square_grid.domain)
    assert r == pytest.approx(1.0 + unit_square_grid.domain.diameter())


def test_pair_validation_errors(unit_square_grid, unit_interval_grid, rng):
    F = random_monotone(rng, unit_square_grid)
    H = random_monotone(rng, unit_interval_grid)
    with pytest.raises(ValueError):
        hat_dl_rho(F, H, 1.0)  # mismatched grids
    with pytest.raises(ValueError):
        hat_dl_rho(F, F, -1.0)
    with pytest.raises(ValueError):
        dl_rho_oracle(F, F, 1.0, 1)  # lattice needs at least two samples
    bare = GridFunction(F.grid, 1, F.values)  # monotone flag required
    with pytest.raises(ValueError):
        hat_dl_rho(bare, F, 1.0)


def test_hypo_dist_estimate_report_fields(rng, unit_square_grid):
    F = random_monotone(rng, unit_square_grid)
    G = random_monotone(rng, unit_square_grid)
    rep = hypo_dist_estimate(F, G, quad_points=24)
    assert rep.lower_bound <= rep.value <= rep.upper_bound
    assert rep.method.endswith("24")
    # more quadrature points must not widen the bracket meaningfully
    rep2 = hypo_dist_estimate(F, G, quad_points=48)
    assert rep2.width() <= rep.width() + 1e-9
