"""Acceptance gate: one test per shipping criterion, each printing its verdict.

Every test funnels through ``_gate`` so the log shows one [PASS]/[FAIL] line
per criterion.  Fixtures shared across criteria (the 50-cell two-uniforms
ladder, the synthetic tracking runs) are computed once per module.
"""
from __future__ import annotations

import time

import numpy as np
import pytest

from hypodist import (
    DiracPoint,
    Domain,
    EstimationProblem,
    SampleSet,
    ShapeConstraints,
    build_grid,
    closure_fixture,
    delta_rect,
    density_convergence,
    distribution_error_pct,
    dl_rho_oracle,
    empirical_cdf,
    estimate,
    expected_value,
    hat_dl_rho,
    hypo_dist_estimate,
    mesh_size,
    realize,
    solve,
    two_uniforms_scenario,
    uuv_scenario,
    verify_sandwich,
)
from hypodist.lp import brute_force_minimum, constraint_residuals
from tests.conftest import random_feasible_lp, random_lipschitz, random_monotone


def _gate(num: int, slug: str, ok: bool, detail: str = "") -> None:
    verdict = "PASS" if ok else "FAIL"
    line = f"[{verdict}] criterion {num:02d} {slug}"
    if detail:
        line += f" — {detail}"
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# shared fixtures
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def ladder50():
    """Two-uniforms estimates at 50 cells/axis for the full delta ladder."""
    sc = two_uniforms_scenario(cells_per_axis=50)
    g = build_grid(sc.domain, 51)
    F0, G0 = realize(sc.F0, g), realize(sc.G0, g)
    runs = {}
    t0 = time.monotonic()
    for delta in sc.deltas:
        runs[delta] = estimate(EstimationProblem(F0, G0, delta))
    elapsed = time.monotonic() - t0
    return {"F0": F0, "G0": G0, "grid": g, "runs": runs, "elapsed": elapsed,
            "deltas": sc.deltas}


@pytest.fixture(scope="module")
def uuv_runs():
    sc = uuv_scenario(seed=7)
    g = build_grid(sc.domain, tuple(c + 1 for c in sc.cells_per_axis))
    F0 = empirical_cdf(SampleSet(sc.samples["target"]), g)
    G0 = empirical_cdf(SampleSet(sc.samples["anchor"]), g)
    out = []
    for delta in sc.deltas:  # (0.9, 0.1, 0.01)
        res = estimate(EstimationProblem(F0, G0, delta))
        out.append((delta, res))
    return {"F0": F0, "G0": G0, "runs": out}


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def test_criterion_01_sandwich_random_pairs():
    rng = np.random.default_rng(101)
    g = build_grid(Domain([0.0, 0.0], [1.0, 1.0]), 11)
    rho = 1.0 + float(g.domain.diameter())
    t0 = time.monotonic()
    worst = 0.0
    for _ in range(200):
        F = random_monotone(rng, g)
        G = random_monotone(rng, g)
        em = eta_minus_local(F, G, rho)
        hat = hat_dl_rho(F, G, rho)
        ep = eta_plus_local(F, G, rho)
        worst = max(worst, em - hat, hat - ep)
    elapsed = time.monotonic() - t0
    ok = worst <= 2e-8 and elapsed < 120.0
    _gate(1, "sandwich-200-pairs", ok,
          f"worst gap {worst:.2e}, {elapsed:.1f}s")


def eta_minus_local(F, G, rho):
    from hypodist import eta_minus

    return eta_minus(F, G, rho)


def eta_plus_local(F, G, rho):
    from hypodist import eta_plus

    return eta_plus(F, G, rho)


def test_criterion_02_lipschitz_gap():
    rng = np.random.default_rng(102)
    g = build_grid(Domain([0.0, 0.0], [1.0, 1.0]), 11)
    kappa, mesh = 1.0, mesh_size(g)
    worst = -np.inf
    for _ in range(50):
        F = random_lipschitz(rng, g, kappa)
        G = random_lipschitz(rng, g, kappa)
        rep = verify_sandwich(F, G, 1.0, samples_per_axis=5)
        worst = max(worst, rep.eta_plus - rep.eta_minus)
    ok = worst <= kappa * mesh + 2e-8
    _gate(2, "lipschitz-gap", ok,
          f"max gap {worst:.4f} vs bound {kappa * mesh:.4f}")


def test_criterion_03_ordering_with_shrinking_slack():
    rng = np.random.default_rng(103)
    g = build_grid(Domain([0.0, 0.0], [1.0, 1.0]), 7)
    ok = True
    detail = ""
    for i in range(50):
        F = random_monotone(rng, g)
        G = random_monotone(rng, g)
        for rho in (0.25, 0.5, 1.0):
            coarse = verify_sandwich(F, G, rho, samples_per_axis=9)
            fine = verify_sandwich(F, G, rho, samples_per_axis=17)
            checks = (
                coarse.hat_rho <= coarse.oracle + coarse.lattice_slack + 1e-8,
                fine.hat_rho <= fine.oracle + fine.lattice_slack + 1e-8,
                coarse.oracle <= coarse.hat_two_rho + 2e-8,
                fine.oracle <= fine.hat_two_rho + 2e-8,
                fine.lattice_slack < coarse.lattice_slack,
            )
            if not all(checks):
                ok = False
                detail = f"pair {i}, rho {rho}: {checks}"
                break
        if not ok:
            break
    _gate(3, "ordering-oracle-slack", ok, detail or "150 pair-rho cases")


def test_criterion_04_hypo_distance_bracket():
    rng = np.random.default_rng(104)
    g = build_grid(Domain([0.0, 0.0], [1.0, 1.0]), 7)
    rho_bar_cap = np.exp(-1.0)  # saturation radius of the unit square is 1
    ok = True
    for _ in range(10):
        F = random_monotone(rng, g)
        G = random_monotone(rng, g)
        rep = hypo_dist_estimate(F, G, quad_points=16)
        inside = rep.lower_bound - 1e-12 <= rep.value <= rep.upper_bound + 1e-12
        width_ok = rep.width() <= rho_bar_cap + rep.quad_term + 1e-12
        ok = ok and inside and width_ok
    _gate(4, "hypo-distance-bracket", ok, "10 random pairs, 16-point rule")


def test_criterion_05_dirac_fixture():
    g = build_grid(Domain([0.0], [1.0]), 101)
    F = realize(DiracPoint([1.0]), g)
    G = realize(DiracPoint([0.5]), g)
    step = 2 * mesh_size(g)
    targets = {0.2: 0.0, 0.4: 0.3, 0.8: 0.5}
    oracle_ok = all(
        abs(dl_rho_oracle(F, G, rho, 201) - want) <= step + 1e-9
        for rho, want in targets.items()
    )
    exact = 2 * np.exp(-0.25) - 2 * np.exp(-0.5)
    rep = hypo_dist_estimate(F, G, quad_points=64)
    integral_ok = abs(rep.value - exact) < 0.01
    _gate(5, "dirac-fixture", oracle_ok and integral_ok,
          f"integral {rep.value:.5f} vs {exact:.5f}")


def test_criterion_06_two_uniforms_ladder(ladder50):
    runs = ladder50["runs"]
    r070, r010, r0 = runs[0.7], runs[0.1], runs[1e-4]
    ok = (
        0.25 <= r070.eta <= 0.35 and r070.slack <= 1e-6
        and 0.84 <= r010.eta <= 0.94 and r010.slack <= 1e-6
        and r0.eta == 1.0 and r0.slack > 0.0
        and ladder50["elapsed"] <= 900.0
    )
    _gate(6, "two-uniforms-table", ok,
          f"eta(0.70)={r070.eta:.4f}, eta(0.10)={r010.eta:.4f}, "
          f"s(1e-4)={r0.slack:.4f}, {ladder50['elapsed']:.0f}s")


def test_criterion_07_bounded_growth(ladder50):
    F0, G0, g = ladder50["F0"], ladder50["G0"], ladder50["grid"]
    h = mesh_size(g)
    res = estimate(EstimationProblem(
        F0, G0, 0.70, shape=ShapeConstraints(bounded_growth=1.0)))
    V = res.solution.values
    slopes = (
        np.max(np.abs(np.diff(V, axis=0))) / h,
        np.max(np.abs(np.diff(V, axis=1))) / h,
        np.max(np.abs(V[1:, 1:] - V[:-1, :-1])) / h,
    )
    tight = estimate(EstimationProblem(
        F0, G0, 0.10, shape=ShapeConstraints(bounded_growth=0.85)))
    ok = (
        0.25 <= res.eta <= 0.35
        and max(slopes) <= 1.0 + 1e-8
        and tight.eta == 1.0 and tight.slack > 0.0
    )
    _gate(7, "bounded-growth", ok,
          f"eta={res.eta:.4f}, max slope {max(slopes):.6f}, "
          f"tight slack {tight.slack:.2e}")


def test_criterion_08_distribution_error(ladder50):
    worst = max(
        distribution_error_pct(res.solution, budget=200_000)
        for res in ladder50["runs"].values()
    )
    spec_err = max(
        distribution_error_pct(ladder50["F0"]),
        distribution_error_pct(ladder50["G0"]),
    )
    ok = worst < 2.0 and spec_err == 0.0
    _gate(8, "distribution-error", ok,
          f"worst solution {worst:.3f}%, realized specs {spec_err:.1f}%")


def test_criterion_09_eta_monotone_in_delta(ladder50):
    runs = ladder50["runs"]
    etas = [runs[d].eta for d in (1.0, 0.7, 0.4, 0.1)]
    ok = all(b >= a - 1e-9 for a, b in zip(etas, etas[1:]))
    _gate(9, "eta-monotone-in-delta", ok,
          "etas " + ", ".join(f"{e:.3f}" for e in etas))


def test_criterion_10_density_convergence():
    seq = density_convergence(
        DiracPoint([0.5, 0.5]), (4, 8, 16, 32),
        domain=Domain([0.0, 0.0], [1.0, 1.0]),
    )
    vals = [r.value for r in seq]
    ok = all(b < a for a, b in zip(vals, vals[1:])) and vals[-1] <= 0.1
    _gate(10, "density-convergence", ok,
          "distances " + ", ".join(f"{v:.4f}" for v in vals))


def test_criterion_11_closure_fixture():
    fixtures = [closure_fixture(nu) for nu in (1, 2, 4, 8)]
    deltas_ok = all(fx.delta_nu == 0.0 for fx in fixtures)
    limit_ok = fixtures[0].delta_limit == -1.0
    vals = [fx.distance.value for fx in fixtures]
    decreasing = all(b < a for a, b in zip(vals, vals[1:]))
    _gate(11, "closure-fixture", deltas_ok and limit_ok and decreasing,
          "dl " + ", ".join(f"{v:.4f}" for v in vals))


def test_criterion_12_uuv_trend(uuv_runs):
    anchor_ev = expected_value(uuv_runs["G0"], neg_tol=1e-6)
    dists, etas = [], []
    for delta, res in uuv_runs["runs"]:
        ev = expected_value(res.solution, neg_tol=1e-6)
        dists.append(float(np.linalg.norm(ev - anchor_ev)))
        etas.append(res.eta)
    dist_ok = all(b <= a + 1e-9 for a, b in zip(dists, dists[1:]))
    eta_ok = all(b >= a - 1e-9 for a, b in zip(etas, etas[1:]))
    _gate(12, "uuv-trend", dist_ok and eta_ok,
          "EV distances " + ", ".join(f"{d:.3f}" for d in dists)
          + "; etas " + ", ".join(f"{e:.3f}" for e in etas))


def test_criterion_13_lp_core():
    rng = np.random.default_rng(113)
    checked = cross_checked = 0
    worst_resid = 0.0
    ok = True
    for i in range(100):
        if i < 20:  # keep a pool small enough for vertex enumeration
            n_vars = int(rng.integers(2, 5))
            n_cons = int(rng.integers(1, 5))
        else:
            n_vars = int(rng.integers(2, 51))
            n_cons = int(rng.integers(1, 16))
        model, _ = random_feasible_lp(rng, n_vars, n_cons)
        sol = solve(model, method="simplex")
        if not sol.ok:
            ok = False
            break
        resid = float(np.max(constraint_residuals(model, sol.x), initial=0.0))
        bounds_lo, bounds_hi = model.bounds
        resid = max(resid,
                    float(np.max(bounds_lo - sol.x, initial=0.0)),
                    float(np.max(sol.x - bounds_hi, initial=0.0)))
        worst_resid = max(worst_resid, resid)
        checked += 1
        if model.n_constraints <= 12 and n_vars <= 5:
            best, _ = brute_force_minimum(model)
            if abs(best - sol.objective) > 1e-7:
                ok = False
                break
            cross_checked += 1
    ok = ok and checked == 100 and worst_resid <= 1e-9 and cross_checked >= 15
    _gate(13, "lp-core", ok,
          f"{checked} solved, {cross_checked} cross-checked, "
          f"max residual {worst_resid:.1e}")
