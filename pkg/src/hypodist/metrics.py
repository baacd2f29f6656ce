"""Hypograph distances between monotone [0, 1]-valued grid functions.

All computations work with the product max-norm on graph space: a test point
pairs a domain point x with a level x0, and its norm is
max(||x||_inf, |x0|).  Three layers are provided, from slow-and-independent
to fast-and-certified:

* ``point_hypo_dist`` - distance from one test point (x, x0) to the hypograph
  {(y, y0) : y in S, y0 <= f(y)}.  Two routes: a geometric per-piece
  minimization that enumerates candidate minimizers on every linear piece of
  the graph, and a root-scan that exploits monotonicity,

      dist((x, x0), hypo f) = inf{t >= 0 : f(min(x + t, b)) + t >= x0},

  the left side being piecewise linear and strictly increasing in t.

* ``dl_rho_oracle`` - brute-force truncated distance: the max over a sample
  lattice of test points with ||(x, x0)|| <= rho of the difference of the two
  point-to-hypograph distances.  Used as an independent reference.

* ``hat_dl_rho`` / ``eta_plus`` / ``eta_minus`` - the certified shift
  distance.  For monotone f, g the capped one-sided condition

      g(min(x + eta, b)) + eta >= min(f(x), rho)   for all x in S, ||x|| <= rho

  and its mirror image define a feasibility region in eta whose infimum is
  the shift distance.  Feasibility is decided *exactly* (up to floating
  point) by maximizing the violation over the region: the violation is
  piecewise linear, so its maximum sits on a vertex of the kink arrangement,
  all of which are enumerated.  ``eta_plus``/``eta_minus`` are the cell-corner
  relaxations bracketing the shift distance from above and below.

* ``hypo_dist_estimate`` - certified two-sided bracket of the exponentially
  weighted integral of the truncated distances over all radii, built from
  shift distances on a radius quadrature together with the facts that the
  shift distance is nondecreasing in rho, sandwiches the truncated distance
  between radii rho and 2 rho, and saturates once the ball swallows the
  domain and the unit range.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .functions import GridFunction
from .grid import Domain, Grid, locate_batch

logger = logging.getLogger(__name__)

__all__ = [
    "RhoBall",
    "DistanceReport",
    "default_rho",
    "point_hypo_dist",
    "dl_rho_oracle",
    "kenmochi_ok",
    "hat_dl_rho",
    "eta_plus",
    "eta_minus",
    "hypo_dist_estimate",
]

# Feasibility slack: range and solver tolerances leak into the violation sup,
# so "satisfied" means "violation below this".
SUP_TOL = 1e-9
RANGE_ATOL = 1e-9
_TINY = 1e-15


@dataclass(frozen=True)
class RhoBall:
    """Max-norm ball of test points: ||(x, x0)|| = max(||x||_inf, |x0|) <= radius."""

    radius: float

    def __post_init__(self) -> None:
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"ball radius must be positive and finite, got {self.radius}")

    def region(self, domain: Domain) -> tuple[np.ndarray, np.ndarray] | None:
        """Bounds of {x in S : ||x||_inf <= radius}, or None when empty."""
        lo = np.maximum(domain.lower, -self.radius)
        hi = np.minimum(domain.upper, self.radius)
        if np.any(lo > hi):
            return None
        return lo, hi


@dataclass(frozen=True)
class DistanceReport:
    """A distance value together with a certified two-sided bracket.

    ``quad_term`` (when set) is the quadrature oscillation sum — the part of
    the bracket width attributable to finite radial resolution, as opposed to
    the exactly-handled exponential tail.
    """

    value: float
    lower_bound: float
    upper_bound: float
    method: str
    quad_term: float | None = None

    def width(self) -> float:
        return self.upper_bound - self.lower_bound


def default_rho(domain: Domain) -> float:
    """Truncation radius large enough to see the whole domain: 1 + diameter."""
    return 1.0 + domain.diameter()


def saturation_radius(domain: Domain) -> float:
    """Radius beyond which the test region and the unit cap both saturate."""
    reach = float(max(np.max(domain.upper), np.max(-domain.lower), 0.0))
    return max(1.0, reach)


# -- input validation ------------------------------------------------------------


def _require_unit_range(f: GridFunction, name: str) -> None:
    v = f.values
    if float(np.min(v)) < -RANGE_ATOL or float(np.max(v)) > 1.0 + RANGE_ATOL:
        raise ValueError(
            f"{name} must take values in [0, 1] (tolerance {RANGE_ATOL:.0e}); "
            f"got range [{float(np.min(v)):.3g}, {float(np.max(v)):.3g}]"
        )


def _validate_pair(f: GridFunction, g: GridFunction, *, need_uniform: bool) -> None:
    if f.grid != g.grid:
        raise ValueError("both functions must live on the same grid")
    if f.grid.dim not in (1, 2):
        raise ValueError(f"supported dimensions are 1 and 2, got {f.grid.dim}")
    if not (f.monotone and g.monotone):
        raise ValueError("shift distances are defined for monotone functions; "
                         "set the monotone flag on both inputs")
    _require_unit_range(f, "f")
    _require_unit_range(g, "g")
    if need_uniform and f.grid.dim == 2 and not f.grid.is_uniform():
        raise ValueError(
            "the exact 2-d violation maximizer requires per-axis uniform grids"
        )


def _shifted_eval(g: GridFunction, pts: np.ndarray, eta: float) -> np.ndarray:
    dom = g.grid.domain
    return g.eval(np.clip(pts + eta, dom.lower, dom.upper))


# -- exact violation maximizer ----------------------------------------------------
#
# One direction of the shift condition at shift eta and radius rho fails by
#
#     psi(x) = min(f(x), rho) - g(min(x + eta, b)) - eta ,
#
# and the condition holds iff  sup psi <= 0  over the region
# R = {x in S : ||x||_inf <= rho}.  psi is piecewise linear; the code below
# computes its exact supremum by enumerating the vertices of the linearity
# arrangement (continuous pieces) or the boxes on which step functions are
# constant (order-0 pieces).


def _axis_candidates(
    axis: np.ndarray, eta: float, lo: float, hi: float
) -> np.ndarray:
    cand = np.concatenate([axis, axis - eta, [lo, hi]])
    cand = np.clip(cand, lo, hi)
    return np.unique(cand)


def _direction_sup_1d(f: GridFunction, g: GridFunction, rho: float, eta: float) -> float:
    dom = f.grid.domain
    ball = RhoBall(rho)
    reg = ball.region(dom)
    if reg is None:
        return -math.inf
    lo, hi = float(reg[0][0]), float(reg[1][0])
    axis = f.grid.axes[0]
    if lo == hi:
        x = np.array([[lo]])
        fv = float(f.eval(x))
        gv = float(_shifted_eval(g, x, eta))
        return min(fv, rho) - gv - eta

    cand = _axis_candidates(axis, eta, lo, hi)
    if f.order == 1:
        # split intervals where min(f, rho) kinks
        fc = f.eval(cand[:, None])
        cl, cr = cand[:-1], cand[1:]
        fl, fr = fc[:-1], fc[1:]
        cross = (fl - rho) * (fr - rho) < 0
        if np.any(cross):
            roots = cl[cross] + (rho - fl[cross]) * (cr[cross] - cl[cross]) / (
                fr[cross] - fl[cross]
            )
            cand = np.unique(np.concatenate([cand, roots]))

    cl, cr = cand[:-1], cand[1:]
    mid = 0.5 * (cl + cr)
    if f.order == 1:
        fl = np.minimum(f.eval(cl[:, None]), rho)
        fr = np.minimum(f.eval(cr[:, None]), rho)
    else:
        fm = np.minimum(f.eval(mid[:, None]), rho)
    if g.order == 1:
        gl = _shifted_eval(g, cl[:, None], eta)
        gr = _shifted_eval(g, cr[:, None], eta)
    else:
        gm = _shifted_eval(g, mid[:, None], eta)

    if f.order == 1 and g.order == 1:
        sup = np.maximum(fl - gl, fr - gr)
    elif f.order == 1:
        sup = np.maximum(fl, fr) - gm
    elif g.order == 1:
        sup = fm - np.minimum(gl, gr)
    else:
        sup = fm - gm
    return float(np.max(sup)) - eta


def _level_segments(f: GridFunction, rho: float) -> np.ndarray:
    """Endpoints of the pieces of the level set {f = rho}, shape (E, 2, 2).

    The graph of an order-1 function is linear on each triangle, so the level
    set is a segment per triangle, with endpoints on triangle edges."""
    grid = f.grid
    a1, a2 = grid.axes
    v = f.values
    ll = v[:-1, :-1].ravel()
    lr = v[1:, :-1].ravel()
    ul = v[:-1, 1:].ravel()
    ur = v[1:, 1:].ravel()
    i, j = np.meshgrid(np.arange(a1.size - 1), np.arange(a2.size - 1), indexing="ij")
    x_l, x_r = a1[i.ravel()], a1[i.ravel() + 1]
    y_b, y_t = a2[j.ravel()], a2[j.ravel() + 1]

    segs = []
    # triangle vertex tables: below-diagonal (ll, lr, ur), above (ll, ul, ur)
    tris = (
        ((x_l, y_b, ll), (x_r, y_b, lr), (x_r, y_t, ur)),
        ((x_l, y_b, ll), (x_l, y_t, ul), (x_r, y_t, ur)),
    )
    for verts in tris:
        pts_edges = []
        for k in range(3):
            px, py, pv = verts[k]
            qx, qy, qv = verts[(k + 1) % 3]
            cross = (pv - rho) * (qv - rho) < 0
            s = np.where(cross, (rho - pv) / np.where(cross, qv - pv, 1.0), np.nan)
            pts_edges.append(
                np.stack([px + s * (qx - px), py + s * (qy - py)], axis=-1)
            )
        stacked = np.stack(pts_edges, axis=1)  # (cells, 3 edges, 2)
        good = ~np.isnan(stacked[..., 0])
        n_cross = good.sum(axis=1)
        if np.any(n_cross == 2):
            rows = stacked[n_cross == 2]
            keep = good[n_cross == 2]
            segs.append(rows[keep].reshape(-1, 2, 2))
        # a segment can also run from a vertex sitting exactly at the level
        # to the crossing on the opposite edge
        vx = np.stack([verts[k][0] for k in range(3)], axis=1)
        vy = np.stack([verts[k][1] for k in range(3)], axis=1)
        vv = np.stack([verts[k][2] for k in range(3)], axis=1)
        at_level = np.abs(vv - rho) <= 1e-14
        pick = (n_cross == 1) & (at_level.sum(axis=1) == 1)
        if np.any(pick):
            rows = np.nonzero(pick)[0]
            cross_pt = stacked[rows][good[rows]].reshape(-1, 2)
            kv = np.argmax(at_level[rows], axis=1)
            vert_pt = np.stack([vx[rows, kv], vy[rows, kv]], axis=-1)
            segs.append(np.stack([vert_pt, cross_pt], axis=1))
    if not segs:
        return np.empty((0, 2, 2))
    return np.concatenate(segs, axis=0)


def _segment_line_crossings(
    segs: np.ndarray, coeff: np.ndarray, offsets: np.ndarray
) -> np.ndarray:
    """Intersections of segments with the line family coeff . x = offset.

    segs: (E, 2, 2) endpoints; coeff: (2,); offsets: (L,).  Returns (N, 2)."""
    if segs.size == 0 or offsets.size == 0:
        return np.empty((0, 2))
    p = segs[:, 0, :]
    q = segs[:, 1, :]
    vp = p @ coeff
    vq = q @ coeff
    denom = vq - vp  # (E,)
    out = []
    ok = np.abs(denom) > _TINY
    if not np.any(ok):
        return np.empty((0, 2))
    p, q, vp, denom = p[ok], q[ok], vp[ok], denom[ok]
    s = (offsets[None, :] - vp[:, None]) / denom[:, None]  # (E, L)
    hit = (s >= 0.0) & (s <= 1.0)
    if not np.any(hit):
        return np.empty((0, 2))
    e_idx, l_idx = np.nonzero(hit)
    sv = s[e_idx, l_idx][:, None]
    out = p[e_idx] + sv * (q[e_idx] - p[e_idx])
    return out


def _diag_crossings(
    x_cand: np.ndarray,
    y_cand: np.ndarray,
    ax1: np.ndarray,
    ax2: np.ndarray,
    shift: float,
    sigma: float,
) -> list[np.ndarray]:
    """Points where the diagonals of a (possibly shifted) cell lattice cross
    the candidate lines x1 = const and x2 = const.

    The lattice has axis nodes ax1 - shift, ax2 - shift; diagonals run from
    each cell's lower corner with slope sigma = h2 / h1 in the x-plane."""
    b1 = ax1 - shift
    b2 = ax2 - shift
    h1 = ax1[1] - ax1[0]
    h2 = ax2[1] - ax2[0]
    out = []
    # vertical candidate lines
    iv = np.clip(np.searchsorted(b1, x_cand, side="right") - 1, 0, b1.size - 2)
    off = x_cand - b1[iv]
    ok = (off >= -_TINY) & (off <= h1 + _TINY)
    if np.any(ok):
        xs = x_cand[ok]
        dy = sigma * off[ok]
        yy = b2[None, :-1] + dy[:, None]  # (V, n2-1)
        pts = np.stack(
            [np.broadcast_to(xs[:, None], yy.shape), yy], axis=-1
        ).reshape(-1, 2)
        out.append(pts)
    # horizontal candidate lines
    jv = np.clip(np.searchsorted(b2, y_cand, side="right") - 1, 0, b2.size - 2)
    off = y_cand - b2[jv]
    ok = (off >= -_TINY) & (off <= h2 + _TINY)
    if np.any(ok):
        ys = y_cand[ok]
        dx = off[ok] / sigma
        xx = b1[None, :-1] + dx[:, None]
        pts = np.stack(
            [xx, np.broadcast_to(ys[:, None], xx.shape)], axis=-1
        ).reshape(-1, 2)
        out.append(pts)
    return out


def _direction_sup_2d_pl(f: GridFunction, g: GridFunction, rho: float, eta: float) -> float:
    """Exact sup of the violation for continuous (order-1) f and g on a
    per-axis uniform 2-d grid: evaluate at every vertex of the kink
    arrangement (lattice points, diagonal/line crossings, level-set points)."""
    dom = f.grid.domain
    reg = RhoBall(rho).region(dom)
    if reg is None:
        return -math.inf
    (lo1, lo2), (hi1, hi2) = reg[0], reg[1]
    a1, a2 = f.grid.axes
    x_cand = _axis_candidates(a1, eta, lo1, hi1)
    y_cand = _axis_candidates(a2, eta, lo2, hi2)
    h1 = a1[1] - a1[0]
    h2 = a2[1] - a2[0]
    sigma = h2 / h1

    chunks: list[np.ndarray] = []
    gx, gy = np.meshgrid(x_cand, y_cand, indexing="ij")
    chunks.append(np.stack([gx.ravel(), gy.ravel()], axis=-1))
    # crossings of candidate lines with the diagonals of f's cells and with
    # the diagonals of g's cells pulled back by the shift
    chunks.extend(_diag_crossings(x_cand, y_cand, a1, a2, 0.0, sigma))
    if eta != 0.0:
        chunks.extend(_diag_crossings(x_cand, y_cand, a1, a2, eta, sigma))

    # level set of f at height rho (only matters when the cap is active)
    f_hi = float(f.eval(np.array([hi1, hi2])))
    f_lo = float(f.eval(np.array([lo1, lo2])))
    if f_lo < rho < f_hi:
        segs = _level_segments(f, rho)
        if segs.size:
            chunks.append(segs.reshape(-1, 2))
            chunks.append(
                _segment_line_crossings(segs, np.array([1.0, 0.0]), x_cand)
            )
            chunks.append(
                _segment_line_crossings(segs, np.array([0.0, 1.0]), y_cand)
            )
            # crossings with the pulled-back diagonal line family
            # x2 - sigma * x1 = const; the intercepts form an arithmetic set
            c0 = (a2[0] - eta) - sigma * (a1[0] - eta)
            k_lo = -(a1.size - 1)
            k_hi = a2.size - 1
            intercepts = c0 + h2 * np.arange(k_lo, k_hi + 1)
            chunks.append(
                _segment_line_crossings(
                    segs, np.array([-sigma, 1.0]), intercepts
                )
            )

    pts = np.concatenate([c for c in chunks if c.size], axis=0)
    inside = (
        (pts[:, 0] >= lo1 - _TINY)
        & (pts[:, 0] <= hi1 + _TINY)
        & (pts[:, 1] >= lo2 - _TINY)
        & (pts[:, 1] <= hi2 + _TINY)
    )
    pts = np.clip(pts[inside], [lo1, lo2], [hi1, hi2])
    fv = f.eval(pts)
    gv = _shifted_eval(g, pts, eta)
    return float(np.max(np.minimum(fv, rho) - gv)) - eta


def _edges_from_candidates(cand: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if cand.size == 1:
        return cand, cand
    return cand[:-1], cand[1:]


def _direction_sup_2d_boxes(
    f: GridFunction, g: GridFunction, rho: float, eta: float
) -> float:
    """Exact sup when a step (order-0) function is involved: between candidate
    lines every order-0 factor is constant, and monotonicity pins the
    continuous factor's extreme to a box corner."""
    dom = f.grid.domain
    reg = RhoBall(rho).region(dom)
    if reg is None:
        return -math.inf
    (lo1, lo2), (hi1, hi2) = reg[0], reg[1]
    a1, a2 = f.grid.axes
    x_cand = _axis_candidates(a1, eta, lo1, hi1)
    y_cand = _axis_candidates(a2, eta, lo2, hi2)
    xl, xr = _edges_from_candidates(x_cand)
    yl, yr = _edges_from_candidates(y_cand)

    XL, YL = np.meshgrid(xl, yl, indexing="ij")
    XR, YR = np.meshgrid(xr, yr, indexing="ij")
    lower = np.stack([XL.ravel(), YL.ravel()], axis=-1)
    upper = np.stack([XR.ravel(), YR.ravel()], axis=-1)
    mid = 0.5 * (lower + upper)

    if f.order == 1:
        fterm = np.minimum(f.eval(upper), rho)
    else:
        fterm = np.minimum(f.eval(mid), rho)
    if g.order == 1:
        gterm = _shifted_eval(g, lower, eta)
    else:
        gterm = _shifted_eval(g, mid, eta)
    return float(np.max(fterm - gterm)) - eta


def _direction_sup(f: GridFunction, g: GridFunction, rho: float, eta: float) -> float:
    if f.grid.dim == 1:
        return _direction_sup_1d(f, g, rho, eta)
    if f.order == 1 and g.order == 1:
        return _direction_sup_2d_pl(f, g, rho, eta)
    return _direction_sup_2d_boxes(f, g, rho, eta)


def kenmochi_ok(f: GridFunction, g: GridFunction, rho: float, eta: float) -> bool:
    """Whether the two-sided shift condition holds at shift eta and radius rho."""
    if not (rho > 0 and math.isfinite(rho)):
        raise ValueError(f"rho must be positive and finite, got {rho}")
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    _validate_pair(f, g, need_uniform=True)
    if _direction_sup(f, g, rho, eta) > SUP_TOL:
        return False
    return _direction_sup(g, f, rho, eta) <= SUP_TOL


def _hat_bracketed(
    f: GridFunction, g: GridFunction, rho: float, tol: float, lo: float
) -> float:
    """Bisection on the feasible-shift threshold, assuming lo is infeasible
    or zero and 1 is feasible."""

    def feasible(eta: float) -> bool:
        return (
            _direction_sup(f, g, rho, eta) <= SUP_TOL
            and _direction_sup(g, f, rho, eta) <= SUP_TOL
        )

    if feasible(lo):
        return lo
    hi = 1.0
    if not feasible(hi):
        raise ValueError(
            "shift 1 is infeasible; inputs are not [0, 1]-valued monotone "
            "functions within tolerance"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def hat_dl_rho(
    f: GridFunction, g: GridFunction, rho: float, *, tol: float = 1e-8
) -> float:
    """Shift distance at radius rho: the least eta making both one-sided
    capped shift conditions hold.  Always in [0, 1]; found by bisection with
    an exact feasibility test, so the result overshoots the true infimum by
    at most tol."""
    if not (rho > 0 and math.isfinite(rho)):
        raise ValueError(f"rho must be positive and finite, got {rho}")
    if not (0 < tol < 1):
        raise ValueError(f"tol must be in (0, 1), got {tol}")
    _validate_pair(f, g, need_uniform=True)
    return _hat_bracketed(f, g, rho, tol, 0.0)


# -- monotone root-scan distances ---------------------------------------------------


def _saturation_curves(
    f: GridFunction, X: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Piecewise-linear curves t -> f(min(x + t, b)) + t for a batch of x.

    Returns (T, L, t_sat, f_at_b): breakpoints and curve values per row,
    padded with +inf, rows sorted; t_sat is where every coordinate saturates,
    beyond which the curve continues as f(b) + t."""
    if f.order != 1:
        raise ValueError("the root-scan needs a continuous (order-1) function")
    grid = f.grid
    dom = grid.domain
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    n, m = X.shape
    t_sat = np.max(dom.upper[None, :] - X, axis=1)

    cols = [np.zeros((n, 1)), t_sat[:, None]]
    for i in range(m):
        offs = grid.axes[i][None, :] - X[:, i : i + 1]
        offs = np.where((offs > _TINY) & (offs < t_sat[:, None] - _TINY), offs, np.inf)
        cols.append(offs)
    T = np.sort(np.concatenate(cols, axis=1), axis=1)

    if m == 2:
        # the ray x + t(1,1) can also cross cell diagonals; find those
        # crossings cell by cell via the interval midpoints
        mids = 0.5 * (T[:, :-1] + T[:, 1:])
        finite = np.isfinite(mids)
        mids_f = np.where(finite, mids, 0.0)
        pts = np.clip(
            X[:, None, :] + mids_f[:, :, None], dom.lower, dom.upper
        ).reshape(-1, 2)
        idx, _ = locate_batch(grid, pts)
        i1 = idx[:, 0].reshape(n, -1)
        i2 = idx[:, 1].reshape(n, -1)
        a = grid.axes[0][i1]
        h1c = grid.axes[0][i1 + 1] - a
        b = grid.axes[1][i2]
        h2c = grid.axes[1][i2 + 1] - b
        denom = h2c - h1c
        with np.errstate(divide="ignore", invalid="ignore"):
            t_diag = (h1c * (X[:, 1:2] - b) - h2c * (X[:, 0:1] - a)) / denom
        valid = (
            finite
            & (np.abs(denom) > _TINY)
            & (t_diag > T[:, :-1] + _TINY)
            & (t_diag < T[:, 1:] - _TINY)
        )
        t_diag = np.where(valid, t_diag, np.inf)
        if np.any(valid):
            T = np.sort(np.concatenate([T, t_diag], axis=1), axis=1)

    finite = np.isfinite(T)
    T_eval = np.where(finite, T, t_sat[:, None])
    pts = np.clip(X[:, None, :] + T_eval[:, :, None], dom.lower, dom.upper)
    L = f.eval(pts.reshape(-1, m)).reshape(n, -1) + T_eval
    L = np.where(finite, L, np.inf)
    f_at_b = float(f.eval(dom.upper))
    return T, L, t_sat, f_at_b


def _roots_from_curves(
    T: np.ndarray, L: np.ndarray, f_at_b: float, x0: np.ndarray
) -> np.ndarray:
    """Distances for levels x0 (per curve row): first t with curve >= x0.

    x0 has shape (n, p); returns (n, p)."""
    n, K = T.shape
    k = np.sum(L[:, None, :] < x0[:, :, None], axis=2)  # first index with L >= x0
    out = np.empty_like(x0, dtype=float)
    at_zero = k == 0
    out[at_zero] = 0.0
    finite_count = np.sum(np.isfinite(L), axis=1)  # per row
    beyond = k >= finite_count[:, None]
    out[beyond] = (x0 - f_at_b)[beyond]
    middle = ~(at_zero | beyond)
    if np.any(middle):
        rows, cols = np.nonzero(middle)
        kk = k[rows, cols]
        t_lo = T[rows, kk - 1]
        t_hi = T[rows, kk]
        l_lo = L[rows, kk - 1]
        l_hi = L[rows, kk]
        dl = l_hi - l_lo
        safe = dl > _TINY
        t = np.where(
            safe,
            t_lo + (x0[rows, cols] - l_lo) * (t_hi - t_lo) / np.where(safe, dl, 1.0),
            t_lo,
        )
        out[rows, cols] = t
    return np.maximum(out, 0.0)


def _monotone_dist(f: GridFunction, X: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """dist((x, x0), hypo f) for monotone order-1 f, batched: X (n, m),
    x0 (n, p) levels per point."""
    if not f.monotone:
        raise ValueError("the root-scan distance requires the monotone flag")
    T, L, _, f_at_b = _saturation_curves(f, X)
    return _roots_from_curves(T, L, f_at_b, x0)


# -- geometric per-piece distance ----------------------------------------------------


def _point_dist_1d_geometric(f: GridFunction, x: float, x0: float) -> float:
    axis = f.grid.axes[0]
    vals = f.values
    yl, yr = axis[:-1], axis[1:]
    vl, vr = vals[:-1], vals[1:]
    d = (vr - vl) / (yr - yl)
    c = vl  # value at yl

    cands = [yl, yr, np.full_like(yl, x)]
    with np.errstate(divide="ignore", invalid="ignore"):
        hinge = yl + (x0 - c) / d
        bal1 = (x + x0 - c + d * yl) / (1.0 + d)
        bal2 = np.where(np.abs(d - 1.0) > _TINY, (x0 - x - c + d * yl) / (d - 1.0), yl)
    for arr in (hinge, bal1, bal2):
        cands.append(np.where(np.isfinite(arr), arr, yl))
    best = math.inf
    for arr in cands:
        y = np.clip(arr, yl, yr)
        fy = c + d * (y - yl)
        D = np.maximum(np.abs(x - y), np.maximum(x0 - fy, 0.0))
        best = min(best, float(np.min(D)))
    return best


def _point_dist_2d_geometric(f: GridFunction, x: np.ndarray, x0: float) -> float:
    grid = f.grid
    tris = grid.triangles()
    nodes = grid.node_lattice()
    vals = f.values.reshape(-1)
    P = nodes[tris]  # (T, 3, 2)
    V = vals[tris]  # (T, 3)

    # plane f(y) = a . y + c per triangle
    e1 = P[:, 1] - P[:, 0]
    e2 = P[:, 2] - P[:, 0]
    dv1 = V[:, 1] - V[:, 0]
    dv2 = V[:, 2] - V[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    ax = (dv1 * e2[:, 1] - dv2 * e1[:, 1]) / det
    ay = (dv2 * e1[:, 0] - dv1 * e2[:, 0]) / det
    a = np.stack([ax, ay], axis=1)
    c = V[:, 0] - np.einsum("ti,ti->t", a, P[:, 0])

    nt = P.shape[0]
    # 12 candidate lines per triangle: coeff . y = offset
    coeff = np.empty((nt, 12, 2))
    off = np.empty((nt, 12))
    coeff[:, 0] = [1.0, 0.0]
    off[:, 0] = x[0]
    coeff[:, 1] = [0.0, 1.0]
    off[:, 1] = x[1]
    coeff[:, 2] = [1.0, -1.0]
    off[:, 2] = x[0] - x[1]
    coeff[:, 3] = [1.0, 1.0]
    off[:, 3] = x[0] + x[1]
    coeff[:, 4] = a
    off[:, 4] = x0 - c
    # balance lines: +-(y_i - x_i) = x0 - a.y - c
    coeff[:, 5] = a + np.array([1.0, 0.0])
    off[:, 5] = x0 - c + x[0]
    coeff[:, 6] = a - np.array([1.0, 0.0])
    off[:, 6] = x0 - c - x[0]
    coeff[:, 7] = a + np.array([0.0, 1.0])
    off[:, 7] = x0 - c + x[1]
    coeff[:, 8] = a - np.array([0.0, 1.0])
    off[:, 8] = x0 - c - x[1]
    # edge lines
    for k in range(3):
        p = P[:, k]
        q = P[:, (k + 1) % 3]
        e = q - p
        coeff[:, 9 + k, 0] = -e[:, 1]
        coeff[:, 9 + k, 1] = e[:, 0]
        off[:, 9 + k] = -e[:, 1] * p[:, 0] + e[:, 0] * p[:, 1]

    pairs = [(i, j) for i in range(12) for j in range(i + 1, 12)]
    pi = np.array([p[0] for p in pairs])
    pj = np.array([p[1] for p in pairs])
    A1 = coeff[:, pi]  # (T, 66, 2)
    A2 = coeff[:, pj]
    b1 = off[:, pi]
    b2 = off[:, pj]
    det2 = A1[..., 0] * A2[..., 1] - A1[..., 1] * A2[..., 0]
    ok = np.abs(det2) > _TINY
    det_safe = np.where(ok, det2, 1.0)
    yx = (b1 * A2[..., 1] - b2 * A1[..., 1]) / det_safe
    yy = (A1[..., 0] * b2 - A2[..., 0] * b1) / det_safe
    cand = np.concatenate(
        [np.stack([yx, yy], axis=-1), P], axis=1
    )  # (T, 69, 2)
    valid = np.concatenate([ok, np.ones((nt, 3), dtype=bool)], axis=1)

    # barycentric inside-test
    d0 = cand - P[:, None, 0]
    denom = det[:, None]
    s = (d0[..., 0] * e2[:, None, 1] - d0[..., 1] * e2[:, None, 0]) / denom
    t = (e1[:, None, 0] * d0[..., 1] - e1[:, None, 1] * d0[..., 0]) / denom
    inside = (s >= -1e-9) & (t >= -1e-9) & (s + t <= 1.0 + 1e-9)
    valid &= inside

    fy = np.einsum("ti,tki->tk", a, cand) + c[:, None]
    D = np.maximum(
        np.max(np.abs(cand - x[None, None, :]), axis=-1),
        np.maximum(x0 - fy, 0.0),
    )
    D = np.where(valid, D, np.inf)
    return float(np.min(D))


def point_hypo_dist(
    f: GridFunction, point: np.ndarray, *, method: str = "auto"
) -> float:
    """Max-norm distance from the test point (x, x0) to the hypograph of f.

    ``point`` packs the domain coordinates followed by the level, so it has
    length m + 1.  ``method``: "scan" uses the monotone root-scan (monotone f,
    x inside the domain), "geometric" minimizes over every linear piece of
    the graph, "auto" picks the scan when it applies.
    """
    pt = np.asarray(point, dtype=float).reshape(-1)
    if pt.size != f.grid.dim + 1:
        raise ValueError(
            f"expected a point with {f.grid.dim + 1} entries (x then level), "
            f"got {pt.size}"
        )
    if f.order != 1:
        raise ValueError("hypograph distances need a continuous (order-1) function")
    x, x0 = pt[:-1], float(pt[-1])
    in_dom = f.grid.domain.contains(x)
    if method == "auto":
        method = "scan" if (f.monotone and in_dom) else "geometric"
    if method == "scan":
        if not f.monotone:
            raise ValueError("the scan method requires the monotone flag")
        if not in_dom:
            raise ValueError("the scan method requires x inside the domain")
        return float(_monotone_dist(f, x[None, :], np.array([[x0]]))[0, 0])
    if method == "geometric":
        if f.grid.dim == 1:
            return _point_dist_1d_geometric(f, float(x[0]), x0)
        if f.grid.dim == 2:
            return _point_dist_2d_geometric(f, x, x0)
        raise ValueError("geometric distances are implemented for m in {1, 2}")
    raise ValueError(f"unknown method {method!r}")


def dl_rho_oracle(
    f: GridFunction,
    g: GridFunction,
    rho: float,
    samples_per_axis: int,
    *,
    method: str = "scan",
) -> float:
    """Brute-force truncated hypograph distance on a sample lattice.

    Maximizes |dist(z, hypo f) - dist(z, hypo g)| over test points
    z = (x, x0) with x on a regular lattice in {x in S : ||x||_inf <= rho}
    and x0 on a regular lattice in [-rho, rho].  A lower bound on the true
    truncated distance that converges as the lattice refines; doubling
    `samples_per_axis` from s to 2s - 1 nests the lattices.
    """
    if f.grid != g.grid:
        raise ValueError("both functions must live on the same grid")
    if samples_per_axis < 2:
        raise ValueError(f"samples_per_axis must be >= 2, got {samples_per_axis}")
    reg = RhoBall(rho).region(f.grid.domain)
    if reg is None:
        return 0.0
    lo, hi = reg
    axes = [np.linspace(lo[i], hi[i], samples_per_axis) for i in range(f.grid.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    X = np.stack([m.ravel() for m in mesh], axis=-1)
    levels = np.linspace(-rho, rho, samples_per_axis)
    x0 = np.broadcast_to(levels[None, :], (X.shape[0], levels.size))

    if method == "scan":
        df = _monotone_dist(f, X, x0)
        dg = _monotone_dist(g, X, x0)
    elif method == "geometric":
        df = np.empty((X.shape[0], levels.size))
        dg = np.empty_like(df)
        for i in range(X.shape[0]):
            for j, lv in enumerate(levels):
                zp = np.concatenate([X[i], [lv]])
                df[i, j] = point_hypo_dist(f, zp, method="geometric")
                dg[i, j] = point_hypo_dist(g, zp, method="geometric")
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(np.max(np.abs(df - dg)))


# -- cell-corner relaxations -----------------------------------------------------


def _eta_cells(
    f: GridFunction, g: GridFunction, rho: float, *, tight: bool
) -> float:
    _validate_pair(f, g, need_uniform=False)
    if f.order != 1 or g.order != 1:
        raise ValueError("cell-corner relaxations need order-1 functions")
    if not (rho > 0 and math.isfinite(rho)):
        raise ValueError(f"rho must be positive and finite, got {rho}")
    grid = f.grid
    lower, upper = grid.cell_bounds()
    keep = np.max(np.abs(lower), axis=1) <= rho + 1e-12
    if not np.any(keep):
        return 0.0
    lo = lower[keep]
    hi = upper[keep]
    probe = hi if tight else lo
    tf = np.minimum(f.eval(probe), rho)[:, None]
    tg = np.minimum(g.eval(probe), rho)[:, None]
    best_f = _monotone_dist(g, lo, tf)  # shift needed by g to cover f's target
    best_g = _monotone_dist(f, lo, tg)
    return float(max(np.max(best_f), np.max(best_g)))


def eta_plus(f: GridFunction, g: GridFunction, rho: float) -> float:
    """Upper cell-corner relaxation of the shift distance at radius rho:
    the least shift whose condition holds with each cell's supremum on the
    demanding side and its lower corner on the covering side."""
    return _eta_cells(f, g, rho, tight=True)


def eta_minus(f: GridFunction, g: GridFunction, rho: float) -> float:
    """Lower cell-corner relaxation: both sides probed at cell lower corners.
    Never exceeds the shift distance."""
    return _eta_cells(f, g, rho, tight=False)


# -- integrated distance with certified bounds -------------------------------------


def hypo_dist_estimate(
    f: GridFunction, g: GridFunction, *, quad_points: int = 64, tol: float = 1e-8
) -> DistanceReport:
    """Exponentially weighted integral of truncated distances, bracketed.

    Writing s(rho) for the shift distance, the truncated distance at radius
    rho lies in [s(rho), s(2 rho)], s is nondecreasing, and beyond the
    saturation radius both collapse to the constant s_sat, making the tail of
    the integral exact.  On [0, saturation] the integral is bracketed per
    quadrature interval by s at the ends, and reported as the midpoint-rule
    average of the two bracket integrands, which lands inside the bracket by
    monotonicity of s.
    """
    _validate_pair(f, g, need_uniform=True)
    if quad_points < 1:
        raise ValueError(f"quad_points must be >= 1, got {quad_points}")
    rho_bar = saturation_radius(f.grid.domain)
    edges = np.linspace(0.0, rho_bar, quad_points + 1)
    a, b = edges[:-1], edges[1:]
    mids = 0.5 * (a + b)

    args = np.unique(
        np.minimum(np.concatenate([a[1:], mids, 2 * mids, 2 * b, [rho_bar]]), rho_bar)
    )
    args = args[args > 0]
    hats = {0.0: 0.0}
    prev = 0.0
    for r in args:
        val = _hat_bracketed(f, g, float(r), tol, lo=prev)
        # the shift distance is nondecreasing in rho; enforce it on the
        # computed sequence so the bracket holds by construction
        prev = max(prev, val)
        hats[float(r)] = prev

    def hat(r: float) -> float:
        return hats[float(min(r, rho_bar))]

    w = np.exp(-a) - np.exp(-b)
    tail = math.exp(-rho_bar) * hat(rho_bar)
    lower = float(np.sum(w * np.array([hat(v) for v in a]))) + tail
    upper = float(np.sum(w * np.array([hat(2 * v) for v in b]))) + tail
    value = (
        float(
            np.sum(
                w
                * 0.5
                * (
                    np.array([hat(v) for v in mids])
                    + np.array([hat(2 * v) for v in mids])
                )
            )
        )
        + tail
    )
    if not (lower - 1e-12 <= value <= upper + 1e-12):
        raise AssertionError(
            f"bracket violated: {lower} <= {value} <= {upper} should hold"
        )
    logger.debug(
        "hypo_dist_estimate: value=%.6g bracket=[%.6g, %.6g] (%d radii)",
        value,
        lower,
        upper,
        len(hats),
    )
    quad_term = float(
        np.sum(w * (np.array([hat(2 * v) for v in b]) - np.array([hat(v) for v in a])))
    )
    return DistanceReport(
        value=value,
        lower_bound=lower,
        upper_bound=upper,
        method=f"shift-sandwich-quadrature-{quad_points}",
        quad_term=quad_term,
    )
