"""Linear programming: a small model container and two interchangeable solvers.

Problems are stated as

    minimize    c . x
    subject to  a_i . x  {<=, >=, ==}  b_i      for every row i,
                l <= x <= u                     componentwise,

with infinite bounds allowed.  ``solve`` dispatches to either the bundled
bounded-variable two-phase primal simplex (dense, dependency-free, meant for
small and medium problems and as a reference implementation) or to HiGHS via
scipy when available (sparse, fast, used for the large estimation programs).
Both report one of the statuses "optimal", "infeasible", "unbounded" or
"iteration_limit".

The simplex keeps nonbasic variables at finite bounds, prices with Dantzig's
rule and falls back to Bland's rule after a run of degenerate pivots, so it
terminates deterministically.  Basic solutions are recomputed from a fresh
factorization of the basis every iteration; with the problem sizes this
module is meant for, robustness is worth far more than speed.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "LPModel",
    "LPSolution",
    "solve",
    "constraint_residuals",
    "brute_force_minimum",
]

SENSES = ("<=", ">=", "==")

_FEAS_TOL = 1e-9
_COST_TOL = 1e-9
_PIVOT_TOL = 1e-11

_AT_LOWER = 0
_AT_UPPER = 1
_FREE = 2
_BASIC = 3


@dataclass
class _Constraint:
    indices: np.ndarray
    coeffs: np.ndarray
    sense: str
    rhs: float
    name: str


class LPModel:
    """Container for variables, bounds, objective and rows."""

    def __init__(self, name: str = "lp") -> None:
        self.name = name
        self._lower: list[float] = []
        self._upper: list[float] = []
        self._objective: list[float] = []
        self._var_names: list[str] = []
        self._rows: list[_Constraint] = []

    # -- construction -----------------------------------------------------

    def add_variable(
        self,
        *,
        lower: float = 0.0,
        upper: float = math.inf,
        objective: float = 0.0,
        name: str = "",
    ) -> int:
        if math.isnan(lower) or math.isnan(upper) or lower > upper:
            raise ValueError(f"bad variable bounds [{lower}, {upper}]")
        if not math.isfinite(objective):
            raise ValueError(f"objective coefficient must be finite, got {objective}")
        self._lower.append(float(lower))
        self._upper.append(float(upper))
        self._objective.append(float(objective))
        self._var_names.append(name or f"x{len(self._lower) - 1}")
        return len(self._lower) - 1

    def add_constraint(
        self,
        indices: np.ndarray,
        coeffs: np.ndarray,
        sense: str,
        rhs: float,
        *,
        name: str = "",
    ) -> int:
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        cf = np.asarray(coeffs, dtype=float).reshape(-1)
        if idx.size != cf.size:
            raise ValueError("indices and coefficients must have equal length")
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_variables):
            raise ValueError("constraint references an unknown variable")
        if sense not in SENSES:
            raise ValueError(f"sense must be one of {SENSES}, got {sense!r}")
        if not math.isfinite(rhs):
            raise ValueError(f"right-hand side must be finite, got {rhs}")
        if not np.all(np.isfinite(cf)):
            raise ValueError("constraint coefficients must be finite")
        # merge duplicate indices so downstream code can assume uniqueness
        if idx.size != np.unique(idx).size:
            order = np.argsort(idx, kind="stable")
            idx, cf = idx[order], cf[order]
            uniq, start = np.unique(idx, return_index=True)
            cf = np.add.reduceat(cf, start)
            idx = uniq
        self._rows.append(
            _Constraint(idx, cf, sense, float(rhs), name or f"r{len(self._rows)}")
        )
        return len(self._rows) - 1

    # -- views -------------------------------------------------------------

    @property
    def n_variables(self) -> int:
        return len(self._lower)

    @property
    def n_constraints(self) -> int:
        return len(self._rows)

    @property
    def objective(self) -> np.ndarray:
        return np.array(self._objective)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self._lower), np.array(self._upper)

    def rows(self) -> list[_Constraint]:
        return list(self._rows)

    def dense_matrix(self) -> tuple[np.ndarray, np.ndarray, list[str]]:
        """(A, b, senses) with one dense row per constraint."""
        m, n = self.n_constraints, self.n_variables
        A = np.zeros((m, n))
        b = np.empty(m)
        senses = []
        for i, row in enumerate(self._rows):
            A[i, row.indices] = row.coeffs
            b[i] = row.rhs
            senses.append(row.sense)
        return A, b, senses

    def to_text(self) -> str:
        """Human-readable dump, mainly for debugging small models."""
        lines = [f"minimize  ({self.name})"]
        terms = [
            f"{c:+g} {self._var_names[j]}"
            for j, c in enumerate(self._objective)
            if c != 0.0
        ]
        lines.append("  " + (" ".join(terms) if terms else "0"))
        lines.append("subject to")
        for row in self._rows:
            body = " ".join(
                f"{c:+g} {self._var_names[j]}" for j, c in zip(row.indices, row.coeffs)
            )
            lines.append(f"  {row.name}: {body} {row.sense} {row.rhs:g}")
        lines.append("bounds")
        for j in range(self.n_variables):
            lines.append(
                f"  {self._lower[j]:g} <= {self._var_names[j]} <= {self._upper[j]:g}"
            )
        return "\n".join(lines)


@dataclass(frozen=True)
class LPSolution:
    status: str
    x: np.ndarray | None
    objective: float
    iterations: int
    duals: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def constraint_residuals(model: LPModel, x: np.ndarray) -> np.ndarray:
    """Amount by which each row is violated at x (0 means satisfied)."""
    x = np.asarray(x, dtype=float)
    out = np.empty(model.n_constraints)
    for i, row in enumerate(model.rows()):
        lhs = float(np.dot(row.coeffs, x[row.indices]))
        if row.sense == "<=":
            out[i] = max(0.0, lhs - row.rhs)
        elif row.sense == ">=":
            out[i] = max(0.0, row.rhs - lhs)
        else:
            out[i] = abs(lhs - row.rhs)
    return out


# -- native simplex ---------------------------------------------------------------


def _initial_value(lo: float, hi: float) -> tuple[float, int]:
    if math.isfinite(lo):
        return lo, _AT_LOWER
    if math.isfinite(hi):
        return hi, _AT_UPPER
    return 0.0, _FREE


def _solve_simplex(model: LPModel, max_iterations: int) -> LPSolution:
    n = model.n_variables
    m = model.n_constraints
    A_rows, b, senses = model.dense_matrix()
    lo, hi = model.bounds
    c_real = model.objective

    n_slack = sum(1 for s in senses if s != "==")
    N = n + n_slack + m  # structural + slack/surplus + artificial

    A = np.zeros((m, N))
    A[:, :n] = A_rows
    lo_full = np.concatenate([lo, np.zeros(n_slack + m)])
    hi_full = np.concatenate([hi, np.full(n_slack + m, math.inf)])

    k = n
    for i, s in enumerate(senses):
        if s == "<=":
            A[i, k] = 1.0
            k += 1
        elif s == ">=":
            A[i, k] = -1.0
            k += 1

    status = np.empty(N, dtype=np.int64)
    x = np.zeros(N)
    for j in range(n + n_slack):
        x[j], status[j] = _initial_value(lo_full[j], hi_full[j])

    slack_col = np.full(m, -1, dtype=np.int64)
    k = n
    for i, s in enumerate(senses):
        if s != "==":
            slack_col[i] = k
            k += 1

    # start from slack/surplus basics wherever the sign works out; rows that
    # cannot host their own slack get an artificial instead
    r = b - A[:, : n + n_slack] @ x[: n + n_slack]
    art = n + n_slack
    basis = []
    for i in range(m):
        sc = slack_col[i]
        if sc >= 0 and (
            (senses[i] == "<=" and r[i] >= 0.0)
            or (senses[i] == ">=" and r[i] <= 0.0)
        ):
            x[sc] = abs(r[i])
            status[sc] = _BASIC
            basis.append(int(sc))
            # this row's artificial is never needed: freeze it out
            x[art + i] = 0.0
            status[art + i] = _AT_LOWER
            hi_full[art + i] = 0.0
        else:
            A[i, art + i] = 1.0 if r[i] >= 0 else -1.0
            x[art + i] = abs(r[i])
            status[art + i] = _BASIC
            basis.append(art + i)

    c_phase1 = np.zeros(N)
    c_phase1[art:] = 1.0
    c_phase2 = np.zeros(N)
    c_phase2[:n] = c_real

    iterations = 0
    bland_after = 5 * N

    def run_phase(c: np.ndarray, iter_budget: int) -> tuple[str, int]:
        nonlocal iterations
        degenerate_run = 0
        while True:
            if iterations >= iter_budget:
                return "iteration_limit", iterations
            iterations += 1
            B = A[:, basis]
            nonbasic = [j for j in range(N) if status[j] != _BASIC]
            x_n_contrib = A[:, nonbasic] @ x[nonbasic] if nonbasic else 0.0
            try:
                xb = np.linalg.solve(B, b - x_n_contrib)
            except np.linalg.LinAlgError:
                return "numerical", iterations
            for pos, j in enumerate(basis):
                x[j] = xb[pos]
            y = np.linalg.solve(B.T, c[basis])
            d = c[nonbasic] - y @ A[:, nonbasic]

            use_bland = degenerate_run > bland_after
            entering = -1
            sigma = 1.0
            best = _COST_TOL
            for pos, j in enumerate(nonbasic):
                if hi_full[j] - lo_full[j] <= _PIVOT_TOL:
                    continue  # fixed column: can never move
                st = status[j]
                if st == _AT_LOWER or st == _FREE:
                    viol = -d[pos]
                    sgn = 1.0
                    if st == _FREE and d[pos] > _COST_TOL:
                        viol = d[pos]
                        sgn = -1.0
                else:  # at upper
                    viol = d[pos]
                    sgn = -1.0
                if viol > best:
                    entering, sigma = j, sgn
                    if use_bland:
                        break
                    best = viol
            if entering < 0:
                return "optimal", iterations

            w = np.linalg.solve(B, A[:, entering])
            # ratio test: how far can the entering variable move?
            t_max = hi_full[entering] - lo_full[entering]  # bound flip distance
            leave_pos = -1
            for pos in range(m):
                delta = -sigma * w[pos]
                if abs(delta) <= _PIVOT_TOL:
                    continue
                j = basis[pos]
                if delta < 0:
                    slack_room = x[j] - lo_full[j]
                    if not math.isfinite(slack_room):
                        continue
                    ratio = slack_room / -delta
                else:
                    room = hi_full[j] - x[j]
                    if not math.isfinite(room):
                        continue
                    ratio = room / delta
                ratio = max(ratio, 0.0)
                if ratio < t_max - _PIVOT_TOL or (
                    ratio < t_max + _PIVOT_TOL
                    and leave_pos >= 0
                    and basis[pos] < basis[leave_pos]
                ):
                    t_max = ratio
                    leave_pos = pos

            if not math.isfinite(t_max):
                return "unbounded", iterations
            if t_max <= _PIVOT_TOL:
                degenerate_run += 1
            else:
                degenerate_run = 0

            # apply the step
            x[entering] = x[entering] + sigma * t_max
            for pos in range(m):
                x[basis[pos]] -= sigma * t_max * w[pos]
            if leave_pos < 0:
                # bound flip: entering stays nonbasic at its other bound
                status[entering] = _AT_UPPER if sigma > 0 else _AT_LOWER
            else:
                out_var = basis[leave_pos]
                # leaving variable lands on the bound it ran into
                delta = -sigma * w[leave_pos]
                if delta < 0:
                    x[out_var] = lo_full[out_var]
                    status[out_var] = _AT_LOWER
                else:
                    x[out_var] = hi_full[out_var]
                    status[out_var] = _AT_UPPER
                basis[leave_pos] = entering
                status[entering] = _BASIC

    st, _ = run_phase(c_phase1, max_iterations)
    if st == "numerical":
        return LPSolution("infeasible", None, math.nan, iterations)
    if st == "iteration_limit":
        return LPSolution("iteration_limit", None, math.nan, iterations)
    if st == "unbounded":  # cannot happen with artificials bounded below
        return LPSolution("infeasible", None, math.nan, iterations)
    phase1_obj = float(np.sum(x[art:]))
    scale = 1.0 + float(np.max(np.abs(b))) if m else 1.0
    if phase1_obj > 1e-8 * scale:
        return LPSolution("infeasible", None, math.nan, iterations)

    # freeze artificials at zero for phase 2
    lo_full[art:] = 0.0
    hi_full[art:] = 0.0
    x[art:] = np.clip(x[art:], 0.0, 0.0)

    st, _ = run_phase(c_phase2, max_iterations)
    if st == "numerical":
        return LPSolution("iteration_limit", None, math.nan, iterations)
    if st in ("iteration_limit", "unbounded"):
        return LPSolution(st, None, math.nan, iterations)

    xs = x[:n].copy()
    # final duals from the optimal basis
    B = A[:, basis]
    y = np.linalg.solve(B.T, c_phase2[basis])
    obj = float(np.dot(c_real, xs))
    return LPSolution("optimal", xs, obj, iterations, duals=y)


# -- HiGHS adapter ----------------------------------------------------------------


def _solve_highs(model: LPModel, max_iterations: int) -> LPSolution:
    import scipy.sparse as sp
    from scipy.optimize import linprog

    n = model.n_variables
    lo, hi = model.bounds
    bounds = [
        (
            None if not math.isfinite(lo[j]) else lo[j],
            None if not math.isfinite(hi[j]) else hi[j],
        )
        for j in range(n)
    ]

    ub_data: list[np.ndarray] = []
    ub_rows: list[np.ndarray] = []
    ub_cols: list[np.ndarray] = []
    ub_rhs: list[float] = []
    eq_data: list[np.ndarray] = []
    eq_rows: list[np.ndarray] = []
    eq_cols: list[np.ndarray] = []
    eq_rhs: list[float] = []
    for row in model.rows():
        if row.sense == "==":
            eq_rows.append(np.full(row.indices.size, len(eq_rhs)))
            eq_cols.append(row.indices)
            eq_data.append(row.coeffs)
            eq_rhs.append(row.rhs)
        else:
            sign = 1.0 if row.sense == "<=" else -1.0
            ub_rows.append(np.full(row.indices.size, len(ub_rhs)))
            ub_cols.append(row.indices)
            ub_data.append(sign * row.coeffs)
            ub_rhs.append(sign * row.rhs)

    def _matrix(data, rows, cols, m):
        if m == 0:
            return None
        return sp.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(m, n),
        )

    A_ub = _matrix(ub_data, ub_rows, ub_cols, len(ub_rhs))
    A_eq = _matrix(eq_data, eq_rows, eq_cols, len(eq_rhs))

    def run(presolve: bool):
        return linprog(
            model.objective,
            A_ub=A_ub,
            b_ub=np.array(ub_rhs) if ub_rhs else None,
            A_eq=A_eq,
            b_eq=np.array(eq_rhs) if eq_rhs else None,
            bounds=bounds,
            method="highs",
            options={
                "maxiter": max_iterations,
                "presolve": presolve,
                "primal_feasibility_tolerance": 1e-9,
                "dual_feasibility_tolerance": 1e-9,
            },
        )

    status_map = {0: "optimal", 1: "iteration_limit", 2: "infeasible", 3: "unbounded"}
    res = run(presolve=True)
    status = status_map.get(res.status)
    if status is None:
        # presolve occasionally reports near-degenerate instances as
        # "unknown"; a clean phase-1 run settles the question
        logger.debug("retrying LP without presolve: %s", res.message)
        res = run(presolve=False)
        status = status_map.get(res.status)
    if status is None:
        raise RuntimeError(f"LP backend failed: {res.message}")
    x = np.asarray(res.x, dtype=float) if status == "optimal" else None
    obj = float(res.fun) if status == "optimal" else math.nan
    nit = int(getattr(res, "nit", 0) or 0)
    return LPSolution(status, x, obj, nit)


def _highs_available() -> bool:
    try:
        import scipy.optimize  # noqa: F401
        import scipy.sparse  # noqa: F401
    except ImportError:
        return False
    return True


def solve(
    model: LPModel,
    *,
    max_iterations: int = 100_000,
    method: str = "auto",
    debug_dump: bool = False,
) -> LPSolution:
    """Minimize the model.  ``method``: "simplex" (bundled), "highs"
    (scipy-backed), or "auto" (highs when importable, else simplex)."""
    if model.n_variables == 0:
        raise ValueError("model has no variables")
    if debug_dump:
        logger.debug("LP model dump:\n%s", model.to_text())
    if method == "auto":
        method = "highs" if _highs_available() else "simplex"
    if method == "highs":
        sol = _solve_highs(model, max_iterations)
    elif method == "simplex":
        sol = _solve_simplex(model, max_iterations)
    else:
        raise ValueError(f"unknown method {method!r}")
    logger.debug(
        "LP %s: status=%s objective=%s iterations=%d",
        model.name,
        sol.status,
        sol.objective,
        sol.iterations,
    )
    return sol


# -- brute-force reference -----------------------------------------------------


def brute_force_minimum(model: LPModel, *, feas_tol: float = 1e-9) -> tuple[float, np.ndarray]:
    """Reference optimum by vertex enumeration, for small models only.

    Every vertex of the feasible polytope is the intersection of n active
    hyperplanes drawn from constraint boundaries and finite variable bounds.
    All n-subsets are solved in a batch and feasible solutions are scanned
    for the best objective.  Requires a bounded feasible region.
    """
    n = model.n_variables
    A, b, _ = model.dense_matrix()
    lo, hi = model.bounds

    planes = [(A[i], b[i]) for i in range(model.n_constraints)]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if math.isfinite(lo[j]):
            planes.append((e.copy(), lo[j]))
        if math.isfinite(hi[j]):
            planes.append((e.copy(), hi[j]))
    if len(planes) < n:
        raise ValueError("too few hyperplanes; feasible set cannot be bounded")

    combos = list(itertools.combinations(range(len(planes)), n))
    M = np.stack([[planes[i][0] for i in combo] for combo in combos])
    r = np.array([[planes[i][1] for i in combo] for combo in combos])
    dets = np.abs(np.linalg.det(M))
    ok = dets > 1e-12
    pts = np.full((len(combos), n), np.nan)
    if np.any(ok):
        # batched solve wants the rhs as a stack of columns
        pts[ok] = np.linalg.solve(M[ok], r[ok][..., None])[..., 0]

    best_val = math.inf
    best_x: np.ndarray | None = None
    c = model.objective
    for p in pts:
        if np.any(np.isnan(p)):
            continue
        if np.any(p < lo - feas_tol) or np.any(p > hi + feas_tol):
            continue
        if np.max(constraint_residuals(model, p), initial=0.0) > feas_tol:
            continue
        val = float(np.dot(c, p))
        if val < best_val - 1e-15:
            best_val = val
            best_x = p
    if best_x is None:
        raise ValueError("no feasible vertex found; model may be infeasible")
    return best_val, best_x
