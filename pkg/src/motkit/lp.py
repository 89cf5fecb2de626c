"""Dense linear programming with certificates.

A small two-phase primal simplex for desk-scale LPs (thousands of nonzeros).
Design goals, in order: correct status reporting, independently checkable
certificates, and bit-level determinism.  Speed is a non-goal beyond what
vectorized tableau pivots give for free.

Problem form
------------
    min/max  c'x
    s.t.     a_i'x  <=|=|>=  b_i          (i = 1..m)
             lower_j <= x_j <= upper_j    (infinities allowed)

Solutions carry one dual multiplier per constraint row.  Sign convention:

    sense = "min":  y_i >= 0 on ">=" rows, y_i <= 0 on "<=" rows, free on "=",
                    reduced costs z = c - A'y satisfy z_j >= 0 at a lower
                    bound, z_j <= 0 at an upper bound, z_j = 0 in between.
    sense = "max":  all inequalities above are mirrored.

Infeasible solves carry a Farkas certificate (a contradiction-producing
nonnegative combination of the rows and bounds); unbounded solves carry an
improving feasible ray.  ``check_certificates`` and the two ray/Farkas
checkers recompute every residual from the raw problem data.

Pivoting is largest-reduced-cost (Dantzig) with lowest-index tie breaking,
falling back to Bland's rule after a fixed iteration budget so cycling
cannot occur; a hard iteration cap raises ``LpNumericalError`` rather than
returning a wrong status.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "LinearProgram",
    "LpBuilder",
    "LpSolution",
    "FarkasCertificate",
    "CertificateReport",
    "LpError",
    "LpNumericalError",
    "solve",
    "check_certificates",
    "check_farkas_certificate",
    "check_unbounded_ray",
    "write_mps",
]

RELATIONS = ("<=", "=", ">=")

# Pivot/zero tolerance inside the tableau.
PIVOT_TOL = 1e-9
# Residual level the engine promises on Optimal (absolute, per row).
RESIDUAL_TOL = 1e-8
# Rule used when solve() is called without an explicit pivot_rule; the CLI
# sets this per process from the document's solver options.
DEFAULT_PIVOT_RULE = "dantzig"


class LpError(RuntimeError):
    """Raised when a solve cannot produce a trustworthy answer."""


class LpNumericalError(LpError):
    """Numeric failure (iteration blow-up, overflow); never a wrong status."""


@dataclass(frozen=True)
class LinearProgram:
    """Immutable dense LP instance."""

    sense: str
    objective: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    a: np.ndarray
    relations: tuple[str, ...]
    rhs: np.ndarray
    variable_names: tuple[str, ...] = ()
    row_names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        obj = np.atleast_1d(np.asarray(self.objective, dtype=float))
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        up = np.atleast_1d(np.asarray(self.upper, dtype=float))
        a = np.asarray(self.a, dtype=float)
        if a.size == 0:
            a = a.reshape(0, obj.size)
        if a.ndim != 2:
            raise ValueError("constraint matrix must be two-dimensional")
        rhs = np.atleast_1d(np.asarray(self.rhs, dtype=float))
        n = obj.size
        m = a.shape[0]
        if a.shape[1] != n or lo.size != n or up.size != n:
            raise ValueError("row width or bound length does not match variable count")
        if rhs.size != m or len(self.relations) != m:
            raise ValueError("relations/rhs length does not match row count")
        for rel in self.relations:
            if rel not in RELATIONS:
                raise ValueError(f"unknown relation {rel!r}")
        if not np.all(np.isfinite(obj)) or not np.all(np.isfinite(a)) or not np.all(np.isfinite(rhs)):
            raise ValueError("objective, matrix and rhs must be finite")
        if np.any(np.isnan(lo)) or np.any(np.isnan(up)):
            raise ValueError("bounds must not be NaN")
        if np.any(lo > up):
            raise ValueError("lower bound exceeds upper bound")
        for arr in (obj, lo, up, a, rhs):
            arr.setflags(write=False)
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "relations", tuple(self.relations))

    @property
    def n_variables(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return self.a.shape[0]


class LpBuilder:
    """Incremental LP assembly with stable variable/row ids."""

    def __init__(self, sense: str):
        if sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        self.sense = sense
        self._obj: list[float] = []
        self._lower: list[float] = []
        self._upper: list[float] = []
        self._var_names: list[str] = []
        self._rows: list[tuple[np.ndarray, np.ndarray, str, float, str]] = []

    def add_variable(self, name: str = "", *, lower: float = 0.0,
                     upper: float = np.inf, objective: float = 0.0) -> int:
        vid = len(self._obj)
        self._obj.append(float(objective))
        self._lower.append(float(lower))
        self._upper.append(float(upper))
        self._var_names.append(name or f"x{vid}")
        return vid

    def add_row(self, coefficients: Mapping[int, float] | Sequence[tuple[int, float]],
                relation: str, rhs: float, name: str = "") -> int:
        if relation not in RELATIONS:
            raise ValueError(f"unknown relation {relation!r}")
        items = coefficients.items() if isinstance(coefficients, Mapping) else coefficients
        idx = np.fromiter((int(i) for i, _ in items), dtype=np.intp)
        items = coefficients.items() if isinstance(coefficients, Mapping) else coefficients
        val = np.fromiter((float(v) for _, v in items), dtype=float)
        rid = len(self._rows)
        self._rows.append((idx, val, relation, float(rhs), name or f"r{rid}"))
        return rid

    @property
    def n_variables(self) -> int:
        return len(self._obj)

    def build(self) -> LinearProgram:
        n = len(self._obj)
        m = len(self._rows)
        a = np.zeros((m, n))
        relations = []
        rhs = np.zeros(m)
        row_names = []
        for r, (idx, val, rel, b, name) in enumerate(self._rows):
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise ValueError(f"row {name!r} references unknown variable")
            np.add.at(a[r], idx, val)
            relations.append(rel)
            rhs[r] = b
            row_names.append(name)
        return LinearProgram(
            sense=self.sense,
            objective=np.array(self._obj),
            lower=np.array(self._lower),
            upper=np.array(self._upper),
            a=a,
            relations=tuple(relations),
            rhs=rhs,
            variable_names=tuple(self._var_names),
            row_names=tuple(row_names),
        )


@dataclass(frozen=True)
class FarkasCertificate:
    """Multipliers proving infeasibility.

    With w_i >= 0 on ">=" rows, w_i <= 0 on "<=" rows, w_i free on "=",
    p_j >= 0 on x_j >= lower_j and q_j <= 0 on x_j <= upper_j, the
    aggregation  sum_i w_i a_i + p + q  vanishes while
    sum_i w_i b_i + sum_j p_j lower_j + sum_j q_j upper_j > 0,
    which no feasible point can satisfy.
    """

    row_multipliers: np.ndarray
    lower_multipliers: np.ndarray
    upper_multipliers: np.ndarray


@dataclass(frozen=True)
class LpSolution:
    status: str
    value: float
    x: np.ndarray | None
    duals: np.ndarray | None
    iterations: int
    ray: np.ndarray | None = None
    farkas: FarkasCertificate | None = None


@dataclass(frozen=True)
class CertificateReport:
    """Residuals of an Optimal solution, recomputed from scratch."""

    primal_residual: float
    dual_residual: float
    complementarity: float
    duality_gap: float

    @property
    def max_violation(self) -> float:
        return max(self.primal_residual, self.dual_residual,
                   self.complementarity, self.duality_gap)


# ---------------------------------------------------------------------------
# standard-form conversion
# ---------------------------------------------------------------------------

class _Standardizer:
    """Rewrites an LP as  min c'z, A z = b, z >= 0, b >= 0  and remembers
    how to map points, rays and duals back to the original space."""

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        n = lp.n_variables
        sign = -1.0 if lp.sense == "max" else 1.0
        c_orig = sign * lp.objective

        # var j -> (kind, columns); kind in {"shift", "mirror", "split"}
        self.var_map: list[tuple[str, tuple[int, ...]]] = []
        self.offsets = np.zeros(n)
        cols_c: list[float] = []
        cols_a: list[np.ndarray] = []  # column snippets over original rows
        bound_rows: list[tuple[int, float]] = []  # (z column, range upper-lower)

        for j in range(n):
            lo, up = lp.lower[j], lp.upper[j]
            col = lp.a[:, j]
            if np.isfinite(lo):
                z = len(cols_c)
                self.var_map.append(("shift", (z,)))
                self.offsets[j] = lo
                cols_c.append(c_orig[j])
                cols_a.append(col)
                if np.isfinite(up):
                    bound_rows.append((z, up - lo))
            elif np.isfinite(up):
                z = len(cols_c)
                self.var_map.append(("mirror", (z,)))
                self.offsets[j] = up
                cols_c.append(-c_orig[j])
                cols_a.append(-col)
            else:
                zp = len(cols_c)
                cols_c.append(c_orig[j])
                cols_a.append(col)
                zm = len(cols_c)
                cols_c.append(-c_orig[j])
                cols_a.append(-col)
                self.var_map.append(("split", (zp, zm)))

        m_orig = lp.n_rows
        m_bound = len(bound_rows)
        n_struct = len(cols_c)

        body = np.empty((m_orig + m_bound, n_struct))
        if n_struct:
            body[:m_orig] = np.column_stack(cols_a) if cols_a else np.zeros((m_orig, 0))
        body[m_orig:] = 0.0
        rhs = np.concatenate([lp.rhs - lp.a @ self.offsets,
                              np.array([r for _, r in bound_rows], dtype=float)])
        relations = list(lp.relations) + ["<="] * m_bound
        for k, (z, _) in enumerate(bound_rows):
            body[m_orig + k, z] = 1.0

        # slacks
        slack_cols = []
        for i, rel in enumerate(relations):
            if rel == "<=":
                slack_cols.append((i, 1.0))
            elif rel == ">=":
                slack_cols.append((i, -1.0))
        n_slack = len(slack_cols)
        a_std = np.zeros((m_orig + m_bound, n_struct + n_slack))
        a_std[:, :n_struct] = body
        for k, (i, s) in enumerate(slack_cols):
            a_std[i, n_struct + k] = s

        # nonnegative rhs
        self.sigma = np.where(rhs < 0, -1.0, 1.0)
        a_std *= self.sigma[:, None]
        rhs = rhs * self.sigma

        self.m_orig = m_orig
        self.m_bound = m_bound
        self.bound_rows = bound_rows
        self.n_struct = n_struct
        self.c_std = np.concatenate([np.array(cols_c), np.zeros(n_slack)])
        self.a_std = a_std
        self.b_std = rhs
        self.obj_sign = sign

    def x_from_z(self, z: np.ndarray) -> np.ndarray:
        x = np.empty(self.lp.n_variables)
        for j, (kind, cols) in enumerate(self.var_map):
            if kind == "shift":
                x[j] = self.offsets[j] + z[cols[0]]
            elif kind == "mirror":
                x[j] = self.offsets[j] - z[cols[0]]
            else:
                x[j] = z[cols[0]] - z[cols[1]]
        return x

    def ray_from_z(self, dz: np.ndarray) -> np.ndarray:
        r = np.empty(self.lp.n_variables)
        for j, (kind, cols) in enumerate(self.var_map):
            if kind == "shift":
                r[j] = dz[cols[0]]
            elif kind == "mirror":
                r[j] = -dz[cols[0]]
            else:
                r[j] = dz[cols[0]] - dz[cols[1]]
        return r

    def duals_from_std(self, y_std: np.ndarray) -> np.ndarray:
        # undo row negation, then undo the sense flip
        y = (self.sigma * y_std)[: self.m_orig]
        return self.obj_sign * y

    def farkas_from_std(self, y_std: np.ndarray) -> FarkasCertificate:
        yhat = self.sigma * y_std
        n = self.lp.n_variables
        p = np.zeros(n)
        q = np.zeros(n)
        w = yhat[: self.m_orig]
        # fold bound-row multipliers and column slacks into bound multipliers
        qbound = {z: yhat[self.m_orig + k] for k, (z, _) in enumerate(self.bound_rows)}
        for j, (kind, cols) in enumerate(self.var_map):
            a_col = self.lp.a[:, j]
            if kind == "shift":
                qb = qbound.get(cols[0], 0.0)
                q[j] = min(qb, 0.0)
                p[j] = max(-(w @ a_col + q[j]), 0.0)
            elif kind == "mirror":
                q[j] = min(-(w @ a_col), 0.0)
        scale = np.abs(w).sum() + np.abs(p).sum() + np.abs(q).sum()
        if scale > 0:
            w, p, q = w / scale, p / scale, q / scale
        return FarkasCertificate(w, p, q)


# ---------------------------------------------------------------------------
# simplex core
# ---------------------------------------------------------------------------

def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    piv_row = tableau[row] / tableau[row, col]
    colvals = tableau[:, col].copy()
    tableau -= np.outer(colvals, piv_row)
    tableau[row] = piv_row
    basis[row] = col


def _choose_entering(costrow: np.ndarray, allowed: np.ndarray, bland: bool) -> int | None:
    reduced = np.where(allowed, costrow, np.inf)
    if bland:
        neg = np.flatnonzero(reduced < -PIVOT_TOL)
        return int(neg[0]) if neg.size else None
    j = int(np.argmin(reduced))
    return j if reduced[j] < -PIVOT_TOL else None


def _choose_leaving(tableau: np.ndarray, basis: np.ndarray, col: int, bland: bool) -> int | None:
    m = tableau.shape[0] - 1
    colvals = tableau[:m, col]
    rhs = tableau[:m, -1]
    eligible = colvals > PIVOT_TOL
    if not eligible.any():
        return None
    ratios = np.where(eligible, rhs / np.where(eligible, colvals, 1.0), np.inf)
    best = ratios.min()
    ties = np.flatnonzero(ratios <= best + 1e-12)
    if bland or ties.size == 1:
        # smallest basic-variable index among ties (Bland)
        return int(ties[np.argmin(basis[ties])])
    # deterministic Dantzig tie break: largest pivot element, then lowest basis id
    piv = colvals[ties]
    strongest = ties[piv >= piv.max() - 1e-12]
    return int(strongest[np.argmin(basis[strongest])])


def _run_simplex(tableau: np.ndarray, basis: np.ndarray, allowed: np.ndarray,
                 pivot_rule: str, iteration_budget: list[int],
                 bland_after: int) -> tuple[str, int | None]:
    """Iterate to optimality.

    Returns ("optimal", None) or ("unbounded", entering_column).
    """
    while True:
        bland = pivot_rule == "bland" or iteration_budget[0] >= bland_after
        col = _choose_entering(tableau[-1, :-1], allowed, bland)
        if col is None:
            return "optimal", None
        row = _choose_leaving(tableau, basis, col, bland)
        if row is None:
            return "unbounded", col
        _pivot(tableau, basis, row, col)
        iteration_budget[0] += 1
        if iteration_budget[0] >= iteration_budget[1]:
            raise LpNumericalError("simplex iteration limit exceeded")
        if not np.isfinite(tableau).all():
            raise LpNumericalError("tableau overflow during pivoting")


def solve(lp: LinearProgram, *, pivot_rule: str | None = None,
          max_iterations: int | None = None) -> LpSolution:
    """Solve an LP; status is one of Optimal / Infeasible / Unbounded.

    Deterministic: identical inputs take identical pivot sequences.
    """
    if pivot_rule is None:
        pivot_rule = DEFAULT_PIVOT_RULE
    if pivot_rule not in ("dantzig", "bland"):
        raise ValueError("pivot_rule must be 'dantzig' or 'bland'")
    std = _Standardizer(lp)
    a, b, c = std.a_std, std.b_std, std.c_std
    m, n = a.shape

    if m == 0:
        # only nonnegativity; the origin in z-space is optimal unless some
        # cost is negative, in which case that coordinate is an improving ray
        neg = np.flatnonzero(c < -PIVOT_TOL)
        if neg.size:
            dz = np.zeros(n)
            dz[neg[0]] = 1.0
            ray = std.ray_from_z(dz)
            ray /= np.abs(ray).max() if np.abs(ray).max() > 0 else 1.0
            value = -np.inf if lp.sense == "min" else np.inf
            return LpSolution("unbounded", value, None, None, 0, ray=ray)
        x = std.x_from_z(np.zeros(n))
        return LpSolution("optimal", float(lp.objective @ x), x,
                          np.zeros(0), 0)

    bland_after = 1000 + 20 * (m + n)
    cap = max_iterations if max_iterations is not None else 20000 + 500 * (m + n)
    budget = [0, cap]

    # Phase 1: artificial basis, minimize total infeasibility.
    tableau = np.zeros((m + 1, n + m + 1))
    tableau[:m, :n] = a
    tableau[:m, n:n + m] = np.eye(m)
    tableau[:m, -1] = b
    tableau[-1, :n] = -a.sum(axis=0)
    tableau[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)
    allowed = np.ones(n + m, dtype=bool)

    status, _ = _run_simplex(tableau, basis, allowed, pivot_rule, budget, bland_after)
    if status != "optimal":  # pragma: no cover - phase 1 is always bounded
        raise LpNumericalError("phase 1 terminated unbounded")
    infeasibility = -tableau[-1, -1]
    feas_tol = PIVOT_TOL * (1.0 + np.abs(b).max(initial=0.0)) * 10.0
    if infeasibility > feas_tol:
        # the cost row holds reduced costs; artificial i has cost 1 and
        # column e_i, so r_i = 1 - y_i and the phase-1 duals are 1 - r_i
        y_std = 1.0 - tableau[-1, n:n + m]
        cert = std.farkas_from_std(y_std)
        return LpSolution("infeasible", float("nan"), None, None, budget[0],
                          farkas=cert)

    # Drive leftover artificials out of the basis (degenerate pivots).
    for i in range(m):
        if basis[i] >= n:
            candidates = np.flatnonzero(np.abs(tableau[i, :n]) > 1e-7)
            if candidates.size:
                j = int(candidates[np.argmax(np.abs(tableau[i, candidates]))])
                _pivot(tableau, basis, i, j)
            # else: redundant row, its artificial stays basic at level zero

    # Phase 2 on a narrowed tableau: drop every artificial that left the
    # basis (duals are recovered from the basis at the end instead).
    keep = np.concatenate([np.ones(n, dtype=bool), np.zeros(m, dtype=bool)])
    keep[basis] = True
    col_ids = np.flatnonzero(keep)  # narrow index -> standard column id
    narrow_of = -np.ones(n + m, dtype=np.intp)
    narrow_of[col_ids] = np.arange(col_ids.size)
    tableau = np.ascontiguousarray(
        tableau[:, np.concatenate([col_ids, [n + m]])])
    basis = narrow_of[basis]
    allowed = col_ids < n
    cost_full = np.concatenate([c, np.zeros(m)])
    costrow = np.concatenate([cost_full[col_ids], [0.0]])
    for i in range(m):
        if costrow[basis[i]] != 0.0:
            costrow -= costrow[basis[i]] * tableau[i]
    tableau[-1] = costrow

    status, entering = _run_simplex(tableau, basis, allowed, pivot_rule, budget, bland_after)

    if status == "unbounded":
        dz = np.zeros(n + m)
        dz[col_ids[entering]] = 1.0
        dz[col_ids[basis]] = -tableau[:m, entering]
        ray = std.ray_from_z(np.maximum(dz[:n], 0.0))
        norm = np.abs(ray).max()
        if norm <= 0:  # pragma: no cover - entering column maps to a real var
            raise LpNumericalError("degenerate unbounded ray")
        ray = ray / norm
        value = -np.inf if lp.sense == "min" else np.inf
        return LpSolution("unbounded", value, None, None, budget[0], ray=ray)

    z = np.zeros(n + m)
    z[col_ids[basis]] = tableau[:m, -1]
    z = np.maximum(z, 0.0)
    x = std.x_from_z(z[:n])
    x = np.clip(x, lp.lower, lp.upper)
    y = std.duals_from_std(_basis_duals(a, c, col_ids[basis]))
    return LpSolution("optimal", float(lp.objective @ x), x, y, budget[0])


def _basis_duals(a: np.ndarray, c: np.ndarray, basis_cols: np.ndarray) -> np.ndarray:
    """Solve B'y = c_B for the final basis (artificial columns are unit
    vectors with zero cost)."""
    m = a.shape[0]
    n = a.shape[1]
    bmat = np.empty((m, m))
    cb = np.empty(m)
    for k, j in enumerate(basis_cols):
        if j < n:
            bmat[:, k] = a[:, j]
            cb[k] = c[j]
        else:
            bmat[:, k] = 0.0
            bmat[j - n, k] = 1.0
            cb[k] = 0.0
    try:
        return np.linalg.solve(bmat.T, cb)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - basis is nonsingular
        raise LpNumericalError("singular basis during dual recovery") from exc


# ---------------------------------------------------------------------------
# certificate checking (independent of the solver internals)
# ---------------------------------------------------------------------------

def _row_activities(lp: LinearProgram, x: np.ndarray) -> np.ndarray:
    return lp.a @ x if lp.n_rows else np.zeros(0)


def primal_residual(lp: LinearProgram, x: np.ndarray) -> float:
    """Largest violation of rows and bounds at x (absolute)."""
    act = _row_activities(lp, x)
    worst = 0.0
    for i, rel in enumerate(lp.relations):
        gap = act[i] - lp.rhs[i]
        if rel == "<=":
            worst = max(worst, gap)
        elif rel == ">=":
            worst = max(worst, -gap)
        else:
            worst = max(worst, abs(gap))
    lo_viol = np.where(np.isfinite(lp.lower), lp.lower - x, -np.inf)
    up_viol = np.where(np.isfinite(lp.upper), x - lp.upper, -np.inf)
    worst = max(worst, float(lo_viol.max(initial=0.0)), float(up_viol.max(initial=0.0)))
    return float(max(worst, 0.0))


def check_certificates(lp: LinearProgram, sol: LpSolution,
                       tol: float = RESIDUAL_TOL) -> CertificateReport:
    """Recompute all four optimality residuals from scratch."""
    if sol.status != "optimal":
        raise ValueError("check_certificates expects an Optimal solution")
    x, y = sol.x, sol.duals
    sgn = 1.0 if lp.sense == "min" else -1.0

    p_res = primal_residual(lp, x)

    z = lp.objective - (lp.a.T @ y if lp.n_rows else 0.0)
    d_res = 0.0
    comp = 0.0
    act = _row_activities(lp, x)
    for i, rel in enumerate(lp.relations):
        yi = sgn * y[i]  # in min convention after sign normalization
        if rel == ">=":
            d_res = max(d_res, -yi)
        elif rel == "<=":
            d_res = max(d_res, yi)
        comp = max(comp, abs(y[i] * (act[i] - lp.rhs[i])))
    zs = sgn * z
    for j in range(lp.n_variables):
        at_lo = np.isfinite(lp.lower[j]) and x[j] <= lp.lower[j] + 1e-7
        at_up = np.isfinite(lp.upper[j]) and x[j] >= lp.upper[j] - 1e-7
        if at_lo and at_up:
            continue
        if at_lo:
            d_res = max(d_res, -zs[j])
        elif at_up:
            d_res = max(d_res, zs[j])
        else:
            d_res = max(d_res, abs(zs[j]))

    dual_obj = float(y @ lp.rhs) if lp.n_rows else 0.0
    for j in range(lp.n_variables):
        if zs[j] > tol and np.isfinite(lp.lower[j]):
            dual_obj += z[j] * lp.lower[j]
        elif zs[j] < -tol and np.isfinite(lp.upper[j]):
            dual_obj += z[j] * lp.upper[j]
    gap = abs(sol.value - dual_obj) / max(1.0, abs(sol.value))
    return CertificateReport(p_res, float(max(d_res, 0.0)), comp, gap)


def check_farkas_certificate(lp: LinearProgram, cert: FarkasCertificate,
                             tol: float = RESIDUAL_TOL) -> float:
    """Residual of an infeasibility certificate; <= tol means valid.

    Returns max(sign violations, |aggregated row|_inf, tol - margin) so a
    valid, strictly separating certificate scores 0.
    """
    w, p, q = cert.row_multipliers, cert.lower_multipliers, cert.upper_multipliers
    worst = 0.0
    for i, rel in enumerate(lp.relations):
        if rel == ">=":
            worst = max(worst, -w[i])
        elif rel == "<=":
            worst = max(worst, w[i])
    worst = max(worst, float((-p).max(initial=0.0)), float(q.max(initial=0.0)))
    # multipliers on infinite bounds must vanish
    worst = max(worst, float(np.abs(np.where(np.isfinite(lp.lower), 0.0, p)).max(initial=0.0)))
    worst = max(worst, float(np.abs(np.where(np.isfinite(lp.upper), 0.0, q)).max(initial=0.0)))
    agg = (lp.a.T @ w if lp.n_rows else 0.0) + p + q
    worst = max(worst, float(np.abs(agg).max(initial=0.0)))
    margin = float(w @ lp.rhs)
    lo_mask = np.isfinite(lp.lower)
    up_mask = np.isfinite(lp.upper)
    margin += float((p[lo_mask] * lp.lower[lo_mask]).sum())
    margin += float((q[up_mask] * lp.upper[up_mask]).sum())
    worst = max(worst, tol - margin)
    return float(max(worst, 0.0))


def check_unbounded_ray(lp: LinearProgram, ray: np.ndarray,
                        tol: float = RESIDUAL_TOL) -> float:
    """Residual of an improving feasible ray; <= tol means valid."""
    worst = 0.0
    act = lp.a @ ray if lp.n_rows else np.zeros(0)
    for i, rel in enumerate(lp.relations):
        if rel == "<=":
            worst = max(worst, act[i])
        elif rel == ">=":
            worst = max(worst, -act[i])
        else:
            worst = max(worst, abs(act[i]))
    worst = max(worst, float(np.where(np.isfinite(lp.lower), -ray, -np.inf).max(initial=0.0)))
    worst = max(worst, float(np.where(np.isfinite(lp.upper), ray, -np.inf).max(initial=0.0)))
    drift = float(lp.objective @ ray)
    improving = -drift if lp.sense == "min" else drift
    worst = max(worst, tol - improving)
    return float(max(worst, 0.0))


# ---------------------------------------------------------------------------
# MPS export
# ---------------------------------------------------------------------------

def _mps_name(prefix: str, i: int) -> str:
    return f"{prefix}{i + 1:07d}"


def write_mps(lp: LinearProgram, name: str = "MOTKITLP") -> str:
    """Render the LP in fixed-width MPS for external cross-checking."""
    rows = [f"NAME          {name}"]
    if lp.sense == "max":
        rows.append("OBJSENSE")
        rows.append("    MAX")
    rows.append("ROWS")
    rows.append(" N  OBJ")
    rel_code = {"<=": "L", ">=": "G", "=": "E"}
    rnames = [_mps_name("R", i) for i in range(lp.n_rows)]
    cnames = [_mps_name("C", j) for j in range(lp.n_variables)]
    for i, rel in enumerate(lp.relations):
        rows.append(f" {rel_code[rel]}  {rnames[i]}")
    rows.append("COLUMNS")

    def entry(col: str, row: str, val: float) -> str:
        return f"    {col:<8}  {row:<8}  {val:<12.9G}"

    for j in range(lp.n_variables):
        if lp.objective[j] != 0.0:
            rows.append(entry(cnames[j], "OBJ", lp.objective[j]))
        for i in range(lp.n_rows):
            if lp.a[i, j] != 0.0:
                rows.append(entry(cnames[j], rnames[i], lp.a[i, j]))
    rows.append("RHS")
    for i in range(lp.n_rows):
        if lp.rhs[i] != 0.0:
            rows.append(entry("RHS", rnames[i], lp.rhs[i]))
    rows.append("BOUNDS")
    for j in range(lp.n_variables):
        lo, up = lp.lower[j], lp.upper[j]
        if lo == 0.0 and not np.isfinite(up):
            continue
        if not np.isfinite(lo) and not np.isfinite(up):
            rows.append(f" FR BND       {cnames[j]}")
            continue
        if np.isfinite(lo):
            rows.append(f" LO BND       {cnames[j]:<8}  {lo:<12.9G}")
        else:
            rows.append(f" MI BND       {cnames[j]}")
        if np.isfinite(up):
            rows.append(f" UP BND       {cnames[j]:<8}  {up:<12.9G}")
    rows.append("ENDATA")
    return "\n".join(rows) + "\n"
