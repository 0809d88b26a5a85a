"""The LP relaxation of l1 hub labeling and its l-inf / l-p variants.

Variables are x_uv for every ordered pair and y_uvw for every unordered pair
{u, v} and every w on P_uv. Constraints, all written as rows of A z >= b:

    sum_w y_uvw >= 1          (cover row, one per pair, u == v included)
    x_uw - y_uvw >= 0         (link rows)
    x_vw - y_uvw >= 0
    M - sum_v x_uv >= 0       (l-inf only)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import InfeasibleSolutionError, SolverStallError
from .graph import ShortestPathData, path_between, require_unique

DEFAULT_TAU = 1e-9
CHECK_TAU = 1e-7


@dataclass(eq=False)
class LpInstance:
    n: int
    objective: str  # "l1", "linf" or "custom"
    A: sp.csr_matrix
    b: np.ndarray
    c: np.ndarray
    y_keys: list  # (u, v, w) per y column, u <= v
    n_cover_rows: int
    has_M: bool = False

    @property
    def num_x(self) -> int:
        return self.n * self.n

    @property
    def num_y(self) -> int:
        return len(self.y_keys)

    @property
    def num_vars(self) -> int:
        return self.A.shape[1]

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    def x_index(self, u: int, v: int) -> int:
        return (u - 1) * self.n + (v - 1)

    def with_objective(self, c) -> "LpInstance":
        c = np.asarray(c, dtype=float)
        if c.shape != self.c.shape:
            raise ValueError("objective length mismatch")
        return replace(self, objective="custom", c=c)

    def x_matrix(self, z) -> np.ndarray:
        n = self.n
        X = np.zeros((n + 1, n + 1))
        X[1:, 1:] = np.asarray(z[: n * n]).reshape(n, n)
        return X


@dataclass
class FractionalSolution:
    x: np.ndarray  # (n+1, n+1); row/col 0 unused
    objective: float
    tau: float
    norm: object = 1
    gap: Optional[float] = None  # Frank-Wolfe gap estimate
    residual: float = 0.0
    min_reduced_cost: Optional[float] = None
    pivots: Optional[int] = None
    z: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.x.shape[0] - 1

    def row_sums(self) -> np.ndarray:
        return self.x.sum(axis=1)


def build_lp1(spd: ShortestPathData, objective: str = "l1") -> LpInstance:
    require_unique(spd)
    if objective not in ("l1", "linf"):
        raise ValueError("objective must be 'l1' or 'linf'")
    n = spd.n
    nx = n * n
    rows, cols, vals = [], [], []
    b = []
    y_keys = []
    r = 0
    # cover rows first so that row i < n_pairs is the cover row of pair i
    pairs = [(u, v) for u in range(1, n + 1) for v in range(u, n + 1)]
    paths = [path_between(spd, u, v) for u, v in pairs]
    for (u, v), P in zip(pairs, paths):
        for w in P:
            rows.append(r)
            cols.append(nx + len(y_keys))
            vals.append(1.0)
            y_keys.append((u, v, w))
        b.append(1.0)
        r += 1
    n_cover = r
    for j, (u, v, w) in enumerate(y_keys):
        yc = nx + j
        ends = (u,) if u == v else (u, v)
        for a in ends:
            rows += [r, r]
            cols += [(a - 1) * n + (w - 1), yc]
            vals += [1.0, -1.0]
            b.append(0.0)
            r += 1
    nvars = nx + len(y_keys)
    has_M = objective == "linf"
    if has_M:
        mcol = nvars
        nvars += 1
        for u in range(1, n + 1):
            rows.append(r)
            cols.append(mcol)
            vals.append(1.0)
            for v in range(1, n + 1):
                rows.append(r)
                cols.append((u - 1) * n + (v - 1))
                vals.append(-1.0)
            b.append(0.0)
            r += 1
    A = sp.csr_matrix((vals, (rows, cols)), shape=(r, nvars))
    c = np.zeros(nvars)
    if has_M:
        c[-1] = 1.0
    else:
        c[:nx] = 1.0
    return LpInstance(n, objective, A, np.array(b), c, y_keys, n_cover, has_M)


def _solve_highs(inst: LpInstance, tau: float):
    from scipy.optimize import linprog

    res = linprog(inst.c, A_ub=-inst.A, b_ub=-inst.b, bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": max(tau, 1e-10),
                           "dual_feasibility_tolerance": max(tau, 1e-10)})
    if res.status != 0:
        raise SolverStallError(f"HiGHS returned status {res.status}: {res.message}")
    z = np.maximum(res.x, 0.0)
    rc = None
    if getattr(res, "lower", None) is not None and res.lower.marginals is not None:
        rc = float(np.min(res.lower.marginals)) if len(res.lower.marginals) else 0.0
    return z, rc, None


def _solve_simplex(inst: LpInstance, tau: float, max_pivots: int):
    from .simplex import simplex_solve

    r = simplex_solve(inst.A, inst.b, inst.c, tol=tau, max_pivots=max_pivots)
    rc = float(r.reduced_costs.min()) if len(r.reduced_costs) else 0.0
    return r.z, rc, r.pivots


def solve(inst: LpInstance, tau: float = DEFAULT_TAU, method: str = "highs",
          max_pivots: int = 10 ** 6) -> FractionalSolution:
    """Solve a linear-objective instance.

    method="simplex" runs the bundled revised simplex (Bland's rule);
    method="highs" hands the same matrices to scipy's HiGHS, which is much
    faster on anything beyond a few hundred rows.
    """
    if method == "simplex":
        z, rc, piv = _solve_simplex(inst, tau, max_pivots)
    elif method == "highs":
        z, rc, piv = _solve_highs(inst, tau)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    resid = float(max(0.0, np.max(inst.b - inst.A @ z, initial=0.0)))
    norm = math.inf if inst.objective == "linf" else 1
    return FractionalSolution(inst.x_matrix(z), float(inst.c @ z), tau, norm,
                              residual=resid, min_reduced_cost=rc, pivots=piv, z=z)


def _l1_objective(inst: LpInstance) -> np.ndarray:
    c = np.zeros(inst.num_vars)
    c[: inst.num_x] = 1.0
    return c


def solve_lp_convex(inst: LpInstance, p, K: int = 64, tau: float = DEFAULT_TAU,
                    method: str = "highs") -> FractionalSolution:
    """Frank-Wolfe on min (sum_u (sum_v x_uv)^p)^(1/p) over the LP polytope.

    Starts from the l1 optimum; step size 2/(k+2). The gap estimate is
    best-value minus the best Frank-Wolfe lower bound f(z) - <grad, z - s>.
    """
    p = float(p)
    if not (1 < p < math.inf):
        raise ValueError("the convex relaxation needs 1 < p < inf")
    n, nx = inst.n, inst.num_x
    lin = inst.with_objective(_l1_objective(inst))
    z = solve(lin, tau, method).z.copy()

    def f_of(zz):
        r = zz[:nx].reshape(n, n).sum(axis=1)
        return float(np.sum(r ** p) ** (1.0 / p)), r

    fz, r = f_of(z)
    best_f, best_z = fz, z.copy()
    lower = 0.0
    for k in range(K):
        g = np.zeros(inst.num_vars)
        g[:nx] = np.repeat((r / fz) ** (p - 1.0), n)
        s = solve(inst.with_objective(g), tau, method).z
        gap = float(g @ (z - s))
        lower = max(lower, fz - gap)
        gamma = 2.0 / (k + 2.0)
        z = z + gamma * (s - z)
        fz, r = f_of(z)
        if fz < best_f:
            best_f, best_z = fz, z.copy()
    resid = float(max(0.0, np.max(inst.b - inst.A @ best_z, initial=0.0)))
    gap = best_f - lower if K > 0 else None
    return FractionalSolution(inst.x_matrix(best_z), best_f, tau, p, gap=gap, residual=resid, z=best_z)


@dataclass
class FeasibilityReport:
    ok: bool
    violations: list  # (u, v, slack) with slack = sum_w min(x_uw, x_vw) - 1
    min_slack: float

    def __bool__(self):
        return self.ok


def check_feasibility(x, spd: ShortestPathData, tau: float = CHECK_TAU) -> FeasibilityReport:
    """Evaluate sum_{w in P_uv} min(x_uw, x_vw) >= 1 - tau for every pair."""
    X = x.x if isinstance(x, FractionalSolution) else np.asarray(x, dtype=float)
    n = spd.n
    viol = []
    worst = math.inf
    for u in range(1, n + 1):
        xu = X[u]
        for v in range(u, n + 1):
            P = path_between(spd, u, v)
            s = float(np.minimum(xu[P], X[v][P]).sum())
            sl = s - 1.0
            if sl < worst:
                worst = sl
            if sl < -tau:
                viol.append((u, v, sl))
    return FeasibilityReport(not viol, viol, worst if n else 0.0)


def require_feasible(x, spd, tau=CHECK_TAU):
    rep = check_feasibility(x, spd, tau)
    if not rep.ok:
        u, v, sl = rep.violations[0]
        raise InfeasibleSolutionError(
            f"fractional solution violates pair ({u},{v}) by {-sl:.3g} ({len(rep.violations)} pairs total)")
    return rep


def labeling_to_fractional(h, n: Optional[int] = None) -> FractionalSolution:
    """x_uv = 1 iff v in H_u."""
    n = n or h.n
    X = np.zeros((n + 1, n + 1))
    for u, lst in h.hubs.items():
        for w, _ in lst:
            X[u, w] = 1.0
    return FractionalSolution(X, float(X.sum()), 0.0)


# ---- fixed-field MPS dump ------------------------------------------------

def _mps_line(f1="", f2="", f3="", f4="", f5="", f6=""):
    # fields start at columns 2, 5, 15, 25, 40, 50 (1-based)
    s = " " + f"{f1:<2}" + " " + f"{f2:<8}" + "  " + f"{f3:<8}" + "  " + f"{f4:>12}"
    if f5:
        s += "   " + f"{f5:<8}" + "  " + f"{f6:>12}"
    return s.rstrip()


def _num(v: float) -> str:
    s = repr(float(v))
    if s.endswith(".0"):
        s = s[:-2]
    return s[:12]


def write_mps(inst: LpInstance, name: str = "HUBLP") -> str:
    """Fixed-format MPS text of the instance (rows named R<i>, columns C<j>)."""
    A = sp.csc_matrix(inst.A)
    out = [f"NAME          {name[:8]}", "ROWS", " N  COST"]
    for i in range(inst.num_rows):
        out.append(_mps_line("G", f"R{i}"))
    out.append("COLUMNS")
    for j in range(inst.num_vars):
        cname = f"C{j}"
        if inst.c[j] != 0:
            out.append(_mps_line("", cname, "COST", _num(inst.c[j])))
        s, e = A.indptr[j], A.indptr[j + 1]
        for i, v in zip(A.indices[s:e], A.data[s:e]):
            out.append(_mps_line("", cname, f"R{i}", _num(v)))
    out.append("RHS")
    for i in range(inst.num_rows):
        if inst.b[i] != 0:
            out.append(_mps_line("", "RHS", f"R{i}", _num(inst.b[i])))
    out.append("ENDATA")
    return "\n".join(out) + "\n"
