"""A small revised simplex method with Bland's rule.

Solves   min c.z   s.t.  A z >= b,  z >= 0
for a scipy.sparse A. Two phases with artificials on rows where b > 0.
The basis inverse is kept dense and updated in product form, with a fresh
inversion every ``refactor`` pivots. That is fine for the few-hundred-row
programs it is used on; large programs should go through HiGHS.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import SolverStallError


@dataclass
class SimplexResult:
    z: np.ndarray
    objective: float
    pivots: int
    reduced_costs: np.ndarray  # for the structural columns


class RevisedSimplex:
    def __init__(self, A, b, c, tol=1e-9, max_pivots=10 ** 6, refactor=64):
        self.A = sp.csc_matrix(A, dtype=float)
        self.AT = sp.csr_matrix(self.A.T)
        self.b = np.asarray(b, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.m, self.N = self.A.shape
        self.tol = tol
        self.max_pivots = max_pivots
        self.refactor = refactor
        self.pivots = 0
        m, N = self.m, self.N
        # column layout: [0, N) structural, [N, N+m) surplus (-e_i), then artificials
        self.art_rows = np.flatnonzero(self.b > 0)
        self.n_art = len(self.art_rows)
        self.total = N + m + self.n_art
        basis = np.empty(m, dtype=np.int64)
        basis[:] = N + np.arange(m)  # surplus columns where b <= 0
        for k, i in enumerate(self.art_rows):
            basis[i] = N + m + k
        self.basis = basis
        self.is_basic = np.zeros(self.total, dtype=bool)
        self.is_basic[basis] = True
        self._refactor()

    # -- column access ---------------------------------------------------
    def _column(self, j):
        m, N = self.m, self.N
        col = np.zeros(m)
        if j < N:
            s, e = self.A.indptr[j], self.A.indptr[j + 1]
            col[self.A.indices[s:e]] = self.A.data[s:e]
        elif j < N + m:
            col[j - N] = -1.0
        else:
            col[self.art_rows[j - N - m]] = 1.0
        return col

    def _refactor(self):
        B = np.column_stack([self._column(j) for j in self.basis]) if self.m else np.zeros((0, 0))
        self.Binv = np.linalg.inv(B) if self.m else B
        self.xB = self.Binv @ self.b

    # -- pricing -----------------------------------------------------------
    def _reduced_costs(self, cost_full, allow_art):
        cB = cost_full[self.basis]
        y = self.Binv.T @ cB
        m, N = self.m, self.N
        d = np.empty(self.total)
        d[:N] = cost_full[:N] - self.AT @ y
        d[N:N + m] = cost_full[N:N + m] + y
        if self.n_art:
            d[N + m:] = cost_full[N + m:] - y[self.art_rows]
            if not allow_art:
                d[N + m:] = np.inf
        d[self.is_basic] = np.inf
        return d

    def _pivot(self, j, r, alpha):
        piv = alpha[r]
        row = self.Binv[r] / piv
        self.Binv -= np.outer(alpha, row)
        self.Binv[r] = row
        xr = self.xB[r] / piv
        self.xB -= alpha * xr
        self.xB[r] = xr
        old = self.basis[r]
        self.is_basic[old] = False
        self.basis[r] = j
        self.is_basic[j] = True
        self.pivots += 1
        if self.pivots % self.refactor == 0:
            self._refactor()

    def _run(self, cost_full, allow_art):
        tol = self.tol
        while True:
            if self.pivots >= self.max_pivots:
                raise SolverStallError(
                    f"simplex stopped after {self.pivots} pivots",
                    residual=float(np.abs(self.xB[self.xB < 0]).sum()))
            d = self._reduced_costs(cost_full, allow_art)
            cand = np.flatnonzero(d < -tol)
            if len(cand) == 0:
                return
            j = int(cand[0])  # Bland: lowest index
            alpha = self.Binv @ self._column(j)
            pos = np.flatnonzero(alpha > tol)
            if len(pos) == 0:
                raise SolverStallError("objective unbounded below")
            ratios = np.maximum(self.xB[pos], 0.0) / alpha[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-12]
            # Bland: among ties leave the lowest-index basic variable
            r = int(ties[np.argmin(self.basis[ties])])
            self._pivot(j, r, alpha)

    def _drive_out_artificials(self):
        m, N = self.m, self.N
        for r in range(m):
            if self.basis[r] < N + m:
                continue
            rho = self.Binv[r]
            vals = np.concatenate([self.AT @ rho, -rho])
            vals[self.is_basic[:N + m]] = 0.0
            nz = np.flatnonzero(np.abs(vals) > 1e-9)
            if len(nz) == 0:
                continue  # redundant row; artificial stays at zero
            j = int(nz[0])
            alpha = self.Binv @ self._column(j)
            self._pivot(j, r, alpha)

    def solve(self) -> SimplexResult:
        m, N = self.m, self.N
        if self.n_art:
            c1 = np.zeros(self.total)
            c1[N + m:] = 1.0
            self._run(c1, allow_art=True)
            infeas = float(c1[self.basis] @ self.xB)
            if infeas > 1e-7:
                raise SolverStallError(f"phase 1 ended with infeasibility {infeas:.3g}", residual=infeas)
            self._drive_out_artificials()
            self._refactor()
        c2 = np.zeros(self.total)
        c2[:N] = self.c
        self._run(c2, allow_art=False)
        self._refactor()
        z = np.zeros(self.total)
        z[self.basis] = self.xB
        zs = np.maximum(z[:N], 0.0)
        d = self._reduced_costs(c2, allow_art=False)[:N]
        d[self.is_basic[:N]] = 0.0
        return SimplexResult(zs, float(self.c @ zs), self.pivots, d)


def simplex_solve(A, b, c, tol=1e-9, max_pivots=10 ** 6) -> SimplexResult:
    return RevisedSimplex(A, b, c, tol=tol, max_pivots=max_pivots).solve()
