"""Dense two-phase simplex for the small linear programs in the robust layer.

Minimizes ``c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x = b_eq``
and ``x >= 0``.  Duals follow the sensitivity convention: ``dual_ub <= 0``
at optimality and ``objective == b_ub @ dual_ub + b_eq @ dual_eq``, the
same signs scipy.optimize.linprog reports, so the two can be compared
directly in tests.

The programs solved here are tiny (tens of rows, at most a few hundred
columns), so a dense tableau is plenty.  Pricing is Dantzig with ties
broken by lowest index; after ``bland_after`` consecutive degenerate
pivots it switches to Bland's rule, which cannot cycle.  Leaving rows
always break ties by smallest basic variable index.  Everything is
deterministic for fixed input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    objective: float
    dual_ub: np.ndarray | None
    dual_eq: np.ndarray | None
    iterations: int

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def _pivot_loop(T, rhs, basis, z, tol, max_iter, bland_after, it):
    """Run simplex pivots in place until optimal or stuck.

    T is B^-1 A, rhs is B^-1 b (kept >= 0), z the reduced-cost row.
    """
    m = T.shape[0]
    degen = 0
    while True:
        if degen >= bland_after:
            cand = np.nonzero(z < -tol)[0]
            if cand.size == 0:
                return OPTIMAL, it
            j = int(cand[0])
        else:
            j = int(np.argmin(z))
            if z[j] >= -tol:
                return OPTIMAL, it
        if it >= max_iter:
            return ITERATION_LIMIT, it
        col = T[:, j]
        pos = col > tol
        if not pos.any():
            return UNBOUNDED, it
        ratios = np.full(m, np.inf)
        ratios[pos] = rhs[pos] / col[pos]
        rmin = ratios.min()
        rows = np.nonzero(ratios <= rmin + tol)[0]
        r = int(rows[np.argmin(basis[rows])])
        degen = degen + 1 if rmin <= tol else 0

        piv = T[r, j]
        T[r] /= piv
        rhs[r] /= piv
        factor = T[:, j].copy()
        factor[r] = 0.0
        T -= np.outer(factor, T[r])
        rhs -= factor * rhs[r]
        np.maximum(rhs, 0.0, out=rhs)
        T[:, j] = 0.0
        T[r, j] = 1.0
        z -= z[j] * T[r]
        z[j] = 0.0
        basis[r] = j
        it += 1


def solve_lp(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    *,
    tol: float = 1e-9,
    max_iter: int = 10000,
    bland_after: int = 50,
) -> LPResult:
    c = np.asarray(c, dtype=float).ravel()
    n = c.size

    def block(A, b, name):
        if A is None and b is None:
            return np.zeros((0, n)), np.zeros(0)
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float)).ravel()
        if A.shape != (b.size, n):
            raise ValueError(f"{name}: shape {A.shape} incompatible with ({b.size}, {n})")
        return A, b

    A1, b1 = block(A_ub, b_ub, "A_ub")
    A2, b2 = block(A_eq, b_eq, "A_eq")
    m1, m2 = b1.size, b2.size
    m = m1 + m2

    if m == 0:
        if (c < -tol).any():
            return LPResult(UNBOUNDED, None, -np.inf, None, None, 0)
        return LPResult(OPTIMAL, np.zeros(n), 0.0, np.zeros(0), np.zeros(0), 0)

    # equality form: slacks on the ub rows, rows flipped so rhs >= 0
    ncols = n + m1
    A = np.zeros((m, ncols))
    A[:m1, :n] = A1
    A[m1:, :n] = A2
    A[:m1, n:] = np.eye(m1)
    b = np.concatenate([b1, b2])
    flip = np.where(b < 0, -1.0, 1.0)
    A *= flip[:, None]
    rhs = b * flip
    A_flipped = A.copy()

    # initial basis: unflipped slacks where possible, else artificials
    basis = np.empty(m, dtype=int)
    art_rows = [i for i in range(m) if not (i < m1 and flip[i] > 0)]
    for i in range(m):
        basis[i] = n + i if (i < m1 and flip[i] > 0) else -1
    n_art = len(art_rows)
    T = np.zeros((m, ncols + n_art))
    T[:, :ncols] = A
    for j, i in enumerate(art_rows):
        T[i, ncols + j] = 1.0
        basis[i] = ncols + j
    rhs = rhs.copy()
    row_ids = np.arange(m)

    it = 0
    if n_art:
        cost1 = np.zeros(ncols + n_art)
        cost1[ncols:] = 1.0
        z = cost1 - cost1[basis] @ T
        status, it = _pivot_loop(T, rhs, basis, z, tol, max_iter, bland_after, it)
        if status == ITERATION_LIMIT:
            return LPResult(status, None, np.nan, None, None, it)
        scale = 1.0 + float(np.abs(b).max(initial=0.0))
        phase1 = float(rhs[basis >= ncols].sum())
        if phase1 > tol * scale * 10:
            return LPResult(INFEASIBLE, None, np.nan, None, None, it)
        # drive leftover artificials out of the basis (their value is ~0)
        keep = np.ones(T.shape[0], dtype=bool)
        for i in range(T.shape[0]):
            if basis[i] < ncols:
                continue
            row = T[i, :ncols]
            cand = np.nonzero(np.abs(row) > 1e-7)[0]
            if cand.size:
                j = int(cand[0])
                piv = T[i, j]
                T[i] /= piv
                rhs[i] /= piv
                factor = T[:, j].copy()
                factor[i] = 0.0
                T -= np.outer(factor, T[i])
                rhs -= factor * rhs[i]
                np.maximum(rhs, 0.0, out=rhs)
                T[:, j] = 0.0
                T[i, j] = 1.0
                basis[i] = j
            else:
                keep[i] = False  # redundant constraint
        if not keep.all():
            T = T[keep]
            rhs = rhs[keep]
            basis = basis[keep]
            row_ids = row_ids[keep]

    T = np.ascontiguousarray(T[:, :ncols])
    cost2 = np.zeros(ncols)
    cost2[:n] = c
    z = cost2 - cost2[basis] @ T
    status, it = _pivot_loop(T, rhs, basis, z, tol, max_iter, bland_after, it)
    if status != OPTIMAL:
        obj = -np.inf if status == UNBOUNDED else np.nan
        return LPResult(status, None, obj, None, None, it)

    x_full = np.zeros(ncols)
    x_full[basis] = rhs
    x = x_full[:n]
    objective = float(c @ x)

    # duals from the optimal basis: solve B' y = c_B on the flipped system,
    # then undo the row flips
    B = A_flipped[row_ids][:, basis]
    cB = cost2[basis]
    try:
        y_part = np.linalg.solve(B.T, cB)
    except np.linalg.LinAlgError:
        y_part = np.linalg.lstsq(B.T, cB, rcond=None)[0]
    y = np.zeros(m)
    y[row_ids] = y_part
    y *= flip
    return LPResult(OPTIMAL, x, objective, y[:m1], y[m1:], it)
