"""Worst-case inner problems: the adversary's distribution choice per arc row.

Given a value row u (already computed for lower budget rows) and an
ambiguity set D for an arc, the inner problem at budget row k is

    inner(k) = min over p in D of sum_l p_l * u(k - l),

the worst expectation of the successor value over the admissible cost
distributions.  Three solvers cover the statistic structures:

* mean-only sets have a closed form on the lower convex envelope of the
  window points (valley value, or envelope interpolation at whichever
  mean bound blocks the valley);
* piecewise-constant statistics collapse each piece to its minimum value
  and leave a fixed-size LP over the pieces;
* general piecewise-affine statistics use column generation: a restricted
  LP over a small support plus a separation oracle that scans only hull
  extreme points per piece.

All three read the value row through per-piece sliding hulls so a full
budget sweep pays O(log) amortized per row for the geometry.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .ambiguity import AmbiguitySet
from .errors import NonconvergenceError, NumericalError, StateError
from .hull import SlidingUpperHull
from .simplex import solve_lp

_DEF_EPS_FEAS = 1e-8
_DEF_EPS_VALUE = 1e-8


def eps_feasibility() -> float:
    """Separation tolerance; override with RISKROUTE_EPS_FEAS."""
    return float(os.environ.get("RISKROUTE_EPS_FEAS", _DEF_EPS_FEAS))


def eps_value() -> float:
    """Value-comparison tolerance; override with RISKROUTE_EPS_VALUE."""
    return float(os.environ.get("RISKROUTE_EPS_VALUE", _DEF_EPS_VALUE))


@dataclass
class DualSolution:
    """Multipliers of the restricted problem: z for total mass, (x, y) per
    statistic for its lower/upper bound."""

    z: float
    x: np.ndarray
    y: np.ndarray


@dataclass
class ViolatedConstraint:
    offset_k: int
    violation: float


@dataclass
class InnerResult:
    value: float
    support: tuple[int, ...] | None = None
    weights: np.ndarray | None = None
    iterations: int = 0


class ConstraintHulls:
    """Per refined piece, the hull of the value row over the owned window.

    Piece cells l in [start_k, end_k] read value rows m = k - l, so each
    piece owns a contiguous m-window that slides right as k advances.
    """

    def __init__(self, aset: AmbiguitySet, u_at, k0: int):
        self.aset = aset
        self.u_at = u_at
        self.k = int(k0)
        self.hulls: list[SlidingUpperHull] = []
        for p in aset.refined_pieces:
            start = self.k - p.end_k
            vals = [u_at(m) for m in range(start, self.k - p.start_k + 1)]
            self.hulls.append(SlidingUpperHull.from_window(vals, start_x=start))

    def advance(self):
        self.k += 1
        for p, h in zip(self.aset.refined_pieces, self.hulls):
            h.advance(self.u_at(self.k - p.start_k))

    def advance_to(self, k: int):
        if k < self.k:
            raise StateError(f"hulls at row {self.k} cannot move back to {k}")
        while self.k < k:
            self.advance()


def _interp_at(hull: SlidingUpperHull, mx: float) -> float:
    """Envelope value at (possibly fractional) coordinate mx, clamped inside."""
    n = hull.n_extremes
    lo, hi = 0, n - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if hull.extreme(mid)[0] <= mx:
            lo = mid
        else:
            hi = mid - 1
    x0, y0 = hull.extreme(lo)
    if lo == n - 1 or mx <= x0:
        return y0
    x1, y1 = hull.extreme(lo + 1)
    return y0 + (y1 - y0) * (mx - x0) / (x1 - x0)


def inner_mean_only(
    hull: SlidingUpperHull, k: int, delta_t: float, alpha: float, beta: float
) -> float:
    """Worst expectation when only the mean is constrained to [alpha, beta].

    The optimum is the envelope valley when some admissible mean reaches
    it; otherwise the blocking bound is active and the value interpolates
    the envelope at that mean.  Cost omega maps to row coordinate
    m = k - omega/delta_t, which reverses orientation: the upper mean
    bound beta clamps from the right in m, the lower bound alpha from the
    left.
    """
    v_idx = hull.argmin_linear_index(0.0)
    vx, vy = hull.extreme(v_idx)
    best = vy
    if math.isfinite(beta):
        m_beta = min(k - beta / delta_t, hull.extreme(hull.n_extremes - 1)[0])
        if m_beta > vx:
            best = max(best, _interp_at(hull, m_beta))
    if math.isfinite(alpha):
        m_alpha = max(k - alpha / delta_t, hull.extreme(0)[0])
        if m_alpha < vx:
            best = max(best, _interp_at(hull, m_alpha))
    return best


def piece_minima(hulls: ConstraintHulls) -> np.ndarray:
    return np.array([h.argmin_linear(0.0)[1] for h in hulls.hulls])


def inner_piecewise_constant(aset: AmbiguitySet, minima) -> float:
    """Exact inner value for piecewise-constant statistics.

    Mass within a piece is interchangeable for every constraint, so it
    concentrates on the piece minimum; what remains is a small LP in the
    bound multipliers:

        max  z + sum_q (alpha_q x_q - beta_q y_q)
        s.t. z + sum_q (x_q - y_q) b_{q,r} <= minima_r   for every piece r
    """
    if not aset.is_piecewise_constant:
        raise StateError("statistics are not piecewise constant")
    minima = np.asarray(minima, dtype=float)
    xs = [q for q in range(aset.n_statistics) if math.isfinite(aset.alpha[q])]
    ys = [q for q in range(aset.n_statistics) if math.isfinite(aset.beta[q])]
    nv = 2 + len(xs) + len(ys)
    c = np.zeros(nv)
    c[0], c[1] = -1.0, 1.0  # z split into z+ - z-
    for j, q in enumerate(xs):
        c[2 + j] = -aset.alpha[q]
    for j, q in enumerate(ys):
        c[2 + len(xs) + j] = aset.beta[q]
    rows = []
    for p in aset.refined_pieces:
        row = [1.0, -1.0]
        row += [p.b[q] for q in xs]
        row += [-p.b[q] for q in ys]
        rows.append(row)
    res = solve_lp(c, A_ub=np.array(rows), b_ub=minima)
    if not res.ok:
        raise NumericalError(f"piece-multiplier program ended {res.status}")
    return -res.objective


def inner_bruteforce(aset: AmbiguitySet, u_cells) -> InnerResult:
    """Direct LP over every window cell; exact but O(LP) per call.

    u_cells[i] must hold the value at row k - (lo_k + i), aligned with the
    window cells in ascending offset order.
    """
    u = np.asarray(u_cells, dtype=float)
    if u.size != aset.n_cells:
        raise StateError(f"need {aset.n_cells} window values, got {u.size}")
    has_ub = aset.ub_rhs.size > 0
    res = solve_lp(
        u,
        A_ub=aset.ub_matrix if has_ub else None,
        b_ub=aset.ub_rhs if has_ub else None,
        A_eq=np.ones((1, u.size)),
        b_eq=np.ones(1),
    )
    if not res.ok:
        raise NumericalError(f"inner program ended {res.status}")
    support = tuple(int(aset.lo_k + i) for i in np.nonzero(res.x > 1e-12)[0])
    return InnerResult(res.objective, support, res.x, res.iterations)


def _master(aset: AmbiguitySet, u_at, k: int, cols: list[int]):
    idx = [l - aset.lo_k for l in cols]
    c = np.array([u_at(k - l) for l in cols])
    has_ub = aset.ub_rhs.size > 0
    res = solve_lp(
        c,
        A_ub=aset.ub_matrix[:, idx] if has_ub else None,
        b_ub=aset.ub_rhs if has_ub else None,
        A_eq=np.ones((1, len(cols))),
        b_eq=np.ones(1),
    )
    if not res.ok:
        raise NumericalError(f"restricted inner program ended {res.status}")
    x = np.zeros(aset.n_statistics)
    y = np.zeros(aset.n_statistics)
    for row_i, (q, sgn) in enumerate(aset.ub_kinds):
        w = res.dual_ub[row_i]
        if sgn < 0:
            x[q] = -w
        else:
            y[q] = -w
    return res, DualSolution(float(res.dual_eq[0]), x, y)


def separation_oracle(
    aset: AmbiguitySet, hulls: ConstraintHulls, dual: DualSolution, k: int
) -> ViolatedConstraint:
    """Most violated grid cell for a candidate dual, scanning hull extremes.

    On piece r the violation at cell l is affine in omega_l minus the
    value row, so its maximum over the owned cells is attained at an
    extreme point and argmin_linear finds it directly.
    """
    d = dual.x - dual.y
    best = None
    for p, h in zip(aset.refined_pieces, hulls.hulls):
        sigma = float(d @ p.a)
        const = dual.z + float(d @ p.b)
        mx, my = h.argmin_linear(-sigma * aset.delta_t)
        viol = const + sigma * (k - mx) * aset.delta_t - my
        if best is None or viol > best.violation:
            best = ViolatedConstraint(k - mx, viol)
    return best


def inner_column_generation(
    aset: AmbiguitySet,
    hulls: ConstraintHulls,
    u_at,
    k: int,
    warm: tuple[int, ...] | None = None,
    eps: float | None = None,
) -> InnerResult:
    """Exact inner value by column generation over window cells.

    The restricted support starts from the set's witness (which keeps the
    restricted problem feasible) plus any warm-start offsets, typically the
    support optimal at the previous budget row.
    """
    if eps is None:
        eps = eps_feasibility()
    if aset.witness is None:
        raise StateError("ambiguity set was built without a witness")
    support = {
        int(aset.lo_k + i) for i in np.nonzero(aset.witness > 1e-12)[0]
    }
    if warm:
        support.update(int(l) for l in warm)
    cap = 10 * aset.n_cells
    for it in range(1, cap + 1):
        cols = sorted(support)
        res, dual = _master(aset, u_at, k, cols)
        vc = separation_oracle(aset, hulls, dual, k)
        if vc.violation <= eps:
            return InnerResult(res.objective, tuple(cols), res.x, it)
        if vc.offset_k in support:
            if vc.violation <= 10 * eps:
                return InnerResult(res.objective, tuple(cols), res.x, it)
            raise NonconvergenceError(
                "separation keeps returning a column already priced",
                residual=vc.violation,
                iterations=it,
            )
        support.add(vc.offset_k)
    raise NonconvergenceError(
        f"column generation exceeded {cap} rounds",
        iterations=cap,
    )


def solve_inner(
    aset: AmbiguitySet,
    hulls: ConstraintHulls,
    u_at,
    k: int,
    warm: tuple[int, ...] | None = None,
) -> InnerResult:
    """Dispatch on statistic structure; all paths return the exact value."""
    if aset.is_mean_only:
        v = inner_mean_only(
            hulls.hulls[0], k, aset.delta_t, float(aset.alpha[0]), float(aset.beta[0])
        )
        return InnerResult(v)
    if aset.is_piecewise_constant:
        return InnerResult(inner_piecewise_constant(aset, piece_minima(hulls)))
    return inner_column_generation(aset, hulls, u_at, k, warm)
