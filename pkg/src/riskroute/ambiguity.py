"""Ambiguity sets: families of arc-cost distributions sharing statistic bounds.

An ambiguity set describes every distribution supported on a grid window
[lo_k*dt, hi_k*dt] whose expected statistics fall inside given intervals.
Statistics are piecewise affine in the cost value; each grid point is owned
by exactly one piece (pieces are inclusive integer ranges [start_k, end_k]
tiling the window), so discontinuous statistics such as cell indicators are
well defined on the grid.

The set stores, precomputed: the per-statistic value matrix G over window
cells, the joint refinement of all statistics' pieces (used by the cutting
plane solvers), and a witness distribution proving the set is nonempty.
Construction raises InfeasibleAmbiguityError when no distribution satisfies
the bounds.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    DomainError,
    InfeasibleAmbiguityError,
    NumericalError,
)
from .model import GridDistribution, ceil_index, floor_index
from .simplex import INFEASIBLE, solve_lp


@dataclass(frozen=True)
class StatisticBound:
    """Closed interval for an expected statistic; either end may be infinite."""

    alpha: float = -math.inf
    beta: float = math.inf

    def __post_init__(self):
        if math.isnan(self.alpha) or math.isnan(self.beta):
            raise ConfigurationError("statistic bound is NaN")
        if self.alpha == math.inf or self.beta == -math.inf:
            raise ConfigurationError("statistic bound interval is empty")
        if self.alpha > self.beta:
            raise ConfigurationError(
                f"statistic bound has alpha={self.alpha} > beta={self.beta}"
            )


@dataclass(frozen=True)
class AffinePiece:
    """g(omega) = a*omega + b on the owned grid offsets start_k..end_k inclusive."""

    start_k: int
    end_k: int
    a: float
    b: float

    def __post_init__(self):
        if self.start_k > self.end_k:
            raise ConfigurationError(
                f"piece range [{self.start_k}, {self.end_k}] is empty"
            )
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ConfigurationError("piece coefficients must be finite")

    def value(self, omega: float) -> float:
        return self.a * omega + self.b


@dataclass(frozen=True)
class PiecewiseAffineStatistic:
    name: str
    pieces: tuple[AffinePiece, ...]
    bound: StatisticBound

    def __post_init__(self):
        if not self.pieces:
            raise ConfigurationError(f"statistic {self.name!r} has no pieces")
        prev = None
        for p in self.pieces:
            if prev is not None and p.start_k != prev.end_k + 1:
                raise ConfigurationError(
                    f"statistic {self.name!r}: pieces must tile the window "
                    f"contiguously, got gap between {prev.end_k} and {p.start_k}"
                )
            prev = p

    @property
    def lo_k(self) -> int:
        return self.pieces[0].start_k

    @property
    def hi_k(self) -> int:
        return self.pieces[-1].end_k

    def piece_at(self, k: int) -> AffinePiece:
        if not self.lo_k <= k <= self.hi_k:
            raise DomainError(
                f"offset {k} outside statistic window [{self.lo_k}, {self.hi_k}]"
            )
        starts = [p.start_k for p in self.pieces]
        return self.pieces[bisect_right(starts, k) - 1]

    def value_at(self, k: int, delta_t: float) -> float:
        return self.piece_at(k).value(k * delta_t)


@dataclass(frozen=True)
class RefinedPiece:
    """One interval of the joint refinement, with every statistic affine on it."""

    start_k: int
    end_k: int
    a: np.ndarray  # slope of each statistic on this interval
    b: np.ndarray


def mean_statistic(lo_k: int, hi_k: int, bound: StatisticBound) -> PiecewiseAffineStatistic:
    return PiecewiseAffineStatistic(
        "mean", (AffinePiece(lo_k, hi_k, 1.0, 0.0),), bound
    )


def deviation_statistic(
    lo_k: int, hi_k: int, center_k: int, delta_t: float, bound: StatisticBound
) -> PiecewiseAffineStatistic:
    """|omega - center| with the center on a window grid point."""
    if not lo_k <= center_k <= hi_k:
        raise ConfigurationError(
            f"deviation center offset {center_k} outside window [{lo_k}, {hi_k}]"
        )
    c = center_k * delta_t
    pieces = [AffinePiece(lo_k, center_k, -1.0, c)]
    if center_k < hi_k:
        pieces.append(AffinePiece(center_k + 1, hi_k, 1.0, -c))
    return PiecewiseAffineStatistic("abs-deviation", tuple(pieces), bound)


def indicator_statistic(
    lo_k: int, hi_k: int, cell_k: int, bound: StatisticBound
) -> PiecewiseAffineStatistic:
    """Indicator of a single grid cell (probability of that offset)."""
    if not lo_k <= cell_k <= hi_k:
        raise ConfigurationError(
            f"indicator cell {cell_k} outside window [{lo_k}, {hi_k}]"
        )
    pieces = []
    if cell_k > lo_k:
        pieces.append(AffinePiece(lo_k, cell_k - 1, 0.0, 0.0))
    pieces.append(AffinePiece(cell_k, cell_k, 0.0, 1.0))
    if cell_k < hi_k:
        pieces.append(AffinePiece(cell_k + 1, hi_k, 0.0, 0.0))
    return PiecewiseAffineStatistic(f"cell[{cell_k}]", tuple(pieces), bound)


class AmbiguitySet:
    """All grid distributions on a window meeting every statistic bound."""

    def __init__(self, delta_t: float, statistics, *, require_witness: bool = True):
        if delta_t <= 0:
            raise ConfigurationError("delta_t must be positive")
        statistics = tuple(statistics)
        if not statistics:
            raise ConfigurationError("ambiguity set needs at least one statistic")
        lo_k, hi_k = statistics[0].lo_k, statistics[0].hi_k
        for s in statistics:
            if (s.lo_k, s.hi_k) != (lo_k, hi_k):
                raise ConfigurationError(
                    "all statistics of one ambiguity set must share the window: "
                    f"[{lo_k}, {hi_k}] vs [{s.lo_k}, {s.hi_k}] ({s.name!r})"
                )
        if lo_k < 1:
            raise ConfigurationError("window lower end must be at least one grid step")
        self.delta_t = float(delta_t)
        self.statistics = statistics
        self.lo_k = lo_k
        self.hi_k = hi_k
        self.omega = np.arange(lo_k, hi_k + 1, dtype=float) * self.delta_t

        Q, L = len(statistics), self.n_cells
        G = np.empty((Q, L))
        for q, s in enumerate(statistics):
            for p in s.pieces:
                sl = slice(p.start_k - lo_k, p.end_k - lo_k + 1)
                G[q, sl] = p.a * self.omega[sl] + p.b
        self.G = G
        self.alpha = np.array([s.bound.alpha for s in statistics])
        self.beta = np.array([s.bound.beta for s in statistics])

        # joint refinement of all piece boundaries
        cuts = sorted({p.start_k for s in statistics for p in s.pieces} | {hi_k + 1})
        refined = []
        for s_k, nxt in zip(cuts, cuts[1:]):
            a = np.empty(Q)
            b = np.empty(Q)
            for q, s in enumerate(statistics):
                piece = s.piece_at(s_k)
                a[q] = piece.a
                b[q] = piece.b
            refined.append(RefinedPiece(s_k, nxt - 1, a, b))
        self.refined_pieces = tuple(refined)

        # inequality rows with finite bounds, kept for the inner solvers
        rows, rhs, kinds = [], [], []
        for q in range(Q):
            if math.isfinite(self.alpha[q]):
                rows.append(-G[q])
                rhs.append(-self.alpha[q])
                kinds.append((q, -1))
            if math.isfinite(self.beta[q]):
                rows.append(G[q])
                rhs.append(self.beta[q])
                kinds.append((q, +1))
        self.ub_matrix = np.array(rows) if rows else np.zeros((0, L))
        self.ub_rhs = np.array(rhs)
        self.ub_kinds = tuple(kinds)

        self.witness: np.ndarray | None = None
        if require_witness:
            self.witness = self._find_witness()

    @property
    def n_cells(self) -> int:
        return self.hi_k - self.lo_k + 1

    @property
    def n_statistics(self) -> int:
        return len(self.statistics)

    @property
    def is_mean_only(self) -> bool:
        return (
            len(self.statistics) == 1
            and len(self.refined_pieces) == 1
            and self.refined_pieces[0].a[0] == 1.0
            and self.refined_pieces[0].b[0] == 0.0
        )

    @property
    def is_piecewise_constant(self) -> bool:
        return all((p.a == 0.0).all() for p in self.refined_pieces)

    def _find_witness(self) -> np.ndarray:
        L = self.n_cells
        res = solve_lp(
            np.zeros(L),
            A_ub=self.ub_matrix if self.ub_rhs.size else None,
            b_ub=self.ub_rhs if self.ub_rhs.size else None,
            A_eq=np.ones((1, L)),
            b_eq=np.ones(1),
        )
        if res.status == INFEASIBLE:
            raise InfeasibleAmbiguityError(
                "no distribution on the window satisfies the statistic bounds"
            )
        if not res.ok:
            raise NumericalError(f"witness search ended with status {res.status}")
        w = np.clip(res.x, 0.0, None)
        return w / w.sum()

    def _check_dist(self, dist: GridDistribution):
        if abs(dist.delta_t - self.delta_t) > 1e-12 * self.delta_t:
            raise DomainError(
                f"distribution grid step {dist.delta_t} differs from {self.delta_t}"
            )
        if dist.offset_k < self.lo_k or dist.max_offset_k > self.hi_k:
            raise DomainError(
                f"distribution support [{dist.offset_k}, {dist.max_offset_k}] "
                f"escapes the window [{self.lo_k}, {self.hi_k}]"
            )

    def cell_weights(self, dist: GridDistribution) -> np.ndarray:
        """Distribution pmf padded onto the full window."""
        self._check_dist(dist)
        p = np.zeros(self.n_cells)
        p[dist.offset_k - self.lo_k : dist.max_offset_k - self.lo_k + 1] = dist.weights
        return p

    def statistic_values(self, dist: GridDistribution) -> np.ndarray:
        return self.G @ self.cell_weights(dist)

    def contains(self, dist: GridDistribution, tol: float = 1e-9) -> bool:
        v = self.statistic_values(dist)
        return bool((v >= self.alpha - tol).all() and (v <= self.beta + tol).all())

    def worst_case_mean(self) -> float:
        """Largest expected cost over the set."""
        res = solve_lp(
            -self.omega,
            A_ub=self.ub_matrix if self.ub_rhs.size else None,
            b_ub=self.ub_rhs if self.ub_rhs.size else None,
            A_eq=np.ones((1, self.n_cells)),
            b_eq=np.ones(1),
        )
        if not res.ok:
            raise NumericalError(f"worst-case mean ended with status {res.status}")
        return -res.objective

    @classmethod
    def pinning(cls, dist: GridDistribution) -> "AmbiguitySet":
        """Singleton set containing exactly the given distribution."""
        lo, hi = dist.offset_k, dist.max_offset_k
        stats = []
        for i, w in enumerate(dist.pmf):
            b = StatisticBound(float(w), float(w))
            stats.append(indicator_statistic(lo, hi, lo + i, b))
        return cls(dist.delta_t, stats)


def hoeffding_interval(
    values,
    value_range: float,
    epsilon: float,
    n_intervals: int = 1,
    clamp: tuple[float, float] | None = None,
) -> StatisticBound:
    """Two-sided interval around the sample mean with joint coverage 1-epsilon.

    value_range bounds the support spread of the averaged variable;
    n_intervals is how many intervals share the epsilon budget (union bound).
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 1:
        raise ConfigurationError("interval needs at least one sample")
    if not 0 < epsilon < 1:
        raise ConfigurationError("epsilon must lie in (0, 1)")
    if n_intervals < 1:
        raise ConfigurationError("n_intervals must be at least 1")
    if value_range < 0:
        raise ConfigurationError("value_range must be nonnegative")
    center = float(values.mean())
    half = value_range * math.sqrt(math.log(2.0 * n_intervals / epsilon) / (2.0 * n))
    lo, hi = center - half, center + half
    if clamp is not None:
        lo = max(lo, clamp[0])
        hi = min(hi, clamp[1])
        if lo > hi:
            raise InfeasibleAmbiguityError(
                f"interval [{center - half}, {center + half}] misses the "
                f"attainable range [{clamp[0]}, {clamp[1]}]"
            )
    return StatisticBound(lo, hi)


def bootstrap_interval(
    values, n_boot: int = 1000, rng=None, confidence: float = 0.95
) -> StatisticBound:
    """Percentile bootstrap interval for the mean."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 1:
        raise ConfigurationError("interval needs at least one sample")
    if not 0 < confidence < 1:
        raise ConfigurationError("confidence must lie in (0, 1)")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    idx = rng.integers(0, n, size=(int(n_boot), n))
    means = values[idx].mean(axis=1)
    tail = 100.0 * (1.0 - confidence) / 2.0
    lo, hi = np.percentile(means, [tail, 100.0 - tail])
    return StatisticBound(float(lo), float(hi))


def _sample_window(samples, delta_t: float) -> tuple[int, int]:
    samples = np.asarray(samples, dtype=float)
    if samples.size < 1:
        raise ConfigurationError("need at least one sample")
    if (samples <= 0).any():
        raise ConfigurationError("arc cost samples must be positive")
    lo_k = max(1, floor_index(float(samples.min()), delta_t))
    hi_k = max(lo_k, ceil_index(float(samples.max()), delta_t))
    return lo_k, hi_k


def preset_robust_m(
    samples, delta_t: float, epsilon: float, n_intervals: int = 1
) -> AmbiguitySet:
    """Mean-interval ambiguity set: window from the sample range, mean bound
    by the distribution-free interval."""
    lo_k, hi_k = _sample_window(samples, delta_t)
    g_lo, g_hi = lo_k * delta_t, hi_k * delta_t
    bound = hoeffding_interval(
        samples, g_hi - g_lo, epsilon, n_intervals, clamp=(g_lo, g_hi)
    )
    return AmbiguitySet(delta_t, [mean_statistic(lo_k, hi_k, bound)])


def preset_robust_md(
    samples, delta_t: float, epsilon: float, n_intervals: int = 2
) -> AmbiguitySet:
    """Mean plus absolute-deviation ambiguity set.

    The deviation is measured around the midpoint of the mean interval,
    snapped to the nearest window grid point; both intervals share the
    epsilon budget.
    """
    samples = np.asarray(samples, dtype=float)
    lo_k, hi_k = _sample_window(samples, delta_t)
    g_lo, g_hi = lo_k * delta_t, hi_k * delta_t
    mean_bound = hoeffding_interval(
        samples, g_hi - g_lo, epsilon, n_intervals, clamp=(g_lo, g_hi)
    )
    mid = 0.5 * (mean_bound.alpha + mean_bound.beta)
    center_k = min(hi_k, max(lo_k, int(math.floor(mid / delta_t + 0.5))))
    center = center_k * delta_t
    dev = np.abs(samples - center)
    dev_max = max(abs(g_lo - center), abs(g_hi - center))
    dev_bound = hoeffding_interval(
        dev, dev_max, epsilon, n_intervals, clamp=(0.0, dev_max)
    )
    return AmbiguitySet(
        delta_t,
        [
            mean_statistic(lo_k, hi_k, mean_bound),
            deviation_statistic(lo_k, hi_k, center_k, delta_t, dev_bound),
        ],
    )
