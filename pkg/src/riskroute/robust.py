"""Distributionally robust routing over ambiguity sets of arc-cost laws.

Each arc carries an ambiguity set instead of a single distribution; the
value recursion replaces the expectation with the worst expectation over
the set, solved per budget row by the inner solvers.  Preprocessing uses
the worst-case mean of every set: the resulting shortest-path tree and
threshold make tree-following optimal below the threshold exactly as in
the known-distribution case, so the same sweep applies with an inner
solve as the arc evaluator.

robust_policy_guarantee scores a fixed policy against the sets: the value
it returns is a floor on the policy's performance under any distributions
the sets admit.
"""

from __future__ import annotations

from ._sweep import PolicyTable, SolveResult, run_sweep
from .ambiguity import AmbiguitySet
from .errors import ConfigurationError, StateError
from .inner import ConstraintHulls, solve_inner
from .model import (
    Arc,
    BudgetGrid,
    Graph,
    RiskFunction,
    TreePreprocess,
    floor_index,
    preprocess,
)


def arc_for(tail, head, aset: AmbiguitySet) -> Arc:
    """Arc whose declared support bounds are the set's window."""
    return Arc(tail, head, aset.lo_k * aset.delta_t, aset.hi_k * aset.delta_t)


def worst_case_means(graph: Graph, sets) -> dict:
    return {a.key: sets[a.key].worst_case_mean() for a in graph.arcs}


def _check_inputs(graph: Graph, sets, grid: BudgetGrid):
    for a in graph.arcs:
        if a.key not in sets:
            raise ConfigurationError(f"no ambiguity set for arc {a.key}")
        s = sets[a.key]
        if abs(s.delta_t - grid.delta_t) > 1e-12 * grid.delta_t:
            raise ConfigurationError(
                f"arc {a.key}: ambiguity grid step {s.delta_t} does not match "
                f"the budget grid step {grid.delta_t}"
            )
        tol = 1e-9 * max(1.0, a.delta_sup)
        lo, hi = s.lo_k * s.delta_t, s.hi_k * s.delta_t
        if abs(lo - a.delta_inf) > tol or abs(hi - a.delta_sup) > tol:
            raise ConfigurationError(
                f"arc {a.key}: declared bounds [{a.delta_inf}, {a.delta_sup}] "
                f"differ from the set window [{lo}, {hi}]"
            )
        if s.witness is None:
            raise StateError(f"arc {a.key}: ambiguity set carries no witness")


def robust_preprocess(
    graph: Graph, sets, risk: RiskFunction, grid: BudgetGrid
) -> TreePreprocess:
    """Tree, threshold and row ranges from the worst-case means."""
    return preprocess(graph, worst_case_means(graph, sets), risk, grid)


class ArcInnerSolver:
    """Sweep evaluator: worst-case expectation of the successor rows.

    Keeps the per-piece hulls aligned with the row cursor and warm-starts
    each column generation from the support optimal at the previous row.
    """

    def __init__(self, aset: AmbiguitySet, u_at, k_first: int):
        self._aset = aset
        self._u_at = u_at
        self._hulls = ConstraintHulls(aset, u_at, k_first)
        self._warm: tuple[int, ...] | None = None

    def value(self, k: int) -> float:
        if k != self._hulls.k:
            raise StateError(f"inner solver at row {self._hulls.k}, asked for {k}")
        res = solve_inner(self._aset, self._hulls, self._u_at, k, self._warm)
        if res.support is not None:
            self._warm = res.support
        return res.value

    def advance(self):
        self._hulls.advance()


def _evaluator_factory(sets):
    def make(arc, u_at, k_first):
        return ArcInnerSolver(sets[arc.key], u_at, k_first)

    return make


def solve_robust(
    graph: Graph,
    sets,
    risk: RiskFunction,
    grid: BudgetGrid,
    *,
    zero_floor: bool = False,
) -> SolveResult:
    """Optimal worst-case value and policy tables up to the horizon.

    ``zero_floor`` skips the rows below budget 0 (they read as 0.0), exact
    for risks vanishing on negative remaining budget.
    """
    if zero_floor and not risk.zero_below_zero:
        raise ConfigurationError(
            "zero_floor needs a risk function that vanishes below zero"
        )
    _check_inputs(graph, sets, grid)
    tree = robust_preprocess(graph, sets, risk, grid)
    store, policy = run_sweep(
        graph,
        grid,
        risk,
        tree,
        _evaluator_factory(sets),
        record_policy=True,
        zero_floor=zero_floor,
    )
    k_tf = floor_index(tree.t_f, grid.delta_t)
    return SolveResult(graph, grid, risk, tree, k_tf, store, policy)


def robust_policy_guarantee(
    graph: Graph,
    sets,
    risk: RiskFunction,
    grid: BudgetGrid,
    policy: PolicyTable,
    *,
    below_range: str = "error",
) -> SolveResult:
    """Worst-case value of a fixed policy over the ambiguity sets.

    below_range works as in the exact evaluator: "zero" substitutes 0.0
    under row 0, valid only for risks vanishing on negative overrun.
    """
    if below_range not in ("error", "zero"):
        raise ConfigurationError(f"unknown below_range mode {below_range!r}")
    zero_floor = below_range == "zero"
    if zero_floor and not risk.zero_below_zero:
        raise ConfigurationError(
            "below_range='zero' needs a risk function that vanishes below zero"
        )
    if abs(policy.delta_t - grid.delta_t) > 1e-12 * grid.delta_t:
        raise ConfigurationError(
            f"policy grid step {policy.delta_t} does not match {grid.delta_t}"
        )
    _check_inputs(graph, sets, grid)
    tree = robust_preprocess(graph, sets, risk, grid)
    store, _ = run_sweep(
        graph,
        grid,
        risk,
        tree,
        _evaluator_factory(sets),
        policy=policy,
        record_policy=False,
        zero_floor=zero_floor,
    )
    k_tf = floor_index(tree.t_f, grid.delta_t)
    return SolveResult(graph, grid, risk, tree, k_tf, store, policy)
