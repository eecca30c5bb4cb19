"""Exact adaptive routing with known grid-supported arc-cost distributions.

solve_nominal computes, for every node and budget row, the best achievable
expected risk value and the successor attaining it.  Rows below the
anti-cycling threshold are forced onto the shortest-path tree and filled
per node with one block convolution; rows at and above the threshold run
through the shared ascending sweep, where each arc is scored by convolving
the successor's value rows with the arc's cost distribution.

evaluate_policy_exact runs the same machinery with the successor choice
pinned to a given policy, which scores a policy exactly (no simulation)
under distributions possibly different from the ones it was solved with.
"""

from __future__ import annotations

import numpy as np

from ._sweep import (
    PolicyTable,
    SolveResult,
    ValueStore,
    fill_destination,
    run_sweep,
)
from .convolution import StreamConvolver, convolve_fft_block, convolve_pointwise
from .errors import ConfigurationError, StateError
from .model import (
    BudgetGrid,
    Graph,
    GridDistribution,
    RiskFunction,
    floor_index,
    mean_costs,
    preprocess,
)

STREAM_THRESHOLD = 32  # support cells at which arc scoring switches to streams
_FFT_BLOCK_THRESHOLD = 32


class PointwiseArcEvaluator:
    """Stateless scorer: reads the support window and takes one dot product."""

    def __init__(self, dist: GridDistribution, u_at):
        self._dist = dist
        self._u_at = u_at

    def value(self, k: int) -> float:
        d = self._dist
        u_at = self._u_at
        window = [u_at(m) for m in range(k - d.max_offset_k, k - d.offset_k + 1)]
        return convolve_pointwise(window, d)

    def advance(self):
        pass


class StreamArcEvaluator:
    """Scorer backed by a zero-delay streaming convolver for wide supports."""

    def __init__(self, dist: GridDistribution, u_at, k_first: int):
        self._dist = dist
        self._u_at = u_at
        self._conv = StreamConvolver(dist, k_first - dist.max_offset_k)
        self._pending: dict[int, float] = {}
        self._cursor = k_first - dist.max_offset_k - 1
        while self._cursor < k_first - dist.offset_k:
            self._ingest()

    def _ingest(self):
        self._cursor += 1
        for row, val in self._conv.feed(self._cursor, self._u_at(self._cursor)):
            self._pending[row] = val

    def value(self, k: int) -> float:
        try:
            return self._pending.pop(k)
        except KeyError:
            raise StateError(f"stream has no value for row {k}") from None

    def advance(self):
        self._ingest()


def _check_inputs(graph: Graph, distributions, grid: BudgetGrid):
    for a in graph.arcs:
        if a.key not in distributions:
            raise ConfigurationError(f"no distribution for arc {a.key}")
        d = distributions[a.key]
        if abs(d.delta_t - grid.delta_t) > 1e-12 * grid.delta_t:
            raise ConfigurationError(
                f"arc {a.key}: distribution grid step {d.delta_t} does not "
                f"match the budget grid step {grid.delta_t}"
            )
        tol = 1e-9 * max(1.0, a.delta_sup)
        if d.support_lo < a.delta_inf - tol or d.support_hi > a.delta_sup + tol:
            raise ConfigurationError(
                f"arc {a.key}: distribution support [{d.support_lo}, {d.support_hi}] "
                f"escapes the declared bounds [{a.delta_inf}, {a.delta_sup}]"
            )


def _evaluator_factory(distributions, stream_threshold: int):
    def make(arc, u_at, k_first):
        d = distributions[arc.key]
        if d.n_cells >= stream_threshold:
            return StreamArcEvaluator(d, u_at, k_first)
        return PointwiseArcEvaluator(d, u_at)

    return make


def _fill_below_threshold(
    graph, distributions, tree, store: ValueStore, policy: PolicyTable | None, cap: int
):
    """Rows below the threshold follow the tree; fill them level by level
    with one block convolution per node."""
    d = graph.destination
    order = {node: idx for idx, node in enumerate(graph.nodes)}
    nodes = sorted(
        (i for i in graph.nodes if i != d),
        key=lambda i: (tree.level[i], order[i]),
    )
    for i in nodes:
        lo_i = store.k_min[i]
        if lo_i >= cap:
            continue
        parent = tree.parent[i]
        dist = distributions[graph.arc(i, parent).key]
        src = store.accessor(parent)
        a0 = lo_i - dist.max_offset_k
        a1 = cap - 1 - dist.offset_k
        u_block = np.array([src(m) for m in range(a0, a1 + 1)])
        if dist.n_cells >= _FFT_BLOCK_THRESHOLD:
            out = convolve_fft_block(u_block, dist)
        else:
            out = np.convolve(u_block, dist.weights, mode="valid")
        for j, k in enumerate(range(lo_i, cap)):
            store.set(i, k, float(out[j]))
        if policy is not None:
            acts = policy.actions[i]
            for k in range(lo_i, cap):
                acts[k - lo_i] = parent


def solve_nominal(
    graph: Graph,
    distributions,
    risk: RiskFunction,
    grid: BudgetGrid,
    *,
    stream_threshold: int = STREAM_THRESHOLD,
    zero_floor: bool = False,
) -> SolveResult:
    """Optimal value and policy tables for every budget row up to the horizon.

    With ``zero_floor`` rows below budget 0 are not materialized and read as
    0.0, which is exact for risks vanishing on negative remaining budget and
    skips the entire below-zero range.
    """
    if zero_floor and not risk.zero_below_zero:
        raise ConfigurationError(
            "zero_floor needs a risk function that vanishes below zero"
        )
    _check_inputs(graph, distributions, grid)
    means = mean_costs(graph, distributions)
    tree = preprocess(graph, means, risk, grid)
    k_tf = floor_index(tree.t_f, grid.delta_t)

    store = ValueStore(dict(tree.k_min), grid.k_T, zero_floor=zero_floor)
    fill_destination(store, graph, risk, grid)
    policy = PolicyTable(grid.delta_t, grid.k_T, dict(store.k_min))
    for i in graph.nodes:
        if i != graph.destination:
            policy.actions[i] = [None] * (grid.k_T - store.k_min[i] + 1)

    cap = min(k_tf, grid.k_T + 1)
    _fill_below_threshold(graph, distributions, tree, store, policy, cap)
    store, swept = run_sweep(
        graph,
        grid,
        risk,
        tree,
        _evaluator_factory(distributions, stream_threshold),
        store=store,
        k_start=cap,
        record_policy=True,
    )
    for i in graph.nodes:
        if i == graph.destination:
            continue
        acts = policy.actions[i]
        top = swept.actions[i]
        for idx in range(len(acts)):
            if top[idx] is not None:
                acts[idx] = top[idx]
    return SolveResult(graph, grid, risk, tree, k_tf, store, policy)


def evaluate_policy_exact(
    graph: Graph,
    distributions,
    risk: RiskFunction,
    grid: BudgetGrid,
    policy: PolicyTable,
    *,
    below_range: str = "error",
    stream_threshold: int = STREAM_THRESHOLD,
) -> SolveResult:
    """Exact expected risk value of a fixed policy under given distributions.

    below_range controls reads under the materialized row range: "error"
    raises, "zero" substitutes 0.0 and restricts rows to [0, k_T], exact
    only for risks vanishing on negative overrun.
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
    _check_inputs(graph, distributions, grid)
    means = mean_costs(graph, distributions)
    tree = preprocess(graph, means, risk, grid)
    store, _ = run_sweep(
        graph,
        grid,
        risk,
        tree,
        _evaluator_factory(distributions, stream_threshold),
        policy=policy,
        record_policy=False,
        zero_floor=zero_floor,
    )
    k_tf = floor_index(tree.t_f, grid.delta_t)
    return SolveResult(graph, grid, risk, tree, k_tf, store, policy)
