"""Shared budget-row sweep: one ascending pass filling value and policy tables.

Every solver and exact evaluator in the package is the same loop with a
different arc evaluator plugged in: rows k ascend from the lowest
materialized row to the budget row; at each row, each node scores one or
more outgoing arcs through its evaluator and keeps the best.  An arc's
evaluator only ever reads successor rows at strictly earlier k (arc costs
are at least one grid step), which is what makes the single global
ascending order valid.

Below the anti-cycling threshold row only the shortest-path-tree arc is
scored; from the threshold on, every successor competes.  Ties are broken
by smaller mean cost-to-go, then smaller node id, under exact float
equality, so results are reproducible across runs and platforms.

Evaluator contract: ``make_evaluator(arc, u_at, k_first)`` returns an
object with ``value(k)`` (score of taking the arc at row k; first called
with ``k == k_first``) and ``advance()`` (move internal state from the
current row to the next).  ``advance`` is called exactly once per sweep
row on every evaluator already created, immediately after the row
completes, so stateful evaluators (streams, sliding hulls) stay aligned
with the row cursor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError, StateError
from .model import (
    BudgetGrid,
    Graph,
    RiskFunction,
    TreePreprocess,
    floor_index,
)


class ValueStore:
    """Per-node value rows over [k_min[i], k_T].

    With ``zero_floor`` every range is clipped to start at row 0 and reads
    below row 0 return 0.0; this is exact whenever the risk function
    vanishes on negative overrun (on-time arrival), and lets a policy be
    scored under cost supports wider than the ones it was solved with.
    """

    def __init__(self, k_min: dict, k_T: int, *, zero_floor: bool = False):
        self.zero_floor = zero_floor
        self.k_T = int(k_T)
        if zero_floor:
            k_min = {i: max(0, k) for i, k in k_min.items()}
        self.k_min = {i: int(k) for i, k in k_min.items()}
        self._rows: dict = {
            i: np.full(self.k_T - k + 1, math.nan) for i, k in self.k_min.items()
        }

    def set(self, node, k: int, value: float):
        self._rows[node][k - self.k_min[node]] = value

    def value_at(self, node, k: int) -> float:
        idx = k - self.k_min[node]
        if idx < 0:
            if self.zero_floor and k < 0:
                return 0.0
            raise EvaluationError(
                f"row {k} of node {node!r} is below the materialized range "
                f"(k_min={self.k_min[node]})"
            )
        v = self._rows[node][idx]
        if math.isnan(v):
            raise StateError(f"row {k} of node {node!r} read before it was computed")
        return float(v)

    def accessor(self, node):
        """Fast bound-checked reader for one node's rows."""
        base = self.k_min[node]
        arr = self._rows[node]
        zero_floor = self.zero_floor

        def at(m: int) -> float:
            idx = m - base
            if idx < 0:
                if zero_floor and m < 0:
                    return 0.0
                raise EvaluationError(
                    f"row {m} of node {node!r} is below the materialized range "
                    f"(k_min={base})"
                )
            v = arr[idx]
            if v != v:
                raise StateError(
                    f"row {m} of node {node!r} read before it was computed"
                )
            return v

        return at

    def rows(self, node) -> np.ndarray:
        return self._rows[node].copy()


@dataclass
class PolicyTable:
    """Chosen successor per (node, budget row); the destination has no row."""

    delta_t: float
    k_T: int
    k_min: dict
    actions: dict = field(default_factory=dict)  # node -> list over [k_min, k_T]

    def action(self, node, k: int):
        try:
            acts = self.actions[node]
            base = self.k_min[node]
        except KeyError:
            raise EvaluationError(f"policy has no rows for node {node!r}") from None
        idx = k - base
        if idx < 0 or idx >= len(acts):
            raise EvaluationError(
                f"policy row {k} for node {node!r} outside stored range "
                f"[{base}, {base + len(acts) - 1}]"
            )
        return acts[idx]


@dataclass
class SolveResult:
    """Value and policy tables from one sweep, plus the preprocessing used."""

    graph: Graph
    grid: BudgetGrid
    risk: RiskFunction
    tree: TreePreprocess
    k_tf: int
    store: ValueStore
    policy: PolicyTable | None

    def value_at(self, node, k: int) -> float:
        return self.store.value_at(node, k)

    def value_at_budget(self, node, budget: float) -> float:
        return self.store.value_at(node, floor_index(budget, self.grid.delta_t))

    @property
    def objective(self) -> float:
        return self.store.value_at(self.graph.source, self.grid.k_T)


def fill_destination(store: ValueStore, graph: Graph, risk: RiskFunction, grid: BudgetGrid):
    d = graph.destination
    lo = store.k_min[d]
    vals = risk.values_on_grid(lo, store.k_T, grid.delta_t)
    for k in range(lo, store.k_T + 1):
        store.set(d, k, float(vals[k - lo]))


def run_sweep(
    graph: Graph,
    grid: BudgetGrid,
    risk: RiskFunction,
    tree: TreePreprocess,
    make_evaluator,
    *,
    store: ValueStore | None = None,
    k_start: int | None = None,
    policy: PolicyTable | None = None,
    record_policy: bool = True,
    zero_floor: bool = False,
) -> tuple[ValueStore, PolicyTable | None]:
    """Ascending-row sweep; returns the filled value store and policy.

    ``policy`` switches from optimization to evaluation of the given fixed
    actions.  ``store``/``k_start`` let a caller pre-fill the rows below
    the threshold by other means and start the sweep there.
    """
    k_T = grid.k_T
    k_tf = floor_index(tree.t_f, grid.delta_t)
    if store is None:
        store = ValueStore(dict(tree.k_min), k_T, zero_floor=zero_floor)
        fill_destination(store, graph, risk, grid)
    if k_start is None:
        k_start = min(store.k_min.values())

    out_policy = None
    if record_policy:
        out_policy = PolicyTable(grid.delta_t, k_T, dict(store.k_min))
        d = graph.destination
        for i in graph.nodes:
            if i != d:
                out_policy.actions[i] = [None] * (k_T - store.k_min[i] + 1)

    d = graph.destination
    others = [i for i in graph.nodes if i != d]
    cost_to_go = tree.cost_to_go
    evaluators: dict = {}

    for k in range(k_start, k_T + 1):
        for i in others:
            base = store.k_min[i]
            if k < base:
                continue
            if policy is not None:
                heads = (policy.action(i, k),)
            elif k < k_tf:
                heads = (tree.parent[i],)
            else:
                heads = tuple(a.head for a in graph.successors(i))
            best_key = None
            best_v = best_j = None
            for j in heads:
                arc = graph.arc(i, j)
                ev = evaluators.get(arc.key)
                if ev is None:
                    ev = make_evaluator(arc, store.accessor(j), k)
                    evaluators[arc.key] = ev
                v = ev.value(k)
                key = (-v, cost_to_go[j], j)
                if best_key is None or key < best_key:
                    best_key, best_v, best_j = key, v, j
            store.set(i, k, best_v)
            if out_policy is not None:
                out_policy.actions[i][k - base] = best_j
        for ev in evaluators.values():
            ev.advance()
    return store, out_policy
