"""Core model types: graphs, grid-supported arc costs, risk functions, preprocessing.

The solvers in this package work on a directed graph whose arc traversal
costs are random, supported on a uniform budget grid of step ``delta_t``.
A strategy is scored by ``E[f(T - X)]`` where ``T`` is the travel budget,
``X`` the accumulated cost on arrival, and ``f`` a nondecreasing risk
function of the overrun.  Everything downstream (value tables, ambiguity
sets, inner problems) indexes budgets by integer multiples of ``delta_t``,
so this module also owns the snapping helpers that convert between float
budgets and grid indices.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, UnreachableNodeError

NodeId = Hashable
ArcKey = tuple  # (tail, head)

GRID_EPS = 1e-9


def snap_multiple(x: float, delta_t: float, what: str = "value") -> int:
    """Return ``k`` with ``x == k * delta_t``, or raise if ``x`` is off-grid.

    Tolerates relative float noise up to ``GRID_EPS``.
    """
    q = x / delta_t
    k = int(round(q))
    if abs(x - k * delta_t) > GRID_EPS * max(1.0, abs(x)):
        raise ConfigurationError(
            f"{what} = {x!r} is not a multiple of delta_t = {delta_t!r}"
        )
    return k


def floor_index(t: float, delta_t: float) -> int:
    """Largest grid index k with k*delta_t <= t, robust to float noise."""
    return math.floor(t / delta_t + GRID_EPS)


def ceil_index(t: float, delta_t: float) -> int:
    """Smallest grid index k with k*delta_t >= t, robust to float noise."""
    return math.ceil(t / delta_t - GRID_EPS)


@dataclass(frozen=True)
class Arc:
    """Directed arc with the declared support bounds of its cost distribution.

    Bounds are in budget units and must satisfy ``0 < delta_inf <= delta_sup``.
    """

    tail: NodeId
    head: NodeId
    delta_inf: float
    delta_sup: float

    def __post_init__(self):
        if self.tail == self.head:
            raise ConfigurationError(f"self-loop arc at {self.tail!r}")
        if not (0.0 < self.delta_inf <= self.delta_sup):
            raise ConfigurationError(
                f"arc {self.tail!r}->{self.head!r}: need 0 < delta_inf <= delta_sup, "
                f"got [{self.delta_inf}, {self.delta_sup}]"
            )

    @property
    def key(self) -> ArcKey:
        return (self.tail, self.head)


class Graph:
    """Directed graph with unique source/destination and no parallel arcs.

    Node iteration order is the order given at construction; all solver
    tie-breaks beyond the documented (value, cost-to-go, node id) rule are
    therefore deterministic.
    """

    def __init__(
        self,
        nodes: Iterable[NodeId],
        arcs: Iterable[Arc],
        source: NodeId,
        destination: NodeId,
    ):
        self.nodes: list[NodeId] = list(nodes)
        if len(set(self.nodes)) != len(self.nodes):
            raise ConfigurationError("duplicate node ids")
        node_set = set(self.nodes)
        self.arcs: list[Arc] = list(arcs)
        self._by_key: dict[ArcKey, Arc] = {}
        self._out: dict[NodeId, list[Arc]] = {i: [] for i in self.nodes}
        self._in: dict[NodeId, list[Arc]] = {i: [] for i in self.nodes}
        for a in self.arcs:
            if a.tail not in node_set or a.head not in node_set:
                raise ConfigurationError(f"arc {a.key} references unknown node")
            if a.key in self._by_key:
                raise ConfigurationError(f"parallel arc {a.key}")
            self._by_key[a.key] = a
            self._out[a.tail].append(a)
            self._in[a.head].append(a)
        if source not in node_set:
            raise ConfigurationError(f"unknown source {source!r}")
        if destination not in node_set:
            raise ConfigurationError(f"unknown destination {destination!r}")
        self.source = source
        self.destination = destination

    @property
    def n(self) -> int:
        return len(self.nodes)

    def successors(self, i: NodeId) -> list[Arc]:
        return self._out[i]

    def predecessors(self, i: NodeId) -> list[Arc]:
        return self._in[i]

    def arc(self, tail: NodeId, head: NodeId) -> Arc:
        try:
            return self._by_key[(tail, head)]
        except KeyError:
            raise ConfigurationError(f"no arc {tail!r}->{head!r}") from None

    def has_arc(self, tail: NodeId, head: NodeId) -> bool:
        return (tail, head) in self._by_key

    @property
    def delta_sup_max(self) -> float:
        return max(a.delta_sup for a in self.arcs)

    @property
    def delta_inf_min(self) -> float:
        return min(a.delta_inf for a in self.arcs)


@dataclass(frozen=True)
class GridDistribution:
    """Discrete cost distribution supported on grid multiples of ``delta_t``.

    Mass ``pmf[m]`` sits at ``(offset_k + m) * delta_t``.  Weights must be
    nonnegative and sum to one within 1e-9.
    """

    delta_t: float
    offset_k: int
    pmf: tuple

    def __init__(self, delta_t: float, offset_k: int, pmf):
        w = np.asarray(pmf, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ConfigurationError("pmf must be a nonempty 1-d weight sequence")
        if np.any(w < -1e-12):
            raise ConfigurationError("pmf has a negative weight")
        s = float(w.sum())
        if abs(s - 1.0) > 1e-9:
            raise ConfigurationError(f"pmf weights sum to {s}, expected 1")
        if delta_t <= 0:
            raise ConfigurationError("delta_t must be positive")
        if offset_k < 1:
            raise ConfigurationError("support must start at a positive cost")
        if w[0] == 0.0 or w[-1] == 0.0:
            # normalize representation so support bounds are tight
            nz = np.nonzero(w)[0]
            if nz.size == 0:
                raise ConfigurationError("pmf has no mass")
            offset_k += int(nz[0])
            w = w[nz[0] : nz[-1] + 1]
        object.__setattr__(self, "delta_t", float(delta_t))
        object.__setattr__(self, "offset_k", int(offset_k))
        object.__setattr__(self, "pmf", tuple(float(x) for x in w))

    @property
    def weights(self) -> np.ndarray:
        return np.array(self.pmf, dtype=float)

    @property
    def n_cells(self) -> int:
        return len(self.pmf)

    @property
    def max_offset_k(self) -> int:
        return self.offset_k + len(self.pmf) - 1

    @property
    def support_lo(self) -> float:
        return self.offset_k * self.delta_t

    @property
    def support_hi(self) -> float:
        return self.max_offset_k * self.delta_t

    def mean(self) -> float:
        offs = np.arange(self.offset_k, self.offset_k + len(self.pmf))
        return float(np.dot(offs, self.weights)) * self.delta_t

    def support_values(self) -> np.ndarray:
        return np.arange(self.offset_k, self.offset_k + len(self.pmf)) * self.delta_t


class RiskKind(Enum):
    ON_TIME = "on_time"
    EXPECTED_OVERRUN = "expected_overrun"
    SQUARED_OVERRUN = "squared_overrun"
    EXP_UTILITY = "exp_utility"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class RiskFunction:
    """Nondecreasing function of the remaining budget at arrival.

    Built-in kinds:

    * ``on_time``          f(t) = 1 if t >= 0 else 0
    * ``expected_overrun`` f(t) = min(t, 0)
    * ``squared_overrun``  f(t) = -t^2 for t <= 0, else 0
    * ``exp_utility``      f(t) = -exp(-t); exposed for evaluation but rejected
      by the solvers, which rely on a finite anti-cycling threshold
    * ``tabulated``        user-supplied grid values with an explicit threshold

    ``tabulated`` evaluates only on its own grid; the others everywhere.
    """

    kind: RiskKind
    table_delta_t: float | None = None
    table_offset_k: int | None = None
    table_values: tuple | None = None
    table_t_f: float | None = None

    @staticmethod
    def on_time() -> "RiskFunction":
        return RiskFunction(RiskKind.ON_TIME)

    @staticmethod
    def expected_overrun() -> "RiskFunction":
        return RiskFunction(RiskKind.EXPECTED_OVERRUN)

    @staticmethod
    def squared_overrun() -> "RiskFunction":
        return RiskFunction(RiskKind.SQUARED_OVERRUN)

    @staticmethod
    def exp_utility() -> "RiskFunction":
        return RiskFunction(RiskKind.EXP_UTILITY)

    @staticmethod
    def tabulated(
        delta_t: float, offset_k: int, values: Sequence[float], t_f: float
    ) -> "RiskFunction":
        """Nondecreasing values on grid rows offset_k.., constant outside,
        with a caller-declared tree-following threshold t_f."""
        vals = tuple(float(v) for v in values)
        if len(vals) == 0:
            raise ConfigurationError("tabulated risk needs at least one value")
        if any(b < a - 1e-12 for a, b in zip(vals, vals[1:])):
            raise ConfigurationError("tabulated risk must be nondecreasing")
        return RiskFunction(
            RiskKind.TABULATED,
            table_delta_t=float(delta_t),
            table_offset_k=int(offset_k),
            table_values=vals,
            table_t_f=float(t_f),
        )

    def value(self, t: float) -> float:
        k = self.kind
        if k is RiskKind.ON_TIME:
            return 1.0 if t >= 0.0 else 0.0
        if k is RiskKind.EXPECTED_OVERRUN:
            return t if t <= 0.0 else 0.0
        if k is RiskKind.SQUARED_OVERRUN:
            return -t * t if t <= 0.0 else 0.0
        if k is RiskKind.EXP_UTILITY:
            return -math.exp(-t)
        return self._table_value(t)

    def _table_value(self, t: float) -> float:
        # outside the table the nondecreasing completion is the boundary value
        dt = self.table_delta_t
        k = snap_multiple(t, dt, "tabulated risk query")
        idx = min(max(k - self.table_offset_k, 0), len(self.table_values) - 1)
        return self.table_values[idx]

    def values_on_grid(self, k_lo: int, k_hi: int, delta_t: float) -> np.ndarray:
        """Vector of f(k*delta_t) for k in [k_lo, k_hi]."""
        ks = np.arange(k_lo, k_hi + 1)
        t = ks * delta_t
        kind = self.kind
        if kind is RiskKind.ON_TIME:
            return (t >= 0.0).astype(float)
        if kind is RiskKind.EXPECTED_OVERRUN:
            return np.minimum(t, 0.0)
        if kind is RiskKind.SQUARED_OVERRUN:
            return np.where(t <= 0.0, -t * t, 0.0)
        if kind is RiskKind.EXP_UTILITY:
            return -np.exp(-t)
        return np.array([self._table_value(x) for x in t])

    @property
    def zero_below_zero(self) -> bool:
        """True when f vanishes on (-inf, 0); lets evaluation treat depleted
        budgets as value 0 without materializing rows."""
        return self.kind is RiskKind.ON_TIME


@dataclass(frozen=True)
class BudgetGrid:
    """Uniform budget grid: step ``delta_t`` and horizon ``horizon`` (the budget T)."""

    delta_t: float
    horizon: float

    def __post_init__(self):
        if self.delta_t <= 0:
            raise ConfigurationError("delta_t must be positive")
        if self.horizon < 0:
            raise ConfigurationError("budget T must be nonnegative")

    @property
    def k_T(self) -> int:
        return floor_index(self.horizon, self.delta_t)

    def index_of(self, t: float) -> int:
        return floor_index(t, self.delta_t)

    def budget_of(self, k: int) -> float:
        return k * self.delta_t


@dataclass
class TreePreprocess:
    """Shortest-path tree toward the destination plus anti-cycling data.

    ``parent[i]`` is the tree successor of ``i`` (absent for the destination),
    ``level[i]`` counts the nodes on the tree path from ``i`` to the
    destination inclusive (destination has level 1), ``cost_to_go[i]`` the
    mean cost of that path.  ``t_f`` and ``k_min`` are only set once a risk
    function and grid are known.
    """

    parent: dict
    level: dict
    cost_to_go: dict
    t_f: float | None = None
    k_min: dict = field(default_factory=dict)


def mean_costs(
    graph: Graph, distributions: Mapping[ArcKey, GridDistribution]
) -> dict[ArcKey, float]:
    """Expected traversal cost per arc; every arc must carry a distribution."""
    out = {}
    for a in graph.arcs:
        try:
            d = distributions[a.key]
        except KeyError:
            raise ConfigurationError(f"no distribution for arc {a.key}") from None
        out[a.key] = d.mean()
    return out


def shortest_path_tree(
    graph: Graph, arc_means: Mapping[ArcKey, float]
) -> TreePreprocess:
    """Tree of least expected cost-to-go rooted at the destination.

    Dijkstra on reversed arcs; parents are the arg-min successors with ties
    broken by the smallest node id.  Raises UnreachableNodeError listing every
    node that cannot reach the destination.
    """
    d = graph.destination
    order = {node: idx for idx, node in enumerate(graph.nodes)}
    idx_to_node = list(graph.nodes)
    dist: dict = {d: 0.0}
    heap: list = [(0.0, order[d])]
    seen = set()
    while heap:
        du, uidx = heapq.heappop(heap)
        u = idx_to_node[uidx]
        if u in seen:
            continue
        seen.add(u)
        for a in graph.predecessors(u):
            w = arc_means[a.key]
            if w < 0:
                raise ConfigurationError(f"negative mean cost on arc {a.key}")
            nd = du + w
            if a.tail not in dist or nd < dist[a.tail] - 1e-15:
                dist[a.tail] = nd
                heapq.heappush(heap, (nd, order[a.tail]))
    if d not in seen:  # pragma: no cover
        raise ConfigurationError("internal: destination never settled")
    offenders = [i for i in graph.nodes if i not in dist]
    if offenders:
        raise UnreachableNodeError(offenders)

    parent: dict = {}
    for i in graph.nodes:
        if i == d:
            continue
        best = None
        for a in graph.successors(i):
            if a.head not in dist:
                continue
            val = arc_means[a.key] + dist[a.head]
            if best is None or val < best[0] or (val == best[0] and a.head < best[1]):
                best = (val, a.head)
        # best cannot be None: i reaches d so it has at least one successor
        parent[i] = best[1]

    level: dict = {d: 1}

    def _level(i):
        chain = []
        while i not in level:
            chain.append(i)
            i = parent[i]
            if len(chain) > graph.n:
                raise ConfigurationError("internal: cycle in shortest-path tree")
        base = level[i]
        for j in reversed(chain):
            base += 1
            level[j] = base

    for i in graph.nodes:
        _level(i)
    return TreePreprocess(parent=parent, level=level, cost_to_go=dist)


def compute_tf(
    risk: RiskFunction,
    graph: Graph,
    arc_means: Mapping[ArcKey, float],
    tree: TreePreprocess,
) -> float:
    """Budget threshold below which optimal play follows the tree.

    On-time and overrun risks vanish at/above budget 0, giving threshold 0.
    The squared overrun needs the finite bound

        -( |V| * delta_sup * max_i M_i ) / ( 2 * min gap )

    where the gap minimizes ``mean_ij + M_j - M_i`` over non-tree arcs.  An
    empty candidate set means every deviation rejoins the tree immediately
    and the threshold is 0; a nonpositive gap (a non-tree arc tying the tree
    value) leaves no finite threshold and is rejected.
    """
    kind = risk.kind
    if kind in (RiskKind.ON_TIME, RiskKind.EXPECTED_OVERRUN):
        return 0.0
    if kind is RiskKind.EXP_UTILITY:
        raise ConfigurationError(
            "exponential utility is not supported by the label-setting solvers"
        )
    if kind is RiskKind.TABULATED:
        return risk.table_t_f
    # squared overrun
    gaps = []
    d = graph.destination
    for i in graph.nodes:
        if i == d:
            continue
        for a in graph.successors(i):
            if a.head == tree.parent[i]:
                continue
            gaps.append(arc_means[a.key] + tree.cost_to_go[a.head] - tree.cost_to_go[i])
    if not gaps:
        return 0.0
    gap = min(gaps)
    if gap <= 0:
        raise ConfigurationError(
            "no finite anti-cycling threshold: a non-tree arc ties the tree value"
        )
    m_max = max(tree.cost_to_go.values())
    return -(graph.n * graph.delta_sup_max * m_max) / (2.0 * gap)


def preprocess(
    graph: Graph,
    arc_means: Mapping[ArcKey, float],
    risk: RiskFunction,
    grid: BudgetGrid,
) -> TreePreprocess:
    """Tree, threshold and per-node lowest materialized budget row.

    ``k_min[i] = floor((t_f - (|V| - level_i + 1) * delta_sup) / delta_t)``:
    rows below that are never reached once play follows the tree, and the
    bound loosens exactly one arc-support per tree level so each node's
    range covers everything its predecessors' recursions read.
    """
    tree = shortest_path_tree(graph, arc_means)
    tree.t_f = compute_tf(risk, graph, arc_means, tree)
    ds = graph.delta_sup_max
    n = graph.n
    tree.k_min = {
        i: floor_index(tree.t_f - (n - tree.level[i] + 1) * ds, grid.delta_t)
        for i in graph.nodes
    }
    return tree
