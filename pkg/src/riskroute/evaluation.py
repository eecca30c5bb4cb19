"""Monte Carlo policy rollouts and the subsample-robustness experiment.

simulate_policy estimates a policy's expected risk value from seeded
rollouts; it is the sanity check against the exact evaluator and the only
way to score risks the solvers reject.

run_experiment compares policy construction methods on per-arc cost
samples.  Each repetition draws, per arc, a subsample at rate lambda,
builds one policy per method from the subsample alone, and scores every
policy exactly under the full-sample (truth) distributions on a shared
ladder of budgets.  Methods:

* robust_m    robust solve, one mean confidence interval per arc
* robust_md   robust solve, mean plus mean-absolute-deviation intervals
* empirical   nominal solve on the binned subsample
* let         follow the least-expected-time tree of the subsample means

Per method, lambda and budget the report keeps the mean on-time
probability over repetitions and the mean of the worst 5% (at least one)
of them.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._sweep import PolicyTable
from .ambiguity import preset_robust_m, preset_robust_md
from .errors import ConfigurationError, EvaluationError, RiskrouteError
from .io_formats import bin_samples
from .model import (
    Arc,
    BudgetGrid,
    Graph,
    RiskFunction,
    compute_tf,
    floor_index,
    mean_costs,
    shortest_path_tree,
)
from .nominal import evaluate_policy_exact, solve_nominal
from .robust import arc_for, solve_robust

METHODS = ("robust_m", "robust_md", "empirical", "let")


@dataclass
class SimulationResult:
    """Rollout statistics; revisits are legal for adaptive policies."""

    n_runs: int
    mean_value: float
    values: np.ndarray
    mean_hops: float
    max_hops: int
    revisit_runs: int


def simulate_policy(
    graph: Graph,
    distributions,
    risk: RiskFunction,
    grid: BudgetGrid,
    policy: PolicyTable,
    n_runs: int,
    rng=None,
) -> SimulationResult:
    """Estimate a policy's expected risk value by sampled rollouts.

    Every run starts at the source with the full budget and follows the
    policy's action rows, drawing one arc cost per step.  A run that
    outlives the cycling bound (2|V| plus the worst number of affordable
    steps) raises EvaluationError.  For risks vanishing below zero a run
    stops as soon as the budget is spent.
    """
    if n_runs <= 0:
        raise ConfigurationError("n_runs must be positive")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)

    cum = {}
    offs = {}
    for a in graph.arcs:
        try:
            d = distributions[a.key]
        except KeyError:
            raise ConfigurationError(
                f"arc {a.tail!r}->{a.head!r} has no distribution"
            ) from None
        cum[a.key] = np.cumsum(d.weights)
        offs[a.key] = d.offset_k

    means = mean_costs(graph, distributions)
    tree = shortest_path_tree(graph, means)
    try:
        t_f = compute_tf(risk, graph, means, tree)
    except ConfigurationError:
        t_f = 0.0  # no threshold exists for this risk; the cap stays a cap
    span = max(0.0, grid.horizon - min(t_f, 0.0))
    hop_cap = 2 * graph.n + int(math.ceil(span / graph.delta_inf_min))

    stop_early = risk.zero_below_zero
    dest = graph.destination
    values = np.empty(n_runs)
    hops_total = 0
    hops_max = 0
    revisit_runs = 0
    for r in range(n_runs):
        node = graph.source
        k = grid.k_T
        hops = 0
        seen = {node}
        revisited = False
        while node != dest:
            if stop_early and k < 0:
                break
            head = policy.action(node, k)
            key = (node, head)
            try:
                c = cum[key]
            except KeyError:
                raise EvaluationError(
                    f"policy action {node!r}->{head!r} is not an arc of the graph"
                ) from None
            m = int(np.searchsorted(c, rng.random(), side="right"))
            if m >= len(c):
                m = len(c) - 1
            k -= offs[key] + m
            node = head
            hops += 1
            if hops > hop_cap:
                raise EvaluationError(
                    f"rollout exceeded {hop_cap} hops; the policy appears to cycle"
                )
            if node in seen:
                revisited = True
            seen.add(node)
        values[r] = risk.value(k * grid.delta_t) if node == dest else 0.0
        hops_total += hops
        hops_max = max(hops_max, hops)
        revisit_runs += revisited
    return SimulationResult(
        n_runs=n_runs,
        mean_value=float(values.mean()),
        values=values,
        mean_hops=hops_total / n_runs,
        max_hops=hops_max,
        revisit_runs=revisit_runs,
    )


@dataclass(frozen=True)
class ExperimentConfig:
    delta_t: float
    epsilon: float = 0.05
    lambdas: tuple = (0.01, 0.05, 1.0)
    n_reps: int = 20
    n_budgets: int = 11
    seed: int = 0
    methods: tuple = METHODS

    def __post_init__(self):
        if self.delta_t <= 0:
            raise ConfigurationError("delta_t must be positive")
        if not (0.0 < self.epsilon < 1.0):
            raise ConfigurationError("epsilon must lie in (0, 1)")
        if not self.lambdas or any(not (0.0 < l <= 1.0) for l in self.lambdas):
            raise ConfigurationError("every lambda must lie in (0, 1]")
        if self.n_reps < 1 or self.n_budgets < 1:
            raise ConfigurationError("n_reps and n_budgets must be at least 1")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown or not self.methods:
            raise ConfigurationError(
                f"methods must be a nonempty subset of {METHODS}, got {self.methods}"
            )


@dataclass(frozen=True)
class ReportRow:
    method: str
    lam: float
    budget: float
    mean_p: float
    worst5_p: float
    runtime_ms: float | None


@dataclass
class ExperimentReport:
    rows: list
    budgets: list
    t_min: float
    t_max: float
    failures: list = field(default_factory=list)


def _let_path_span(graph: Graph, means) -> tuple[float, float]:
    """Support bounds of the least-expected-time path from the source."""
    tree = shortest_path_tree(graph, means)
    t_min = 0.0
    t_max = 0.0
    node = graph.source
    while node != graph.destination:
        arc = graph.arc(node, tree.parent[node])
        t_min += arc.delta_inf
        t_max += arc.delta_sup
        node = arc.head
    return t_min, t_max


def _tree_policy(graph: Graph, means, delta_t: float, k_T: int) -> PolicyTable:
    """Follow a least-expected-time tree at every budget row."""
    tree = shortest_path_tree(graph, means)
    k_min = {}
    actions = {}
    for i in graph.nodes:
        if i == graph.destination:
            continue
        k_min[i] = 0
        actions[i] = [tree.parent[i]] * (k_T + 1)
    return PolicyTable(delta_t, k_T, k_min, actions)


def _build_policy(method, nodes, arc_keys, source, destination, sub, cfg, grid, risk):
    if method == "let":
        g = Graph(
            nodes,
            [Arc(t, h, 1.0, 1.0) for (t, h) in arc_keys],
            source,
            destination,
        )
        means = {key: float(np.mean(sub[key])) for key in arc_keys}
        return _tree_policy(g, means, cfg.delta_t, grid.k_T)
    if method == "empirical":
        dists = {key: bin_samples(sub[key], cfg.delta_t) for key in arc_keys}
        arcs = [
            Arc(t, h, dists[(t, h)].support_lo, dists[(t, h)].support_hi)
            for (t, h) in arc_keys
        ]
        g = Graph(nodes, arcs, source, destination)
        return solve_nominal(g, dists, risk, grid, zero_floor=True).policy
    n_intervals = len(arc_keys) * (2 if method == "robust_md" else 1)
    preset = preset_robust_md if method == "robust_md" else preset_robust_m
    sets = {
        key: preset(sub[key], cfg.delta_t, cfg.epsilon, n_intervals=n_intervals)
        for key in arc_keys
    }
    arcs = [arc_for(t, h, sets[(t, h)]) for (t, h) in arc_keys]
    g = Graph(nodes, arcs, source, destination)
    return solve_robust(g, sets, risk, grid, zero_floor=True).policy


def run_experiment(
    nodes,
    arc_pairs,
    source,
    destination,
    samples,
    config: ExperimentConfig,
) -> ExperimentReport:
    """Run the subsample-robustness comparison on one instance.

    ``samples`` maps every (tail, head) of ``arc_pairs`` to its positive
    cost samples.  Truth distributions bin the full samples; the budget
    ladder spans the support of the least-expected-time path under the
    full-sample means.  Policies are built per (repetition, lambda) from
    subsamples drawn without replacement with a per-repetition seed; a
    method failing a repetition is warned about and excluded.
    """
    nodes = list(nodes)
    arc_keys = [(t, h) for (t, h) in arc_pairs]
    if source == destination:
        raise ConfigurationError("source equals destination")
    missing = [k for k in arc_keys if k not in samples]
    extra = [k for k in samples if k not in set(arc_keys)]
    if missing or extra:
        raise ConfigurationError(
            f"samples must cover the arcs exactly (missing {missing}, extra {extra})"
        )

    dt = config.delta_t
    truth_dists = {key: bin_samples(samples[key], dt) for key in arc_keys}
    truth_graph = Graph(
        nodes,
        [
            Arc(t, h, truth_dists[(t, h)].support_lo, truth_dists[(t, h)].support_hi)
            for (t, h) in arc_keys
        ],
        source,
        destination,
    )
    means_full = {key: d.mean() for key, d in truth_dists.items()}
    t_min, t_max = _let_path_span(truth_graph, means_full)

    risk = RiskFunction.on_time()
    grid = BudgetGrid(dt, t_max)
    if config.n_budgets == 1:
        k_rows = [grid.k_T]
    else:
        step = (t_max - t_min) / (config.n_budgets - 1)
        k_rows = [
            floor_index(t_min + j * step, dt) for j in range(config.n_budgets)
        ]
    budgets = [k * dt for k in k_rows]

    sizes = {key: len(samples[key]) for key in arc_keys}
    outcomes = {(m, lam): [] for m in config.methods for lam in config.lambdas}
    failures = []
    for rep in range(config.n_reps):
        rng = np.random.default_rng((config.seed, rep))
        for lam in config.lambdas:
            sub = {}
            for key in arc_keys:
                n = max(1, int(round(lam * sizes[key])))
                idx = rng.choice(sizes[key], size=n, replace=False)
                sub[key] = samples[key][idx]
            for method in config.methods:
                t0 = time.perf_counter()
                try:
                    pol = _build_policy(
                        method, nodes, arc_keys, source, destination,
                        sub, config, grid, risk,
                    )
                    ms = (time.perf_counter() - t0) * 1e3
                    res = evaluate_policy_exact(
                        truth_graph, truth_dists, risk, grid, pol,
                        below_range="zero",
                    )
                    probs = np.array([res.value_at(source, kb) for kb in k_rows])
                except RiskrouteError as e:
                    failures.append((method, lam, rep, str(e)))
                    warnings.warn(
                        f"method {method!r} failed on rep {rep}, "
                        f"lambda {lam}: {e}",
                        stacklevel=2,
                    )
                    continue
                outcomes[(method, lam)].append((probs, ms))

    rows = []
    for method in config.methods:
        for lam in config.lambdas:
            got = outcomes[(method, lam)]
            if not got:
                warnings.warn(
                    f"method {method!r} failed every repetition at lambda {lam}",
                    stacklevel=2,
                )
                continue
            mat = np.vstack([p for p, _ in got])
            ms = float(np.mean([m for _, m in got]))
            n_worst = max(1, int(round(0.05 * mat.shape[0])))
            low = np.sort(mat, axis=0)[:n_worst, :]
            for j, kb in enumerate(k_rows):
                rows.append(
                    ReportRow(
                        method=method,
                        lam=lam,
                        budget=kb * dt,
                        mean_p=float(mat[:, j].mean()),
                        worst5_p=float(low[:, j].mean()),
                        runtime_ms=ms,
                    )
                )
    return ExperimentReport(
        rows=rows, budgets=budgets, t_min=t_min, t_max=t_max, failures=failures
    )
