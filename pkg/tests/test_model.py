import math

import numpy as np
import pytest

import oracles
from riskroute.errors import ConfigurationError, UnreachableNodeError
from riskroute.model import (
    Arc,
    BudgetGrid,
    Graph,
    GridDistribution,
    RiskFunction,
    RiskKind,
    ceil_index,
    compute_tf,
    floor_index,
    mean_costs,
    preprocess,
    shortest_path_tree,
    snap_multiple,
)
from conftest import random_instance


def test_grid_helpers_tolerate_float_noise():
    assert snap_multiple(0.30000000000000004, 0.1) == 3
    assert floor_index(0.7 - 1e-13, 0.1) == 7
    assert ceil_index(0.7 + 1e-13, 0.1) == 7
    assert floor_index(-0.25, 0.1) == -3
    assert ceil_index(-0.25, 0.1) == -2
    with pytest.raises(ConfigurationError):
        snap_multiple(0.35, 0.1)


def test_arc_and_graph_validation():
    with pytest.raises(ConfigurationError):
        Arc("a", "a", 1.0, 2.0)
    with pytest.raises(ConfigurationError):
        Arc("a", "b", 0.0, 2.0)
    with pytest.raises(ConfigurationError):
        Arc("a", "b", 3.0, 2.0)
    with pytest.raises(ConfigurationError):
        Graph(["a", "a"], [], "a", "a")
    with pytest.raises(ConfigurationError):
        Graph(["a", "b"], [Arc("a", "b", 1, 1), Arc("a", "b", 2, 2)], "a", "b")
    with pytest.raises(ConfigurationError):
        Graph(["a", "b"], [Arc("a", "c", 1, 1)], "a", "b")
    g = Graph(["a", "b"], [Arc("a", "b", 1, 2)], "a", "b")
    assert g.has_arc("a", "b") and not g.has_arc("b", "a")
    assert [a.head for a in g.successors("a")] == ["b"]
    assert [a.tail for a in g.predecessors("b")] == ["a"]
    assert g.delta_sup_max == 2.0 and g.delta_inf_min == 1.0


def test_distribution_normalization_and_trim():
    d = GridDistribution(0.5, 2, [0.0, 0.25, 0.0, 0.75, 0.0])
    assert d.offset_k == 3 and d.n_cells == 3
    assert d.support_lo == 1.5 and d.support_hi == 2.5
    assert abs(d.mean() - (0.25 * 1.5 + 0.75 * 2.5)) < 1e-15
    assert list(d.support_values()) == [1.5, 2.0, 2.5]
    with pytest.raises(ConfigurationError):
        GridDistribution(0.5, 0, [1.0])  # support must be positive
    with pytest.raises(ConfigurationError):
        GridDistribution(0.5, 1, [0.5, 0.4])  # does not sum to one
    with pytest.raises(ConfigurationError):
        GridDistribution(0.5, 1, [1.2, -0.2])


def test_risk_functions():
    ot = RiskFunction.on_time()
    ov = RiskFunction.expected_overrun()
    sq = RiskFunction.squared_overrun()
    assert (ot.value(0.0), ot.value(-0.1), ot.value(3.0)) == (1.0, 0.0, 1.0)
    assert (ov.value(2.0), ov.value(0.0), ov.value(-1.5)) == (0.0, 0.0, -1.5)
    assert (sq.value(1.0), sq.value(-2.0)) == (0.0, -4.0)
    assert ot.zero_below_zero and not ov.zero_below_zero
    vals = ov.values_on_grid(-3, 2, 0.5)
    assert np.allclose(vals, [-1.5, -1.0, -0.5, 0.0, 0.0, 0.0])

    tab = RiskFunction.tabulated(0.5, -4, [-2.0, -1.0, 0.0, 0.0, 0.0], t_f=-2.0)
    assert tab.value(-2.0) == -2.0 and tab.value(10.0) == 0.0
    with pytest.raises(ConfigurationError):
        RiskFunction.tabulated(0.5, 0, [0.0, -1.0], t_f=0.0)  # decreasing


def test_exp_utility_is_rejected_by_preprocessing(two_route):
    g, dists, grid = two_route
    eu = RiskFunction.exp_utility()
    assert eu.value(-1.0) == -math.exp(1.0)
    with pytest.raises(ConfigurationError):
        preprocess(g, mean_costs(g, dists), eu, grid)


def test_budget_grid():
    grid = BudgetGrid(0.25, 10.1)
    assert grid.k_T == 40
    assert grid.index_of(0.99) == 3
    with pytest.raises(ConfigurationError):
        BudgetGrid(0.0, 1.0)
    with pytest.raises(ConfigurationError):
        BudgetGrid(0.25, -1.0)


def test_shortest_path_tree_matches_bellman_ford(two_route):
    g, dists, _ = two_route
    means = mean_costs(g, dists)
    tree = shortest_path_tree(g, means)
    ref = oracles.least_expected_cost(g, means)
    for node in g.nodes:
        assert abs(tree.cost_to_go[node] - ref[node]) < 1e-12
    # s goes direct (2.7 expected), a goes back through s (1 + 2.7)
    assert tree.parent["s"] == "d" and abs(tree.cost_to_go["s"] - 2.7) < 1e-12
    assert tree.parent["a"] == "s" and abs(tree.cost_to_go["a"] - 3.7) < 1e-12
    assert tree.level["d"] == 1 and tree.level["s"] == 2 and tree.level["a"] == 3


def test_shortest_path_tree_randomized():
    rng = np.random.default_rng(100)
    for _ in range(40):
        g, dists, _ = random_instance(rng)
        means = mean_costs(g, dists)
        tree = shortest_path_tree(g, means)
        ref = oracles.least_expected_cost(g, means)
        for node in g.nodes:
            assert abs(tree.cost_to_go[node] - ref[node]) < 1e-9
        for node in g.nodes:
            if node != g.destination:
                p = tree.parent[node]
                assert g.has_arc(node, p)
                assert tree.level[node] == tree.level[p] + 1


def test_parent_tie_break_is_smallest_head():
    g = Graph(
        ["s", "b", "a", "d"],
        [Arc("s", "a", 1, 1), Arc("s", "b", 1, 1), Arc("a", "d", 1, 1), Arc("b", "d", 1, 1)],
        "s",
        "d",
    )
    means = {a.key: 1.0 for a in g.arcs}
    tree = shortest_path_tree(g, means)
    assert tree.parent["s"] == "a"  # equal cost through a or b


def test_unreachable_nodes_are_reported():
    g = Graph(
        ["s", "x", "d"],
        [Arc("s", "d", 1, 1), Arc("d", "x", 1, 1)],
        "s",
        "d",
    )
    with pytest.raises(UnreachableNodeError) as ei:
        shortest_path_tree(g, {a.key: 1.0 for a in g.arcs})
    assert ei.value.offenders == ["x"]


def test_threshold_zero_for_simple_risks(two_route):
    g, dists, grid = two_route
    means = mean_costs(g, dists)
    tree = shortest_path_tree(g, means)
    assert compute_tf(RiskFunction.on_time(), g, means, tree) == 0.0
    assert compute_tf(RiskFunction.expected_overrun(), g, means, tree) == 0.0


def test_threshold_squared_overrun_formula(two_route):
    g, dists, grid = two_route
    means = mean_costs(g, dists)
    tree = shortest_path_tree(g, means)
    tf = compute_tf(RiskFunction.squared_overrun(), g, means, tree)
    # gap: cheapest non-tree alternative minus the tree, over all nodes
    gap = min(
        means[a.key] + tree.cost_to_go[a.head] - tree.cost_to_go[a.tail]
        for a in g.arcs
        if tree.parent.get(a.tail) != a.head
    )
    expect = -(g.n * g.delta_sup_max * max(tree.cost_to_go.values())) / (2.0 * gap)
    assert gap > 0 and abs(tf - expect) < 1e-12
    assert tf < 0.0


def test_threshold_squared_needs_positive_gap():
    # two parallel arcs with identical means: the non-tree alternative ties
    g = Graph(
        ["s", "a", "d"],
        [Arc("s", "a", 1, 1), Arc("a", "d", 1, 1), Arc("s", "d", 2, 2)],
        "s",
        "d",
    )
    dists = {
        ("s", "a"): GridDistribution(1.0, 1, [1.0]),
        ("a", "d"): GridDistribution(1.0, 1, [1.0]),
        ("s", "d"): GridDistribution(1.0, 2, [1.0]),
    }
    means = mean_costs(g, dists)
    tree = shortest_path_tree(g, means)
    with pytest.raises(ConfigurationError):
        compute_tf(RiskFunction.squared_overrun(), g, means, tree)


def test_threshold_squared_tree_only_graph():
    # no non-tree successor anywhere: the gap set is empty, threshold is 0
    g = Graph(["s", "d"], [Arc("s", "d", 1, 1)], "s", "d")
    dists = {("s", "d"): GridDistribution(1.0, 1, [1.0])}
    means = mean_costs(g, dists)
    tree = shortest_path_tree(g, means)
    assert compute_tf(RiskFunction.squared_overrun(), g, means, tree) == 0.0


def test_k_min_formula_and_level_monotonicity():
    rng = np.random.default_rng(7)
    for _ in range(30):
        g, dists, grid = random_instance(rng)
        means = mean_costs(g, dists)
        tree = preprocess(g, means, RiskFunction.expected_overrun(), grid)
        ds = g.delta_sup_max
        for i in g.nodes:
            expect = math.floor(
                (tree.t_f - (g.n - tree.level[i] + 1) * ds) / grid.delta_t + 1e-9
            )
            assert tree.k_min[i] == expect
        # deeper levels start no lower: the bound relaxes with level
        by_level = sorted(g.nodes, key=lambda i: tree.level[i])
        for a, b in zip(by_level, by_level[1:]):
            if tree.level[a] < tree.level[b]:
                assert tree.k_min[a] <= tree.k_min[b]
