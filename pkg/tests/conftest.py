import numpy as np
import pytest

from riskroute.model import Arc, BudgetGrid, Graph, GridDistribution


@pytest.fixture
def two_route():
    """Two routes from s to d plus a return arc a->s; with the slow direct
    arc and a cheap way back, turning around mid-route can be optimal."""
    dt = 1.0
    g = Graph(
        ["s", "a", "d"],
        [
            Arc("s", "d", 2.0, 9.0),
            Arc("s", "a", 1.0, 5.0),
            Arc("a", "d", 6.0, 7.0),
            Arc("a", "s", 1.0, 1.0),
        ],
        "s",
        "d",
    )
    dists = {
        ("s", "d"): GridDistribution(dt, 2, [0.9, 0, 0, 0, 0, 0, 0, 0.1]),
        ("s", "a"): GridDistribution(dt, 1, [0.9, 0, 0, 0, 0.1]),
        ("a", "d"): GridDistribution(dt, 6, [0.5, 0.5]),
        ("a", "s"): GridDistribution(dt, 1, [1.0]),
    }
    return g, dists, BudgetGrid(dt, 8.0)


def random_instance(rng, *, max_nodes=6, max_support=8, k_T=None):
    """Small random strongly-destination-connected instance with pmfs."""
    n = int(rng.integers(2, max_nodes + 1))
    nodes = [f"n{i}" for i in range(n)]
    dest = nodes[-1]
    arcs = []
    keys = set()
    # a spine guarantees reachability
    for i in range(n - 1):
        keys.add((nodes[i], nodes[i + 1]))
    extra = int(rng.integers(0, min(10, n * (n - 1)) + 1))
    for _ in range(extra):
        t, h = rng.choice(n, size=2, replace=False)
        keys.add((nodes[int(t)], nodes[int(h)]))
    dists = {}
    for (t, h) in sorted(keys):
        off = int(rng.integers(1, 4))
        width = int(rng.integers(1, max_support + 1))
        w = rng.random(width) + 1e-3
        w /= w.sum()
        dists[(t, h)] = GridDistribution(1.0, off, w)
        arcs.append(Arc(t, h, float(off), float(off + width - 1)))
    g = Graph(nodes, arcs, nodes[0], dest)
    if k_T is None:
        k_T = int(rng.integers(5, 41))
    return g, dists, BudgetGrid(1.0, float(k_T))
