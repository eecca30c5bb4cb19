"""Independent reference implementations the tests compare the package against.

Everything here is deliberately written the slow, obvious way: double loops
instead of FFTs, full rebuilds instead of incremental updates, plain
backward induction instead of the sweep.
"""

import numpy as np

from riskroute.model import RiskKind


def convolve_reference(u_at, dist, k: int) -> float:
    """E[u(k - C)] by direct summation."""
    total = 0.0
    for m, w in enumerate(dist.weights):
        if w != 0.0:
            total += w * u_at(k - dist.offset_k - m)
    return total


def upper_extremes(points):
    """Extreme points of the upper convex hull, by Andrew's monotone chain.

    ``points`` is a sequence of (x, y) with strictly increasing x.  Collinear
    interior points are not extreme.
    """
    out = []
    for p in points:
        while len(out) >= 2:
            (x1, y1), (x2, y2) = out[-2], out[-1]
            t1 = (x2 - x1) * (p[1] - y1)
            t2 = (y2 - y1) * (p[0] - x1)
            if t1 - t2 >= -1e-12 * max(1.0, abs(t1), abs(t2)):
                out.pop()
            else:
                break
        out.append(p)
    return out


def argmin_linear_scan(points, slope: float):
    """Minimizer of y - slope*x over all points (not just extremes)."""
    best = None
    for (x, y) in points:
        g = y - slope * x
        if best is None or g < best[2] - 1e-15:
            best = (x, y, g)
    return best[0], best[1]


def least_expected_cost(graph, arc_means):
    """Least expected cost-to-go per node, by Bellman-Ford relaxation."""
    cost = {i: float("inf") for i in graph.nodes}
    cost[graph.destination] = 0.0
    for _ in range(len(graph.nodes)):
        changed = False
        for a in graph.arcs:
            c = arc_means[a.key] + cost[a.head]
            if c < cost[a.tail] - 1e-15:
                cost[a.tail] = c
                changed = True
        if not changed:
            break
    return cost


def _below_zero_value(risk, node, k, delta_t, tree_cost):
    """Closed-form optimal value for budget rows below zero.

    With positive costs any arrival from a sub-zero budget overruns, so the
    on-time value is 0 and the expected-overrun value is the budget minus
    the least expected remaining cost.
    """
    if risk.kind is RiskKind.ON_TIME:
        return 0.0
    if risk.kind is RiskKind.EXPECTED_OVERRUN:
        return k * delta_t - tree_cost[node]
    raise NotImplementedError(risk.kind)


def dp_backward(graph, dists, risk, grid, tree_cost):
    """Backward induction with a full successor max at every row.

    Returns {node: {k: value}} on rows [0, k_T]; reads below zero use the
    closed form, which is exact for the two risks above.
    """
    dt = grid.delta_t
    u = {i: {} for i in graph.nodes}

    def read(j, k):
        if k < 0:
            return _below_zero_value(risk, j, k, dt, tree_cost)
        return u[j][k]

    for k in range(0, grid.k_T + 1):
        u[graph.destination][k] = risk.value(k * dt)
        for i in graph.nodes:
            if i == graph.destination:
                continue
            best = None
            for arc in graph.successors(i):
                d = dists[arc.key]
                val = 0.0
                for m, w in enumerate(d.weights):
                    if w != 0.0:
                        val += w * read(arc.head, k - d.offset_k - m)
                if best is None or val > best:
                    best = val
            u[i][k] = best
    return u


def robust_dp_backward(graph, sets, risk, grid, tree_cost, inner_value):
    """Worst-case backward induction; ``inner_value(aset, u_cells, k)`` solves
    the inner minimization over one ambiguity set by any trusted means."""
    dt = grid.delta_t
    u = {i: {} for i in graph.nodes}

    def read(j, k):
        if k < 0:
            return _below_zero_value(risk, j, k, dt, tree_cost)
        return u[j][k]

    for k in range(0, grid.k_T + 1):
        u[graph.destination][k] = risk.value(k * dt)
        for i in graph.nodes:
            if i == graph.destination:
                continue
            best = None
            for arc in graph.successors(i):
                aset = sets[arc.key]
                cells = np.array(
                    [read(arc.head, k - l) for l in range(aset.lo_k, aset.hi_k + 1)]
                )
                val = inner_value(aset, cells, k)
                if best is None or val > best:
                    best = val
            u[i][k] = best
    return u
