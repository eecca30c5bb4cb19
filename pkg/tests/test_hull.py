import numpy as np
import pytest

import oracles
from riskroute.errors import StateError
from riskroute.hull import SlidingUpperHull, cross_sign


def _sequence(rng, kind, n):
    if kind == "random":
        return rng.standard_normal(n) * 10
    if kind == "convex":
        x = np.arange(n, dtype=float)
        return (x - n / 2) ** 2 / n + rng.standard_normal(n) * 1e-9
    if kind == "concave":
        x = np.arange(n, dtype=float)
        return -((x - n / 2) ** 2) / n
    if kind == "alternating":
        return np.where(np.arange(n) % 2 == 0, 1.0, -1.0) * (1 + 0.01 * np.arange(n))
    if kind == "constant":
        return np.zeros(n)
    raise AssertionError(kind)


@pytest.mark.parametrize("kind", ["random", "convex", "concave", "alternating", "constant"])
@pytest.mark.parametrize("W", [2, 3, 7, 32])
def test_extremes_match_recomputation(kind, W):
    rng = np.random.default_rng(hash((kind, W)) % 2**32)
    n = 160
    vals = _sequence(rng, kind, n)
    hull = SlidingUpperHull.from_window(list(vals[:W]), start_x=0)
    for t in range(W, n + 1):
        window = [(t - W + j, float(vals[t - W + j])) for j in range(W)]
        expect = oracles.upper_extremes(window)
        got = hull.extremes()
        assert got == expect, (kind, W, t)
        assert hull.n_extremes == len(expect)
        for idx in range(hull.n_extremes):
            assert hull.extreme(idx) == expect[idx]
        if t < n:
            hull.advance(float(vals[t]))


def test_argmin_linear_matches_full_scan():
    rng = np.random.default_rng(11)
    for _ in range(40):
        W = int(rng.integers(2, 40))
        vals = rng.standard_normal(W + 60) * 5
        hull = SlidingUpperHull.from_window(list(vals[:W]), start_x=0)
        for t in range(W, W + 60):
            window = [(t - W + j, float(vals[t - W + j])) for j in range(W)]
            for slope in (-3.0, -0.5, 0.0, 0.5, 3.0):
                x, y = hull.argmin_linear(slope)
                rx, ry = oracles.argmin_linear_scan(window, slope)
                assert abs((y - slope * x) - (ry - slope * rx)) < 1e-9
            hull.advance(float(vals[t]))


def test_protocol_errors():
    hull = SlidingUpperHull(4)
    with pytest.raises(StateError):
        hull.advance(1.0)
    with pytest.raises(StateError):
        hull.extremes()
    hull.fill([1.0, 2.0, 3.0, 4.0], start_x=0)
    assert hull.n_extremes == 2  # collinear interior points are not extreme


def test_cross_sign_collinearity_tolerance():
    assert cross_sign((0, 0.0), (1, 1.0), (2, 2.0)) == 0
    assert cross_sign((0, 0.0), (1, 1.0), (2, 2.0 + 1e-6)) > 0
    assert cross_sign((0, 0.0), (1, 1.0), (2, 2.0 - 1e-6)) < 0
    # huge coordinates: relative tolerance keeps near-collinear stable
    assert cross_sign((0, 1e12), (1, 1e12), (2, 1e12)) == 0


def test_single_point_window():
    hull = SlidingUpperHull.from_window([5.0], start_x=3)
    assert hull.extremes() == [(3, 5.0)]
    hull.advance(7.0)
    assert hull.extremes() == [(4, 7.0)]
