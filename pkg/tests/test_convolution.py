import numpy as np
import pytest

import oracles
from riskroute.convolution import (
    StreamConvolver,
    convolve_fft_block,
    convolve_pointwise,
)
from riskroute.errors import StateError
from riskroute.model import GridDistribution


def _random_dist(rng, max_cells=64):
    off = int(rng.integers(1, 5))
    n = int(rng.integers(1, max_cells + 1))
    w = rng.random(n)
    w[rng.random(n) < 0.3] = 0.0  # interior holes
    w[0] += 1e-3
    w[-1] += 1e-3
    w /= w.sum()
    return GridDistribution(1.0, off, w)


def test_pointwise_matches_reference():
    rng = np.random.default_rng(0)
    for _ in range(60):
        d = _random_dist(rng)
        lo = -5
        hi = 40
        u = rng.standard_normal(hi - lo + 1)
        u_at = lambda k: u[k - lo]
        for k in range(lo + d.max_offset_k, hi + d.offset_k + 1):
            window = u[k - d.max_offset_k - lo : k - d.offset_k - lo + 1]
            got = convolve_pointwise(window, d)
            ref = oracles.convolve_reference(u_at, d, k)
            assert abs(got - ref) < 1e-9 * max(1.0, abs(ref))


def test_fft_block_matches_reference():
    rng = np.random.default_rng(1)
    for _ in range(40):
        d = _random_dist(rng)
        a = int(rng.integers(-10, 10))
        n_in = int(rng.integers(d.n_cells, d.n_cells + 60))
        u = rng.standard_normal(n_in)
        u_at = lambda k: u[k - a]
        out = convolve_fft_block(u, d)
        assert len(out) == n_in - d.n_cells + 1
        for j, v in enumerate(out):
            k = a + d.offset_k + d.n_cells - 1 + j
            ref = oracles.convolve_reference(u_at, d, k)
            assert abs(v - ref) < 1e-9 * max(1.0, abs(ref))


def test_stream_matches_pointwise_row_by_row():
    rng = np.random.default_rng(2)
    for _ in range(30):
        d = _random_dist(rng)
        start = int(rng.integers(-8, 8))
        sc = StreamConvolver(d, start)
        n = int(rng.integers(d.n_cells + 1, d.n_cells + 80))
        u = rng.standard_normal(n)
        got = {}
        for t, val in enumerate(u):
            for row, out in sc.feed(start + t, float(val)):
                got[row] = out
        first = start + d.max_offset_k
        last = start + n - 1 + d.offset_k
        assert sorted(got) == list(range(first, last + 1))
        u_at = lambda k: u[k - start]
        for row, v in got.items():
            ref = oracles.convolve_reference(u_at, d, row)
            assert abs(v - ref) < 1e-9 * max(1.0, abs(ref))


def test_stream_rejects_out_of_order_feed():
    d = GridDistribution(1.0, 1, [0.5, 0.5])
    sc = StreamConvolver(d, 0)
    sc.feed(0, 1.0)
    with pytest.raises(StateError):
        sc.feed(2, 1.0)


def test_stream_work_scales_polylog():
    # a naive scheme pays P multiplies per row; the stream is O(log^2 P)
    import math

    rng = np.random.default_rng(3)
    for P, n in ((256, 2048), (1024, 4096)):
        d = GridDistribution(1.0, 1, np.full(P, 1 / P))
        sc = StreamConvolver(d, 0)
        for t in range(n):
            sc.feed(t, float(rng.standard_normal()))
        per_input = sc.work / n
        assert per_input < 3.0 * math.log2(P) ** 2
        assert per_input < P
