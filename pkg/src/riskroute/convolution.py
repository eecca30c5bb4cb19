"""Convolution engines for the value recursion.

One budget row of the recursion is the dot product of an arc's pmf with a
contiguous window of the successor's value table.  Three interchangeable
engines compute it:

* :func:`convolve_pointwise` -- the direct sum, one output at a time;
* :func:`convolve_fft_block` -- all outputs of a block at once via FFT;
* :class:`StreamConvolver`   -- online: outputs emitted as soon as the
  inputs they need have been fed, with amortized O(log^2 P) work per value
  for a pmf spanning P grid cells.

All three agree to 1e-9; the solvers pick pointwise for short supports and
the stream for long ones.
"""

from __future__ import annotations

import numpy as np

from .errors import StateError
from .model import GridDistribution


def convolve_pointwise(u_window, dist: GridDistribution) -> float:
    """Single recursion output sum_l pmf_l * u[k - l].

    ``u_window`` holds successor values at consecutive budget rows, ascending,
    its last entry being the value at ``k - offset_k`` (the row reached by the
    cheapest support point).  Only the trailing P entries are read, P being
    the support cell count.  A shorter window raises IndexError.
    """
    w = np.asarray(u_window, dtype=float)
    p = dist.weights
    if w.shape[0] < p.shape[0]:
        raise IndexError(
            f"window of {w.shape[0]} rows cannot cover a support of {p.shape[0]} cells"
        )
    return float(np.dot(p[::-1], w[w.shape[0] - p.shape[0] :]))


def _next_pow2(n: int) -> int:
    m = 1
    while m < n:
        m <<= 1
    return m


def convolve_fft_block(u_block, dist: GridDistribution) -> np.ndarray:
    """All fully-covered recursion outputs of one value block.

    For a block ``u[a .. a+B-1]`` the result has length ``B - P + 1`` and its
    entry ``j`` equals the recursion output at row ``a + offset_k + P - 1 + j``
    (pointwise on the corresponding window).  Empty when the block is shorter
    than the support.  FFT length is the next power of two covering the full
    linear convolution.
    """
    w = np.asarray(u_block, dtype=float)
    p = dist.weights
    B, P = w.shape[0], p.shape[0]
    if B < P:
        return np.empty(0)
    n = _next_pow2(B + P - 1)
    out = np.fft.irfft(np.fft.rfft(w, n) * np.fft.rfft(p, n), n)
    return out[P - 1 : B]


class StreamConvolver:
    """Zero-delay block convolution of value rows against one arc pmf.

    Rows of the successor's table are fed in ascending order starting at
    ``start_index``.  Feeding row ``m`` makes every recursion output that
    needs no row beyond ``m`` available; those outputs are returned as
    ``(row, value)`` pairs.  The pmf is split into tap blocks of doubling
    length, each block convolved with matching input chunks the moment the
    chunk completes, so no output waits on future inputs and the amortized
    cost per fed row is O(log^2 P).

    Outputs start at row ``start_index + max_offset_k``: earlier rows would
    need table rows below the start of the feed.
    """

    _FFT_MIN = 16  # chunk length at which FFT beats the direct product

    def __init__(self, dist: GridDistribution, start_index: int = 0):
        h = dist.weights
        self._P = h.shape[0]
        self._o_min = dist.offset_k
        self._k0 = int(start_index)
        self._h0 = float(h[0])
        # tap blocks at offsets 1,2,4,...: block at ofs holds h[ofs:2*ofs] and is
        # convolved with input chunks of length ofs the moment a chunk completes;
        # every product then lands on rows strictly after the current one.
        self._segments = []
        ofs = 1
        while ofs < self._P:
            taps = h[ofs : min(2 * ofs, self._P)]
            out_len = ofs + taps.shape[0] - 1
            if ofs >= self._FFT_MIN:
                nfft = _next_pow2(out_len)
                self._segments.append((ofs, None, np.fft.rfft(taps, nfft), nfft, out_len))
            else:
                self._segments.append((ofs, taps, None, 0, out_len))
            ofs *= 2
        self._x: list[float] = []
        self._acc = np.zeros(64)
        self._t = 0  # next local input slot
        self.work = 0  # multiply-equivalent count, for complexity assertions

    def _grow(self, need: int):
        if need > self._acc.shape[0]:
            new = np.zeros(_next_pow2(need))
            new[: self._acc.shape[0]] = self._acc
            self._acc = new

    def feed(self, k: int, value: float) -> list[tuple[int, float]]:
        """Feed the table row ``k`` (must be exactly the next expected row)."""
        if k != self._k0 + self._t:
            raise StateError(
                f"out-of-order feed: expected row {self._k0 + self._t}, got {k}"
            )
        t = self._t
        self._x.append(float(value))
        self._grow(t + 1)
        self._acc[t] += self._h0 * value
        self.work += 1
        for ofs, taps, taps_fft, nfft, out_len in self._segments:
            if (t + 1) % ofs == 0:
                chunk = np.asarray(self._x[t + 1 - ofs : t + 1])
                if taps_fft is not None:
                    seg = np.fft.irfft(np.fft.rfft(chunk, nfft) * taps_fft, nfft)[:out_len]
                    self.work += int(2 * nfft * max(1, nfft.bit_length()))
                else:
                    seg = np.convolve(chunk, taps)
                    self.work += ofs * taps.shape[0]
                lo = t + 1  # == (t + 1 - ofs) + ofs
                self._grow(lo + out_len)
                self._acc[lo : lo + out_len] += seg
        self._t += 1
        if t >= self._P - 1:
            return [(self._k0 + t + self._o_min, float(self._acc[t]))]
        return []
