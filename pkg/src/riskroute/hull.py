"""Sliding-window hull of value rows, used by the robust inner problems.

For a window of points ``(x, u(x))`` with consecutive integer x, the
structure maintains the *extreme points*: vertices of the lower convex
envelope, i.e. the points not lying on or above a segment between two
others.  A dual constraint can only bind at an extreme point, and the
map ``extreme -> value - slope*coordinate`` is convex along the chain,
so feasibility checks reduce to binary searches here.

The window slides one step at a time.  Internally the window is split
into an older (left) and newer (right) segment.  The right segment grows
by ordinary monotone-chain insertion.  The left segment only ever loses
its oldest point; because it was built right-to-left, every insertion
recorded the vertices it displaced on a stack, and a deletion simply
restores the top stack.  When the left segment empties, the whole window
is rebuilt right-to-left and the cycle starts over: each point is pushed
O(1) times per cycle, so maintenance is amortized constant and queries
cost O(log W) after an O(log^2 W) merge of the two partial chains.

Coordinates: x values are exact integers (budget rows); y values may be
floats, ints, or Fractions.  Cross products are exact whenever both
operands are exact; with floats, magnitudes within 1e-12 of zero
relative to the term scale count as collinear, and collinear interior
points are never extreme.
"""

from __future__ import annotations

from collections import deque

from .errors import StateError

_COLLINEAR_RTOL = 1e-12


def cross_sign(o, a, b) -> int:
    """Sign of (a-o) x (b-o): +1 left turn, -1 right turn, 0 collinear.

    Exact when all y values are exact (int/Fraction); float inputs use a
    relative tolerance so that near-ties resolve the same way everywhere.
    """
    t1 = (a[0] - o[0]) * (b[1] - o[1])
    t2 = (a[1] - o[1]) * (b[0] - o[0])
    v = t1 - t2
    if isinstance(v, float):
        tol = _COLLINEAR_RTOL * max(1.0, abs(t1), abs(t2))
        if abs(v) <= tol:
            return 0
    elif v == 0:
        return 0
    return 1 if v > 0 else -1


class SlidingUpperHull:
    """Extreme points of a fixed-width window sliding over consecutive rows."""

    def __init__(self, window_size: int):
        if window_size < 1:
            raise ValueError("window_size must be positive")
        self._W = int(window_size)
        self._win: deque = deque(maxlen=self._W)
        self._filled = False
        self._Aleft: list = [None] * self._W
        self._Aright: list = [None] * self._W
        self._ll = self._W - 1
        self._lr = 0
        self._stacks: list[list] = []
        self._since = 0
        self._mi = -1  # last kept index in the left chain (merged view)
        self._mj = 0  # first kept index in the right chain (merged view)
        self._fallback: list | None = None
        self.pushes = 0
        self.pops = 0

    @classmethod
    def from_window(cls, values, start_x: int = 0) -> "SlidingUpperHull":
        h = cls(len(values))
        h.fill(values, start_x)
        return h

    @property
    def window_size(self) -> int:
        return self._W

    @property
    def max_x(self) -> int:
        if not self._filled:
            raise StateError("hull window not filled")
        return self._win[-1][0]

    def fill(self, values, start_x: int = 0):
        """Load the initial window: values at x = start_x, start_x+1, ..."""
        if len(values) != self._W:
            raise StateError(
                f"initial fill needs exactly {self._W} values, got {len(values)}"
            )
        self._win.clear()
        for i, v in enumerate(values):
            self._win.append((start_x + i, v))
        self._filled = True
        self._rebuild()
        self._merge()

    def advance(self, value):
        """Slide right by one row: drop the oldest point, append the new one."""
        if not self._filled:
            raise StateError("advance before the window was filled")
        new_pt = (self._win[-1][0] + 1, value)
        self._win.append(new_pt)  # deque drops the leftmost automatically
        if self._since == self._W:
            self._rebuild()
        else:
            # left side: remove the oldest point, restore what it displaced
            self._ll += 1
            stk = self._stacks.pop()
            while stk:
                self._Aleft[self._ll] = stk.pop()
                self._ll -= 1
                self.pushes += 1
            # right side: plain monotone-chain step
            A, lr = self._Aright, self._lr
            while lr >= 2 and cross_sign(A[lr - 2], A[lr - 1], new_pt) <= 0:
                lr -= 1
                self.pops += 1
            A[lr] = new_pt
            self._lr = lr + 1
            self.pushes += 1
            self._since += 1
        self._merge()

    def _rebuild(self):
        """Phase 1: rebuild the left structure from the whole window, right to left."""
        W = self._W
        A = self._Aleft
        ll = W - 1
        stacks = []
        for p in reversed(self._win):
            stk = []
            while ll <= W - 3 and cross_sign(A[ll + 2], A[ll + 1], p) >= 0:
                stk.append(A[ll + 1])
                ll += 1
                self.pops += 1
            stacks.append(stk)
            A[ll] = p
            ll -= 1
            self.pushes += 1
        self._ll = ll
        self._stacks = stacks
        self._lr = 0
        self._since = 0

    # -- merged extreme-point view ------------------------------------------

    def _left_len(self) -> int:
        return self._W - 1 - self._ll

    def _L(self, i):
        return self._Aleft[self._ll + 1 + i]

    def _R(self, j):
        return self._Aright[j]

    def _merge(self):
        """Locate the bridge between the left and right chains (O(log^2))."""
        self._fallback = None
        nl, nr = self._left_len(), self._lr
        if nl == 0 or nr == 0:
            self._mi, self._mj = nl - 1, 0
            return
        L, R = self._L, self._R

        def tangent_j(P) -> int:
            # vertex of the right chain touched by the lower tangent from P
            lo, hi = 0, nr - 1
            while lo < hi:
                mid = (lo + hi) // 2
                if cross_sign(P, R(mid), R(mid + 1)) > 0:
                    hi = mid
                else:
                    lo = mid + 1
            return lo

        lo, hi = 0, nl - 1
        while lo <= hi:
            i = (lo + hi) // 2
            j = tangent_j(L(i))
            if i > 0 and cross_sign(L(i - 1), L(i), R(j)) <= 0:
                hi = i - 1  # L(i) falls inside the bridge: move left
            elif i < nl - 1 and cross_sign(L(i), R(j), L(i + 1)) <= 0:
                lo = i + 1  # next left vertex dips under the bridge: move right
            else:
                self._mi, self._mj = i, j
                return
        # numerically degenerate bridge: fall back to a full recompute
        pts = [L(i) for i in range(nl)] + [R(j) for j in range(nr)]
        chain: list = []
        for p in pts:
            while len(chain) >= 2 and cross_sign(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        self._fallback = chain

    @property
    def n_extremes(self) -> int:
        if not self._filled:
            raise StateError("hull window not filled")
        if self._fallback is not None:
            return len(self._fallback)
        nl, nr = self._left_len(), self._lr
        if nl == 0:
            return nr
        if nr == 0:
            return nl
        return (self._mi + 1) + (nr - self._mj)

    def extreme(self, t: int):
        """t-th extreme point, ascending x; O(1)."""
        if self._fallback is not None:
            return self._fallback[t]
        nl, nr = self._left_len(), self._lr
        if nl == 0:
            return self._R(t)
        if nr == 0:
            return self._L(t)
        if t <= self._mi:
            return self._L(t)
        return self._R(self._mj + t - self._mi - 1)

    def extremes(self) -> list:
        """All extreme points, ascending x (materialized; for tests and small windows)."""
        return [self.extreme(t) for t in range(self.n_extremes)]

    def argmin_linear_index(self, slope) -> int:
        """Index of the extreme point minimizing ``y - slope*x`` (binary search)."""
        n = self.n_extremes
        lo, hi = 0, n - 1
        g = lambda t: (lambda p: p[1] - slope * p[0])(self.extreme(t))
        while lo < hi:
            mid = (lo + hi) // 2
            if g(mid + 1) > g(mid):
                hi = mid
            else:
                lo = mid + 1
        return lo

    def argmin_linear(self, slope):
        """Extreme point minimizing ``y - slope*x``."""
        return self.extreme(self.argmin_linear_index(slope))
