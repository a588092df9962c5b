"""Approximate subset-sum merging for items drawn from a short interval.

Every set produced here is a one-sided approximation.  Each element is at
most some true subset sum, and each true sum up to the cap has an element
at most a factor ``1 - delta`` (plus ``Delta``) below it.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .convolution import sumset_1d, sumset_2d
from .core import ApproxSet, as_fraction


def _check_params(ell: int, d: int, delta: Fraction) -> None:
    if ell < 1:
        raise ValueError("ell must be a positive integer")
    if d < 0 or d > ell:
        raise ValueError("need 0 <= d <= ell")
    if not (0 <= delta < Fraction(1, 2)):
        raise ValueError("delta must lie in [0, 1/2)")


def _check_inputs(A1: ApproxSet, A2: ApproxSet, delta: Fraction) -> None:
    for A in (A1, A2):
        if A.delta > delta:
            raise ValueError(f"input quality delta={A.delta} exceeds the declared delta={delta}")
        if len(A) == 0 or A.elements[0] != 0:
            raise ValueError("an approximate subset-sum set must contain 0")


def additive_size_bound(ell: int, d: int, t: int, Delta: int) -> tuple[int, Fraction]:
    """The two predicted output sizes ``(ceil(t/Delta), (t/ell) * ceil(t d / (ell Delta)))``."""
    z1 = -(-t // Delta)
    z2 = Fraction(t, ell) * math.ceil(Fraction(t * d, ell * Delta))
    return z1, z2


def merge_additive(A1: ApproxSet, A2: ApproxSet, ell: int, d: int, t: int, Delta: int, delta,
                   algorithm: str = "auto") -> ApproxSet:
    """Merge two ``(1-delta)`` approximations into a ``(1-delta, Delta-1)`` one up to ``t``.

    ``algorithm`` is ``"auto"``, ``"1d"``, ``"2d"`` or ``"degenerate"``; auto
    picks the degenerate rounding when ``delta >= d/(ell+d)`` and item counts
    are known, otherwise the variant with the smaller predicted size.
    """
    delta = as_fraction(delta)
    _check_params(ell, d, delta)
    if Delta < 1 or t < ell:
        raise ValueError("need Delta >= 1 and t >= ell")
    _check_inputs(A1, A2, delta)
    count = A1.count + A2.count
    extra = A1.Delta + A2.Delta

    if algorithm == "auto":
        if count > 0 and delta * (ell + d) >= d:
            algorithm = "degenerate"
        else:
            z1, z2 = additive_size_bound(ell, d, t, Delta)
            algorithm = "2d" if z2 < z1 else "1d"

    if algorithm == "degenerate":
        # every item rounds down to ell without breaking the (1-delta) factor
        elems = ell * np.arange(0, min(count, t // ell) + 1, dtype=np.int64)
        return ApproxSet(elems, delta, extra, t, count)

    bar = -(-Delta // 2)
    a1 = A1.elements[A1.elements <= t]
    a2 = A2.elements[A2.elements <= t]
    if algorithm == "1d":
        s = sumset_1d(a1 // bar, a2 // bar, cap=t // bar) * bar
    elif algorithm == "2d":
        D = (d * t) // ell
        pts = []
        for a in (a1, a2):
            k = np.maximum(0, -((D - a) // ell))  # ceil((a - D) / ell), clamped
            b = a - k * ell
            pts.append(np.stack([k, b // bar], axis=1))
        P = sumset_2d(pts[0], pts[1])
        s = np.maximum(P[:, 0] * ell + P[:, 1] * bar, 0)
        s = s[s <= t]
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return ApproxSet(s, delta, extra + Delta - 1, t, count)


def merge_multiplicative(A1: ApproxSet, A2: ApproxSet, ell: int, d: int, T: int, delta, delta0,
                         algorithm: str = "auto") -> ApproxSet:
    """``(1 - delta - delta0)`` approximation of the merged sums up to ``T``.

    Runs the additive merge once per power of two ``r`` with cap ``6r`` and
    additive slack ``ceil(delta0 * r)``, keeping only outputs in ``[r, 6r]``.
    """
    delta, delta0 = as_fraction(delta), as_fraction(delta0)
    _check_params(ell, d, delta)
    if not (0 < delta0 < Fraction(1, 2)):
        raise ValueError("delta0 must lie in (0, 1/2)")
    if T < ell:
        raise ValueError("need T >= ell")
    _check_inputs(A1, A2, delta)
    parts = [np.zeros(1, dtype=np.int64)]
    r = 1
    while 6 * r < ell:
        r *= 2
    while r <= T:
        Ar = merge_additive(A1, A2, ell, d, 6 * r, math.ceil(delta0 * r), delta, algorithm)
        e = Ar.elements
        parts.append(e[(e >= r) & (e <= 6 * r)])
        r *= 2
    elems = np.unique(np.concatenate(parts))
    return ApproxSet(elems, delta + delta0, A1.Delta + A2.Delta, T, A1.count + A2.count)


def merge_unbounded(A1: ApproxSet, A2: ApproxSet, ell: int, d: int, n: Optional[int], delta, delta0,
                    algorithm: str = "auto") -> ApproxSet:
    """Multiplicative merge with the cap ``T = n (ell + d)`` that bounds every subset sum."""
    if n is None:
        n = A1.count + A2.count
    T = max(n * (ell + d), ell)
    out = merge_multiplicative(A1, A2, ell, d, T, delta, delta0, algorithm)
    return ApproxSet(out.elements, out.delta, out.Delta, None, out.count)


def leaf_set(x: int) -> ApproxSet:
    return ApproxSet(np.array([0, x], dtype=np.int64), Fraction(0), 0, None, 1)


def dc_interval(X: Sequence[int], delta, ell: Optional[int] = None, algorithm: str = "auto",
                cap: Optional[int] = None) -> ApproxSet:
    """``(1-delta)`` approximation of all subset sums of distinct ``X ⊆ [ell, 2 ell]``.

    Items are merged along a balanced binary tree; each level costs
    ``delta0 = delta / ceil(log2 n)`` of the multiplicative budget.  With
    ``cap`` every merge stops at ``cap`` and the result approximates the sums
    up to ``cap`` only.
    """
    xs = [int(x) for x in X]
    if not xs:
        return ApproxSet(np.zeros(1, dtype=np.int64), Fraction(0), 0, None, 0)
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("X must be sorted and distinct")
    ell = xs[0] if ell is None else int(ell)
    if xs[0] < ell or xs[-1] > 2 * ell or ell < 1:
        raise ValueError("X must lie in [ell, 2 ell]")
    delta = as_fraction(delta)
    n = len(xs)
    if n == 1:
        return leaf_set(xs[0])
    if not (0 < delta < Fraction(1, 2)):
        raise ValueError("delta must lie in (0, 1/2)")
    delta0 = delta / math.ceil(math.log2(n))

    def build(lo: int, hi: int) -> tuple[ApproxSet, int]:
        if lo == hi:
            return leaf_set(xs[lo]), 0
        mid = (lo + hi) // 2
        left, hl = build(lo, mid)
        right, hr = build(mid + 1, hi)
        height = max(hl, hr)
        node_delta = delta0 * height
        if cap is None:
            out = merge_unbounded(left, right, xs[lo], xs[hi] - xs[lo], hi - lo + 1,
                                  node_delta, delta0, algorithm)
        else:
            T = max(min((hi - lo + 1) * xs[hi], cap), xs[lo])
            out = merge_multiplicative(left, right, xs[lo], xs[hi] - xs[lo], T, node_delta, delta0, algorithm)
        return out, height + 1

    out, _ = build(0, n - 1)
    return ApproxSet(out.elements, delta, out.Delta, cap, n)
