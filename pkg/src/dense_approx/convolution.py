"""Low-level kernels: exact sumsets, (max,+)/(min,+) convolutions and SMAWK merging.

Boolean sumsets are exact.  Dense inputs go through a number-theoretic
transform modulo 998244353, sparse inputs through an outer sum.  Because a
pair count never reaches the modulus, a nonzero residue is the same as a
nonzero count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .core import StepFunction, align_units, as_fraction, round_step_down

MOD = 998244353
PRIMITIVE_ROOT = 3
MAX_TRANSFORM = 1 << 23  # largest power of two dividing MOD - 1
INF = math.inf


class TransformSizeError(ValueError):
    """The requested transform does not fit the NTT modulus."""


class Point2D(NamedTuple):
    k: int
    j: int


# ---------------------------------------------------------------------------
# Number-theoretic transform
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _ntt_plan(n: int, inverse: bool) -> tuple[np.ndarray, np.ndarray]:
    bits = n.bit_length() - 1
    idx = np.arange(n, dtype=np.int64)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    w = pow(PRIMITIVE_ROOT, (MOD - 1) // n, MOD)
    if inverse:
        w = pow(w, MOD - 2, MOD)
    tw = np.ones(max(1, n // 2), dtype=np.uint64)
    filled = 1
    step = w
    while filled < n // 2:
        take = min(filled, n // 2 - filled)
        tw[filled:filled + take] = tw[:take] * np.uint64(step) % np.uint64(MOD)
        filled += take
        step = step * step % MOD
    return rev, tw


def _ntt(a: np.ndarray, inverse: bool = False) -> np.ndarray:
    n = a.size
    rev, tw = _ntt_plan(n, inverse)
    a = a[rev].astype(np.uint64)
    m = np.uint64(MOD)
    length = 2
    while length <= n:
        half = length // 2
        blocks = a.reshape(-1, length)
        w = tw[:: n // length][:half]
        u = blocks[:, :half]
        v = blocks[:, half:] * w % m
        a = np.concatenate(((u + v) % m, (u + m - v) % m), axis=1).reshape(-1)
        length *= 2
    return a


def _support_product(fa: np.ndarray, fb: np.ndarray, size: int) -> np.ndarray:
    """Indices where the convolution of two 0/1 vectors is nonzero."""
    n = 1
    while n < size:
        n *= 2
    if n > MAX_TRANSFORM:
        raise TransformSizeError(f"transform of length {n} exceeds {MAX_TRANSFORM}")
    pa = np.zeros(n, dtype=np.uint64)
    pb = np.zeros(n, dtype=np.uint64)
    pa[: fa.size] = fa
    pb[: fb.size] = fb
    prod = _ntt(pa) * _ntt(pb) % np.uint64(MOD)
    # the missing 1/n factor does not change which residues are nonzero
    out = _ntt(prod, inverse=True)[:size]
    return np.flatnonzero(out).astype(np.int64)


# ---------------------------------------------------------------------------
# Sumsets
# ---------------------------------------------------------------------------


def _as_sorted_unique(A) -> np.ndarray:
    arr = np.unique(np.asarray(list(A) if not isinstance(A, np.ndarray) else A, dtype=np.int64))
    return arr


def sumset_1d(A, B, cap: Optional[int] = None, method: str = "auto") -> np.ndarray:
    """``(A + B) ∩ [0, cap]`` as a sorted int64 array (``cap=None`` means no cap)."""
    a = _as_sorted_unique(A)
    b = _as_sorted_unique(B)
    if a.size == 0 or b.size == 0:
        return np.zeros(0, dtype=np.int64)
    if a[0] < 0 or b[0] < 0:
        raise ValueError("sumset_1d expects nonnegative integers")
    if cap is not None:
        a = a[a <= cap]
        b = b[b <= cap]
        if a.size == 0 or b.size == 0:
            return np.zeros(0, dtype=np.int64)
    hi = int(a[-1] + b[-1])
    if cap is not None:
        hi = min(hi, int(cap))
    if method == "auto":
        method = "sparse" if a.size * b.size <= 4 * (hi + 1) + 4096 else "ntt"
    if method == "sparse":
        out = np.unique(np.add.outer(a, b).reshape(-1))
    elif method == "ntt":
        fa = np.zeros(int(a[-1]) + 1, dtype=np.uint64)
        fb = np.zeros(int(b[-1]) + 1, dtype=np.uint64)
        fa[a] = 1
        fb[b] = 1
        out = _support_product(fa, fb, int(a[-1] + b[-1]) + 1)
    else:
        raise ValueError(f"unknown method {method!r}")
    if cap is not None:
        out = out[out <= cap]
    return out


def _as_points(P) -> np.ndarray:
    arr = np.asarray([tuple(p) for p in P] if not isinstance(P, np.ndarray) else P, dtype=np.int64)
    return arr.reshape(-1, 2)


def sumset_2d(A1, A2, method: str = "auto") -> np.ndarray:
    """Exact 2D sumset ``{(k1+k2, j1+j2)}`` as an ``(m, 2)`` array in lexicographic order.

    Coordinates may be negative; both axes are shifted to start at zero and
    the grid is embedded row-major with a width that leaves no wraparound.
    """
    p = _as_points(A1)
    q = _as_points(A2)
    if p.shape[0] == 0 or q.shape[0] == 0:
        return np.zeros((0, 2), dtype=np.int64)
    pmin, qmin = p.min(axis=0), q.min(axis=0)
    ps, qs = p - pmin, q - qmin
    pmax, qmax = ps.max(axis=0), qs.max(axis=0)
    width = int(pmax[1] + qmax[1] + 1)
    ea = ps[:, 0] * width + ps[:, 1]
    eb = qs[:, 0] * width + qs[:, 1]
    sums = sumset_1d(ea, eb, method=method)
    out = np.stack([sums // width, sums % width], axis=1) + (pmin + qmin)
    return out


# ---------------------------------------------------------------------------
# Step-function convolutions
# ---------------------------------------------------------------------------


def _upper_staircase(xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Collapse candidate (x, y) points into the monotone staircase they induce."""
    order = np.lexsort((ys, xs))
    xs, ys = xs[order], ys[order]
    ys = np.maximum.accumulate(ys)
    last = np.ones(xs.size, dtype=bool)
    last[:-1] = xs[1:] != xs[:-1]
    xs, ys = xs[last], ys[last]
    keep = np.ones(xs.size, dtype=bool)
    keep[1:] = ys[1:] > ys[:-1]
    return xs[keep], ys[keep]


def maxplus_merge(f: StepFunction, g: StepFunction, max_x: Optional[int] = None) -> StepFunction:
    """Exact ``(f ⊕ g)(x) = max_{x'} f(x') + g(x - x')``, optionally restricted to ``x <= max_x``."""
    (f, g), unit = align_units([f.normalized(), g.normalized()])
    fx, fy, gx, gy = f.xs, f.ys, g.xs, g.ys
    if max_x is not None:
        fm, gm = fx <= max_x, gx <= max_x
        fx, fy, gx, gy = fx[fm], fy[fm], gx[gm], gy[gm]
    xs = np.add.outer(fx, gx).reshape(-1)
    ys = np.add.outer(fy, gy).reshape(-1)
    if max_x is not None:
        m = xs <= max_x
        xs, ys = xs[m], ys[m]
    xs, ys = _upper_staircase(xs, ys)
    return StepFunction(xs, ys, unit).normalized()


def merge_many_stepfns(fs: Sequence[StepFunction], eps, A=None, B=None,
                       max_x: Optional[int] = None) -> StepFunction:
    """Balanced divide-and-conquer (max,+) merge with rounding after every merge.

    ``eps = 0`` is the exact mode.  ``A`` and ``B`` bound the nonzero range of
    the inputs; when given they are checked, they do not change the result.
    Every leaf-to-root path crosses ``ceil(log2 m)`` roundings, so the output
    is at least ``(1 - eps) ** ceil(log2 m)`` times the exact convolution.  A
    single input is rounded once.
    """
    if not fs:
        raise ValueError("need at least one step function")
    eps = as_fraction(eps)
    if A is not None or B is not None:
        for f in fs:
            nz = [y for _, y in f.steps if y > 0]
            if nz and ((A is not None and nz[0] < as_fraction(A)) or (B is not None and nz[-1] > as_fraction(B))):
                raise ValueError("input values fall outside [A, B]")

    def rnd(h: StepFunction) -> StepFunction:
        return round_step_down(h, eps) if eps > 0 else h.normalized()

    layer = [f.normalized() if max_x is None else f.normalized().truncated(max_x) for f in fs]
    if len(layer) == 1:
        return rnd(layer[0])
    while len(layer) > 1:
        nxt = []
        for i in range(0, len(layer) - 1, 2):
            nxt.append(rnd(maxplus_merge(layer[i], layer[i + 1], max_x)))
        if len(layer) % 2:
            nxt.append(layer[-1])
        layer = nxt
    return layer[0]


# ---------------------------------------------------------------------------
# (min,+) on value-indexed weight arrays
# ---------------------------------------------------------------------------


def minplus_naive(a: Sequence[float], b: Sequence[float]) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.full(a.size + b.size - 1, INF)
    for i in range(a.size):
        for j in range(b.size):
            out[i + j] = min(out[i + j], a[i] + b[j])
    return out


def minplus_windowed(a, b, window: Optional[float] = None) -> np.ndarray:
    """``c[k] = min a[i] + b[j]`` over ``i + j = k`` and ``|i - j| <= window``.

    ``window=None`` (or infinity) is the unrestricted convolution.  The work
    is one vectorised pass per allowed offset ``j - i``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        return np.zeros(0)
    out = np.full(a.size + b.size - 1, INF)
    lo, hi = -(a.size - 1), b.size - 1
    if window is not None and window != INF:
        w = int(window)
        lo, hi = max(lo, -w), min(hi, w)
    for s in range(lo, hi + 1):
        i0 = max(0, -s)
        i1 = min(a.size, b.size - s)
        if i1 <= i0:
            continue
        i = np.arange(i0, i1)
        k = 2 * i + s
        out[k] = np.minimum(out[k], a[i0:i1] + b[i0 + s:i1 + s])
    return out


def suffix_min(a: np.ndarray) -> np.ndarray:
    return np.minimum.accumulate(a[::-1])[::-1]


def stepfn_to_weights(f: StepFunction, grid: Fraction, count: int) -> np.ndarray:
    """``G[u]`` = least ``x`` with ``f(x) >= u * grid`` for ``u < count``; ``inf`` if unreachable."""
    f = f.normalized()
    ratio = f.unit / Fraction(grid)
    # floor(y * ratio) as integers
    levels = (f.ys.astype(object) * ratio.numerator) // ratio.denominator
    levels = np.asarray(levels, dtype=np.int64)
    u = np.arange(count, dtype=np.int64)
    idx = np.searchsorted(levels, u, side="left")
    out = np.full(count, INF)
    ok = idx < levels.size
    out[ok] = f.xs[idx[ok]]
    return out


def weights_to_stepfn(G: np.ndarray, grid: Fraction, max_x: Optional[int] = None) -> StepFunction:
    """Inverse of :func:`stepfn_to_weights`: ``f(x) = grid * max{u : G[u] <= x}``."""
    G = suffix_min(np.asarray(G, dtype=np.float64))
    fin = np.isfinite(G)
    if max_x is not None:
        fin &= G <= max_x
    u = np.flatnonzero(fin).astype(np.int64)
    if u.size == 0:
        return StepFunction.zero(Fraction(grid))
    xs = G[u].astype(np.int64)
    xs, ys = _upper_staircase(xs, u)
    return StepFunction(xs, ys, Fraction(grid)).normalized()


# ---------------------------------------------------------------------------
# SMAWK and uniform functions
# ---------------------------------------------------------------------------


def smawk(rows: Sequence[int], cols: Sequence[int], lookup) -> dict[int, int]:
    """Row minima (leftmost argmin) of a totally monotone matrix given by ``lookup(r, c)``."""
    result: dict[int, int] = {}

    def solve(rows, cols):
        if not rows:
            return
        stack: list[int] = []
        for c in cols:
            while stack:
                r = rows[len(stack) - 1]
                if lookup(r, stack[-1]) <= lookup(r, c):
                    break
                stack.pop()
            if len(stack) < len(rows):
                stack.append(c)
        odd = rows[1::2]
        solve(odd, stack)
        pos = {c: i for i, c in enumerate(stack)}
        start = 0
        for i in range(0, len(rows), 2):
            r = rows[i]
            stop = pos[result[rows[i + 1]]] if i + 1 < len(rows) else len(stack) - 1
            best, bval = stack[start], lookup(r, stack[start])
            for k in range(start + 1, stop + 1):
                v = lookup(r, stack[k])
                if v < bval:
                    best, bval = stack[k], v
            result[r] = best
            start = stop

    solve(list(rows), list(cols))
    return result


@dataclass(frozen=True)
class UniformFunction:
    """``p``-uniform step function: value ``k * p`` from weight ``breakpoints[k-1]`` on."""

    p: Fraction
    breakpoints: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "p", as_fraction(self.p))
        bps = tuple(int(b) for b in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        if self.p <= 0:
            raise ValueError("uniform step height must be positive")
        gaps = np.diff(np.array((0,) + bps, dtype=np.int64))
        if np.any(gaps < 0):
            raise ValueError("breakpoints must be nondecreasing and nonnegative")
        if np.any(np.diff(gaps) < 0):
            raise ValueError("uniform function is not pseudo-concave")

    @classmethod
    def from_weights(cls, p, weights: Iterable[int]) -> "UniformFunction":
        ws = sorted(int(w) for w in weights)
        return cls(as_fraction(p), tuple(np.cumsum(ws, dtype=np.int64).tolist()))

    def __len__(self) -> int:
        return len(self.breakpoints)

    def to_stepfn(self) -> StepFunction:
        xs = np.array((0,) + self.breakpoints, dtype=np.int64)
        ys = np.arange(xs.size, dtype=np.int64)
        xs, ys = _upper_staircase(xs, ys)
        return StepFunction(xs, ys, self.p).normalized()


def _convex_ext(b: np.ndarray, k: int, big: float) -> float:
    l = b.size - 1
    if k < 0:
        return -k * big
    if k > l:
        return b[l] + (k - l) * big
    return b[k]


def _merge_uniform_into(G: np.ndarray, c: int, prefix: np.ndarray, use_smawk: bool) -> np.ndarray:
    """Exact ``G ⊕ f`` on a value grid where ``f`` takes ``k*c`` at weight ``prefix[k]``.

    ``G[v]`` is the least weight reaching value ``>= v``; ``prefix`` is convex.
    """
    V = G.size - 1
    l = prefix.size - 1
    if not use_smawk:
        out = G.copy()
        v = np.arange(V + 1)
        for k in range(1, l + 1):
            idx = np.maximum(v - c * k, 0)
            out = np.minimum(out, G[idx] + prefix[k])
            if c * k >= V:
                break
        return out
    out = np.empty_like(G)
    finite = G[np.isfinite(G)]
    big = float(prefix[-1] + (finite.max() if finite.size else 0) + 1)
    for r in range(min(c, V + 1)):
        H = np.concatenate(([0.0], G[r::c]))
        H = np.where(np.isfinite(H), H, big * (H.size + l + 2))
        nrows = H.size - 1
        rows = list(range(nrows))
        cols = list(range(H.size))

        def lookup(jr, jc, H=H):
            return H[jc] + _convex_ext(prefix, jr + 1 - jc, big)

        arg = smawk(rows, cols, lookup)
        vals = np.array([lookup(j, arg[j]) for j in rows])
        out[r::c] = vals
    # penalised candidates are >= big; genuine sums stay below it
    out[out >= big] = INF
    return np.minimum(out, G)


def delta_multiple_set(eps, delta) -> list[Fraction]:
    """``{delta * (1+eps)**i : 0 <= i <= r+1}`` with ``r = ceil(log_{1+eps}(1 + 2 delta))``."""
    eps, delta = as_fraction(eps), as_fraction(delta)
    if not (0 < eps < delta < Fraction(1, 2)):
        raise ValueError("need 0 < eps < delta < 1/2")
    target = 1 + 2 * delta
    r, acc = 0, Fraction(1)
    while acc < target:
        acc *= 1 + eps
        r += 1
    return [delta * (1 + eps) ** i for i in range(r + 2)]


def round_to_delta_multiple(p, deltas: Sequence[Fraction]) -> tuple[Fraction, Fraction]:
    """Largest multiple of some element of ``deltas`` not exceeding ``p``; returns (value, divisor)."""
    p = as_fraction(p)
    best, div = Fraction(0), deltas[0]
    for a in deltas:
        v = a * math.floor(p / a)
        if v > best:
            best, div = v, a
    return best, div


def smawk_uniform_merge(fs: Sequence[UniformFunction], DeltaSet: Sequence, B=None,
                        smawk_threshold: int = 64, force_smawk: Optional[bool] = None,
                        max_x: Optional[int] = None, grid=None) -> StepFunction:
    """Approximate ``min{f_1 ⊕ ... ⊕ f_m, B}`` for uniform pseudo-concave inputs.

    Functions sharing a divisor ``a`` are merged exactly on the ``a``-grid.
    Group results are rounded down to multiples of ``min(DeltaSet)`` and
    merged by (min,+), so the additive deficit is below ``#groups * min(DeltaSet)``.
    ``grid`` replaces ``min(DeltaSet)`` as the rounding grid when given.
    With a single group the result is exact up to the cap.
    """
    deltas = sorted({as_fraction(a) for a in DeltaSet})
    if not deltas or deltas[0] <= 0:
        raise ValueError("DeltaSet must contain positive rationals")
    if not fs:
        return StepFunction.zero()
    capB = None if B is None else as_fraction(B)
    if capB is not None and capB <= 0:
        return StepFunction.zero()

    groups: dict[Fraction, list[tuple[int, UniformFunction]]] = {}
    for f in fs:
        for a in reversed(deltas):
            q = f.p / a
            if q.denominator == 1:
                groups.setdefault(a, []).append((int(q), f))
                break
        else:
            raise ValueError(f"step height {f.p} is not a multiple of any divisor")

    results: list[tuple[Fraction, np.ndarray]] = []
    for a, members in sorted(groups.items()):
        total = sum(c * len(f) for c, f in members)
        V = total if capB is None else min(total, math.ceil(capB / a))
        G = np.full(V + 1, INF)
        G[0] = 0.0
        for c, f in members:
            prefix = np.array((0,) + f.breakpoints, dtype=np.float64)
            if max_x is not None:
                prefix = prefix[prefix <= max_x]
            if prefix.size <= 1:
                continue
            use = force_smawk if force_smawk is not None else prefix.size - 1 > smawk_threshold
            G = _merge_uniform_into(G, c, prefix, use)
        results.append((a, G))

    if len(results) == 1:
        a, G = results[0]
        f = weights_to_stepfn(G, a, max_x)
        return f.capped(capB) if capB is not None else f

    grid = deltas[0] if grid is None else as_fraction(grid)
    if grid <= 0:
        raise ValueError("grid must be positive")
    U = None if capB is None else math.floor(capB / grid)
    rounded = []
    for a, G in results:
        # value v*a rounds down to floor(v*a/grid) grid units
        v = np.arange(G.size, dtype=object)
        levels = np.asarray((v * (a / grid).numerator) // (a / grid).denominator, dtype=np.int64)
        top = int(levels[-1]) if U is None else min(int(levels[-1]), U)
        Gq = np.full(top + 1, INF)
        lv = np.minimum(levels, top)
        np.minimum.at(Gq, lv, G)
        rounded.append(suffix_min(Gq))
    # the running result lives either as weights (array) or as a step function
    acc_w: Optional[np.ndarray] = rounded[0]
    acc_f: Optional[StepFunction] = None
    for Gq in rounded[1:]:
        if acc_f is None:
            acc_f = weights_to_stepfn(acc_w, grid, max_x)
        g = weights_to_stepfn(Gq, grid, max_x)
        size_w = (int(acc_f.ys[-1]) + 1) * Gq.size
        steps = acc_f.complexity * g.complexity
        # both routes compute the same exact merge on the grid; pick the cheaper
        if steps <= max(size_w, 1 << 16) and steps <= 1 << 24:
            acc_f = maxplus_merge(acc_f, g, max_x)
            if U is not None:
                acc_f = acc_f.capped(U * grid)
            acc_w = None
        else:
            if acc_w is None:
                acc_w = stepfn_to_weights(acc_f, grid, int(acc_f.ys[-1]) + 1)
            acc_w = minplus_windowed(acc_w, Gq)
            if U is not None:
                acc_w = acc_w[: U + 1]
            acc_w = suffix_min(acc_w)
            acc_f = None
    if acc_f is not None:
        return acc_f
    return weights_to_stepfn(acc_w, grid, max_x)
