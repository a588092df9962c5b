"""(1 - eps)-approximate Partition.

The pipeline rounds the input into a few groups of distinct values from a
single dyadic range, approximates each group's subset sums additively, merges
the groups exactly and reads off the answer next to ``sigma / 2``.
"""

from __future__ import annotations

import heapq
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .convolution import sumset_1d
from .core import ApproxSet, IntegerMultiset, as_fraction
from .dense import (
    CalibrationError,
    DenseConstants,
    EmptyInterval,
    NoValidDivisor,
    find_divisor,
    next_subset_sum,
    try_verify,
)
from .sumset_approx import dc_interval


@dataclass
class Problem1Report:
    algorithm: str
    reason: str = ""


def normalize_eps(eps) -> Fraction:
    """Shrink ``eps`` to ``1/ceil(1/eps)`` so that ``1/eps`` is an integer."""
    eps = as_fraction(eps)
    if not (0 < eps < Fraction(1, 2)):
        raise ValueError("eps must lie in (0, 1/2)")
    return Fraction(1, math.ceil(1 / eps))


def _dense_sweep(xs: list[int], eps: Fraction, constants: Optional[DenseConstants],
                 report: Problem1Report) -> Optional[np.ndarray]:
    """Algorithm using the certified interval; ``None`` when its premises fail."""
    n = len(xs)
    sigma = sum(xs)
    half = sigma // 2
    try:
        dec = find_divisor(xs, constants)
        if dec.lam > sigma / 2 or dec.d > n:
            report.reason = "threshold above sigma/2 or divisor gap above n"
            return None
        if try_verify(dec) is False:
            return None
        c0 = next_subset_sum(dec, xs, dec.lam)
    except (NoValidDivisor, EmptyInterval, CalibrationError, ValueError) as exc:
        report.reason = f"dense premise failed: {exc}"
        return None
    delta = Fraction(n, n + c0)
    if delta >= Fraction(1, 2):
        report.reason = "multiplicative budget n/(n+lambda) too large"
        return None
    low = dc_interval(xs, delta, ell=math.ceil(1 / eps), cap=c0).elements
    low = low[low <= c0]
    chosen = [c0]
    cur = c0
    while True:
        start = max(cur + 1, cur + n + 2 - dec.d)
        if start > half:
            break
        try:
            cur = next_subset_sum(dec, xs, start)
        except ValueError:
            break
        chosen.append(cur)
    if chosen[-1] + n < half:
        report.reason = "certified sums stop short of sigma/2"
        return None
    A = np.unique(np.concatenate([low, np.array(chosen, dtype=np.int64)]))
    refl = np.maximum(sigma - A - n, 0)
    return np.unique(np.concatenate([A, refl]))


def solve_problem1(X: Sequence[int], eps, algorithm: str = "auto",
                   constants: Optional[DenseConstants] = None,
                   report: Optional[Problem1Report] = None) -> ApproxSet:
    """``n``-additive approximation of the subset sums of distinct ``X ⊆ [1/eps, 2/eps)``.

    ``algorithm`` is ``"dc"`` (divide and conquer only), ``"dense"`` (use the
    certified interval when its premises hold) or ``"auto"`` (cheaper of the
    two by predicted cost).  When the dense premises fail the divide and
    conquer result is returned; ``report.algorithm`` records what ran.
    """
    eps = as_fraction(eps)
    if (1 / eps).denominator != 1 or not (0 < eps < Fraction(1, 2)):
        raise ValueError("1/eps must be an integer and eps < 1/2")
    ell = int(1 / eps)
    xs = sorted(int(x) for x in X)
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("X must contain distinct integers")
    if xs and (xs[0] < ell or xs[-1] >= 2 * ell):
        raise ValueError(f"X must lie in [{ell}, {2 * ell})")
    report = report if report is not None else Problem1Report("dc")
    n = len(xs)
    if n == 0:
        report.algorithm = "dc"
        return ApproxSet(np.zeros(1, dtype=np.int64), Fraction(0), 0, None, 0)

    if algorithm == "auto":
        cost_dc = n + math.sqrt(n) * ell
        cost_dense = n + ell + ell**2 / n**1.5
        algorithm = "dense" if cost_dense < cost_dc else "dc"
    if algorithm == "dense":
        out = _dense_sweep(xs, eps, constants, report)
        if out is not None:
            report.algorithm = "dense"
            return ApproxSet(out, Fraction(0), n, None, n)
    elif algorithm != "dc":
        raise ValueError(f"unknown algorithm {algorithm!r}")
    report.algorithm = "dc"
    # s*eps/2 < (2n/eps)*(eps/2) = n, so half of eps gives an n-additive bound
    A = dc_interval(xs, eps / 2, ell=ell) if n > 1 else dc_interval(xs, eps / 2)
    return ApproxSet(A.elements, Fraction(0), n, None, n)


def reduce_multiplicity(S: Iterable[int], t: int) -> IntegerMultiset:
    """Same subset sums up to ``t`` with every multiplicity at most two.

    Whenever a value ``x`` occurs three or more times, pairs of copies are
    merged into ``2x`` (only while ``2x <= t``), keeping one or two copies.
    """
    counts = Counter(int(v) for v in S)
    if any(v < 1 for v in counts):
        raise ValueError("elements must be positive")
    heap = list(counts)
    heapq.heapify(heap)
    out: list[int] = []
    seen = set()
    while heap:
        x = heapq.heappop(heap)
        if x in seen:
            continue
        seen.add(x)
        c = counts[x]
        if c <= 2:
            out.extend([x] * c)
            continue
        keep = 1 if c % 2 else 2
        out.extend([x] * keep)
        if 2 * x <= t:
            counts[2 * x] += (c - keep) // 2
            if 2 * x not in seen:
                heapq.heappush(heap, 2 * x)
    return IntegerMultiset(out)


def greedy_small_opt(X: Iterable[int]) -> Optional[int]:
    """Exact OPT when one item is at least half the total; ``None`` otherwise.

    If every item is at most ``sigma/2`` a greedy packing already reaches
    ``sigma/4``, so the instance is in the regime the rest of the pipeline needs.
    """
    xs = list(X)
    if not xs:
        return 0
    sigma, top = sum(xs), max(xs)
    if 2 * top >= sigma:
        return sigma - top if 2 * top > sigma else top
    return None


def extract_answer(A, sigma: int, eps) -> int:
    """``ceil(min{a, t(1 - eps/2)})`` for the largest ``a <= t = sigma/2`` in ``A``.

    Elements of ``A`` may be rationals.  The ceiling is safe because OPT is an
    integer at least as large as the rational bound.
    """
    eps = as_fraction(eps)
    t = Fraction(sigma, 2)
    vals = [as_fraction(a) for a in (A.tolist() if hasattr(A, "tolist") else A)]
    below = [a for a in vals if a <= t]
    if not below:
        raise ValueError("A has no element below sigma/2")
    a = max(below)
    return math.ceil(min(a, t * (1 - eps / 2)))


@dataclass
class PartitionTrace:
    eps: Fraction
    q: int = 1
    shift: int = 0
    kappa: int = 1
    groups: int = 0
    g: int = 1
    algorithms: tuple = ()
    shortcut: bool = False


def solve_partition(X: Iterable[int], eps, algorithm: str = "auto",
                    constants: Optional[DenseConstants] = None,
                    trace: Optional[PartitionTrace] = None) -> int:
    """Return SOL with ``(1 - eps) OPT <= SOL <= OPT`` where OPT is the best sum ``<= sigma/2``."""
    xs = [int(x) for x in X]
    if any(x < 1 for x in xs):
        raise ValueError("values must be positive integers")
    eps = normalize_eps(eps)
    trace = trace if trace is not None else PartitionTrace(eps)
    trace.eps = eps
    if not xs:
        return 0
    small = greedy_small_opt(xs)
    if small is not None:
        trace.shortcut = True
        return small
    n, sigma = len(xs), sum(xs)
    inv = int(1 / eps)

    # round down to multiples of q = ceil(sigma eps / (100 n)); lose at most eps*sigma/100
    q = -(-sigma // (100 * n * inv))
    ys = [x // q for x in xs if x // q > 0]
    # one global power of two lifts every value to at least 100/eps
    L = 100 * inv
    shift = max(0, math.ceil(math.log2(L / min(ys))))
    while min(ys) << shift < L:
        shift += 1
    ys = [y << shift for y in ys]

    # y -> 2^k * z0 with z0 in [L, 2L): relative loss below eps/100
    zs = []
    for y in ys:
        k = (y // L).bit_length() - 1
        zs.append(((y >> k)) << k)
    Zp = reduce_multiplicity(zs, sum(zs))

    groups: dict[tuple[int, int], list[int]] = {}
    seen: Counter = Counter()
    for v in Zp:
        k = (v // L).bit_length() - 1
        key = (k, seen[v])
        seen[v] += 1
        groups.setdefault(key, []).append(v >> k)

    kappa = 4 * math.ceil(math.log2(n * inv))
    sigma_rat = Fraction(sigma << shift, q)  # sigma in the scaled units
    g = math.ceil(Fraction(1, 100 * kappa) * eps * sigma_rat)
    cap = math.floor(sigma_rat / 2 / g)
    eps_p = Fraction(eps, 100 * kappa)  # 1/eps_p = 100 kappa / eps
    acc = np.zeros(1, dtype=np.int64)
    algos = []
    for (k, _), z0s in sorted(groups.items()):
        rep = Problem1Report("dc")
        A = solve_problem1([kappa * z for z in sorted(z0s)], eps_p, algorithm, constants, rep)
        algos.append(rep.algorithm)
        # a * 2^k / kappa in scaled units, floored to multiples of g
        Ag = np.unique((A.elements.astype(object) * (1 << k)) // (kappa * g)).astype(np.int64)
        acc = sumset_1d(acc, Ag, cap=cap)
    trace.q, trace.shift, trace.kappa, trace.groups, trace.g = q, shift, kappa, len(groups), g
    trace.algorithms = tuple(algos)
    # acc is capped at t, so its largest element is the one the extraction needs
    best = Fraction(int(acc[-1]) * g * q, 1 << shift)
    return extract_answer([best], sigma, eps)
