"""(1 - eps)-approximate 0/1 Knapsack.

Profits are split into dyadic bands rescaled to ``[1, 2)`` and rounded to the
``eps`` grid.  Inside a band, small profit levels are handled by the greedy
exchange decomposition (random partitioning core, few-distinct-profits
solver, capped solver for low-efficiency items) and large ones by plain
greedy.  Every function produced here is a pointwise underestimate of the
exact profit function of its items, so candidates combine by pointwise max.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .convolution import (
    UniformFunction,
    delta_multiple_set,
    merge_many_stepfns,
    minplus_windowed,
    round_to_delta_multiple,
    smawk_uniform_merge,
    stepfn_to_weights,
    weights_to_stepfn,
)
from .core import KnapsackInstance, StepFunction, as_fraction, pointwise_max, round_step_down
from .dense import DenseConstants

Item = tuple[Fraction, int]  # (profit, weight)


def _efficiency_key(it: Item):
    p, w = it
    # zero-weight items come first; ties broken by larger profit, then weight
    return (0, -p, w) if w == 0 else (1, -(p / w), -p, w)


def sort_by_efficiency(items: Sequence[Item]) -> list[Item]:
    return sorted(((as_fraction(p), int(w)) for p, w in items), key=_efficiency_key)


@dataclass
class ReducedKnapsack:
    """Items of one band, profits on the ``eps`` grid in ``[1, 2)``, sorted by efficiency."""

    items: list[Item]
    eps: Fraction
    scale: Fraction = Fraction(1)  # original profit ~ scale * rescaled profit

    def __post_init__(self):
        self.eps = as_fraction(self.eps)
        if (1 / self.eps).denominator != 1:
            raise ValueError("1/eps must be an integer")
        self.items = sort_by_efficiency(self.items)
        for p, _ in self.items:
            if not (1 <= p < 2) or (p / self.eps).denominator != 1:
                raise ValueError(f"profit {p} is not an eps-multiple in [1, 2)")

    def __len__(self) -> int:
        return len(self.items)

    @property
    def profits(self) -> list[Fraction]:
        return [p for p, _ in self.items]


@dataclass(frozen=True)
class MergePlan:
    scales: tuple[Fraction, ...]
    merge_eps: Fraction
    discarded: int
    greedy_from: Fraction  # greedy is accurate enough from this (rescaled) profit on


@dataclass(frozen=True)
class GreedyParams:
    m: int
    Delta: int
    B: Fraction
    c: Fraction

    @classmethod
    def build(cls, m: int, eps, c=None) -> "GreedyParams":
        eps = as_fraction(eps)
        c = as_fraction(DenseConstants.empirical().Clambda if c is None else c)
        inv = 1 / eps
        # largest D with D**8 <= (1/eps)**5, i.e. floor(eps ** (-5/8)) computed exactly
        D = max(1, math.floor(float(inv) ** 0.625))
        while Fraction(D + 1) ** 8 <= inv**5:
            D += 1
        while D > 1 and Fraction(D) ** 8 > inv**5:
            D -= 1
        return cls(m, D, 9 * c / (eps * D), c)


@dataclass(frozen=True)
class RandomPartitionParams:
    Delta1: int
    Delta0: int
    seed: int = 0
    C: float = 4.0
    extra_exponent: float = 0.0  # the 2^{c sqrt(log 1/eps)} factor, off by default

    @classmethod
    def build(cls, n: int, eps, seed: int = 0, C: float = 4.0, extra_exponent: float = 0.0) -> "RandomPartitionParams":
        eps = float(as_fraction(eps))
        d1 = max(1, math.isqrt(max(n - 1, 0)) + 1) if n > 1 else 1
        target = n**0.7 * eps**0.4 * 2 ** (extra_exponent * math.sqrt(math.log2(1 / eps)))
        d0 = 1
        while d0 < target:
            d0 *= 2
        return cls(d1, d0, seed, C, extra_exponent)


# ---------------------------------------------------------------------------
# reduction
# ---------------------------------------------------------------------------


def reduce_knapsack(raw: KnapsackInstance, eps) -> tuple[list[ReducedKnapsack], MergePlan]:
    """Drop negligible profits, split the rest into dyadic bands and round to the ``eps`` grid.

    Items with ``p <= (eps/n) max p`` lose at most ``eps * max p <= eps * OPT``
    in total.  Band ``j`` holds profits in ``[2^j, 2^{j+1})``; after dividing
    by ``2^j`` each profit is floored to a multiple of ``eps``, costing at
    most a factor ``1 - eps``.
    """
    eps = as_fraction(eps)
    if (1 / eps).denominator != 1 or not (0 < eps < Fraction(1, 2)):
        raise ValueError("need 1/eps integer and eps < 1/2")
    items = list(raw.items)
    for it in items:
        if it.profit <= 0 or it.weight < 0:
            raise ValueError("profits must be positive and weights nonnegative")
        if it.weight > raw.capacity:
            raise ValueError("every weight must fit the capacity")
    n = len(items)
    if n == 0:
        return [], MergePlan((), eps, 0, 2 / eps)
    pmax = max(it.profit for it in items)
    keep = [it for it in items if it.profit > eps / n * pmax]
    bands: dict[int, list[Item]] = {}
    for it in keep:
        p = it.profit
        j = p.numerator.bit_length() - p.denominator.bit_length()
        if Fraction(2) ** j > p:
            j -= 1
        elif Fraction(2) ** (j + 1) <= p:
            j += 1
        scale = Fraction(2) ** j
        q = math.floor(p / scale / eps) * eps
        bands.setdefault(j, []).append((q, it.weight))
    out = [ReducedKnapsack(v, eps, Fraction(2) ** j) for j, v in sorted(bands.items())]
    levels = math.ceil(math.log2(len(out))) if len(out) > 1 else 1
    plan = MergePlan(tuple(b.scale for b in out), eps / levels, n - len(keep), 2 / eps)
    return out, plan


# ---------------------------------------------------------------------------
# simple solvers
# ---------------------------------------------------------------------------


def greedy_profit(items: Sequence[Item], B=None) -> StepFunction:
    """Greedy prefix function in efficiency order.

    Each prefix is a feasible packing, so the result never exceeds the exact
    profit function, and it falls short by at most ``max p``.  ``B`` only
    documents the profit level from which that gap is small; it does not
    change the result.
    """
    its = sort_by_efficiency(items)
    if not its:
        return StepFunction.zero()
    if B is not None and as_fraction(B) < 0:
        raise ValueError("B must be nonnegative")
    xs = np.cumsum([w for _, w in its]).tolist()
    ps = np.cumsum(np.array([p for p, _ in its], dtype=object)).tolist()
    return _from_points([0] + xs, [Fraction(0)] + ps)


def _from_points(xs: Sequence[int], ys: Sequence[Fraction]) -> StepFunction:
    """Step function through nondecreasing points; repeated x keep the largest value."""
    last: dict[int, Fraction] = {}
    for x, y in zip(xs, ys):
        last[int(x)] = max(y, last.get(int(x), y))
    return StepFunction.from_steps(sorted(last.items())).normalized()


def _uniform_functions(items: Sequence[Item]) -> list[UniformFunction]:
    by_p: dict[Fraction, list[int]] = {}
    for p, w in items:
        by_p.setdefault(as_fraction(p), []).append(int(w))
    return [UniformFunction.from_weights(p, ws) for p, ws in sorted(by_p.items())]


def _exact_on_grid(items: Sequence[Item], eps: Fraction, B=None) -> StepFunction:
    """Exact ``min(f_I, B)`` for profits that are multiples of ``eps``.

    Every profit is a multiple of ``eps``, so a single divisor class on the
    ``eps`` grid holds all same-profit uniform functions and the merge is exact.
    """
    if not items:
        return StepFunction.zero()
    return smawk_uniform_merge(_uniform_functions(items), [eps], B=B)


def approx_up_to_B(items: Sequence[Item], B, eps) -> StepFunction:
    """``(1 - eps)`` approximation of ``min(f_I, B)``."""
    eps = as_fraction(eps)
    B = as_fraction(B)
    if B <= 0 or not items:
        return StepFunction.zero()
    return round_step_down(_exact_on_grid(items, eps, B), eps)


def few_profits_solver(items: Sequence[Item], eps, B=None) -> StepFunction:
    """``(1 - eps)`` approximation of ``f_I`` (capped at ``B``) when few distinct profits occur.

    Each distinct profit gives a uniform pseudo-concave function (greedy by
    weight); they are merged on the ``eps`` grid and rounded once.
    """
    eps = as_fraction(eps)
    if not items:
        return StepFunction.zero()
    return round_step_down(_exact_on_grid(items, eps, B), eps)


# ---------------------------------------------------------------------------
# diversity
# ---------------------------------------------------------------------------


def _diversity(profits: Sequence[Fraction], i: int, budget: int) -> tuple[int, list[int]]:
    """``D(i)`` and a minimizer ``J`` by removing least frequent values while the budget lasts."""
    counts = Counter(profits[:i])
    removed: set = set()
    used = 0
    for v, c in sorted(counts.items(), key=lambda kv: (kv[1], kv[0])):
        if used + c > budget:
            break
        used += c
        removed.add(v)
    J = [j for j in range(i) if profits[j] in removed]
    return len(counts) - len(removed), J


def diversity_index(profits: Sequence, m: int, Delta: int) -> tuple[int, list[int], int]:
    """Largest ``i`` with ``D(i) <= Delta``, the minimizer ``J`` (item indices) and ``D(i)``.

    ``D`` is nondecreasing in ``i``, so a binary search over prefixes suffices.
    """
    ps = [as_fraction(p) for p in profits]
    n = len(ps)
    if n == 0:
        return 0, [], 0
    budget = 2 * m
    lo, hi = 1, n
    if _diversity(ps, 1, budget)[0] > Delta:
        lo = 0
    else:
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if _diversity(ps, mid, budget)[0] <= Delta:
                lo = mid
            else:
                hi = mid - 1
    D, J = _diversity(ps, lo, budget)
    return lo, J, D


# ---------------------------------------------------------------------------
# random partitioning core
# ---------------------------------------------------------------------------


def partx_threshold(k: int, Delta0: int) -> int:
    """Part-size bound that every part meets with probability at least 3/4.

    Bernstein's inequality with a union bound over ``Delta0`` parts: each
    part exceeds ``mu + t`` with probability at most ``1/(4 Delta0)``.
    """
    if Delta0 <= 1:
        return k
    mu = k / Delta0
    L = math.log(4 * Delta0)
    t = L / 3 + math.sqrt(L * L / 9 + 2 * mu * L)
    return max(1, math.floor(mu + t))


def partx_event(k: int, Delta0: int, rng: np.random.Generator, trials: int = 1) -> np.ndarray:
    """Vectorised partX check: does a uniform assignment keep every part small?"""
    if Delta0 <= 1:
        return np.ones(trials, dtype=bool)
    assign = rng.integers(0, Delta0, size=(trials, k))
    sizes = np.zeros((trials, Delta0), dtype=np.int64)
    np.add.at(sizes, (np.repeat(np.arange(trials), k), assign.reshape(-1)), 1)
    return sizes.max(axis=1) <= partx_threshold(k, Delta0)


def window_radius(n: int, i: int, Delta1: int, Delta0: int, C: float = 4.0) -> float:
    """``u = C n sqrt(2^i / (Delta1 Delta0)) log n`` (natural log, at least 1)."""
    return C * n * math.sqrt(2**i / (Delta1 * Delta0)) * max(math.log(n), 1.0)


def window_event(R: Sequence[float], Delta0: int, i: int, u: float, rng: np.random.Generator,
                 trials: int = 1) -> np.ndarray:
    """Vectorised containment check for one level-``i`` merge.

    ``R[g]`` is the profit a fixed solution takes from group ``g``.  Groups
    are assigned to parts uniformly; the event holds when the solution's
    profit inside the two sibling blocks of ``2^i`` parts differs by at most ``u``.
    """
    R = np.asarray(R, dtype=np.float64)
    if Delta0 < 2 ** (i + 1):
        raise ValueError("level too high for Delta0 parts")
    assign = rng.integers(0, Delta0, size=(trials, R.size))
    block = 1 << i
    s1 = np.where(assign < block, R, 0.0).sum(axis=1)
    s2 = np.where((assign >= block) & (assign < 2 * block), R, 0.0).sum(axis=1)
    return np.abs(s1 - s2) <= u


def _split(members: list, size: int) -> list[list]:
    if len(members) <= size:
        return [members]
    mid = len(members) // 2
    return _split(members[:mid], size) + _split(members[mid:], size)


def _as_fraction_grid(x: float) -> Fraction:
    """A rational not above ``x`` (grids may only shrink)."""
    f = Fraction(x).limit_denominator(1 << 20)
    while f > x:
        f -= Fraction(1, 1 << 20)
    return f


@dataclass
class CoreTrace:
    Delta1: int = 1
    Delta0: int = 1
    pieces: int = 0
    retries: list = field(default_factory=list)
    rounds: int = 0


def random_partition_core(items: Sequence[Item], eps, params: Optional[RandomPartitionParams] = None,
                          B=None, rounds: int = 20, trace: Optional[CoreTrace] = None) -> StepFunction:
    """``n * eps``-additive underestimate of ``f_I`` (capped at ``B``) for profits in ``[1, 2]``.

    The budget is split in quarters: rounding profits to multiples of a small
    divisor set, per-part rounding inside the uniform merges, and the grid
    roundings of the merge tree.  The windowed merges only lose accuracy when
    the random partition is unbalanced; independent rounds combined by
    pointwise max make that unlikely.
    """
    eps = as_fraction(eps)
    its = [(as_fraction(p), int(w)) for p, w in items]
    n = len(its)
    trace = trace if trace is not None else CoreTrace()
    capB = None if B is None else as_fraction(B)
    if n == 0 or (capB is not None and capB <= 0):
        return StepFunction.zero()
    if n == 1:
        p, w = its[0]
        f = _from_points([0, w], [Fraction(0), p])
        return f.capped(capB) if capB is not None else f
    params = params or RandomPartitionParams.build(n, eps)
    d1, d0 = params.Delta1, params.Delta0
    trace.Delta1, trace.Delta0 = d1, d0

    # (1) profits down to multiples of the divisor set: each item loses < 2 eps_r
    eps_r = eps / 8
    delta = min(d1 * eps_r, Fraction(1, 4))
    delta = max(delta, 2 * eps_r)
    deltas = delta_multiple_set(eps_r, delta)
    groups: dict[Fraction, list[Item]] = {}
    for p, w in its:
        q, a = round_to_delta_multiple(p, deltas)
        groups.setdefault(a, []).append((q, w))
    size = -(-n // d1)
    pieces = []
    for a in sorted(groups):
        members = sorted(groups[a], key=lambda t: (t[1], t[0]))
        pieces.extend(_split(members, size))
    k = len(pieces)
    trace.pieces = k

    levels = d0.bit_length() - 1
    S = sum(2 ** (-0.1 * i) for i in range(levels)) or 1.0
    eps_t = eps / 4 / Fraction(S).limit_denominator(1 << 20) * Fraction(999, 1000)

    deterministic = d0 == 1 or k == 1
    R = 1 if deterministic else max(1, rounds)
    trace.rounds = R
    children = np.random.SeedSequence(params.seed).spawn(R)
    best: Optional[StepFunction] = None
    thr = partx_threshold(k, d0)
    for child in children:
        rng = np.random.default_rng(child)
        for attempt in range(33):
            assign = rng.integers(0, d0, size=k) if d0 > 1 else np.zeros(k, dtype=np.int64)
            if np.bincount(assign, minlength=d0).max() <= thr:
                break
        trace.retries.append(attempt)
        f = _core_round(pieces, assign, deltas, d1, d0, n, eps, eps_t, capB, params.C)
        best = f if best is None else pointwise_max([best, f])
    return best


def _divisor_class(p: Fraction, deltas: Sequence[Fraction]) -> Fraction:
    # the class the uniform merge files a step height under: its largest divisor
    for a in sorted(deltas, reverse=True):
        if (p / a).denominator == 1:
            return a
    raise ValueError(f"{p} is not a multiple of any divisor")


def _core_round(pieces, assign, deltas, d1, d0, n, eps, eps_t, capB, C) -> StepFunction:
    parts: list[list] = [[] for _ in range(d0)]
    for j, piece in zip(assign.tolist(), pieces):
        parts[j].append(piece)
    # (2) rounding between divisor classes: total deficit below n eps / 4
    classes = sum(len({_divisor_class(p, deltas) for piece in part for p, _ in piece})
                  for part in parts if part)
    grid = min(min(deltas), n * eps / (4 * max(classes, 1)))
    fs = []
    for part in parts:
        members = [it for piece in part for it in piece]
        if not members:
            fs.append(StepFunction.zero())
            continue
        fs.append(smawk_uniform_merge(_uniform_functions(members), deltas, B=capB, grid=grid))
    # (3) merge tree; level i rounds to delta_i and keeps pairs within the window
    level = 0
    while len(fs) > 1:
        di = _as_fraction_grid(2 ** (0.9 * level) * n * float(eps_t) / d0)
        u = window_radius(n, level, d1, d0, C)
        win = math.ceil(u / di)
        nxt = []
        for a, b in zip(fs[0::2], fs[1::2]):
            top = max(a.max_value, b.max_value)
            count = math.floor(top / di) + 1
            Ga = stepfn_to_weights(a, di, count)
            Gb = stepfn_to_weights(b, di, count)
            G = minplus_windowed(Ga, Gb, win)
            if capB is not None:
                G = G[: math.floor(capB / di) + 1]
            nxt.append(weights_to_stepfn(G, di))
        fs = nxt
        level += 1
    return fs[0]


# ---------------------------------------------------------------------------
# greedy exchange
# ---------------------------------------------------------------------------


@dataclass
class ExchangeTrace:
    i: int = 0
    J: list = field(default_factory=list)
    D: int = 0
    params: Optional[GreedyParams] = None


def greedy_exchange_solve(items: Sequence[Item], m: int, eps, rounds: int = 20, seed: int = 0,
                          c=None, trace: Optional[ExchangeTrace] = None) -> StepFunction:
    """``m * eps``-additive underestimate of ``f_I`` up to ``2m``.

    Budget: the exchange argument, the core, the few-profits part and the
    capped part each get ``eps/16`` (at most ``2m eps/16`` each on values up
    to ``2m``) and the final three-way merge rounds twice at ``eps/32``.
    """
    eps = as_fraction(eps)
    its = sort_by_efficiency(items)
    n = len(its)
    if m < 1:
        raise ValueError("m must be positive")
    if n == 0:
        return StepFunction.zero()
    sub = eps / 16
    params = GreedyParams.build(m, sub, c)
    trace = trace if trace is not None else ExchangeTrace()
    profits = [p for p, _ in its]
    i, J, D = diversity_index(profits, m, params.Delta)
    trace.i, trace.J, trace.D, trace.params = i, J, D, params
    Jset = set(J)
    part1 = [its[j] for j in J]
    part2 = [its[j] for j in range(i) if j not in Jset]
    part3 = its[i:]
    cap = Fraction(2 * m)
    f1 = random_partition_core(part1, sub, RandomPartitionParams.build(len(part1), sub, seed), B=cap,
                               rounds=rounds)
    f2 = few_profits_solver(part2, sub, B=cap)
    f3 = approx_up_to_B(part3, min(params.B, cap), sub)
    out = merge_many_stepfns([f1, f2, f3], eps / 32)
    return out.capped(cap)


# ---------------------------------------------------------------------------
# end to end
# ---------------------------------------------------------------------------


@dataclass
class KnapsackTrace:
    eps: Fraction = Fraction(0)
    bands: int = 0
    discarded: int = 0
    ms: list = field(default_factory=list)
    complexity: int = 0


def band_function(band: ReducedKnapsack, rounds: int = 20, seed: int = 0, ms: Optional[list] = None) -> StepFunction:
    """``(1 - eps)`` underestimate of the band's profit function (rescaled units).

    Values in ``[m, 2m)`` come from the greedy exchange run for ``m``; values
    of at least ``2/eps`` from plain greedy, which is off by at most 2.
    """
    e = band.eps
    cands = [greedy_profit(band.items)]
    total = sum(band.profits)
    m = 1
    idx = 0
    while m <= min(total, 2 / e):
        s = int(np.random.SeedSequence([seed, idx]).generate_state(1)[0])
        cands.append(greedy_exchange_solve(band.items, m, e, rounds=rounds, seed=s))
        if ms is not None:
            ms.append(m)
        m *= 2
        idx += 1
    return pointwise_max(cands)


def solve_knapsack(raw: KnapsackInstance, eps, rounds: int = 20, seed: int = 0,
                   trace: Optional[KnapsackTrace] = None) -> Fraction:
    """Return SOL with ``(1 - eps) OPT <= SOL <= OPT``.

    Internally ``e = 1/ceil(4/eps)``: discarding, profit rounding, the band
    approximations and the band merge each cost at most a factor ``1 - e``.
    """
    eps = as_fraction(eps)
    if not (0 < eps < Fraction(1, 2)):
        raise ValueError("eps must lie in (0, 1/2)")
    trace = trace if trace is not None else KnapsackTrace()
    e = Fraction(1, math.ceil(4 / eps))
    trace.eps = e
    W = raw.capacity
    fit = [it for it in raw.items if it.weight <= W and it.profit > 0]
    if not fit:
        return Fraction(0)
    bands, plan = reduce_knapsack(KnapsackInstance(fit, W), e)
    trace.bands, trace.discarded = len(bands), plan.discarded
    fs = []
    for bi, band in enumerate(bands):
        s = int(np.random.SeedSequence([seed, bi]).generate_state(1)[0])
        ms: list = []
        f = band_function(band, rounds, s, ms).truncated(W)
        trace.ms.append(ms)
        fs.append(f.scaled(band.scale))
    if len(fs) == 1:
        total = fs[0]
    else:
        total = merge_many_stepfns(fs, plan.merge_eps, max_x=W)
    trace.complexity = total.complexity
    return total(W)
