"""Shared domain types, exact oracles and step-function utilities.

Profit values are kept exact.  A :class:`StepFunction` stores its values as
integers measured in a rational ``unit`` so that kernels can run on int64
arrays without losing exactness.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Iterable, Optional, Sequence

import numpy as np

DEFAULT_ORACLE_BUDGET = 10**7
BUDGET_ENV_VAR = "DENSE_APPROX_ORACLE_BUDGET"

Number = int | Fraction


class OracleBudgetExceeded(RuntimeError):
    """Raised when an exact oracle would need more DP cells than allowed."""


def oracle_budget() -> int:
    raw = os.environ.get(BUDGET_ENV_VAR)
    if raw is None or raw.strip() == "":
        return DEFAULT_ORACLE_BUDGET
    return int(float(raw))


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # decimal repr, not the binary expansion
        return Fraction(repr(value))
    return Fraction(value)


def _lcm(a: int, b: int) -> int:
    return a // math.gcd(a, b) * b


def common_unit(units: Iterable[Fraction]) -> Fraction:
    """Largest rational ``u`` such that every given unit is an integer multiple of ``u``."""
    units = [Fraction(u) for u in units]
    if not units:
        return Fraction(1)
    den = reduce(_lcm, (u.denominator for u in units), 1)
    num = reduce(math.gcd, (u.numerator * (den // u.denominator) for u in units), 0)
    return Fraction(num or 1, den)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntegerMultiset:
    values: tuple[int, ...]

    def __init__(self, values: Iterable[int] = ()):
        vals = tuple(sorted(int(v) for v in values))
        if vals and vals[0] < 1:
            raise ValueError("multiset elements must be positive integers")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @property
    def total(self) -> int:
        return sum(self.values)


@dataclass(frozen=True)
class KnapsackItem:
    profit: Fraction
    weight: int

    def __init__(self, profit, weight: int):
        p = as_fraction(profit)
        w = int(weight)
        if p < 0 or w < 0:
            raise ValueError("profit and weight must be nonnegative")
        object.__setattr__(self, "profit", p)
        object.__setattr__(self, "weight", w)


@dataclass(frozen=True)
class KnapsackInstance:
    items: tuple[KnapsackItem, ...]
    capacity: int

    def __init__(self, items: Iterable, capacity: int):
        its = []
        for it in items:
            if isinstance(it, KnapsackItem):
                its.append(it)
            elif isinstance(it, dict):
                its.append(KnapsackItem(it["p"], it["w"]))
            else:
                p, w = it
                its.append(KnapsackItem(p, w))
        if int(capacity) < 0:
            raise ValueError("capacity must be nonnegative")
        object.__setattr__(self, "items", tuple(its))
        object.__setattr__(self, "capacity", int(capacity))

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class ApproxQuality:
    """The ``(1 - delta, Delta)`` contract of an approximate set, up to ``cap``."""

    delta: Fraction = Fraction(0)
    Delta: int = 0
    cap: Optional[int] = None  # None means unbounded

    def __post_init__(self):
        if not (0 <= self.delta < 1):
            raise ValueError("delta must lie in [0, 1)")
        if self.Delta < 0:
            raise ValueError("Delta must be nonnegative")

    def compose(self, other: "ApproxQuality") -> "ApproxQuality":
        # additive errors add under a sumset, the multiplicative factor is shared
        caps = [c for c in (self.cap, other.cap) if c is not None]
        return ApproxQuality(max(self.delta, other.delta), self.Delta + other.Delta,
                             min(caps) if caps else None)


@dataclass(frozen=True, eq=False)
class ApproxSet:
    """Sorted distinct nonnegative integers plus the quality they were built with.

    ``count`` is the number of source items whose subset sums are approximated;
    it is needed by the degenerate rounding branch of the additive merge.
    """

    elements: np.ndarray
    delta: Fraction = Fraction(0)
    Delta: int = 0
    cap: Optional[int] = None
    count: int = 0

    def __post_init__(self):
        arr = np.unique(np.asarray(self.elements, dtype=np.int64))
        if arr.size and arr[0] < 0:
            raise ValueError("ApproxSet elements must be nonnegative")
        if self.cap is not None and arr.size and arr[-1] > self.cap:
            arr = arr[arr <= self.cap]
        arr.setflags(write=False)
        object.__setattr__(self, "elements", arr)
        object.__setattr__(self, "delta", Fraction(self.delta))

    @property
    def quality(self) -> ApproxQuality:
        return ApproxQuality(self.delta, self.Delta, self.cap)

    def __len__(self) -> int:
        return int(self.elements.size)

    def __iter__(self):
        return (int(v) for v in self.elements)

    def __contains__(self, v) -> bool:
        i = np.searchsorted(self.elements, v)
        return bool(i < self.elements.size and self.elements[i] == v)

    def tolist(self) -> list[int]:
        return [int(v) for v in self.elements]


# ---------------------------------------------------------------------------
# Step functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Monotone nondecreasing step function on ``x >= 0``.

    Value on ``[xs[k], xs[k+1])`` is ``ys[k] * unit``; the value before the
    first breakpoint is 0.  Steps are stored as given; :meth:`normalized`
    coalesces redundant ones.
    """

    xs: np.ndarray
    ys: np.ndarray
    unit: Fraction = Fraction(1)

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=np.int64).reshape(-1)
        ys = np.asarray(self.ys, dtype=np.int64).reshape(-1)
        if xs.shape != ys.shape:
            raise ValueError("xs and ys must have equal length")
        if xs.size:
            if xs[0] < 0 or ys[0] < 0:
                raise ValueError("steps must be nonnegative")
            if np.any(np.diff(xs) <= 0):
                raise ValueError("x-breakpoints must be strictly increasing")
            if np.any(np.diff(ys) < 0):
                raise ValueError("step function must be nondecreasing")
        unit = Fraction(self.unit)
        if unit <= 0:
            raise ValueError("unit must be positive")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "unit", unit)

    # construction -----------------------------------------------------------

    @classmethod
    def from_steps(cls, steps: Iterable[tuple[int, Number]], unit: Optional[Fraction] = None) -> "StepFunction":
        steps = [(int(x), as_fraction(y)) for x, y in steps]
        if unit is None:
            unit = common_unit([y for _, y in steps if y != 0] or [Fraction(1)])
        unit = Fraction(unit)
        ys = []
        for _, y in steps:
            q = y / unit
            if q.denominator != 1:
                raise ValueError(f"value {y} is not a multiple of unit {unit}")
            ys.append(int(q))
        return cls(np.array([x for x, _ in steps], dtype=np.int64), np.array(ys, dtype=np.int64), unit)

    @classmethod
    def zero(cls, unit: Fraction = Fraction(1)) -> "StepFunction":
        return cls(np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64), unit)

    @classmethod
    def constant(cls, value: Number) -> "StepFunction":
        return cls.from_steps([(0, value)])

    # queries ----------------------------------------------------------------

    @property
    def steps(self) -> list[tuple[int, Fraction]]:
        return [(int(x), int(y) * self.unit) for x, y in zip(self.xs, self.ys)]

    @property
    def complexity(self) -> int:
        return int(self.xs.size)

    def __call__(self, x) -> Fraction:
        return self.value_units(x) * self.unit

    def value_units(self, x) -> int:
        i = int(np.searchsorted(self.xs, x, side="right")) - 1
        return int(self.ys[i]) if i >= 0 else 0

    def evaluate_units(self, xs) -> np.ndarray:
        """Vectorised evaluation, returning integer values in ``self.unit``."""
        idx = np.searchsorted(self.xs, np.asarray(xs, dtype=np.int64), side="right") - 1
        out = np.zeros(idx.shape, dtype=np.int64)
        ok = idx >= 0
        out[ok] = self.ys[idx[ok]]
        return out

    @property
    def max_value(self) -> Fraction:
        return (int(self.ys[-1]) if self.ys.size else 0) * self.unit

    @property
    def min_positive(self) -> Optional[Fraction]:
        pos = self.ys[self.ys > 0]
        return int(pos[0]) * self.unit if pos.size else None

    def __eq__(self, other) -> bool:
        if not isinstance(other, StepFunction):
            return NotImplemented
        a, b = self.normalized(), other.normalized()
        if a.xs.size != b.xs.size or not np.array_equal(a.xs, b.xs):
            return False
        return all(int(p) * a.unit == int(q) * b.unit for p, q in zip(a.ys, b.ys))

    def __repr__(self) -> str:
        body = ", ".join(f"({x}, {y})" for x, y in self.steps[:8])
        more = ", ..." if self.complexity > 8 else ""
        return f"StepFunction([{body}{more}])"

    # transformations --------------------------------------------------------

    def normalized(self) -> "StepFunction":
        """Start at ``x = 0`` and keep only steps where the value strictly increases."""
        xs, ys = self.xs, self.ys
        if xs.size == 0 or xs[0] != 0:
            xs = np.concatenate(([0], xs))
            ys = np.concatenate(([0], ys))
        keep = np.ones(xs.size, dtype=bool)
        keep[1:] = ys[1:] > ys[:-1]
        return StepFunction(xs[keep], ys[keep], self.unit)

    def in_unit(self, unit: Fraction) -> "StepFunction":
        unit = Fraction(unit)
        if unit == self.unit:
            return self
        ratio = self.unit / unit
        if ratio.denominator != 1:
            raise ValueError(f"unit {unit} does not divide {self.unit}")
        return StepFunction(self.xs, self.ys * int(ratio), unit)

    def scaled(self, factor: Fraction) -> "StepFunction":
        """Multiply every value by a positive rational ``factor``."""
        return StepFunction(self.xs, self.ys, self.unit * Fraction(factor))

    def truncated(self, max_x: int) -> "StepFunction":
        keep = self.xs <= max_x
        return StepFunction(self.xs[keep], self.ys[keep], self.unit)

    def capped(self, cap: Number) -> "StepFunction":
        """``min(f, cap)``; ``cap`` must be a multiple of the unit."""
        c = as_fraction(cap) / self.unit
        c = math.floor(c)
        return StepFunction(self.xs, np.minimum(self.ys, c), self.unit).normalized()


def align_units(fs: Sequence[StepFunction]) -> tuple[list[StepFunction], Fraction]:
    unit = common_unit(f.unit for f in fs)
    return [f.in_unit(unit) for f in fs], unit


def _pointwise(fs: Sequence[StepFunction], op) -> StepFunction:
    if not fs:
        raise ValueError("need at least one step function")
    fs, unit = align_units(list(fs))
    grid = np.unique(np.concatenate([np.array([0], dtype=np.int64)] + [f.xs for f in fs]))
    vals = fs[0].evaluate_units(grid)
    for f in fs[1:]:
        vals = op(vals, f.evaluate_units(grid))
    return StepFunction(grid, vals, unit).normalized()


def pointwise_min(fs: Sequence[StepFunction]) -> StepFunction:
    return _pointwise(fs, np.minimum)


def pointwise_max(fs: Sequence[StepFunction]) -> StepFunction:
    """Upper envelope; the right way to combine one-sided underestimates."""
    return _pointwise(fs, np.maximum)


# ---------------------------------------------------------------------------
# Rounding to powers of 1/(1-eps)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4096)
def _power(base: Fraction, k: int) -> Fraction:
    return base**k


def _floor_log(v: Fraction, base: Fraction, log_base: float) -> int:
    """Largest integer k with base**k <= v (exact)."""
    approx = math.log(v.numerator) - math.log(v.denominator)
    k = math.floor(approx / log_base)
    frac = approx / log_base - k
    if 1e-9 < frac < 1 - 1e-9:
        return k
    while _power(base, k) > v:
        k -= 1
    while _power(base, k + 1) <= v:
        k += 1
    return k


def round_step_down(f: StepFunction, eps) -> StepFunction:
    """Round every nonzero value down to a power of ``1/(1-eps)``.

    The rounded value for ``v`` is ``base**k`` with ``k`` maximal such that
    ``base**k <= v``, then lifted to the next multiple of the function's unit.
    Because ``v`` itself is a unit multiple the lift never exceeds ``v``, so the
    result is still a ``(1-eps)`` underestimate and takes at most one value
    per power of the base.
    """
    eps = as_fraction(eps)
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1)")
    f = f.normalized()
    if not np.any(f.ys > 0):
        return f
    base = 1 / (1 - eps)
    log_base = math.log(base.numerator) - math.log(base.denominator)
    out = f.ys.copy()
    cache: dict[int, int] = {}
    for i, v in enumerate(f.ys):
        v = int(v)
        if v == 0:
            continue
        if v not in cache:
            k = _floor_log(v * f.unit, base, log_base)
            q = _power(base, k) / f.unit
            cache[v] = -((-q.numerator) // q.denominator)
        out[i] = cache[v]
    return StepFunction(f.xs, out, f.unit).normalized()


# ---------------------------------------------------------------------------
# Exact oracles
# ---------------------------------------------------------------------------


def _bits_to_array(bits: int, limit: int) -> np.ndarray:
    nbytes = (limit + 8) // 8
    raw = np.frombuffer(bits.to_bytes(nbytes, "little"), dtype=np.uint8)
    flags = np.unpackbits(raw, bitorder="little")[: limit + 1]
    return np.flatnonzero(flags).astype(np.int64)


def exact_subset_sums(X: Iterable[int], t: Optional[int] = None, budget: Optional[int] = None) -> np.ndarray:
    """Exactly ``S(X) ∩ [0, t]`` by a bitset DP (``t=None`` means no cap)."""
    xs = [int(x) for x in X]
    if any(x < 0 for x in xs):
        raise ValueError("elements must be nonnegative")
    budget = oracle_budget() if budget is None else budget
    total = sum(xs)
    if total > budget:
        raise OracleBudgetExceeded(f"sum {total} exceeds oracle budget {budget}")
    limit = total if t is None else min(int(t), total)
    if limit < 0:
        return np.zeros(0, dtype=np.int64)
    mask = (1 << (limit + 1)) - 1
    bits = 1
    for x in xs:
        bits = (bits | (bits << x)) & mask
    return _bits_to_array(bits, limit)


def exact_knapsack(inst: KnapsackInstance, budget: Optional[int] = None) -> StepFunction:
    """Exact profit function on ``[0, capacity]`` by a weight-indexed DP."""
    budget = oracle_budget() if budget is None else budget
    W = inst.capacity
    items = [it for it in inst.items if it.weight <= W]
    unit = common_unit([it.profit for it in items if it.profit > 0] or [Fraction(1)])
    span = min(W, sum(it.weight for it in items))
    if (span + 1) * max(1, len(items)) > budget:
        raise OracleBudgetExceeded(f"{(span + 1) * len(items)} DP cells exceed oracle budget {budget}")
    best = np.zeros(span + 1, dtype=np.int64)
    for it in items:
        p = int(it.profit / unit)
        w = it.weight
        if w == 0:
            best += p
            continue
        cand = best[:-w] + p
        best[w:] = np.maximum(best[w:], cand)
    xs = np.arange(span + 1, dtype=np.int64)
    return StepFunction(xs, best, unit).normalized()


def brute_force_subset_sums(X: Sequence[int]) -> set[int]:
    """Enumerate every subset; only for tiny test inputs."""
    sums = {0}
    for x in X:
        sums |= {s + x for s in sums}
    return sums


def approximation_violations(A, S, delta=0, Delta=0, t: Optional[int] = None) -> list[str]:
    """Check that ``A`` is a ``(1-delta, Delta)`` approximation of ``S`` up to ``t``.

    ``S`` must be the complete set of true values (not truncated at ``t``)
    so that the domination side can be checked for every element of ``A``.
    Returns human-readable violations; an empty list means the contract holds.
    """
    a = np.unique(np.asarray(list(A) if not isinstance(A, np.ndarray) else A, dtype=np.int64))
    s = np.unique(np.asarray(list(S) if not isinstance(S, np.ndarray) else S, dtype=np.int64))
    delta = as_fraction(delta)
    Delta = as_fraction(Delta)
    keep = 1 - delta
    out: list[str] = []
    targets = s if t is None else s[s <= t]
    if targets.size:
        if a.size == 0:
            return [f"no witness for {int(targets[0])}"]
        idx = np.searchsorted(a, targets, side="right") - 1
        for b, i in zip(targets.tolist(), idx.tolist()):
            if i < 0 or a[i] < keep * b - Delta:
                out.append(f"no witness for {b}")
    if a.size:
        idx = np.searchsorted(s, a, side="left")
        for v, i in zip(a.tolist(), idx.tolist()):
            if i >= s.size or keep * int(s[i]) - Delta > v:
                out.append(f"element {v} not dominated")
    return out
