"""Dense subset-sum structure: divisor decomposition, filled interval and range queries.

A set of distinct integers that is dense enough has, after dividing out a
suitable divisor ``d``, an interval of consecutive subset sums.  Multiples of
``d`` inside the lifted interval are therefore certified subset sums of the
original set.  The asymptotic constants that guarantee this are far too large
for small inputs, so an empirical mode with small constants is provided and
checked against the exact oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import IntegerMultiset, OracleBudgetExceeded, as_fraction, exact_subset_sums, oracle_budget


class NoValidDivisor(ValueError):
    """No divisor satisfies the decomposition properties for this set."""


class EmptyInterval(ValueError):
    """The structural interval is empty at this scale."""


class CalibrationError(AssertionError):
    """An oracle check contradicted the certified interval."""


@dataclass(frozen=True)
class DenseConstants:
    Cdelta: Fraction | float = Fraction(1)
    Calpha: Fraction | float = Fraction(1, 16)
    Clambda: Fraction | float = Fraction(1)
    mode: str = "empirical"

    @classmethod
    def empirical(cls, Cdelta=Fraction(1), Clambda=Fraction(1)) -> "DenseConstants":
        Cdelta = as_fraction(Cdelta)
        return cls(Cdelta, Cdelta / 16, as_fraction(Clambda), "empirical")

    @classmethod
    def theory(cls, n: int) -> "DenseConstants":
        ln2 = math.log(2)
        return cls(1699200 * math.log(2 * n) * ln2**2, 42480 * ln2, 169920 * ln2, "theory")


@dataclass(frozen=True)
class DenseDecomposition:
    d: int
    Xprime: IntegerMultiset
    lam: int  # d * ceil(lambda_{X'}): first certified sum of X
    lam_prime: Fraction | float  # lambda_{X'} before rounding
    sigma_prime: int
    constants: DenseConstants
    sigma: int  # Sigma(X)
    n: int  # |X|

    @property
    def lo(self) -> int:
        return math.ceil(self.lam_prime)

    @property
    def hi(self) -> int:
        return self.sigma_prime - self.lo


def is_dense(X: Sequence[int], delta) -> bool:
    xs = list(X)
    if not xs:
        raise ValueError("X must be nonempty")
    return len(xs) ** 2 >= delta * max(xs)


def almost_divisor_check(X: Sequence[int], d: int, alpha) -> bool:
    """True iff ``d`` is an ``alpha``-almost divisor: ``|{x : d ∤ x}| <= alpha Σ(X) / |X|²``."""
    if d <= 1:
        raise ValueError("almost divisors are integers > 1")
    xs = list(X)
    bad = sum(1 for x in xs if x % d)
    return bad * len(xs) ** 2 <= alpha * sum(xs)


def has_almost_divisor(X: Sequence[int], alpha) -> bool:
    xs = np.asarray(list(X), dtype=np.int64)
    if xs.size == 0:
        return False
    limit = alpha * int(xs.sum()) / xs.size**2
    for d in range(2, int(xs.max()) + 1):
        if np.count_nonzero(xs % d) <= limit:
            return True
    return False


def _lambda(Xp: Sequence[int], Clambda) -> Fraction | float:
    m = len(Xp)
    if isinstance(Clambda, float):
        return Clambda * max(Xp) * sum(Xp) / m**2
    return Fraction(Clambda) * max(Xp) * sum(Xp) / m**2


def find_divisor(X: Sequence[int], constants: DenseConstants | None = None, strict: bool = True,
                 verify: bool = False) -> DenseDecomposition:
    """Smallest ``d <= 4Σ(X)/|X|²`` whose reduced set ``X(d)/d`` has the required structure.

    With ``strict`` the reduced set must be ``C_δ``-dense and free of
    ``C_α``-almost divisors, and the input itself must be ``C_δ``-dense.
    Without it only the size properties are enforced, which lets callers
    inspect the (typically empty) interval under the theory constants.
    ``verify`` checks the certified interval with the exact oracle and raises
    :class:`CalibrationError` if it is not filled.
    """
    xs = sorted(int(x) for x in X)
    if not xs or xs[0] < 1 or any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("X must be nonempty distinct positive integers")
    n = len(xs)
    constants = constants or DenseConstants.empirical()
    sigma = sum(xs)
    if strict and not is_dense(xs, constants.Cdelta):
        raise NoValidDivisor("X is not dense enough")
    arr = np.asarray(xs, dtype=np.int64)
    dmax = (4 * sigma) // (n * n)
    for d in range(1, max(dmax, 1) + 1):
        if d > dmax and d > 1:
            break
        Xp = (arr[arr % d == 0] // d).tolist()
        if not Xp:
            continue
        if 4 * len(Xp) < 3 * n or 4 * d * sum(Xp) < 3 * sigma:
            continue
        if strict and (not is_dense(Xp, constants.Cdelta) or has_almost_divisor(Xp, constants.Calpha)):
            continue
        lam_p = _lambda(Xp, constants.Clambda)
        dec = DenseDecomposition(d, IntegerMultiset(Xp), d * math.ceil(lam_p), lam_p, sum(Xp),
                                 constants, sigma, n)
        if verify:
            verify_structural_interval(dec)
        return dec
    raise NoValidDivisor(f"no divisor up to {dmax} satisfies the decomposition properties")


def structural_interval(dec: DenseDecomposition) -> tuple[int, int]:
    """``[ceil(λ'), Σ(X') - ceil(λ')]``, claimed to lie inside ``S(X')``."""
    lo, hi = dec.lo, dec.hi
    if lo > hi:
        raise EmptyInterval(f"lambda'={float(dec.lam_prime):.4g} exceeds half of sigma'={dec.sigma_prime}")
    return lo, hi


def verify_structural_interval(dec: DenseDecomposition, budget: int | None = None) -> bool:
    """Oracle check of the certified interval; raises on contradiction."""
    lo, hi = structural_interval(dec)
    sums = exact_subset_sums(dec.Xprime.values, hi, budget)
    present = np.zeros(hi + 1, dtype=bool)
    present[sums] = True
    if not present[lo:hi + 1].all():
        missing = lo + int(np.flatnonzero(~present[lo:hi + 1])[0])
        raise CalibrationError(f"{missing} in [{lo}, {hi}] is not a subset sum of X'")
    return True


def density_roundup(X: Sequence[int], t: int, dec: DenseDecomposition) -> int:
    """``t' = d * ceil(t/d)``, a certified subset sum with ``0 <= t' - t < d``."""
    lo, hi = structural_interval(dec)
    if not (dec.lam <= t <= dec.sigma / 2):
        raise ValueError(f"t={t} outside [{dec.lam}, {dec.sigma / 2}]")
    tp = dec.d * -(-t // dec.d)
    if tp > dec.d * hi:
        raise ValueError(f"t={t} rounds past the certified interval")
    return tp


def range_query(dec: DenseDecomposition, X, L: int, R: int) -> bool:
    """Does ``[L, R]`` contain a multiple of ``d`` inside the lifted certified interval?"""
    if not (dec.lam <= L <= R <= dec.sigma / 2):
        raise ValueError(f"query [{L}, {R}] outside [{dec.lam}, {dec.sigma / 2}]")
    lo, hi = structural_interval(dec)
    m_lo = max(lo, -(-L // dec.d))
    m_hi = min(hi, R // dec.d)
    return m_lo <= m_hi


def next_subset_sum(dec: DenseDecomposition, X, start: int) -> int:
    """Smallest certified sum ``>= start`` found by binary search over range queries."""
    top = math.floor(dec.sigma / 2)
    if start > top or not range_query(dec, X, start, top):
        raise ValueError(f"no certified subset sum in [{start}, {top}]")
    lo, hi = start, top
    while lo < hi:
        mid = (lo + hi) // 2
        if range_query(dec, X, start, mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def certified_sums(dec: DenseDecomposition, upto: int | None = None) -> np.ndarray:
    """All certified sums of the original set (multiples of ``d`` in the lifted interval)."""
    lo, hi = structural_interval(dec)
    if upto is not None:
        hi = min(hi, upto // dec.d)
    return dec.d * np.arange(lo, hi + 1, dtype=np.int64)


def try_verify(dec: DenseDecomposition) -> bool | None:
    """Oracle-check when affordable; ``None`` when the oracle budget is too small."""
    try:
        return verify_structural_interval(dec)
    except OracleBudgetExceeded:
        return None
