"""Randomised verification suites for the structural lemmas, checked by exact oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .convolution import maxplus_merge
from .core import KnapsackInstance, StepFunction, approximation_violations, exact_knapsack, exact_subset_sums
from .dense import (
    CalibrationError,
    DenseConstants,
    EmptyInterval,
    NoValidDivisor,
    density_roundup,
    find_divisor,
    verify_structural_interval,
)
from .knapsack import GreedyParams, diversity_index, sort_by_efficiency
from .sumset_approx import dc_interval


@dataclass
class SuiteResult:
    name: str
    total: int = 0
    failures: int = 0
    skipped: int = 0
    max_failure_rate: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.total > 0 and self.failures <= self.max_failure_rate * self.total

    def row(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name:<12} {status}  {self.total - self.failures}/{self.total} ok, {self.skipped} skipped"


def random_dense_set(rng: np.random.Generator, n_lo: int = 10, n_hi: int = 40) -> tuple[list[int], int]:
    """Distinct ``X ⊆ [ell, 2 ell]`` with ``n`` in ``[n_lo, n_hi]`` and ``ell <= n^2 / 8``."""
    n = int(rng.integers(n_lo, n_hi + 1))
    ell = int(rng.integers(n, max(n, n * n // 8) + 1))
    X = sorted(rng.choice(np.arange(ell, 2 * ell + 1), size=n, replace=False).tolist())
    return X, ell


def density_suite(instances: int = 200, seed: int = 0, constants: Optional[DenseConstants] = None,
                  queries: int = 8) -> SuiteResult:
    """Every round-up ``t'`` is a true subset sum with ``0 <= t' - t <= 8 ell / n``."""
    res = SuiteResult("density")
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        X, ell = random_dense_set(rng)
        n = len(X)
        try:
            dec = find_divisor(X, constants)
        except (NoValidDivisor, EmptyInterval) as exc:
            res.skipped += 1
            res.notes.append(str(exc))
            continue
        half = dec.sigma // 2
        if dec.lam > half:
            res.skipped += 1
            continue
        sums = exact_subset_sums(X, half + dec.d)
        present = set(sums.tolist())
        res.total += 1
        ts = rng.integers(dec.lam, half + 1, size=queries).tolist() + [dec.lam, half]
        for t in ts:
            try:
                tp = density_roundup(X, int(t), dec)
            except ValueError as exc:
                res.failures += 1
                res.notes.append(str(exc))
                break
            if tp not in present or not (0 <= tp - t <= Fraction(8 * ell, n)):
                res.failures += 1
                res.notes.append(f"t={t} t'={tp} X={X}")
                break
    return res


def structural_suite(instances: int = 200, seed: int = 0, constants: Optional[DenseConstants] = None) -> SuiteResult:
    """Oracle check of the certified interval; failures are calibration events (at most 1%)."""
    res = SuiteResult("structural", max_failure_rate=0.01)
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        X, _ = random_dense_set(rng)
        try:
            dec = find_divisor(X, constants)
        except (NoValidDivisor, EmptyInterval) as exc:
            res.skipped += 1
            res.notes.append(str(exc))
            continue
        res.total += 1
        try:
            verify_structural_interval(dec)
        except EmptyInterval:
            res.total -= 1
            res.skipped += 1
        except CalibrationError as exc:
            res.failures += 1
            res.notes.append(f"calibration event: {exc}")
    return res


def merge_suite(instances: int = 200, seed: int = 0) -> SuiteResult:
    """``dc_interval`` meets its ``(1 - delta)`` contract against the exact sums."""
    res = SuiteResult("merge")
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        ell = int(rng.integers(2, 400))
        n = int(rng.integers(1, min(ell + 1, 40) + 1))
        X = sorted(rng.choice(np.arange(ell, 2 * ell + 1), size=n, replace=False).tolist())
        delta = Fraction(1, int(rng.integers(3, 20)))
        A = dc_interval(X, delta, ell=ell)
        S = exact_subset_sums(X)
        res.total += 1
        bad = approximation_violations(A.elements, S, A.delta, A.Delta)
        if bad:
            res.failures += 1
            res.notes.append(f"X={X} delta={delta}: {bad[0]}")
    return res


def _cap_function(f: StepFunction, cap: Fraction) -> StepFunction:
    return f.capped(cap) if f.max_value > cap else f


def exchange_suite(instances: int = 40, seed: int = 0, c=None, eps=Fraction(1, 16)) -> SuiteResult:
    """Capping the low-efficiency tail at ``B`` loses at most ``eps`` of OPT for values up to ``2m``."""
    res = SuiteResult("exchange")
    rng = np.random.default_rng(seed)
    eps = Fraction(eps)
    inv = int(1 / eps)
    for _ in range(instances):
        n = int(rng.integers(60, 160))
        # few profit levels keep D small early so the tail is long
        levels = rng.choice(np.arange(inv, 2 * inv), size=int(rng.integers(8, inv + 1)), replace=False)
        items = [(Fraction(int(rng.choice(levels)), inv), int(rng.integers(1, 60))) for _ in range(n)]
        items = sort_by_efficiency(items)
        m = int(2 ** rng.integers(1, 5))
        params = GreedyParams.build(m, eps, c)
        i, _, _ = diversity_index([p for p, _ in items], m, params.Delta)
        W = sum(w for _, w in items)
        full = exact_knapsack(KnapsackInstance(items, W))
        head = exact_knapsack(KnapsackInstance(items[:i], W)) if i else StepFunction.zero()
        tail = exact_knapsack(KnapsackInstance(items[i:], W)) if i < n else StepFunction.zero()
        capped = maxplus_merge(head, _cap_function(tail, params.B), W)
        xs = np.arange(W + 1)
        fv = full.evaluate_units(xs) * full.unit
        gv = capped.evaluate_units(xs) * capped.unit
        res.total += 1
        for a, b in zip(fv.tolist(), gv.tolist()):
            if a <= 2 * m and b < (1 - eps) * a:
                res.failures += 1
                res.notes.append(f"n={n} m={m} i={i} B={params.B}: {b} < (1-eps) {a}")
                break
    return res


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "density": density_suite,
    "structural": structural_suite,
    "merge": merge_suite,
    "exchange": exchange_suite,
}
