"""Acceptance gate: eight end-to-end checks, each reporting one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they are
produced; they are also repeated in the terminal summary.
"""

import math
import time
import warnings
from fractions import Fraction
from itertools import product

import numpy as np

from dense_approx.checks import density_suite, structural_suite
from dense_approx.cli import bench_rows, parse_eps_grid
from dense_approx.convolution import (
    UniformFunction,
    maxplus_merge,
    minplus_naive,
    minplus_windowed,
    smawk_uniform_merge,
    sumset_1d,
    sumset_2d,
)
from dense_approx.core import ApproxSet, KnapsackInstance, StepFunction, approximation_violations, \
    exact_knapsack, exact_subset_sums
from dense_approx.knapsack import solve_knapsack
from dense_approx.partition import extract_answer, reduce_multiplicity, solve_partition
from dense_approx.sumset_approx import additive_size_bound, dc_interval, merge_additive, merge_multiplicative

RESULTS: list[str] = []


def report(idx, name, ok, detail, warn=False):
    status = "PASS" if ok else ("WARN" if warn else "FAIL")
    line = f"[{idx}] {status} {name}: {detail}"
    RESULTS.append(line)
    print(line)
    return line


def partition_opt(xs):
    return int(exact_subset_sums(xs, sum(xs) // 2)[-1])


def test_1_partition_guarantee():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    bad, runs = [], 0
    for _ in range(1000):
        n = int(rng.integers(1, 19))
        xs = rng.integers(1, 10**4 + 1, size=n).tolist()
        opt = partition_opt(xs)
        for eps in (Fraction(1, 10), Fraction(1, 20), Fraction(1, 100)):
            sol = solve_partition(xs, eps)
            runs += 1
            if not (1 - eps) * opt <= sol <= opt:
                bad.append((xs, eps, sol, opt))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 120
    report(1, "partition guarantee", ok, f"{runs - len(bad)}/{runs} runs ok in {elapsed:.1f}s")
    assert not bad, bad[:3]
    assert elapsed < 120


def test_2_knapsack_guarantee():
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    good = total = 0
    bad = []
    for inst_id in range(200):
        n = int(rng.integers(1, 15))
        ws = rng.integers(1, 101, size=n).tolist()
        ps = rng.integers(1, 1001, size=n).tolist()
        W = int(rng.integers(1, sum(ws) + 1))
        inst = KnapsackInstance(list(zip(ps, ws)), W)
        opt = exact_knapsack(inst)(W)
        for eps in (Fraction(1, 10), Fraction(1, 20)):
            sol = solve_knapsack(inst, eps, rounds=20, seed=inst_id)
            total += 1
            if (1 - eps) * opt <= sol <= opt:
                good += 1
            else:
                bad.append((inst, eps, sol, opt))
    elapsed = time.perf_counter() - t0
    ok = good >= 0.99 * total and elapsed < 300
    report(2, "knapsack guarantee", ok, f"{good}/{total} runs ok ({good / total:.1%}) in {elapsed:.1f}s")
    assert good >= 0.99 * total, bad[:3]
    assert elapsed < 300


def test_3_density_roundup():
    t0 = time.perf_counter()
    res = density_suite(200, seed=303)
    elapsed = time.perf_counter() - t0
    ok = res.total > 0 and res.failures == 0 and elapsed < 60
    report(3, "density round-up", ok,
           f"{res.total - res.failures}/{res.total} ok, {res.skipped} without a valid divisor, {elapsed:.1f}s")
    assert res.failures == 0, res.notes[:3]
    assert res.total >= 150
    assert elapsed < 60


def test_4_structural_interval():
    res = structural_suite(200, seed=303)
    rate = res.failures / max(res.total, 1)
    report(4, "structural interval", res.passed,
           f"{res.total - res.failures}/{res.total} ok, {res.failures} calibration events ({rate:.1%})")
    assert res.passed, res.notes[:3]


def _merge_case(rng):
    """One random merge input; returns (kind, violations, size, Z or None)."""
    kind = rng.choice(["additive", "multiplicative", "dc"])
    ell = int(rng.integers(2, 1500))
    if kind == "dc":
        n = int(rng.integers(1, min(ell + 1, 40) + 1))
        X = sorted(rng.choice(np.arange(ell, 2 * ell + 1), size=n, replace=False).tolist())
        while sum(X) > 10**5:
            X.pop()
        delta = Fraction(1, int(rng.integers(3, 30)))
        A = dc_interval(X, delta, ell=ell)
        return kind, approximation_violations(A.elements, exact_subset_sums(X), A.delta, A.Delta), len(A), None
    d = int(rng.integers(0, ell + 1))
    n1, n2 = (int(v) for v in rng.integers(1, 12, size=2))
    X1 = rng.integers(ell, ell + d + 1, size=n1).tolist()
    X2 = rng.integers(ell, ell + d + 1, size=n2).tolist()
    while sum(X1) + sum(X2) > 10**5:
        (X1 if len(X1) >= len(X2) else X2).pop()
    A1 = ApproxSet(exact_subset_sums(X1), Fraction(0), 0, None, len(X1))
    A2 = ApproxSet(exact_subset_sums(X2), Fraction(0), 0, None, len(X2))
    S = exact_subset_sums(X1 + X2)
    total = int(S[-1])
    if kind == "additive":
        t = int(rng.integers(ell, max(ell, total) + 1))
        Delta = int(rng.integers(1, max(2, t // 20)))
        algo = rng.choice(["1d", "2d", "auto"])
        A = merge_additive(A1, A2, ell, d, t, Delta, 0, algorithm=algo)
        z1, z2 = additive_size_bound(ell, d, t, Delta)
        # each factor of the 2D count is at least one
        Z = min(z1, (Fraction(t, ell) + 1) * (math.ceil(Fraction(t * d, ell * Delta)) + 1))
        return kind, approximation_violations(A.elements, S, 0, Delta - 1, t), len(A), Z
    T = int(rng.integers(ell, max(ell, total) + 1))
    delta0 = Fraction(1, int(rng.integers(3, 40)))
    A = merge_multiplicative(A1, A2, ell, d, T, 0, delta0)
    return kind, approximation_violations(A.elements, S, delta0, 0, T), len(A), None


def test_5_merge_contracts():
    rng = np.random.default_rng(505)
    fails, size_fails, counts = [], [], {}
    worst = 0.0
    for _ in range(500):
        kind, viol, size, Z = _merge_case(rng)
        counts[kind] = counts.get(kind, 0) + 1
        if viol:
            fails.append((kind, viol[:2]))
        if Z is not None:
            worst = max(worst, size / float(Z))
            if size > 8 * Z:
                size_fails.append((size, Z))
    ok = not fails and not size_fails
    mix = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
    report(5, "merge contracts", ok,
           f"{500 - len(fails)}/500 contracts hold ({mix}); worst |A|/Z = {worst:.2f} (limit 8)")
    assert not fails, fails[:3]
    assert not size_fails, size_fails[:3]


def _brute_uniform(fs, X):
    h = StepFunction.zero()
    for f in fs:
        h = maxplus_merge(h, f.to_stepfn())
    return [h(x) for x in range(X + 1)]


def test_6_kernel_equivalence():
    rng = np.random.default_rng(606)
    checks = 0
    bad = []
    sizes = range(1, 65)
    # 1D sumsets: every pair of sizes up to 64
    for a, b in product(sizes, sizes):
        A = np.unique(rng.integers(0, 4 * a + 8, size=a))
        B = np.unique(rng.integers(0, 4 * b + 8, size=b))
        expect = np.unique(np.add.outer(A, B))
        for method in ("sparse", "ntt"):
            checks += 1
            if not np.array_equal(sumset_1d(A, B, method=method), expect):
                bad.append(("sumset_1d", a, b, method))
    # 2D sumsets
    for a, b in product(range(1, 65, 3), range(1, 65, 3)):
        P = rng.integers(0, 16, size=(a, 2))
        Q = rng.integers(0, 16, size=(b, 2))
        expect = sorted({(p0 + q0, p1 + q1) for p0, p1 in P.tolist() for q0, q1 in Q.tolist()})
        for method in ("sparse", "ntt"):
            checks += 1
            got = sorted(map(tuple, sumset_2d(P, Q, method=method).tolist()))
            if got != expect:
                bad.append(("sumset_2d", a, b, method))
    # unbounded windowed min-plus against the naive kernel
    for a, b in product(range(1, 65, 3), range(1, 65, 3)):
        u, v = rng.integers(0, 100, size=a), rng.integers(0, 100, size=b)
        checks += 1
        if not np.array_equal(minplus_windowed(u, v), minplus_naive(u, v)):
            bad.append(("minplus", a, b))
    # uniform merge against the exact (max,+) merge, within groups * min(Delta set)
    D = [Fraction(1, 4), Fraction(1, 2)]
    profits = [Fraction(1), Fraction(5, 4), Fraction(3, 2), Fraction(7, 4)]
    for size in range(1, 65, 3):
        for force in (False, True):
            k = int(rng.integers(1, 4))
            fs = [UniformFunction.from_weights(profits[int(rng.integers(0, 4))],
                                               rng.integers(0, 12, size=size).tolist()) for _ in range(k)]
            h = smawk_uniform_merge(fs, D, force_smawk=force)
            X = sum(int(f.breakpoints[-1]) for f in fs) + 1
            exact = _brute_uniform(fs, X)
            groups = len({max(a for a in D if (f.p / a).denominator == 1) for f in fs})
            checks += 1
            if any(not (exact[x] - groups * min(D) <= h(x) <= exact[x]) for x in range(X + 1)):
                bad.append(("smawk_uniform_merge", size, force))
    report(6, "kernel equivalence", not bad, f"{checks - len(bad)}/{checks} kernel comparisons agree")
    assert not bad, bad[:5]


def test_7_reduction_exactness():
    rng = np.random.default_rng(707)
    bad = []
    for _ in range(300):
        top = int(rng.integers(1, 40))
        S = rng.integers(1, top + 1, size=int(rng.integers(0, 60))).tolist()
        t = int(rng.integers(1, max(2, sum(S) + 1)))
        S = [s for s in S if s <= t]
        T = reduce_multiplicity(S, t)
        if exact_subset_sums(T.values, t).tolist() != exact_subset_sums(S, t).tolist() or len(T) > len(S):
            bad.append(("reduce", S, t))
    # boundary instances for extraction: OPT placed right around t(1 - eps/2)
    boundary = 0
    for eps in (Fraction(1, 10), Fraction(1, 20), Fraction(1, 100)):
        for sigma in range(200, 2200, 37):
            t = Fraction(sigma, 2)
            pivot = math.floor(t * (1 - eps / 2))
            for a in range(pivot - 3, pivot + 4):
                if not (0 < a <= sigma // 2):
                    continue
                X = [a, sigma - a]
                S = exact_subset_sums(X)
                opt = partition_opt(X)
                slack = eps * sigma / 4
                # exact sums, every sum pushed to the edge of the allowed slack, random shifts
                edge = [max(Fraction(0), s - slack) for s in S.tolist()]
                shifted = [max(Fraction(0), s - slack * Fraction(int(rng.integers(0, 101)), 100)) for s in S.tolist()]
                for A in (S, edge, shifted):
                    sol = extract_answer(A, sigma, eps)
                    boundary += 1
                    if not (1 - eps) * opt <= sol <= opt:
                        bad.append(("extract", X, eps, sol, opt))
    report(7, "reduction exactness", not bad,
           f"300 multisets checked, {boundary} boundary extractions, {len(bad)} failures")
    assert not bad, bad[:3]


def test_8_soft_scaling():
    t0 = time.perf_counter()
    rows, summary = bench_rows("partition", parse_eps_grid("2^-6..2^-13"), 4096, 1, seed=0)
    slope = summary[3]
    ok = math.isfinite(slope) and slope <= 1.6
    report(8, "soft scaling", ok,
           f"log-log slope of time vs 1/eps = {slope:.2f} (gate 1.6), size slope = {summary[4]:.2f},"
           f" {time.perf_counter() - t0:.1f}s", warn=True)
    if not ok:
        warnings.warn(f"partition core scaling slope {slope:.2f} exceeds 1.6")
    assert math.isfinite(slope)
