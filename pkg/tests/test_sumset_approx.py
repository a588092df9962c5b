from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dense_approx.core import ApproxSet, approximation_violations, exact_subset_sums
from dense_approx.sumset_approx import (
    additive_size_bound,
    dc_interval,
    leaf_set,
    merge_additive,
    merge_multiplicative,
    merge_unbounded,
)


def exact_set(X, delta=0):
    return ApproxSet(exact_subset_sums(X), Fraction(delta), 0, None, len(X))


def test_merge_additive_exact_example():
    A = merge_additive(exact_set([5]), exact_set([5, 6]), 5, 1, 12, 1, 0)
    assert A.tolist() == [0, 5, 6, 10, 11]


def test_merge_additive_delta3_example():
    for algo in ("1d", "2d"):
        A = merge_additive(exact_set([5]), exact_set([5, 6]), 5, 1, 12, 3, 0, algorithm=algo)
        assert approximation_violations(A.elements, exact_subset_sums([5, 5, 6]), 0, 2, 12) == []


def test_merge_additive_neutral_operand():
    A = merge_additive(exact_set([7, 8]), ApproxSet([0]), 7, 1, 30, 1, 0)
    assert A.tolist() == [0, 7, 8, 15]


def test_merge_additive_rejects_bad_params():
    with pytest.raises(ValueError):
        merge_additive(exact_set([5]), exact_set([6]), 5, 6, 12, 1, 0)  # d > ell
    with pytest.raises(ValueError):
        merge_additive(exact_set([5], Fraction(1, 4)), exact_set([6]), 5, 1, 12, 1, Fraction(1, 8))


def test_merge_additive_degenerate_branch():
    # delta >= d / (ell + d): every item may be rounded down to ell
    A = merge_additive(exact_set([10, 11]), exact_set([10]), 10, 1, 40, 1, Fraction(1, 4), algorithm="auto")
    assert A.tolist() == [0, 10, 20, 30]
    assert approximation_violations(A.elements, exact_subset_sums([10, 11, 10]), Fraction(1, 4), 0, 40) == []


@settings(max_examples=60, deadline=None)
@given(st.integers(4, 60), st.data())
def test_merge_additive_contract(ell, data):
    d = data.draw(st.integers(0, ell))
    X1 = data.draw(st.lists(st.integers(ell, ell + d), min_size=1, max_size=6))
    X2 = data.draw(st.lists(st.integers(ell, ell + d), min_size=1, max_size=6))
    t = data.draw(st.integers(ell, 8 * ell))
    Delta = data.draw(st.integers(1, 12))
    algo = data.draw(st.sampled_from(["1d", "2d", "auto"]))
    A = merge_additive(exact_set(X1), exact_set(X2), ell, d, t, Delta, 0, algorithm=algo)
    S = exact_subset_sums(X1 + X2)
    assert approximation_violations(A.elements, S, 0, Delta - 1, t) == []
    z1, z2 = additive_size_bound(ell, d, t, Delta)
    assert len(A) <= 8 * min(z1, z2) + 8


def test_merge_multiplicative_examples():
    A = merge_multiplicative(ApproxSet([0]), ApproxSet([0]), 8, 1, 34, 0, Fraction(1, 10))
    assert A.tolist() == [0]
    A = merge_multiplicative(exact_set([8]), exact_set([8, 9]), 8, 1, 34, 0, Fraction(1, 10))
    S = exact_subset_sums([8, 8, 9])
    assert approximation_violations(A.elements, S, Fraction(1, 10), 0, 34) == []
    assert A.elements.max() <= 6 * 34


def test_merge_unbounded_examples():
    A = merge_unbounded(leaf_set(5), leaf_set(6), 5, 1, 2, 0, Fraction(1, 10))
    assert approximation_violations(A.elements, [0, 5, 6, 11], Fraction(1, 10)) == []
    B = merge_unbounded(leaf_set(6), leaf_set(5), 5, 1, 2, 0, Fraction(1, 10))
    assert A.tolist() == B.tolist()
    C = merge_unbounded(exact_set([7, 7]), exact_set([7]), 7, 0, 3, 0, Fraction(1, 8))
    assert all(v % 7 == 0 for v in C.tolist())


def test_dc_interval_examples():
    assert dc_interval([5], Fraction(1, 3)).tolist() == [0, 5]
    A = dc_interval([5, 6, 7], Fraction(1, 4))
    assert approximation_violations(A.elements, [0, 5, 6, 7, 11, 12, 13, 18], Fraction(1, 4)) == []


def test_dc_interval_input_errors():
    with pytest.raises(ValueError):
        dc_interval([6, 5], Fraction(1, 4))
    with pytest.raises(ValueError):
        dc_interval([5, 11], Fraction(1, 4))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 300), st.data(), st.sampled_from([Fraction(1, 3), Fraction(1, 10), Fraction(1, 40)]))
def test_dc_interval_contract(ell, data, delta):
    X = sorted(data.draw(st.sets(st.integers(ell, 2 * ell), min_size=1, max_size=min(ell + 1, 25))))
    A = dc_interval(X, delta, ell=ell)
    S = exact_subset_sums(X)
    assert approximation_violations(A.elements, S, delta, A.Delta) == []


@settings(max_examples=30, deadline=None)
@given(st.integers(10, 200), st.data())
def test_dc_interval_capped(ell, data):
    X = sorted(data.draw(st.sets(st.integers(ell, 2 * ell), min_size=2, max_size=20)))
    cap = data.draw(st.integers(ell, sum(X)))
    A = dc_interval(X, Fraction(1, 8), ell=ell, cap=cap)
    S = exact_subset_sums(X)
    assert A.elements.max() <= cap
    assert approximation_violations(A.elements, S, Fraction(1, 8), A.Delta, cap) == []


def test_dc_output_size_scaling():
    rng = np.random.default_rng(0)
    ratios = []
    for n in (16, 64, 256):
        ell = 4 * n
        X = sorted(rng.choice(np.arange(ell, 2 * ell), size=n, replace=False).tolist())
        delta = Fraction(1, 20)
        A = dc_interval(X, delta, ell=ell)
        ratios.append(len(A) / ((n + n**0.5 / float(delta)) * np.log2(n) ** 2))
    assert max(ratios) < 4
