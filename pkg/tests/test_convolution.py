from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dense_approx.convolution import (
    UniformFunction,
    delta_multiple_set,
    maxplus_merge,
    merge_many_stepfns,
    minplus_naive,
    minplus_windowed,
    round_to_delta_multiple,
    smawk,
    smawk_uniform_merge,
    stepfn_to_weights,
    sumset_1d,
    sumset_2d,
    weights_to_stepfn,
)
from dense_approx.core import StepFunction

small_sets = st.lists(st.integers(0, 300), min_size=1, max_size=40).map(lambda v: sorted(set(v)))


def brute_sumset(A, B, cap=None):
    out = {a + b for a in A for b in B}
    return sorted(v for v in out if cap is None or v <= cap)


def brute_maxplus(f, g, X):
    return [max(f(a) + g(x - a) for a in range(x + 1)) for x in range(X + 1)]


def test_sumset_1d_example():
    for method in ("sparse", "ntt"):
        assert sumset_1d([0, 5, 6], [0, 5], cap=12, method=method).tolist() == [0, 5, 6, 10, 11]
    assert sumset_1d([0, 5, 6], [0, 5], cap=10).tolist() == [0, 5, 6, 10]


@settings(max_examples=80, deadline=None)
@given(small_sets, small_sets, st.sampled_from(["sparse", "ntt", "auto"]))
def test_sumset_1d_matches_pairs(A, B, method):
    assert sumset_1d(A, B, method=method).tolist() == brute_sumset(A, B)


def test_sumset_2d_examples():
    got = sumset_2d([(0, 0), (1, 1)], [(0, 0), (2, 0)])
    assert sorted(map(tuple, got.tolist())) == [(0, 0), (1, 1), (2, 0), (3, 1)]
    got = sumset_2d([(1, 0), (0, 1)], [(1, 0), (0, 1)])
    assert sorted(map(tuple, got.tolist())) == [(0, 2), (1, 1), (2, 0)]
    A = [(3, 4), (0, 2)]
    assert sorted(map(tuple, sumset_2d(A, [(0, 0)]).tolist())) == sorted(A)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20)), min_size=1, max_size=25),
       st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20)), min_size=1, max_size=25),
       st.sampled_from(["sparse", "ntt"]))
def test_sumset_2d_matches_pairs(P, Q, method):
    expect = sorted({(a + c, b + d) for (a, b), (c, d) in product(P, Q)})
    got = sorted(map(tuple, sumset_2d(P, Q, method=method).tolist()))
    assert got == expect


def test_maxplus_example():
    f = StepFunction.from_steps([(0, 0), (1, 2)])
    g = StepFunction.from_steps([(0, 0), (2, 3)])
    h = maxplus_merge(f, g)
    assert [h(x) for x in (1, 2, 3)] == [2, 3, 5]
    assert maxplus_merge(f, StepFunction.zero()) == f
    assert maxplus_merge(g, f) == h


step_fns = st.lists(st.tuples(st.integers(0, 12), st.integers(0, 9)), min_size=1, max_size=6).map(
    lambda pts: StepFunction.from_steps(sorted({x: y for x, y in zip(sorted(p[0] for p in pts), sorted(p[1] for p in pts))}.items()))
)


@settings(max_examples=60, deadline=None)
@given(step_fns, step_fns)
def test_maxplus_matches_brute(f, g):
    h = maxplus_merge(f, g)
    assert [h(x) for x in range(30)] == brute_maxplus(f, g, 29)


@settings(max_examples=30, deadline=None)
@given(st.lists(step_fns, min_size=1, max_size=5), st.sampled_from([Fraction(1, 4), Fraction(1, 10)]))
def test_merge_many_bound(fs, eps):
    exact = fs[0]
    for f in fs[1:]:
        exact = maxplus_merge(exact, f)
    approx = merge_many_stepfns(fs, eps)
    depth = max(1, (len(fs) - 1).bit_length())
    for x in range(40):
        assert (1 - eps) ** depth * exact(x) <= approx(x) <= exact(x)


def test_merge_many_exact_mode():
    f = StepFunction.from_steps([(0, 0), (2, 3)])
    g = StepFunction.from_steps([(0, 0), (1, 1)])
    assert merge_many_stepfns([f, g], 0) == maxplus_merge(f, g)


def test_minplus_example():
    # pairs per output index: {0+0}, {0+2, 1+0}, {1+2}
    assert minplus_windowed([0, 1], [0, 2]).tolist() == [0, 1, 3]
    assert minplus_naive([0, 1], [0, 2]).tolist() == [0, 1, 3]
    assert minplus_windowed([4, 1, 7], [0]).tolist() == [4, 1, 7]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 50), min_size=1, max_size=64), st.lists(st.integers(0, 50), min_size=1, max_size=64))
def test_minplus_windowed_unbounded_matches_naive(a, b):
    assert np.array_equal(minplus_windowed(a, b), minplus_naive(a, b))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 50), min_size=1, max_size=20), st.lists(st.integers(0, 50), min_size=1, max_size=20),
       st.integers(0, 5))
def test_minplus_window_restricts_pairs(a, b, w):
    got = minplus_windowed(a, b, w)
    out = np.full(len(a) + len(b) - 1, np.inf)
    for i in range(len(a)):
        for j in range(len(b)):
            if abs(i - j) <= w:
                out[i + j] = min(out[i + j], a[i] + b[j])
    assert np.array_equal(got, out)


def test_weights_roundtrip():
    f = StepFunction.from_steps([(0, 0), (3, 2), (5, 4)])
    G = stepfn_to_weights(f, Fraction(1), 5)
    assert G.tolist()[:5] == [0, 3, 3, 5, 5]
    assert weights_to_stepfn(G, Fraction(1)) == f


def test_smawk_row_minima():
    rng = np.random.default_rng(0)
    for _ in range(20):
        # a Monge matrix: sums of convex pieces in i - j
        r, c = rng.integers(1, 12, size=2)
        conv = np.cumsum(np.sort(rng.integers(-5, 5, size=r + c)))
        M = np.array([[conv[i - j + c - 1] + 0.0 for j in range(c)] for i in range(r)])
        arg = smawk(range(r), range(c), lambda i, j: M[i, j])
        for i in range(r):
            assert M[i, arg[i]] == M[i].min()


def test_delta_multiple_set_example():
    D = delta_multiple_set(Fraction(1, 10), Fraction(1, 4))
    assert len(D) == 7
    assert D == [Fraction(1, 4) * Fraction(11, 10) ** i for i in range(7)]
    assert all(Fraction(1, 4) <= a <= 2 for a in D)
    # covering: every t in [1, 2] has a multiple in [t, t + 2 eps]
    for t in np.linspace(1, 2, 2001):
        t = Fraction(t).limit_denominator(10**4)
        assert any(-(-t // a) * a <= t + Fraction(1, 5) for a in D)


@settings(max_examples=40, deadline=None)
@given(st.integers(100, 200), st.sampled_from([(Fraction(1, 100), Fraction(1, 20)), (Fraction(1, 50), Fraction(1, 8))]))
def test_delta_multiple_rounding_error(t100, params):
    eps, delta = params
    D = delta_multiple_set(eps, delta)
    p = Fraction(t100, 100)
    v, a = round_to_delta_multiple(p, D)
    assert p - 2 * eps <= v <= p and (v / a).denominator == 1


def test_uniform_function_validation():
    with pytest.raises(ValueError):
        UniformFunction(1, (3, 4))  # gaps 3 then 1: not pseudo-concave
    f = UniformFunction.from_weights(2, [3, 1])
    assert f.breakpoints == (1, 4)


def test_smawk_uniform_merge_example():
    fs = [UniformFunction.from_weights(1, [1, 2]), UniformFunction.from_weights(1, [1])]
    for force in (False, True):
        h = smawk_uniform_merge(fs, [Fraction(1)], force_smawk=force)
        assert [h(x) for x in (1, 2, 4)] == [1, 2, 3]
    one = UniformFunction.from_weights(Fraction(3, 2), [2, 5])
    assert smawk_uniform_merge([one], [Fraction(1, 2)]) == one.to_stepfn()


def _exact_uniform(fs, X):
    h = StepFunction.zero()
    for f in fs:
        h = maxplus_merge(h, f.to_stepfn())
    return [h(x) for x in range(X + 1)]


uniforms = st.lists(
    st.tuples(st.sampled_from([Fraction(1), Fraction(3, 2), Fraction(5, 4), Fraction(7, 4)]),
              st.lists(st.integers(0, 9), min_size=1, max_size=6)),
    min_size=1, max_size=5)


@settings(max_examples=40, deadline=None)
@given(uniforms, st.booleans())
def test_smawk_uniform_merge_within_bound(spec, force):
    fs = [UniformFunction.from_weights(p, ws) for p, ws in spec]
    D = [Fraction(1, 4), Fraction(1, 2)]
    h = smawk_uniform_merge(fs, D, force_smawk=force)
    exact = _exact_uniform(fs, 60)
    groups = len({max(a for a in D if (f.p / a).denominator == 1) for f in fs})
    for x in range(61):
        assert exact[x] - groups * min(D) <= h(x) <= exact[x]


@settings(max_examples=25, deadline=None)
@given(uniforms, st.integers(1, 8))
def test_smawk_uniform_merge_cap(spec, B):
    fs = [UniformFunction.from_weights(p, ws) for p, ws in spec]
    h = smawk_uniform_merge(fs, [Fraction(1, 4)], B=B)
    exact = _exact_uniform(fs, 60)
    for x in range(61):
        assert h(x) == min(exact[x], B)


def test_smawk_and_vectorized_paths_agree():
    rng = np.random.default_rng(3)
    fs = [UniformFunction.from_weights(Fraction(int(c), 4), rng.integers(0, 30, size=70).tolist())
          for c in (4, 5, 6)]
    a = smawk_uniform_merge(fs, [Fraction(1, 4)], force_smawk=True)
    b = smawk_uniform_merge(fs, [Fraction(1, 4)], force_smawk=False)
    assert a == b
