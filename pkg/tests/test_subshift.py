import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergotrope.harness.experiments import cylinder_codes
from ergotrope.subshift import (InsufficientWindowError, PrecisionBudgetError, SubshiftError,
                                SubshiftSpec, SymbolicPoint, TorusMap, bounded_distortion_ratio,
                                cylinder_measure, mixing_profile, orbit, sample_path, shift_metric,
                                stationary_distribution, truncate_environment)

P2 = np.array([[0.9, 0.1], [0.2, 0.8]])


def stochastic(draw_rng, k, zeros=0.0):
    P = draw_rng.uniform(0.05, 1, (k, k))
    P[draw_rng.random((k, k)) < zeros] = 0
    # a positive first row and column keep the chain irreducible and aperiodic
    P[0, :] = np.maximum(P[0, :], 0.1)
    P[:, 0] = np.maximum(P[:, 0], 0.1)
    return P / P.sum(axis=1, keepdims=True)


def test_stationary_examples():
    assert np.allclose(stationary_distribution(P2), [2 / 3, 1 / 3], atol=1e-15)
    assert np.allclose(stationary_distribution(np.full((2, 2), 0.5)), [0.5, 0.5])
    with pytest.raises(SubshiftError, match="reducible"):
        stationary_distribution(np.eye(2))
    with pytest.raises(SubshiftError):
        stationary_distribution(np.array([[0.5, 0.6], [0.5, 0.5]]))


def test_periodic_rejected():
    with pytest.raises(SubshiftError, match="periodic"):
        SubshiftSpec(np.array([[0.0, 1.0], [1.0, 0.0]]))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31))
def test_stationary_residual(k, seed):
    P = stochastic(np.random.default_rng(seed), k)
    p = stationary_distribution(P)
    assert np.abs(p @ P - p).max() <= 1e-12 and p.sum() == pytest.approx(1.0, abs=1e-14)


def test_cylinder_examples():
    full = SubshiftSpec.full_shift(2)
    assert cylinder_measure(full, 0, (0, 1)) == 0.25
    spec = SubshiftSpec(P2)
    assert cylinder_measure(spec, 3, (0,)) == pytest.approx(2 / 3)
    assert cylinder_measure(spec, 0, (0, 0, 1)) == pytest.approx(0.06)
    no = SubshiftSpec(np.array([[0.5, 0.5], [1.0, 0.0]]))
    assert cylinder_measure(no, 0, (1, 1)) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**31), st.lists(st.integers(0, 3), min_size=1, max_size=6))
def test_cylinder_additivity(k, seed, word):
    spec = SubshiftSpec(stochastic(np.random.default_rng(seed), k, zeros=0.2))
    w = [a % k for a in word]
    mu = cylinder_measure(spec, 0, w)
    right = sum(cylinder_measure(spec, 0, w + [a]) for a in range(k))
    left = sum(cylinder_measure(spec, -1, [a] + w) for a in range(k))
    assert abs(right - mu) <= 1e-12 and abs(left - mu) <= 1e-12


def test_sample_path_reproducible():
    spec = SubshiftSpec.full_shift(2)
    a = sample_path(spec, 42).word(-100, 100)
    b = sample_path(spec, 42).word(-100, 100)
    assert np.array_equal(a, b)
    # materialisation order does not change the letters
    x = sample_path(spec, 42)
    x.word(50, 60)
    assert np.array_equal(x.word(-100, 100), a)


def test_letter_frequency_full_shift():
    w = sample_path(SubshiftSpec.full_shift(2), 0).word(0, 99_999)
    assert abs(w.mean() - 0.5) <= 3 * math.sqrt(0.25 / 1e5)


def test_forbidden_transition_absent():
    spec = SubshiftSpec(np.array([[0.6, 0.4], [1.0, 0.0]]))
    w = sample_path(spec, 5).word(-5000, 5000)
    assert not np.any((w[:-1] == 1) & (w[1:] == 1))


def test_cylinder_frequencies_within_3_sigma():
    spec = SubshiftSpec(P2)
    codes = cylinder_codes(spec, 2, 100_000, np.random.SeedSequence(11))
    emp = np.bincount(codes, minlength=4) / 1e5
    for c in range(4):
        mu = cylinder_measure(spec, 0, np.unravel_index(c, (2, 2)))
        assert abs(emp[c] - mu) <= 3 * math.sqrt(mu * (1 - mu) / 1e5)


def _pair_differing_at(m):
    spec = SubshiftSpec.full_shift(2)
    w = np.zeros(21, dtype=np.int64)
    v = w.copy()
    v[10 + m] = 1
    return SymbolicPoint.from_word(spec, w, -10), SymbolicPoint.from_word(spec, v, -10)


def test_metric_examples():
    x, y = _pair_differing_at(4)
    assert shift_metric(x, y) == pytest.approx(math.exp(-3))
    x, y = _pair_differing_at(-4)
    assert shift_metric(x, y) == pytest.approx(math.exp(-3))
    x, y = _pair_differing_at(0)
    assert shift_metric(x, y) == pytest.approx(math.e)
    spec = SubshiftSpec.full_shift(2)
    a = SymbolicPoint.from_word(spec, np.zeros(5, dtype=np.int64), -2)
    b = SymbolicPoint.from_word(spec, np.zeros(9, dtype=np.int64), -4)
    assert shift_metric(a, b) == 0.0
    assert shift_metric(x, x) == 0.0


def test_metric_needs_window():
    spec = SubshiftSpec.full_shift(2)
    x = sample_path(spec, 3, window=5)
    y = truncate_environment(x, 5)
    with pytest.raises(InsufficientWindowError):
        shift_metric(x, y, radius=5)


def test_truncate_examples():
    spec = SubshiftSpec.full_shift(2)
    x = sample_path(spec, 9)
    y = truncate_environment(x, 2, q=np.array([1, 1]))
    assert np.array_equal(y.word(-2, 2), x.word(-2, 2))
    assert np.all(y.word(3, 40) == 1)
    assert np.all(y.word(-40, -3) == 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 12))
def test_truncate_orbit_closeness(seed, n):
    spec = SubshiftSpec(np.array([[0.5, 0.5], [1.0, 0.0]]))
    x = sample_path(spec, seed)
    y = truncate_environment(x, n)
    w = y.word(-n - 30, n + 30)
    assert not np.any((w[:-1] == 1) & (w[1:] == 1))
    for k in range(-n, n + 1):
        d = shift_metric(x.shift(k), y.shift(k), radius=n + 40)
        assert d <= math.exp(-(n - abs(k))) + 1e-15


def test_truncate_distance_lower_bound():
    # distance reaches e^{-n} only when the copy deviates at |m| = n + 1
    spec = SubshiftSpec.full_shift(2)
    w = np.zeros(41, dtype=np.int64)
    w[20 + 4] = 1
    x = SymbolicPoint.from_word(spec, w, -20)
    y = truncate_environment(x, 3, q=np.array([0, 0]))
    assert shift_metric(x, y) == pytest.approx(math.exp(-3))
    z = truncate_environment(x, 4, q=np.array([0, 0]))
    assert shift_metric(x, z) == 0.0


def test_truncate_bad_rule():
    spec = SubshiftSpec(np.array([[0.5, 0.5], [1.0, 0.0]]))
    with pytest.raises(SubshiftError):
        truncate_environment(sample_path(spec, 0), 2, q=np.array([0, 1]))


def test_distortion_examples():
    full = SubshiftSpec.full_shift(2)
    assert bounded_distortion_ratio(full, (0, [0, 1]), (4, [1])).ratio == pytest.approx(1.0)
    spec = SubshiftSpec(P2)
    r = bounded_distortion_ratio(spec, (0, [0]), (2, [0]))
    assert r.ratio == pytest.approx(0.83 / (2 / 3)) and not r.empty
    far = bounded_distortion_ratio(spec, (0, [0]), (200, [0]))
    assert far.ratio == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(SubshiftError):
        bounded_distortion_ratio(spec, (0, [0, 1]), (1, [1]))
    no = SubshiftSpec(np.array([[0.5, 0.5], [1.0, 0.0]]))
    assert bounded_distortion_ratio(no, (0, [1]), (1, [1])).empty


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 6))
def test_distortion_is_measure_ratio(seed, gap):
    r = np.random.default_rng(seed)
    spec = SubshiftSpec(stochastic(r, 3))
    w1 = list(r.integers(0, 3, 2))
    w2 = list(r.integers(0, 3, 2))
    m = len(w1) - 1 + gap
    # sum over the unobserved letters in the gap
    joint = 0.0
    for fill in np.ndindex(*(3,) * (gap - 1)):
        joint += cylinder_measure(spec, 0, w1 + list(fill) + w2)
    want = joint / (cylinder_measure(spec, 0, w1) * cylinder_measure(spec, m, w2))
    assert bounded_distortion_ratio(spec, (0, w1), (m, w2)).ratio == pytest.approx(want, rel=1e-10)


def test_mixing_rate():
    spec = SubshiftSpec(P2)
    prof = mixing_profile(spec, 40)
    assert spec.second_eigenvalue_modulus() == pytest.approx(0.7)
    ratio = prof[1:20] / prof[:19]
    assert np.allclose(ratio, 0.7, atol=1e-8)


def test_orbit_examples():
    o = orbit(TorusMap("doubling"), Fraction(1, 3), 0, 3)
    assert o.points == [Fraction(1, 3), Fraction(2, 3)] * 2
    o = orbit(TorusMap("doubling"), Fraction(1, 5), 0, 4)
    assert o.points == [Fraction(k, 5) for k in (1, 2, 4, 3, 1)]
    o = orbit(TorusMap("cat"), (Fraction(1, 2), Fraction(1, 2)), 0, 1)
    assert o.points[1] == (Fraction(1, 2), Fraction(0))


def test_orbit_backward():
    o = orbit(TorusMap("doubling"), Fraction(1, 3), -5, 0, rng=1)
    pts = o.points
    for a, b in zip(pts, pts[1:]):
        assert (2 * a) % 1 == b
    c = orbit(TorusMap("cat"), (Fraction(1, 7), Fraction(3, 7)), -3, 3)
    assert c.points[3] == (Fraction(1, 7), Fraction(3, 7))
    with pytest.raises(PrecisionBudgetError):
        orbit(TorusMap("doubling", budget_bits=16), Fraction(1, 3), -40, 0, rng=0)
