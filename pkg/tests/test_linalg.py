import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from ergotrope.linalg import (DenseSym, SingularShiftError, SymTridiag, dense_eigen,
                              householder_tridiagonalize, log_det_tridiagonal, solve_shifted,
                              tridiagonal_eigen)

from conftest import free_chain, random_tridiag

TRI_METHODS = ["lapack", "ql"]
DENSE_METHODS = ["lapack", "householder", "jacobi"]


@pytest.mark.parametrize("method", TRI_METHODS)
def test_free_three_sites(method):
    e = tridiagonal_eigen(free_chain(3), method)
    assert np.allclose(e.values, [-math.sqrt(2), 0, math.sqrt(2)], atol=1e-13)


@pytest.mark.parametrize("method", TRI_METHODS)
def test_single_site(method):
    e = tridiagonal_eigen(SymTridiag([1.7], []), method)
    assert e.values.tolist() == [1.7]
    assert abs(e.vectors[0, 0]) == 1.0


@pytest.mark.parametrize("method", TRI_METHODS)
def test_two_by_two_vectors(method):
    e = tridiagonal_eigen(SymTridiag([2, 2], [1]), method)
    assert np.allclose(e.values, [1, 3])
    s = 1 / math.sqrt(2)
    assert np.allclose(np.abs(e.vectors[:, 0]), [s, s])
    assert e.vectors[0, 0] * e.vectors[1, 0] < 0
    assert e.vectors[0, 1] * e.vectors[1, 1] > 0


@pytest.mark.parametrize("n", [3, 50, 500])
@pytest.mark.parametrize("method", TRI_METHODS)
def test_free_dirichlet_closed_form(n, method):
    e = tridiagonal_eigen(free_chain(n), method)
    k = np.arange(1, n + 1)
    assert np.allclose(e.values, np.sort(2 * np.cos(k * np.pi / (n + 1))), atol=1e-10)


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        tridiagonal_eigen(SymTridiag([0, np.nan], [1]))


@pytest.mark.parametrize("method", DENSE_METHODS)
def test_dense_small(method):
    e = dense_eigen(DenseSym([[0, 1], [1, 0]]), method)
    assert np.allclose(e.values, [-1, 1])


@pytest.mark.parametrize("method", DENSE_METHODS)
def test_dense_diagonal_exact(method):
    d = np.array([3.0, -1.0, 2.5, 0.0])
    e = dense_eigen(DenseSym(np.diag(d)), method)
    assert e.values.tolist() == sorted(d.tolist())


@pytest.mark.parametrize("method", DENSE_METHODS)
def test_dense_reconstruction(method, rng):
    n = 60 if method == "jacobi" else 100
    A = rng.normal(size=(n, n))
    M = (A + A.T) / 2
    e = dense_eigen(DenseSym(M), method)
    V, w = e.vectors, e.values
    assert np.linalg.norm(V @ np.diag(w) @ V.T - M) <= 1e-8 * np.linalg.norm(M)
    assert np.abs(V.T @ V - np.eye(n)).max() <= 1e-10 * n
    assert np.allclose(w, np.linalg.eigvalsh(M), atol=1e-10)


def test_dense_cap():
    with pytest.raises(ValueError, match="smaller box"):
        dense_eigen(DenseSym(np.eye(5)), cap=4)


def test_upper_cut_matches_full(rng):
    T = random_tridiag(rng, 80)
    full = tridiagonal_eigen(T)
    part = tridiagonal_eigen(T, upper=0.3)
    assert np.allclose(part.values, full.values[full.values <= 0.3])
    D = dense_eigen(DenseSym(T.to_dense()), upper=0.3)
    assert np.allclose(D.values, part.values)


def test_householder_similarity(rng):
    A = rng.normal(size=(30, 30))
    M = A + A.T
    d, e, Q = householder_tridiagonalize(M)
    T = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    assert np.allclose(Q @ T @ Q.T, M, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(float, st.integers(2, 30), elements=st.floats(-5, 5)), st.data())
def test_interlacing_and_trace(diag, data):
    n = len(diag)
    off = data.draw(hnp.arrays(float, n - 1, elements=st.floats(0.1, 2)))
    T = SymTridiag(diag, off)
    w = tridiagonal_eigen(T, "ql").values
    assert w.sum() == pytest.approx(diag.sum(), abs=1e-9 * n)
    # Cauchy interlacing with the leading principal submatrix
    u = tridiagonal_eigen(T.window(0, n - 2), "ql").values
    tol = 1e-9
    assert np.all(w[:-1] <= u + tol) and np.all(u <= w[1:] + tol)


def test_log_det_examples():
    assert log_det_tridiagonal(free_chain(3), 1.0) == pytest.approx((1, 0.0), abs=1e-14)
    s, l = log_det_tridiagonal(free_chain(3), 0.0)
    assert s == 0 and l == -math.inf
    assert log_det_tridiagonal(SymTridiag([5.0], []), 2.0) == pytest.approx((1, math.log(3)))
    assert log_det_tridiagonal(SymTridiag([], []), 0.3) == (1, 0.0)


def test_log_det_no_overflow():
    T = SymTridiag(np.full(5000, 40.0), np.ones(4999))
    s, l = log_det_tridiagonal(T, 0.0)
    assert s == 1 and 5000 * math.log(39) < l < 5000 * math.log(41)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 25), st.floats(-4, 4), st.integers(0, 2**31))
def test_log_det_matches_slogdet(n, lam, seed):
    T = random_tridiag(np.random.default_rng(seed), n)
    s, l = log_det_tridiagonal(T, lam)
    s2, l2 = np.linalg.slogdet(T.to_dense() - lam * np.eye(n))
    if abs(l2) < 30 and s2 != 0:
        assert s == s2 and l == pytest.approx(l2, abs=1e-8)


def test_solve_examples():
    assert solve_shifted(DenseSym([[5.0]]), 0.0, [1.0]) == pytest.approx([0.2])
    x = solve_shifted(free_chain(3), 1.0, [1.0, 0, 0])
    assert x[2] == pytest.approx(1.0)


def test_solve_singular_pivot():
    with pytest.raises(SingularShiftError) as err:
        solve_shifted(free_chain(3), 0.0, [1.0, 0, 0])
    assert err.value.pivot >= 0
    with pytest.raises(SingularShiftError):
        solve_shifted(DenseSym([[1.0, 0], [0, 2.0]]), 2.0, [1.0, 1.0])


def test_solve_zero_leading_pivot_falls_back():
    # LDL^T stalls at the first pivot but the matrix is invertible
    x = solve_shifted(free_chain(2), 0.0, [1.0, 2.0])
    assert np.allclose(x, [2.0, 1.0])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.floats(-5, 5), st.integers(0, 2**31))
def test_solve_residual(n, lam, seed):
    r = np.random.default_rng(seed)
    T = random_tridiag(r, n)
    b = r.normal(size=n)
    M = T.to_dense() - lam * np.eye(n)
    if np.linalg.cond(M) > 1e8:
        return
    for A in (T, DenseSym(T.to_dense())):
        x = solve_shifted(A, lam, b)
        assert np.linalg.norm(M @ x - b) <= 1e-9 * max(1, np.linalg.norm(b)) * np.linalg.cond(M)
