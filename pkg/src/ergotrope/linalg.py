"""Symmetric eigensolvers, scaled determinants and shifted linear solves.

Two routes are available for every decomposition:

* ``method="lapack"`` (default) delegates to LAPACK through numpy/scipy;
* the in-house routes, implicit-shift QL on tridiagonals (``"ql"``),
  Householder reduction followed by QL (``"householder"``) and cyclic
  Jacobi for small dense matrices (``"jacobi"``).

The in-house routes are deterministic, dependency-free oracles for the
LAPACK path and are exercised by the test-suite against each other.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numba
import numpy as np
import scipy.linalg as sla

DENSE_CAP = 2500
JACOBI_CAP = 64


class SingularShiftError(ArithmeticError):
    """Raised when ``M - lambda`` is numerically singular.

    ``pivot`` is the (0-based) elimination step at which it was detected.
    """

    def __init__(self, pivot: int, msg: str | None = None):
        self.pivot = pivot
        super().__init__(msg or f"singular shift: pivot {pivot} vanished")


@dataclass(frozen=True)
class SymTridiag:
    """Real symmetric tridiagonal matrix with a lattice index offset."""

    diag: np.ndarray
    offdiag: np.ndarray
    index_offset: int = 0

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float).reshape(-1)
        o = np.asarray(self.offdiag, dtype=float).reshape(-1)
        if len(d) and len(o) != len(d) - 1:
            raise ValueError("offdiag must have length len(diag) - 1")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", o)

    @property
    def order(self) -> int:
        return len(self.diag)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.order) + self.index_offset

    def to_dense(self) -> np.ndarray:
        m = np.diag(self.diag)
        if self.order > 1:
            m += np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)
        return m

    def norm(self) -> float:
        """Infinity norm (max absolute row sum)."""
        if self.order == 0:
            return 0.0
        row = np.abs(self.diag).copy()
        row[:-1] += np.abs(self.offdiag)
        row[1:] += np.abs(self.offdiag)
        return float(row.max())

    def window(self, lo: int, hi: int) -> "SymTridiag":
        """Principal submatrix on sites ``lo..hi`` (inclusive labels)."""
        a, b = lo - self.index_offset, hi - self.index_offset
        if hi < lo:
            return SymTridiag(np.empty(0), np.empty(0), lo)
        if a < 0 or b >= self.order:
            raise ValueError(f"window [{lo},{hi}] outside matrix sites")
        return SymTridiag(self.diag[a : b + 1], self.offdiag[a:b], lo)


@dataclass(frozen=True)
class DenseSym:
    """Dense real symmetric matrix; ``index_offset`` labels row 0."""

    matrix: np.ndarray
    index_offset: int = 0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("DenseSym needs a square matrix")
        # symmetric by construction: keep the lower triangle
        low = np.tril(m)
        m = low + np.tril(m, -1).T
        object.__setattr__(self, "matrix", m)

    @property
    def order(self) -> int:
        return self.matrix.shape[0]

    def to_dense(self) -> np.ndarray:
        return self.matrix

    def norm(self) -> float:
        return float(np.abs(self.matrix).sum(axis=1).max()) if self.order else 0.0


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues with orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray
    index_offset: int = 0

    @property
    def order(self) -> int:
        return len(self.values)


def _as_dense(M) -> np.ndarray:
    if isinstance(M, (SymTridiag, DenseSym)):
        return M.to_dense()
    return np.asarray(M, dtype=float)


@numba.njit(cache=True)
def _tql(d, e, z):
    """Implicit-shift QL on a symmetric tridiagonal, accumulating into ``z``.

    ``d`` holds the diagonal, ``e[i]`` couples ``i`` and ``i + 1`` (the last
    entry is ignored). Both are overwritten; eigenvalues end up in ``d``.
    """
    n = d.shape[0]
    nz = z.shape[0]
    eps = 2.220446049250313e-16
    e[n - 1] = 0.0
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > 60:
                return False
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                for k in range(nz):
                    f = z[k, i + 1]
                    z[k, i + 1] = s * z[k, i] + c * f
                    z[k, i] = c * z[k, i] - s * f
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return True


@numba.njit(cache=True)
def _jacobi(a, v, max_sweeps):
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if off < 1e-30:
            return True
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return False


def _sorted(values, vectors, offset) -> EigenDecomposition:
    order = np.argsort(values, kind="stable")
    return EigenDecomposition(values[order], np.ascontiguousarray(vectors[:, order]), offset)


def tridiagonal_eigen(T: SymTridiag, method: str = "lapack", upper: float | None = None) -> EigenDecomposition:
    """Eigendecomposition of a symmetric tridiagonal matrix.

    With ``upper`` (LAPACK route only) just the eigenpairs with
    ``lambda <= upper`` are returned.
    """
    if T.order < 1:
        raise ValueError("empty matrix")
    if not (np.all(np.isfinite(T.diag)) and np.all(np.isfinite(T.offdiag))):
        raise ValueError("non-finite entries in tridiagonal matrix")
    if method == "lapack":
        if T.order == 1:
            return EigenDecomposition(T.diag.copy(), np.ones((1, 1)), T.index_offset)
        if upper is not None:
            w, v = sla.eigh_tridiagonal(T.diag, T.offdiag, select="v", select_range=(-np.inf, upper))
            return EigenDecomposition(w, v.reshape(T.order, len(w)), T.index_offset)
        w, v = sla.eigh_tridiagonal(T.diag, T.offdiag)
        return EigenDecomposition(w, v, T.index_offset)
    if upper is not None:
        raise ValueError("partial spectra need the lapack route")
    if method == "ql":
        d = T.diag.copy()
        e = np.zeros(T.order)
        e[: T.order - 1] = T.offdiag
        z = np.eye(T.order)
        if not _tql(d, e, z):
            raise RuntimeError("QL iteration did not converge")
        return _sorted(d, z, T.index_offset)
    raise ValueError(f"unknown tridiagonal method {method!r}")


def householder_tridiagonalize(M: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reduce a symmetric matrix to tridiagonal form, ``M = Q T Q^T``.

    Returns ``(diag, offdiag, Q)``.
    """
    A = np.array(M, dtype=float)
    n = A.shape[0]
    Q = np.eye(n)
    for k in range(n - 2):
        x = A[k + 1 :, k]
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        alpha = -math.copysign(nx, x[0])
        v = x.copy()
        v[0] -= alpha
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        v /= nv
        A[k + 1 :, k:] -= 2.0 * np.outer(v, v @ A[k + 1 :, k:])
        A[k:, k + 1 :] -= 2.0 * np.outer(A[k:, k + 1 :] @ v, v)
        Q[:, k + 1 :] -= 2.0 * np.outer(Q[:, k + 1 :] @ v, v)
    return np.diag(A).copy(), np.diag(A, 1).copy(), Q


def dense_eigen(M, method: str = "lapack", cap: int = DENSE_CAP, upper: float | None = None) -> EigenDecomposition:
    """Eigendecomposition of a dense symmetric matrix (optionally ``lambda <= upper``)."""
    offset = M.index_offset if isinstance(M, DenseSym) else 0
    A = _as_dense(M)
    n = A.shape[0]
    if n > cap:
        raise ValueError(f"matrix order {n} exceeds cap {cap}; use a smaller box")
    if not np.all(np.isfinite(A)):
        raise ValueError("non-finite entries in matrix")
    if method == "lapack":
        if upper is not None:
            w, v = sla.eigh(A, subset_by_value=(-np.inf, upper), driver="evr")
            return EigenDecomposition(w, v.reshape(n, len(w)), offset)
        w, v = np.linalg.eigh(A)
        return EigenDecomposition(w, v, offset)
    if upper is not None:
        raise ValueError("partial spectra need the lapack route")
    if method == "householder":
        d, e, Q = householder_tridiagonalize(A)
        ee = np.zeros(n)
        ee[: n - 1] = e
        if not _tql(d, ee, Q):
            raise RuntimeError("QL iteration did not converge")
        return _sorted(d, Q, offset)
    if method == "jacobi":
        if n > JACOBI_CAP:
            raise ValueError(f"Jacobi route limited to order <= {JACOBI_CAP}")
        a = np.array(A, dtype=float)
        v = np.eye(n)
        if not _jacobi(a, v, 100):
            raise RuntimeError("Jacobi sweeps did not converge")
        return _sorted(np.diag(a).copy(), v, offset)
    raise ValueError(f"unknown dense method {method!r}")


def log_det_tridiagonal(T: SymTridiag, lam: float) -> tuple[int, float]:
    """``det(T - lam)`` as ``(sign, log|det|)``.

    Three-term recurrence rescaled at every step; the empty determinant is
    ``(+1, 0.0)`` and an exact zero is ``(0, -inf)``.
    """
    return _log_det(T.diag, T.offdiag, float(lam))


@numba.njit(cache=True)
def _log_det(d, o, lam):
    n = d.shape[0]
    if n == 0:
        return 1, 0.0
    prev2 = 0.0
    prev = 1.0
    logscale = 0.0
    for k in range(n):
        if k == 0:
            cur = d[0] - lam
        else:
            cur = (d[k] - lam) * prev - o[k - 1] * o[k - 1] * prev2
        s = max(abs(cur), abs(prev))
        if s > 0.0:
            prev2 = prev / s
            prev = cur / s
            logscale += math.log(s)
        else:
            prev2 = prev
            prev = cur
    if prev == 0.0:
        return 0, -np.inf
    sign = 1 if prev > 0 else -1
    return sign, logscale + math.log(abs(prev))


@numba.njit(cache=True)
def _ldlt_solve(d, o, lam, b, guard):
    n = d.shape[0]
    piv = np.empty(n)
    ell = np.empty(max(n - 1, 0))
    piv[0] = d[0] - lam
    if abs(piv[0]) <= guard:
        return np.empty(0), 0
    for i in range(n - 1):
        ell[i] = o[i] / piv[i]
        piv[i + 1] = d[i + 1] - lam - ell[i] * o[i]
        if abs(piv[i + 1]) <= guard:
            return np.empty(0), i + 1
    y = b.copy()
    for i in range(n - 1):
        y[i + 1] -= ell[i] * y[i]
    for i in range(n):
        y[i] /= piv[i]
    for i in range(n - 2, -1, -1):
        y[i] -= ell[i] * y[i + 1]
    return y, -1


@numba.njit(cache=True)
def _tri_lu_solve(d, o, lam, b, guard):
    """Tridiagonal Gaussian elimination with partial pivoting."""
    n = d.shape[0]
    # rows hold (u0, u1, u2) = entries at columns i, i+1, i+2
    u0 = d - lam
    u1 = np.zeros(n)
    u2 = np.zeros(n)
    low = np.zeros(n)
    u1[: n - 1] = o
    low[1:] = o
    x = b.copy()
    for i in range(n - 1):
        if abs(low[i + 1]) > abs(u0[i]):
            # swap rows i and i+1
            a0, a1, a2 = u0[i], u1[i], u2[i]
            u0[i], u1[i], u2[i] = low[i + 1], u0[i + 1], u1[i + 1]
            low[i + 1], u0[i + 1], u1[i + 1] = a0, a1, a2
            tmp = x[i]
            x[i] = x[i + 1]
            x[i + 1] = tmp
        if abs(u0[i]) <= guard:
            return np.empty(0), i
        f = low[i + 1] / u0[i]
        u0[i + 1] -= f * u1[i]
        u1[i + 1] -= f * u2[i]
        x[i + 1] -= f * x[i]
    if abs(u0[n - 1]) <= guard:
        return np.empty(0), n - 1
    for i in range(n - 1, -1, -1):
        acc = x[i]
        if i + 1 < n:
            acc -= u1[i] * x[i + 1]
        if i + 2 < n:
            acc -= u2[i] * x[i + 2]
        x[i] = acc / u0[i]
    return x, -1


def solve_shifted(M, lam: float, rhs) -> np.ndarray:
    """Solve ``(M - lam) x = rhs`` for a tridiagonal or dense symmetric M.

    Tridiagonal systems use LDL^T, falling back to partially pivoted
    elimination when an LDL^T pivot vanishes. Raises
    :class:`SingularShiftError` when a pivot falls below ``1e-14 * ||M||``.
    """
    b = np.asarray(rhs, dtype=float)
    scale = max(M.norm() if hasattr(M, "norm") else np.abs(_as_dense(M)).sum(1).max(), 1.0)
    guard = 1e-14 * scale
    if isinstance(M, SymTridiag):
        x, piv = _ldlt_solve(M.diag, M.offdiag, float(lam), b, guard)
        if piv < 0:
            return x
        x, piv = _tri_lu_solve(M.diag, M.offdiag, float(lam), b, guard)
        if piv >= 0:
            raise SingularShiftError(piv)
        return x
    A = _as_dense(M) - lam * np.eye(len(b))
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularShiftError
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, perm = sla.lu_factor(A, check_finite=True)
    small = np.nonzero(np.abs(np.diag(lu)) <= guard)[0]
    if small.size:
        raise SingularShiftError(int(small[0]))
    return sla.lu_solve((lu, perm), b)
