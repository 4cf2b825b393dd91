"""Fermi projections, eigenfunction correlators, Green functions and Bad/Res sets."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (EigenDecomposition, SingularShiftError, SymTridiag,
                     log_det_tridiagonal, solve_shifted)


@dataclass(frozen=True)
class EnergyWindow:
    """Interval of energies; endpoints may be infinite."""

    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError(f"empty window [{self.lo}, {self.hi}]")

    @classmethod
    def below(cls, eps_f: float) -> "EnergyWindow":
        """``(-inf, eps_f]``."""
        return cls(-math.inf, eps_f)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        lo = x >= self.lo if self.lo_closed else x > self.lo
        hi = x <= self.hi if self.hi_closed else x < self.hi
        return lo & hi


@dataclass(frozen=True)
class ProjectionMatrix:
    matrix: np.ndarray
    rank: int
    index_offset: int = 0

    def restrict(self, idx) -> np.ndarray:
        """Block on linear indices ``idx`` (row-major positions)."""
        idx = np.asarray(idx)
        return self.matrix[np.ix_(idx, idx)]


@dataclass(frozen=True)
class CorrelatorMatrix:
    matrix: np.ndarray
    window: EnergyWindow
    index_offset: int = 0


def _symmetrize(M):
    return 0.5 * (M + M.T)


def fermi_projection(eig: EigenDecomposition, eps_f: float) -> ProjectionMatrix:
    """``P = sum_{lambda_l <= eps_f} psi_l psi_l^T``.

    The comparison is inclusive: an eigenvalue equal to ``eps_f`` is filled.
    """
    mask = eig.values <= eps_f
    V = eig.vectors[:, mask]
    return ProjectionMatrix(_symmetrize(V @ V.T), int(mask.sum()), eig.index_offset)


def eigenfunction_correlator(eig: EigenDecomposition, window: EnergyWindow) -> CorrelatorMatrix:
    """``Q_I(m, n) = sum_{lambda_l in I} |psi_l(m)| |psi_l(n)|``."""
    A = np.abs(eig.vectors[:, window.contains(eig.values)])
    return CorrelatorMatrix(_symmetrize(A @ A.T), window, eig.index_offset)


def _matrix(H):
    return H.matrix if hasattr(H, "box") else H


def _index(H, site) -> int:
    if hasattr(H, "box"):
        return H.box.index(site)
    return int(site) - _matrix(H).index_offset


def green_column(H, lam: float, l) -> np.ndarray:
    """Column ``G(., l)`` of ``(H - lam)^{-1}``."""
    M = _matrix(H)
    rhs = np.zeros(M.order)
    rhs[_index(H, l)] = 1.0
    return solve_shifted(M, lam, rhs)


def green_entry(H, lam: float, k, l) -> float:
    """``(H - lam)^{-1}(k, l)`` for sites ``k`` and ``l``."""
    return float(green_column(H, lam, l)[_index(H, k)])


def green_via_determinants(T: SymTridiag, lam: float, k: int, l: int) -> tuple[int, float]:
    """``G(k, l)`` for ``k <= l`` from restricted determinants, as ``(sign, log|G|)``.

    ``G(k,l) = (-1)^{k+l} prod_{i=k}^{l-1} o_i * det(T[a,k-1] - lam)
    det(T[l+1,b] - lam) / det(T - lam)`` on sites ``[a, b]``; the
    off-diagonal product is 1 for unit hopping.
    """
    if l < k:
        k, l = l, k
    a, b = T.index_offset, T.index_offset + T.order - 1
    if not a <= k <= l <= b:
        raise ValueError("sites outside matrix")
    s0, d0 = log_det_tridiagonal(T, lam)
    if s0 == 0:
        raise SingularShiftError(T.order - 1, "lambda is an eigenvalue: determinant vanishes")
    s1, d1 = log_det_tridiagonal(T.window(a, k - 1), lam)
    s2, d2 = log_det_tridiagonal(T.window(l + 1, b), lam)
    if s1 == 0 or s2 == 0:
        return 0, -math.inf
    hop = T.offdiag[k - a : l - a]
    if np.any(hop == 0):
        return 0, -math.inf
    sign = (-1) ** ((k + l) % 2) * int(np.prod(np.sign(hop))) * s0 * s1 * s2
    return int(sign), float(d1 + d2 - d0 + np.log(np.abs(hop)).sum())


def bad_membership(H_box, lam: float, eps: float) -> bool:
    """``max(|G(c, c+n)|, |G(c, c-n)|) >= eps`` on a box ``[c-n, c+n]``.

    An eigenvalue of the box counts as bad.
    """
    M = _matrix(H_box)
    n2 = M.order - 1
    if n2 % 2:
        raise ValueError("Bad set needs a box of odd length centred at c")
    c = n2 // 2
    rhs = np.zeros(M.order)
    rhs[c] = 1.0
    try:
        col = solve_shifted(M, lam, rhs)
    except SingularShiftError:
        return True
    return bool(max(abs(col[0]), abs(col[-1])) >= eps)


def res_membership(H_box, lam: float, eps: float, eig: EigenDecomposition | None = None) -> bool:
    """``dist(lam, spec H_box) <= eps``."""
    if eig is None:
        from .linalg import dense_eigen, tridiagonal_eigen

        M = _matrix(H_box)
        eig = tridiagonal_eigen(M) if isinstance(M, SymTridiag) else dense_eigen(M)
    return bool(np.min(np.abs(eig.values - lam)) <= eps)


def default_time_grid(t_max: float = 1e4, n_linear: int = 2000, dt: float = 1e-2) -> np.ndarray:
    """Doubling grid ``dt * 2^j`` up to ``t_max`` merged with a linear grid."""
    j = np.arange(int(math.floor(math.log2(t_max / dt))) + 1)
    return np.unique(np.concatenate([dt * 2.0**j, np.linspace(0, t_max, n_linear)]))


def dynamical_amplitude(eig: EigenDecomposition, window: EnergyWindow, m, n, times=None,
                        box=None) -> float:
    """``max_t |sum_{lambda_l in I} exp(-i t lambda_l) psi_l(m) psi_l(n)|`` over ``times``.

    A lower bound for the supremum over all times.
    """
    times = default_time_grid() if times is None else np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("empty time grid")
    i = box.index(m) if box is not None else int(m) - eig.index_offset
    j = box.index(n) if box is not None else int(n) - eig.index_offset
    sel = window.contains(eig.values)
    w = eig.vectors[i, sel] * eig.vectors[j, sel]
    if w.size == 0:
        return 0.0
    lam = eig.values[sel]
    out = 0.0
    for chunk in np.array_split(times, max(1, times.size * w.size // 2_000_000 + 1)):
        amp = np.abs(np.exp(-1j * np.outer(chunk, lam)) @ w)
        out = max(out, float(amp.max()))
    return out


def spectrum_hull(eig: EigenDecomposition) -> EnergyWindow:
    if eig.order == 0:
        raise ValueError("empty spectrum")
    return EnergyWindow(float(eig.values[0]), float(eig.values[-1]))


def localization_center(psi, index_offset: int = 0) -> int:
    """Site of the largest ``|psi|``; ties go to the smallest site."""
    a = np.abs(np.asarray(psi))
    if a.size == 0 or not np.any(a > 0):
        raise ValueError("zero vector has no localisation centre")
    return int(np.argmax(a)) + index_offset
