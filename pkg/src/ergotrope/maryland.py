"""Exact eigenpairs of the one-dimensional Maryland model.

For ``V(n) = g tan pi (omega + n alpha)`` every eigenvalue is a shifted
copy ``lambda_l = lambda_0(omega + l alpha)`` of one function, found by
inverting the integrated density of states, and every eigenvector is a
translate ``psi_l(n) = psi_0(lambda_l, n - l)``. ``psi_0`` is a Fourier
integral over the circle, evaluated here by the trapezoidal rule (FFT),
which is spectrally accurate for these analytic periodic integrands.

Routines in this module assume ``g > 0`` internally; negative couplings
are mapped onto positive ones by the reflection ``n -> -n``,
``omega -> -omega``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .arithmetic import Frequency, torus_phases

RESONANCE_TOL = 1e-12
T_TAIL = 1e-12


class ResonanceError(ArithmeticError):
    def __init__(self, m):
        self.m = m
        super().__init__(f"small divisor |1 - exp(2 pi i alpha m)| < {RESONANCE_TOL:g} at m = {m}")


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class MarylandParams:
    g: float
    alpha: Frequency
    omega: float = 0.0
    order: int = 4096
    m_t: int | None = None

    def __post_init__(self):
        if self.g == 0:
            raise ValueError("g must be nonzero")
        if self.order < 256:
            raise ValueError("quadrature order must be >= 256")
        if self.alpha.is_vector:
            raise ValueError("only the one-dimensional model is supported")


@dataclass(frozen=True)
class EtaRoot:
    eta: complex
    gamma: float
    phi: float


def _theta(K: int) -> np.ndarray:
    return 2 * np.pi * np.arange(K) / K


def dos(lam, g: float, order: int = 4096):
    """Density of states: circle average of Cauchy densities at ``2 cos(theta)``."""
    c = 2 * np.cos(_theta(order))
    lam = np.asarray(lam, dtype=float)
    g = abs(g)
    out = ((g / np.pi) / ((c[None, :] - lam.reshape(-1, 1)) ** 2 + g * g)).mean(axis=1)
    return float(out[0]) if lam.ndim == 0 else out.reshape(lam.shape)


def ids(lam, g: float, order: int = 4096):
    """Integrated density of states ``N(lam) = int_{-inf}^{lam} n(s) ds``."""
    c = 2 * np.cos(_theta(order))
    lam = np.asarray(lam, dtype=float)
    g = abs(g)
    out = (0.5 + np.arctan((lam.reshape(-1, 1) - c[None, :]) / g) / np.pi).mean(axis=1)
    return float(out[0]) if lam.ndim == 0 else out.reshape(lam.shape)


def ids_inverse(target: float, g: float, order: int = 4096, tol: float = 1e-10) -> float:
    """Solve ``N(lam) = target`` for ``target`` in (0, 1)."""
    if not (tol < target < 1 - tol):
        raise ValueError(f"IDS target {target!r} too close to 0 or 1 (eigenvalue at infinity)")
    g = abs(g)
    # Cauchy tails: N(lam) ~ g / (pi |lam|) far out, so this bracket suffices
    span = 4.0 + g / (math.pi * min(target, 1 - target))
    f = lambda x: ids(x, g, order) - target
    lo, hi = -span, span
    while f(lo) > 0:
        lo *= 2
    while f(hi) < 0:
        hi *= 2
    lam = brentq(f, lo, hi, xtol=1e-15 * max(1.0, span), rtol=1e-15, maxiter=500)
    if abs(f(lam)) > tol:
        raise RuntimeError("IDS inversion did not reach tolerance")
    return lam


def label_target(params: MarylandParams, l: int) -> float:
    """IDS value of the eigenvalue with label ``l``.

    ``tan(pi x)`` runs from ``-inf`` to ``+inf`` as ``x`` crosses the pole at
    ``1/2``, so the label phase is offset by half a period:
    ``N(lambda_l) = frac(omega + l alpha + 1/2)`` for ``g > 0``.
    """
    x = torus_phases(params.omega + 0.5, params.alpha, np.array([l]))[0]
    return float(x) if params.g > 0 else float(1.0 - x)


def label_to_eigenvalue(params: MarylandParams, l: int) -> float:
    return ids_inverse(label_target(params, l), params.g, params.order)


def eta_root(lam: float, g: float) -> EtaRoot:
    """Root of ``eta^2 - (lam + i g) eta + 1 = 0`` inside the unit disc."""
    z = complex(lam, g)
    r = np.sqrt(z * z - 4)
    a, b = (z + r) / 2, (z - r) / 2
    eta = a if abs(a) < abs(b) else b
    return EtaRoot(complex(eta), float(-math.log(abs(eta))), float(-np.angle(eta)))


def fourier_coeff_l(m, lam: float, g: float):
    """``l_m = (2i/|m|) exp(-gamma |m|) sin(|m| phi)``; even in ``m``."""
    m = np.asarray(m)
    if np.any(m == 0):
        raise ValueError("l_0 is not defined; it is absorbed by the normalisation")
    r = eta_root(lam, abs(g))
    am = np.abs(m).astype(float)
    out = 2j / am * np.exp(-r.gamma * am) * np.sin(am * r.phi)
    return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class TCoefficients:
    """``t_m`` for ``m = 1..M`` (``plus``) and ``m = -1..-M`` (``minus``)."""

    plus: np.ndarray
    minus: np.ndarray
    rho: float

    @property
    def M(self) -> int:
        return len(self.plus)


def t_coefficients(params: MarylandParams, lam: float) -> TCoefficients:
    """Small-divisor coefficients ``t_m = l_m / (1 - exp(2 pi i alpha m))``.

    The truncation ``M`` is the last ``m`` with ``|t_m| >= 1e-12`` (unless
    fixed in ``params``). ``rho`` is the fitted exponential decay rate of
    ``|t_m|``.
    """
    r = eta_root(lam, abs(params.g))
    if params.m_t is not None:
        M = params.m_t
    else:
        M = int(math.ceil((math.log(2.0 / T_TAIL) + 10) / r.gamma)) + 16
        M = min(max(M, 8), params.order // 4)
    m = np.arange(1, M + 1)
    # 1 - exp(2 pi i alpha m), with alpha m reduced mod 1 exactly
    x = torus_phases(0.0, params.alpha, m)
    den = 1 - np.exp(2j * np.pi * x)
    small = np.nonzero(np.abs(den) < RESONANCE_TOL)[0]
    if small.size:
        raise ResonanceError(int(m[small[0]]))
    lm = 2j / m * np.exp(-r.gamma * m) * np.sin(m * r.phi)
    plus = lm / den
    minus = lm / np.conj(den)
    if params.m_t is None:
        big = np.nonzero(np.abs(plus) >= T_TAIL)[0]
        keep = int(big[-1]) + 1 if big.size else 1
        plus, minus, m = plus[:keep], minus[:keep], m[:keep]
    mag = np.abs(plus)
    ok = mag > 0
    rho = float(-np.polyfit(m[ok], np.log(mag[ok]), 1)[0]) if ok.sum() >= 2 else r.gamma
    return TCoefficients(plus, minus, rho)


def _psi0_grid(params: MarylandParams, lam: float, K: int, tc: TCoefficients) -> np.ndarray:
    """Fourier coefficients ``psi_0(lam, n)`` for all ``n`` mod ``K``."""
    g = abs(params.g)
    spec = np.zeros(K, dtype=complex)
    M = tc.M
    spec[1 : M + 1] = tc.plus
    spec[K - M :] = tc.minus[::-1]
    t = np.fft.ifft(spec) * K  # t(theta) = sum_m t_m e^{i m theta}
    th = _theta(K)
    h = np.exp(t) / (2 * np.cos(th) - lam - 1j * g)
    coef = np.fft.fft(h) / K  # mean of h e^{-i n theta}
    return coef / math.sqrt(math.pi * dos(lam, g, params.order) / g)


def psi0(params: MarylandParams, lam: float, n, rtol: float = 1e-8, max_order: int = 1 << 18):
    """``psi_0(lam, n)`` for integer(s) ``n``, normalised to unit l2 norm.

    The quadrature order is doubled until the requested values change by
    less than ``rtol`` relative to their maximum.
    """
    n = np.atleast_1d(np.asarray(n, dtype=np.int64))
    if params.g < 0:
        n = -n
    tc = t_coefficients(params, lam)
    K = params.order
    while K < 4 * (tc.M + 1) or K < 4 * (np.abs(n).max() + 1):
        K *= 2
    prev = _psi0_grid(params, lam, K, tc)[n % K]
    while True:
        K2 = 2 * K
        cur = _psi0_grid(params, lam, K2, tc)[n % K2]
        scale = max(np.abs(cur).max(), 1e-300)
        if np.abs(cur - prev).max() <= rtol * scale:
            return cur
        if K2 >= max_order:
            raise QuadratureError(f"psi_0 quadrature unconverged at order {K2}; raise max_order")
        K, prev = K2, cur


def eigenvector(params: MarylandParams, l: int, sites) -> tuple[float, np.ndarray]:
    """``(lambda_l, psi_l(sites))`` with ``psi_l(n) = psi_0(lambda_l, n - l)``."""
    lam = label_to_eigenvalue(params, l)
    return lam, psi0(params, lam, np.asarray(sites) - l)


@dataclass(frozen=True)
class VerifyRow:
    label: int
    predicted: float
    matched: float
    error: float
    overlap: float
    residual: float


def maryland_verify(params: MarylandParams, labels, half_width: int = 300,
                    center_slack: int = 2) -> list[VerifyRow]:
    """Compare predicted eigenpairs with exact diagonalisation on ``[-W, W]``.

    Each label is matched to the numerical eigenvalue nearest to its
    prediction among eigenvectors localised within ``center_slack`` sites
    of the label. The residual is ``||(H - lambda) psi||`` on interior
    sites relative to ``||psi||``.
    """
    from .lattice import LatticeBox, build_hamiltonian
    from .linalg import tridiagonal_eigen
    from .potentials import Maryland

    box = LatticeBox.interval(-half_width, half_width)
    H = build_hamiltonian(Maryland(params.g, params.alpha), params.omega, box)
    eig = tridiagonal_eigen(H.matrix)
    sites = box.sites()[:, 0]
    centers = sites[np.argmax(np.abs(eig.vectors), axis=0)]
    T = H.matrix
    rows = []
    for l in labels:
        lam, psi = eigenvector(params, int(l), sites)
        near = np.nonzero(np.abs(centers - l) <= center_slack)[0]
        pool = near if near.size else np.arange(eig.order)
        j = pool[np.argmin(np.abs(eig.values[pool] - lam))]
        v = eig.vectors[:, j]
        ov = abs(np.vdot(psi, v)) / np.linalg.norm(psi)
        Hp = T.diag * psi
        Hp[:-1] += psi[1:]
        Hp[1:] += psi[:-1]
        res = (Hp - lam * psi)[5:-5]
        rows.append(VerifyRow(int(l), lam, float(eig.values[j]), abs(lam - eig.values[j]),
                              float(ov), float(np.linalg.norm(res) / np.linalg.norm(psi))))
    return rows


def write_verify_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "predicted", "matched", "abs_error", "overlap", "residual"])
        for r in rows:
            w.writerow([r.label, repr(r.predicted), repr(r.matched), repr(r.error),
                        repr(r.overlap), repr(r.residual)])
