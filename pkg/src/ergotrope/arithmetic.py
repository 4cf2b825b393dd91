"""Continued fractions, irrationality exponents and Diophantine margins.

Frequencies are stored at extended precision (mpmath, 256 bits by default)
so that continued-fraction expansions stay clean well past the point where
double precision corrupts the denominators (q_n ~ 1e7).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

DEFAULT_PREC = 256

_NAMED = {
    "golden": lambda: (mpmath.sqrt(5) - 1) / 2,
    "silver": lambda: mpmath.sqrt(2) - 1,
    "sqrt2-1": lambda: mpmath.sqrt(2) - 1,
    "sqrt3-1": lambda: mpmath.sqrt(3) - 1,
    "e-2": lambda: mpmath.e - 2,
    "pi-3": lambda: mpmath.pi - 3,
}


@dataclass(frozen=True)
class CFExpansion:
    """Convergents of a regular continued fraction.

    ``rational`` is set when the value is indistinguishable from the last
    convergent at working precision (or is an exact rational), in which
    case the list may be shorter than requested.
    """

    convergents: list[tuple[int, int]]
    rational: bool = False

    @property
    def denominators(self) -> list[int]:
        return [q for _, q in self.convergents]


class Frequency:
    """A frequency in (0, 1), scalar or vector, held at extended precision.

    Parameters
    ----------
    components : sequence
        Per-axis values. Accepts floats, decimal strings, ``Fraction`` or
        mpmath numbers. A ``Fraction`` is kept exactly.
    prec : int
        Working precision in bits (at least 80).
    """

    def __init__(self, value, prec: int = DEFAULT_PREC):
        if prec < 80:
            raise ValueError("Frequency needs at least 80 bits of mantissa")
        values = list(value) if isinstance(value, (list, tuple, np.ndarray)) else [value]
        comps, exact = [], []
        with mpmath.workprec(prec):
            for v in values:
                if isinstance(v, Fraction):
                    exact.append(v)
                    comps.append(mpmath.mpf(v.numerator) / v.denominator)
                else:
                    exact.append(None)
                    comps.append(mpmath.mpf(v))
        for c in comps:
            if not 0 < c < 1:
                raise ValueError(f"frequency component {c} outside (0, 1)")
        self.components = tuple(comps)
        self.exact = tuple(exact)
        self.prec = prec
        self._cf_cache = {}

    @classmethod
    def parse(cls, text: str, prec: int = DEFAULT_PREC) -> "Frequency":
        """Build from a name (``golden``, ``e-2`` ...), ``p/q`` or a decimal.

        Comma-separated entries give a vector frequency.
        """
        parts = [p.strip() for p in str(text).split(",")]
        vals = []
        with mpmath.workprec(prec):
            for p in parts:
                if p in _NAMED:
                    vals.append(_NAMED[p]())
                elif "/" in p:
                    vals.append(Fraction(p))
                else:
                    vals.append(mpmath.mpf(p))
        return cls(vals, prec=prec)

    @classmethod
    def golden(cls, prec: int = DEFAULT_PREC) -> "Frequency":
        return cls.parse("golden", prec)

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def is_vector(self) -> bool:
        return self.dim > 1

    @property
    def value(self):
        if self.is_vector:
            raise ValueError("vector frequency has no scalar value")
        return self.components[0]

    def __float__(self) -> float:
        return float(self.value)

    def as_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.components])

    def split(self) -> np.ndarray:
        """Per-axis three-term split ``a1 + a2 + a3`` used for exact phases.

        ``a1`` and ``a2`` carry 26 bits each, so ``n * a1`` and ``n * a2`` are
        exact in double precision for ``|n| < 2**26``.
        """
        out = np.empty((self.dim, 3))
        with mpmath.workprec(self.prec):
            for j, c in enumerate(self.components):
                a1 = mpmath.floor(c * 2**26) / 2**26
                r = c - a1
                a2 = mpmath.floor(r * 2**52) / 2**52
                out[j] = (float(a1), float(a2), float(r - a2))
        return out

    def __repr__(self) -> str:
        vals = ", ".join(mpmath.nstr(c, 20) for c in self.components)
        return f"Frequency({vals})"


def torus_phases(omega: float, alpha: Frequency, sites: np.ndarray) -> np.ndarray:
    """Return ``frac(omega + <n, alpha>)`` for each row ``n`` of ``sites``.

    Integer multiples of the frequency are reduced mod 1 piecewise on an
    exact split of alpha, keeping ~1e-16 absolute accuracy for |n| < 2**26.
    """
    sites = np.asarray(sites, dtype=np.int64)
    if sites.ndim == 1:
        sites = sites[:, None]
    if sites.shape[1] != alpha.dim:
        raise ValueError("site dimension does not match frequency dimension")
    if sites.size and np.abs(sites).max() >= 2**26:
        raise ValueError("site index too large for exact phase reduction")
    parts = alpha.split()
    acc = np.full(sites.shape[0], float(omega) % 1.0)
    for j in range(alpha.dim):
        n = sites[:, j].astype(np.float64)
        for a in parts[j]:
            acc += np.modf(n * a)[0]
    acc = np.mod(acc, 1.0)
    acc[acc >= 1.0] = 0.0
    return acc


def dist_to_int(x):
    """Distance to the nearest integer, ``|x - round(x)|``."""
    return np.abs(x - np.round(x))


def continued_fraction(alpha: Frequency, K: int) -> CFExpansion:
    """First ``K`` convergents ``(p_k, q_k)`` of a scalar frequency.

    The list starts with ``(0, 1)`` (``a_0 = 0`` for alpha in (0,1)).
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if alpha.is_vector:
        raise ValueError("continued fraction needs a scalar frequency")
    cached = alpha._cf_cache.get("cf")
    if cached is not None and (len(cached.convergents) >= K or cached.rational):
        return CFExpansion(cached.convergents[:K], cached.rational and len(cached.convergents) <= K)

    if alpha.exact[0] is not None:
        out = _cf_exact(alpha.exact[0], K)
    else:
        out = _cf_mp(alpha.value, alpha.prec, K)
    alpha._cf_cache["cf"] = out
    return out


def _cf_exact(x: Fraction, K: int) -> CFExpansion:
    p0, q0, p1, q1 = 1, 0, 0, 1  # (p_{-1}, q_{-1}), (p_0, q_0) with a_0 = 0
    convs = [(0, 1)]
    num, den = x.numerator, x.denominator
    while len(convs) < K:
        if num == 0:
            return CFExpansion(convs, True)
        a, rem = divmod(den, num)
        den, num = num, rem
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        convs.append((p1, q1))
    return CFExpansion(convs, num == 0 and len(convs) > 1)


def _cf_mp(x, prec: int, K: int) -> CFExpansion:
    convs = [(0, 1)]
    p0, q0, p1, q1 = 1, 0, 0, 1
    with mpmath.workprec(prec):
        tol = mpmath.mpf(2) ** (-(prec - 8))
        r = x
        while len(convs) < K:
            if abs(x - mpmath.mpf(p1) / q1) <= tol:
                return CFExpansion(convs, True)
            # denominators beyond ~2**(prec/2) are no longer resolved
            if q1 * q1 > 2 ** (prec - 16):
                return CFExpansion(convs, True)
            r = 1 / r
            a = int(mpmath.floor(r))
            r = r - a
            p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
            convs.append((p1, q1))
    return CFExpansion(convs, False)


def beta_from_denominators(q: Sequence[int]) -> float:
    """``max_k log(q_{k+1}) / q_k`` over consecutive denominators."""
    if len(q) < 2:
        raise ValueError("need at least two denominators")
    return max(math.log(q[k + 1]) / q[k] for k in range(len(q) - 1))


def beta_terms(alpha: Frequency, K: int) -> list[float]:
    """The individual ratios ``log(q_{k+1}) / q_k`` for k < K."""
    cf = continued_fraction(alpha, K + 1)
    if cf.rational:
        raise ValueError("beta undefined for rationals")
    q = cf.denominators
    return [math.log(q[k + 1]) / q[k] for k in range(len(q) - 1)]


def beta_irrationality(alpha: Frequency, K: int) -> float:
    """Finite-K estimate of the irrationality exponent beta(alpha).

    The limsup of ``log(q_{n+1})/q_n`` is replaced by the maximum over the
    first K terms; inspect :func:`beta_terms` for the tail trend.
    """
    if K < 3:
        raise ValueError("need K >= 3")
    return max(beta_terms(alpha, K))


def diophantine_margin(alpha: Frequency, tau: float, N: int) -> float:
    """``min_{0<|n|<=N} |n|**tau * dist(<n, alpha>, Z)``.

    ``|n|`` is the max-norm of the multi-index for vector frequencies.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not alpha.is_vector:
        n = np.arange(1, N + 1)
        d = dist_to_int(torus_phases(0.0, alpha, n))
        return float(np.min(n.astype(float) ** tau * d))
    # half-space of multi-indices suffices: n and -n share the distance
    grids = np.meshgrid(*[np.arange(-N, N + 1)] * alpha.dim, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    norm = np.abs(pts).max(axis=1)
    first_nz = np.argmax(pts != 0, axis=1)
    lead = pts[np.arange(len(pts)), first_nz]
    keep = (norm > 0) & (lead > 0)
    pts, norm = pts[keep], norm[keep]
    d = dist_to_int(torus_phases(0.0, alpha, pts))
    return float(np.min(norm.astype(float) ** tau * d))
