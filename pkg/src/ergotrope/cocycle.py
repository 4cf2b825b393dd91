"""Schroedinger transfer matrices and Lyapunov exponents.

Products are renormalised after every step: the running matrix is divided
by its largest entry and the logarithm of that factor is accumulated, so
lengths far beyond the double-precision range are safe.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numba
import numpy as np

from .lattice import LatticeBox
from .linalg import SymTridiag, log_det_tridiagonal
from .potentials import MarylandSingularityError, draw_phases, sample_potential
from .spectral import EnergyWindow

log = logging.getLogger(__name__)


def transfer_matrix(lam: float, v: float) -> np.ndarray:
    """One-step matrix ``[[lam - v, -1], [1, 0]]`` (determinant 1)."""
    return np.array([[lam - v, -1.0], [1.0, 0.0]])


@numba.njit(cache=True)
def _product(lam, V):
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    acc = 0.0
    for i in range(V.shape[0]):
        t = lam - V[i]
        a, b, c, d = t * a - c, t * b - d, a, b
        s = max(abs(a), abs(b), abs(c), abs(d))
        a /= s
        b /= s
        c /= s
        d /= s
        acc += math.log(s)
    return a, b, c, d, acc


@numba.njit(cache=True)
def _norm2(a, b, c, d):
    # spectral norm of [[a, b], [c, d]]
    f = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = max(f * f - 4.0 * det * det, 0.0)
    return math.sqrt(0.5 * (f + math.sqrt(disc)))


@numba.njit(cache=True)
def _log_norms(lams, V):
    out = np.empty(lams.shape[0])
    for j in range(lams.shape[0]):
        a, b, c, d, acc = _product(lams[j], V)
        out[j] = acc + math.log(_norm2(a, b, c, d))
    return out


@dataclass
class CocycleAccumulator:
    """Renormalised running product ``Phi = A(v_{l-1}) ... A(v_k)``.

    The true product is ``exp(log_scale) * matrix``.
    """

    matrix: np.ndarray
    log_scale: float
    steps: int

    @classmethod
    def run(cls, lam: float, V) -> "CocycleAccumulator":
        a, b, c, d, acc = _product(float(lam), np.ascontiguousarray(V, dtype=float))
        return cls(np.array([[a, b], [c, d]]), acc, len(V))

    def log_norm(self) -> float:
        return self.log_scale + math.log(np.linalg.norm(self.matrix, 2))


def cocycle_log_norm(lam: float, V) -> float:
    """``log ||A(v_{n-1}) ... A(v_0)||`` (spectral norm)."""
    V = np.ascontiguousarray(V, dtype=float)
    if V.size == 0:
        raise ValueError("need at least one step")
    return float(_log_norms(np.array([float(lam)]), V)[0])


def transfer_from_determinants(V, lam: float) -> np.ndarray:
    """Product over ``V[0..n-1]`` built from restricted determinants.

    ``Phi = [[D(0, n-1), -D(1, n-1)], [D(0, n-2), -D(1, n-2)]]`` with
    ``D(x, y) = det(lam - H[x, y])``, ``D(x, x-1) = 1``, ``D(x, x-2) = 0``.
    """
    V = np.asarray(V, dtype=float)
    n = len(V)
    T = SymTridiag(V, np.ones(max(n - 1, 0)), 0)

    def D(x, y):
        if y == x - 1:
            return 1.0
        if y < x - 1:
            return 0.0
        s, lg = log_det_tridiagonal(T.window(x, y), lam)
        # det(lam - H) = (-1)^size det(H - lam)
        return (-1) ** (y - x + 1) * s * math.exp(lg)

    return np.array([[D(0, n - 1), -D(1, n - 1)], [D(0, n - 2), -D(1, n - 2)]])


def _potential_run(spec, phase, start: int, n: int) -> np.ndarray:
    return sample_potential(spec, phase, LatticeBox.interval(start, start + n - 1))


def _sample_runs(spec, n, samples, rng, start=0):
    """Yield potential strings of length ``n``; singular Maryland phases are redrawn."""
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    phases = draw_phases(spec, samples, gen)
    for k, ph in enumerate(phases):
        for _ in range(100):
            try:
                yield _potential_run(spec, ph, start, n)
                break
            except MarylandSingularityError as err:
                log.info("sample %d: %s", k, err)
                ph = draw_phases(spec, 1, gen, stratified=False)[0]
        else:
            raise RuntimeError("could not draw a regular phase")


def lyapunov_estimate(lam: float, spec, n: int = 10_000, samples: int = 16, rng=0) -> tuple[float, float]:
    """Monte Carlo ``(1/n) E log ||Phi_{0,n}||`` with its standard error."""
    g, se = _estimates(np.array([float(lam)]), spec, n, samples, rng)
    return float(g[0]), float(se[0])


def _estimates(lams, spec, n, samples, rng):
    if n < 1 or samples < 1:
        raise ValueError("need n >= 1 and samples >= 1")
    vals = np.empty((samples, len(lams)))
    for k, V in enumerate(_sample_runs(spec, n, samples, rng)):
        vals[k] = _log_norms(lams, np.ascontiguousarray(V)) / n
    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / math.sqrt(samples) if samples > 1 else np.zeros(len(lams))
    return mean, se


@dataclass(frozen=True)
class LyapunovScan:
    energies: np.ndarray
    gamma: np.ndarray
    stderr: np.ndarray
    samples: int
    steps: int

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "gamma", "stderr", "samples", "steps"])
            for e, g, s in zip(self.energies, self.gamma, self.stderr):
                w.writerow([repr(float(e)), repr(float(g)), repr(float(s)), self.samples, self.steps])


def lyapunov_scan(energies, spec, n: int = 10_000, samples: int = 16, rng=0) -> LyapunovScan:
    """Lyapunov estimates on an energy grid, sharing the sampled potentials."""
    E = np.asarray(energies, dtype=float)
    g, se = _estimates(E, spec, n, samples, rng)
    return LyapunovScan(E, g, se, samples, n)


@numba.njit(cache=True)
def _window_excess(lam, V, gamma, eps, nwin):
    """Largest ``|log||Phi_{k,l}|| - (l-k) gamma| - eps * nwin`` over sub-windows."""
    m = V.shape[0]
    worst = -np.inf
    for k in range(m):
        a, b, c, d = 1.0, 0.0, 0.0, 1.0
        acc = 0.0
        for l in range(k, m):
            t = lam - V[l]
            a, b, c, d = t * a - c, t * b - d, a, b
            s = max(abs(a), abs(b), abs(c), abs(d))
            a /= s
            b /= s
            c /= s
            d /= s
            acc += math.log(s)
            dev = abs(acc + math.log(_norm2(a, b, c, d)) - (l + 1 - k) * gamma) - eps * nwin
            if dev > worst:
                worst = dev
    return worst


def large_deviation_profile(lam: float, spec, eps: float, n_list, samples: int = 1000, rng=0,
                            gamma_ref: float | None = None, subwindows: bool = False,
                            ref_steps: int = 100_000, ref_samples: int = 8) -> dict:
    """Empirical ``P(|n^{-1} log ||Phi_{0,n}|| - gamma| > eps)`` for each ``n``.

    With ``subwindows`` the event is instead that some window
    ``-n <= k < l <= n`` has ``|log ||Phi_{k,l}|| - (l-k) gamma| > eps n``.
    ``gamma_ref`` defaults to a separate long-run estimate.
    """
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    ref_rng, run_rng = gen.spawn(2)
    if gamma_ref is None:
        gamma_ref, _ = lyapunov_estimate(lam, spec, ref_steps, ref_samples, ref_rng)
    out = {}
    for n, r in zip(n_list, run_rng.spawn(len(n_list))):
        n = int(n)
        hits = 0
        if subwindows:
            for V in _sample_runs(spec, 2 * n + 1, samples, r, start=-n):
                hits += _window_excess(float(lam), np.ascontiguousarray(V), gamma_ref, eps, n) > 0
        else:
            for V in _sample_runs(spec, n, samples, r):
                hits += abs(cocycle_log_norm(lam, V) / n - gamma_ref) > eps
        out[n] = hits / samples
    return out


def localized_interval(scan: LyapunovScan, gamma_min: float = 0.05, hull=None) -> list[EnergyWindow]:
    """Maximal grid runs with ``gamma - 2 stderr >= gamma_min``, bottom first.

    With ``hull`` (an :class:`EnergyWindow`) the runs are clipped to it.
    """
    ok = scan.gamma - 2 * scan.stderr >= gamma_min
    out = []
    i, n = 0, len(ok)
    while i < n:
        if not ok[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and ok[j + 1]:
            j += 1
        lo, hi = float(scan.energies[i]), float(scan.energies[j])
        if hull is not None:
            lo, hi = max(lo, hull.lo), min(hi, hull.hi)
        if lo <= hi:
            out.append(EnergyWindow(lo, hi))
        i = j + 1
    return out


def maryland_lyapunov_closed_form(lam, g, quartic: str = "corrected"):
    """``gamma = arcsinh(s)`` for the Maryland model.

    ``s`` is the positive root of ``4 s^4 + (4 - lam^2 - g^2) s^2 - g^2 = 0``,
    which follows from ``lam = 2 cosh(gamma) cos(phi)``,
    ``g = 2 sinh(gamma) sin(phi)``. ``quartic="printed"`` drops the leading
    factor 4 and is kept only to compare the two forms.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(np.asarray(g) == 0):
        raise ValueError("g must be nonzero")
    g2 = np.asarray(g, dtype=float) ** 2
    b = lam**2 + g2 - 4.0
    lead = {"corrected": 4.0, "printed": 1.0}[quartic]
    s2 = (b + np.sqrt(b * b + 4 * lead * g2)) / (2 * lead)
    out = np.arcsinh(np.sqrt(s2))
    return float(out) if out.ndim == 0 else out
