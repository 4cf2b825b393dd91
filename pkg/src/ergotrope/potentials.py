"""Ergodic potentials V(omega, n) on finite boxes of Z^d.

Torus families take a scalar phase ``omega`` in [0, 1) and a (vector)
frequency; the site phase is ``frac(omega + <n, alpha>)``. Subshift
families take a :class:`~ergotrope.subshift.SymbolicPoint` (or a torus
point for the cat map) and evaluate an observable along the orbit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Union

import numpy as np

from .arithmetic import Frequency, dist_to_int, torus_phases
from .subshift import (SubshiftSpec, SymbolicPoint, TorusMap, orbit,
                       sample_path)

MARYLAND_GUARD = 1e-8


class MarylandSingularityError(ValueError):
    """The phase at site ``n`` is within the guard of a tan pole."""

    def __init__(self, n, dist):
        self.site = n
        super().__init__(f"Maryland phase at site {n} is {dist:.3g} from a pole; resample omega")


@dataclass(frozen=True)
class Free:
    dim: int = 1


@dataclass(frozen=True)
class Maryland:
    g: float
    alpha: Frequency

    def __post_init__(self):
        if self.g == 0:
            raise ValueError("Maryland coupling must be nonzero")

    @property
    def dim(self) -> int:
        return self.alpha.dim


@dataclass(frozen=True)
class AlmostMathieu:
    g: float
    alpha: Frequency

    @property
    def dim(self) -> int:
        return self.alpha.dim


@dataclass(frozen=True)
class MonotoneSawtooth:
    """``g * v(frac(omega + <n, alpha>))`` with an increasing profile ``v``.

    The default profile is ``x ** xi``; ``slopes`` records the Lipschitz
    bounds ``(a_minus, a_plus)`` that ``v`` is meant to satisfy.
    """

    g: float
    alpha: Frequency
    xi: float = 1.0
    slopes: tuple[float, float] = (1.0, 1.0)
    profile: Callable | None = None

    def __post_init__(self):
        if self.xi < 1:
            raise ValueError("Hoelder exponent must be >= 1")
        lo, hi = self.slopes
        if not 0 < lo <= hi:
            raise ValueError("need 0 < a_minus <= a_plus")

    @property
    def dim(self) -> int:
        return self.alpha.dim

    def v(self, x):
        return self.profile(x) if self.profile is not None else default_sawtooth(x, self.xi)


# observables on symbolic / torus points -------------------------------------


@dataclass(frozen=True)
class DyadicCosine:
    """``cos 2 pi x`` with ``x = sum_j omega_j 2^{-j-1}`` over the forward bits.

    On the full 2-shift with the Bernoulli(1/2) measure this is the
    doubling map with Lebesgue measure observed through ``cos 2 pi x``.
    """

    bits: int = 53

    def along(self, point: SymbolicPoint, sites: np.ndarray) -> np.ndarray:
        lo, hi = int(sites.min()), int(sites.max())
        w = point.word(lo, hi + self.bits - 1).astype(float)
        if np.any(w > 1):
            raise ValueError("dyadic observable needs a binary alphabet")
        weights = 0.5 ** np.arange(1, self.bits + 1)
        # x(n) = sum_j w[n - lo + j] * 2^{-j-1}
        x = np.convolve(w, weights[::-1], mode="valid")
        return np.cos(2 * np.pi * x[sites - lo])


@dataclass(frozen=True)
class LocallyConstant:
    """``values[omega_0]``."""

    values: tuple

    def along(self, point: SymbolicPoint, sites: np.ndarray) -> np.ndarray:
        lo, hi = int(sites.min()), int(sites.max())
        w = point.word(lo, hi)
        return np.asarray(self.values, dtype=float)[w[sites - lo]]


@dataclass(frozen=True)
class TorusCosine:
    """``cos 2 pi omega_axis`` on a torus point."""

    axis: int = 0

    def at(self, pt) -> float:
        c = pt[self.axis] if isinstance(pt, tuple) else pt
        return math.cos(2 * math.pi * float(c))


@dataclass(frozen=True)
class TorusPhase:
    """Torus point for map-driven potentials; backward doubling uses the seed."""

    point: object
    preimage_seed: int = 0


@dataclass(frozen=True)
class SubshiftPotential:
    driver: Union[SubshiftSpec, TorusMap]
    observable: object = field(default_factory=DyadicCosine)
    g: float = 1.0

    @property
    def dim(self) -> int:
        return 1


PotentialSpec = Union[Free, Maryland, AlmostMathieu, MonotoneSawtooth, SubshiftPotential]


def default_sawtooth(x, xi: float = 1.0):
    """``x ** xi`` on [0, 1)."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(arr >= 1):
        raise ValueError("sawtooth argument must lie in [0, 1)")
    out = arr**xi
    return float(out) if out.ndim == 0 else out


def _sites(box) -> np.ndarray:
    s = box.sites() if hasattr(box, "sites") else np.asarray(box)
    s = np.asarray(s, dtype=np.int64)
    return s[:, None] if s.ndim == 1 else s


def site_phases(spec, omega, box) -> np.ndarray:
    """``frac(omega + <n, alpha>)`` for each site of ``box``."""
    return torus_phases(float(omega), spec.alpha, _sites(box))


def sample_potential(spec: PotentialSpec, phase, box) -> np.ndarray:
    """Potential values on ``box`` in its linear (row-major) site order."""
    sites = _sites(box)
    if isinstance(spec, Free):
        return np.zeros(len(sites))
    if isinstance(spec, Maryland):
        x = torus_phases(float(phase), spec.alpha, sites)
        dist = dist_to_int(x - 0.5)
        bad = np.nonzero(dist < MARYLAND_GUARD)[0]
        if bad.size:
            n = sites[bad[0]]
            raise MarylandSingularityError(tuple(n) if len(n) > 1 else int(n[0]), dist[bad[0]])
        return spec.g * np.tan(np.pi * x)
    if isinstance(spec, AlmostMathieu):
        x = torus_phases(float(phase), spec.alpha, sites)
        amp = 2 * spec.g if spec.dim == 1 else spec.g
        return amp * np.cos(2 * np.pi * x)
    if isinstance(spec, MonotoneSawtooth):
        x = torus_phases(float(phase), spec.alpha, sites)
        return spec.g * np.asarray(spec.v(x), dtype=float)
    if isinstance(spec, SubshiftPotential):
        n = sites[:, 0]
        if isinstance(spec.driver, TorusMap):
            tp = phase if isinstance(phase, TorusPhase) else TorusPhase(phase)
            orb = orbit(spec.driver, tp.point, int(n.min()), int(n.max()), rng=tp.preimage_seed)
            vals = np.array([spec.observable.at(p) for p in orb.points])
            return spec.g * vals[n - int(n.min())]
        return spec.g * spec.observable.along(phase, n)
    raise TypeError(f"unknown potential spec {type(spec).__name__}")


def shift_phase(spec: PotentialSpec, phase, k):
    """``T^k`` applied to a phase (``k`` is a site vector for d > 1)."""
    if isinstance(spec, SubshiftPotential):
        if isinstance(spec.driver, TorusMap):
            tp = phase if isinstance(phase, TorusPhase) else TorusPhase(phase)
            pt = orbit(spec.driver, tp.point, min(k, 0), max(k, 0), rng=tp.preimage_seed)
            return TorusPhase(pt.points[k - min(k, 0)], tp.preimage_seed)
        return phase.shift(int(k))
    if isinstance(spec, Free):
        return phase
    kk = np.atleast_1d(np.asarray(k, dtype=np.int64))[None, :]
    return float(torus_phases(float(phase), spec.alpha, kk)[0])


def task_streams(rng, count: int) -> list:
    """One independent generator per task index, derived from ``rng``.

    For an integer seed, task ``k`` uses ``SeedSequence(seed).spawn(count)[k]``,
    so its stream depends only on the master seed and ``k``.
    """
    if isinstance(rng, np.random.Generator):
        return rng.spawn(count)
    ss = rng if isinstance(rng, np.random.SeedSequence) else np.random.SeedSequence(rng)
    return [np.random.default_rng(c) for c in ss.spawn(count)]


def draw_phases(spec: PotentialSpec, count: int, rng, stratified: bool = True, box=None) -> list:
    """Independent phases for an ensemble of ``count`` realisations.

    Phase ``k`` is drawn from its own task stream (see :func:`task_streams`).
    Torus phases are stratified, ``omega_k = (k + u_k) / count``, unless
    ``stratified`` is off. Maryland phases that hit the pole guard on
    ``box`` are redrawn inside the same stratum. Subshift phases are
    Markov paths.
    """
    streams = task_streams(rng, count)
    if isinstance(spec, SubshiftPotential):
        if isinstance(spec.driver, TorusMap):
            out = []
            den = 1 << 62
            for s in streams:
                pt = tuple(Fraction(int(s.integers(0, den)), den) for _ in range(spec.driver.dim))
                out.append(TorusPhase(pt if spec.driver.dim > 1 else pt[0], int(s.integers(0, 2**31))))
            return out
        return [sample_path(spec.driver, s) for s in streams]
    out = []
    for k, s in enumerate(streams):
        for _ in range(1000):
            u = s.random()
            w = (k + u) / count if stratified else u
            if isinstance(spec, Maryland) and box is not None:
                try:
                    sample_potential(spec, w, box)
                except MarylandSingularityError:
                    continue
            break
        else:
            raise RuntimeError("could not draw a regular Maryland phase")
        out.append(w)
    return out
