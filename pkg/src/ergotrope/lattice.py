"""Finite-volume Hamiltonians ``H = W + V`` on boxes of Z^d (Dirichlet)."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .linalg import DenseSym, SymTridiag
from .potentials import sample_potential

KERNEL_TOL = 1e-14


@dataclass(frozen=True)
class LatticeBox:
    """Product of integer intervals ``[lo_j, hi_j]``, linearised row-major."""

    ranges: tuple

    def __post_init__(self):
        r = tuple((int(lo), int(hi)) for lo, hi in self.ranges)
        if not r:
            raise ValueError("box needs at least one axis")
        for lo, hi in r:
            if hi < lo:
                raise ValueError(f"empty axis [{lo}, {hi}]")
        object.__setattr__(self, "ranges", r)

    @classmethod
    def interval(cls, lo: int, hi: int) -> "LatticeBox":
        return cls(((lo, hi),))

    @classmethod
    def cube(cls, M: int, d: int = 1) -> "LatticeBox":
        """Centred cube ``[-M, M]^d`` of side ``L = 2M + 1``."""
        return cls(((-M, M),) * d)

    @classmethod
    def centered(cls, L: int, d: int = 1) -> "LatticeBox":
        """Cube of side ``L`` around the origin (lower-biased when L is even)."""
        lo = -(L // 2)
        return cls(((lo, lo + L - 1),) * d)

    @property
    def d(self) -> int:
        return len(self.ranges)

    @property
    def shape(self) -> tuple:
        return tuple(hi - lo + 1 for lo, hi in self.ranges)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def lo(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.ranges])

    def sites(self) -> np.ndarray:
        """``(size, d)`` integer array of sites in linear order."""
        axes = [np.arange(lo, hi + 1) for lo, hi in self.ranges]
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1)

    def index(self, site) -> int:
        s = np.atleast_1d(np.asarray(site)) - self.lo
        if np.any(s < 0) or np.any(s >= self.shape):
            raise KeyError(f"site {site} not in box")
        return int(np.ravel_multi_index(tuple(s), self.shape))

    def indices(self, sites) -> np.ndarray:
        s = np.asarray(sites, dtype=np.int64)
        s = s[:, None] if s.ndim == 1 else s
        rel = s - self.lo
        if np.any(rel < 0) or np.any(rel >= np.array(self.shape)):
            raise KeyError("sites outside box")
        return np.ravel_multi_index(tuple(rel.T), self.shape)

    def contains(self, other: "LatticeBox") -> bool:
        return other.d == self.d and all(
            a <= c and d <= b for (a, b), (c, d) in zip(self.ranges, other.ranges))

    def shifted(self, k) -> "LatticeBox":
        k = np.broadcast_to(np.atleast_1d(k), (self.d,))
        return LatticeBox(tuple((lo + int(s), hi + int(s)) for (lo, hi), s in zip(self.ranges, k)))


@dataclass(frozen=True)
class Laplacian:
    """Nearest-neighbour hopping of unit strength."""

    def row_sum(self, d: int) -> float:
        return 2.0 * d


@dataclass(frozen=True)
class ExpDecay:
    """Hopping ``W(n) = amplitude * exp(-rate * |n|)`` for ``0 < |n| <= radius``.

    ``|n|`` is the Euclidean length. The default radius drops entries
    below ``1e-14``.
    """

    amplitude: float
    rate: float
    radius: int | None = None

    def __post_init__(self):
        if self.rate <= 0 or self.amplitude <= 0:
            raise ValueError("need positive amplitude and rate")
        if self.radius is None:
            R = math.ceil(-math.log(KERNEL_TOL / self.amplitude) / self.rate)
            object.__setattr__(self, "radius", max(R, 1))

    def value(self, dist):
        dist = np.asarray(dist, dtype=float)
        out = self.amplitude * np.exp(-self.rate * dist)
        return np.where((dist > 0) & (dist <= self.radius), out, 0.0)

    def row_sum(self, d: int) -> float:
        R = self.radius
        pts = np.array(list(itertools.product(range(-R, R + 1), repeat=d)), dtype=float)
        return float(self.value(np.linalg.norm(pts, axis=1)).sum())


KernelSpec = Laplacian | ExpDecay


@dataclass(frozen=True)
class LatticeOperator:
    """Assembled Hamiltonian on ``box``; ``matrix`` is tridiagonal or dense."""

    box: LatticeBox
    matrix: object
    potential: np.ndarray
    kernel: object

    @property
    def order(self) -> int:
        return self.box.size

    def to_dense(self) -> np.ndarray:
        return self.matrix.to_dense()

    def gershgorin_hull(self) -> tuple[float, float]:
        """Interval containing the spectrum: ``[min V - r, max V + r]``.

        ``r`` is the full-lattice row sum of ``|W|``, which bounds every
        Dirichlet row sum.
        """
        r = self.kernel.row_sum(self.box.d)
        return float(self.potential.min() - r), float(self.potential.max() + r)

    def dump_csv(self, path):
        """Write nonzero entries as ``row_site, col_site, value``."""
        M = self.to_dense()
        sites = self.box.sites()
        fmt = (lambda s: str(int(s[0]))) if self.box.d == 1 else (lambda s: ":".join(map(str, s)))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["row_site", "col_site", "value"])
            for i, j in zip(*np.nonzero(M)):
                w.writerow([fmt(sites[i]), fmt(sites[j]), repr(float(M[i, j]))])


def hopping_matrix(box: LatticeBox, kernel) -> np.ndarray:
    sites = box.sites()
    if isinstance(kernel, Laplacian):
        n = box.size
        W = np.zeros((n, n))
        for ax in range(box.d):
            nb = sites.copy()
            nb[:, ax] += 1
            ok = nb[:, ax] <= box.ranges[ax][1]
            i = np.nonzero(ok)[0]
            j = box.indices(nb[ok])
            W[i, j] = 1.0
            W[j, i] = 1.0
        return W
    diff = sites[:, None, :] - sites[None, :, :]
    return kernel.value(np.sqrt((diff.astype(float) ** 2).sum(-1)))


def build_hamiltonian(spec, phase, box: LatticeBox, kernel=None) -> LatticeOperator:
    """``H(m, n) = W(m - n) + V(phase, n) delta(m, n)`` on ``box``.

    The one-dimensional Laplacian case is returned as a
    :class:`SymTridiag` with unit off-diagonals, everything else dense.
    """
    kernel = Laplacian() if kernel is None else kernel
    if getattr(spec, "dim", box.d) != box.d:
        raise ValueError("potential dimension does not match box")
    V = np.asarray(sample_potential(spec, phase, box), dtype=float)
    lo = box.ranges[0][0]
    if box.d == 1 and isinstance(kernel, Laplacian):
        mat = SymTridiag(V, np.ones(box.size - 1), lo)
    else:
        W = hopping_matrix(box, kernel)
        W[np.diag_indices_from(W)] += V
        mat = DenseSym(W, lo if box.d == 1 else 0)
    return LatticeOperator(box, mat, V, kernel)


def restrict(H: LatticeOperator, sub) -> LatticeOperator:
    """Principal submatrix on ``sub`` (a box, or ``(lo, hi)`` in d=1)."""
    if not isinstance(sub, LatticeBox):
        sub = LatticeBox.interval(*sub)
    if not H.box.contains(sub):
        raise ValueError(f"{sub.ranges} is not contained in {H.box.ranges}")
    idx = H.box.indices(sub.sites())
    V = H.potential[idx]
    if isinstance(H.matrix, SymTridiag):
        (lo, hi), = sub.ranges
        mat = H.matrix.window(lo, hi)
    else:
        M = H.to_dense()[np.ix_(idx, idx)]
        mat = DenseSym(M, sub.ranges[0][0] if sub.d == 1 else 0)
    return LatticeOperator(sub, mat, V, H.kernel)
