"""Subshifts of finite type with Markov measures, and hyperbolic torus maps.

Letters are 0-based throughout. Transition matrices are row-stochastic
with a left stationary vector, ``p P = p``.

Symbolic points are lazy two-sided sequences. A random point draws its
forward symbols from the rows of ``P`` and its backward symbols from the
reversed chain ``P_hat[i, j] = p[j] P[j, i] / p[i]``, each from its own
RNG stream, so the realised sequence does not depend on the order in
which sites are requested.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numba
import numpy as np

ROW_TOL = 1e-12


class SubshiftError(ValueError):
    pass


class InsufficientWindowError(RuntimeError):
    """Two points agree on the whole compared range without a certificate."""


class PrecisionBudgetError(RuntimeError):
    def __init__(self, required: int, budget: int):
        self.required = required
        super().__init__(f"precision budget {budget} bits exhausted; need {required} bits")


def _reach(adj: np.ndarray) -> np.ndarray:
    """Boolean reachability matrix (paths of length >= 1)."""
    k = adj.shape[0]
    R = adj.astype(bool).copy()
    for _ in range(int(math.ceil(math.log2(max(k, 2)))) + 1):
        R = R | ((R.astype(np.int64) @ R.astype(np.int64)) > 0)
    return R


def _check_rows(P: np.ndarray):
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise SubshiftError("transition matrix must be square")
    if np.any(P < 0) or not np.all(np.isfinite(P)):
        raise SubshiftError("transition matrix has negative or non-finite entries")
    bad = np.nonzero(np.abs(P.sum(axis=1) - 1.0) > ROW_TOL)[0]
    if bad.size:
        raise SubshiftError(f"rows {bad.tolist()} do not sum to 1")


def stationary_distribution(P, tol: float = 1e-14, max_iter: int = 200_000) -> np.ndarray:
    """Left stationary vector of an irreducible row-stochastic matrix.

    Power iteration on the lazy chain ``(I + P) / 2`` (Cesaro-type damping
    removes periodic oscillation), polished by one linear solve.
    """
    P = np.asarray(P, dtype=float)
    _check_rows(P)
    k = P.shape[0]
    R = _reach(P > 0)
    unreach = [j for j in range(k) if not R[0, j] or not R[j, 0]]
    if unreach:
        raise SubshiftError(f"reducible transition matrix: states {unreach} not mutually reachable from state 0")
    Q = 0.5 * (np.eye(k) + P)
    p = np.full(k, 1.0 / k)
    for _ in range(max_iter):
        nxt = p @ Q
        if np.abs(nxt - p).max() <= tol:
            p = nxt
            break
        p = nxt
    # polish: solve p (P - I) = 0 with sum(p) = 1
    M = np.vstack([(P - np.eye(k)).T, np.ones(k)])
    rhs = np.zeros(k + 1)
    rhs[-1] = 1.0
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if np.all(sol > 0) and np.abs(sol @ P - sol).max() <= np.abs(p @ P - p).max():
        p = sol
    p = p / p.sum()
    return p


@dataclass(frozen=True)
class SubshiftSpec:
    """Validated Markov subshift: adjacency ``A``, transitions ``P``, stationary ``p``."""

    P: np.ndarray
    A: np.ndarray = None
    p: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        _check_rows(P)
        k = P.shape[0]
        if k < 2:
            raise SubshiftError("alphabet needs at least 2 letters")
        A = (P > 0).astype(np.int8) if self.A is None else np.array(self.A, dtype=np.int8)
        if A.shape != P.shape or not np.all((A == 0) | (A == 1)):
            raise SubshiftError("adjacency must be a 0/1 matrix matching P")
        if np.any((P > 0) != (A == 1)):
            raise SubshiftError("P is not compatible with A (P_ij > 0 iff A_ij = 1)")
        p = stationary_distribution(P)
        # aperiodicity: some power m <= k^2 is entrywise positive
        B = A.astype(np.int64)
        M = B.copy()
        for _ in range(k * k):
            if np.all(M > 0):
                break
            M = ((M @ B) > 0).astype(np.int64)
        else:
            raise SubshiftError("transition matrix is periodic (no positive power up to k^2)")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "P_hat", (P.T * p[None, :]) / p[:, None])

    @classmethod
    def full_shift(cls, k: int = 2) -> "SubshiftSpec":
        return cls(np.full((k, k), 1.0 / k))

    @property
    def k(self) -> int:
        return self.P.shape[0]

    def second_eigenvalue_modulus(self) -> float:
        ev = np.sort(np.abs(np.linalg.eigvals(self.P)))[::-1]
        return float(ev[1])


def cylinder_measure(spec: SubshiftSpec, base: int, word: Sequence[int]) -> float:
    """Markov measure of the cylinder ``[base; a_0 ... a_m]``.

    Shift invariance makes the result independent of ``base``. A word that
    breaks adjacency has measure exactly 0.
    """
    w = [int(a) for a in word]
    if not w:
        raise SubshiftError("empty word")
    if min(w) < 0 or max(w) >= spec.k:
        raise SubshiftError("letter outside alphabet")
    out = float(spec.p[w[0]])
    for a, b in zip(w[:-1], w[1:]):
        if spec.A[a, b] == 0:
            return 0.0
        out *= spec.P[a, b]
    return out


@numba.njit(cache=True)
def _walk(start, cum, u, out):
    s = start
    k = cum.shape[1]
    for i in range(u.shape[0]):
        row = cum[s]
        j = 0
        while j < k - 1 and u[i] >= row[j]:
            j += 1
        s = j
        out[i] = s


def _cumulative(P):
    c = np.cumsum(P, axis=1)
    # close each row at its last allowed letter so rounding in the row sum
    # can never select a forbidden one
    for s in range(P.shape[0]):
        last = np.nonzero(P[s] > 0)[0][-1]
        c[s, last:] = 2.0
    return c


class _RandomTail:
    """Markov extension from a dedicated RNG stream."""

    def __init__(self, P, rng):
        self.cum = _cumulative(P)
        self.rng = rng

    def extend(self, last: int, count: int) -> np.ndarray:
        u = self.rng.random(count)
        out = np.empty(count, dtype=np.int64)
        _walk(int(last), self.cum, u, out)
        return out


class _RuleTail:
    """Deterministic extension by a letter map."""

    def __init__(self, rule: np.ndarray):
        self.rule = np.asarray(rule, dtype=np.int64)

    def extend(self, last: int, count: int) -> np.ndarray:
        out = np.empty(count, dtype=np.int64)
        s = int(last)
        for i in range(count):
            s = int(self.rule[s])
            out[i] = s
        return out


class _Core:
    def __init__(self, spec, center, fwd_tail, bwd_tail, fwd_word=(), bwd_word=(), det_radius=None):
        self.spec = spec
        self.fwd = [int(center), *map(int, fwd_word)]  # sites 0, 1, 2, ...
        self.bwd = list(map(int, bwd_word))  # sites -1, -2, ...
        self.fwd_tail = fwd_tail
        self.bwd_tail = bwd_tail
        self.det_radius = det_radius  # beyond this radius the tails follow fixed rules

    def ensure(self, lo: int, hi: int):
        need = hi + 1 - len(self.fwd)
        if need > 0:
            self.fwd.extend(self.fwd_tail.extend(self.fwd[-1], max(need, 64)).tolist())
        need = -lo - len(self.bwd)
        if need > 0:
            last = self.bwd[-1] if self.bwd else self.fwd[0]
            self.bwd.extend(self.bwd_tail.extend(last, max(need, 64)).tolist())

    def word(self, lo: int, hi: int) -> np.ndarray:
        self.ensure(lo, hi)
        n = np.arange(lo, hi + 1)
        fa = np.asarray(self.fwd, dtype=np.int64)
        ba = np.asarray(self.bwd if self.bwd else [0], dtype=np.int64)
        return np.where(n >= 0, fa[np.clip(n, 0, None)], ba[np.clip(-n - 1, 0, None)])


class SymbolicPoint:
    """A lazily materialised point of a two-sided subshift.

    ``symbol(n)`` and ``word(lo, hi)`` return letters; ``shift(k)`` is
    ``T^k`` with ``(T omega)_n = omega_{n+1}``.
    """

    def __init__(self, core: _Core, offset: int = 0):
        self._core = core
        self.offset = offset

    @property
    def spec(self) -> SubshiftSpec:
        return self._core.spec

    def symbol(self, n: int) -> int:
        return int(self._core.word(n + self.offset, n + self.offset)[0])

    def word(self, lo: int, hi: int) -> np.ndarray:
        """Letters on sites ``lo..hi`` inclusive."""
        if hi < lo:
            return np.empty(0, dtype=np.int64)
        return self._core.word(lo + self.offset, hi + self.offset)

    def shift(self, k: int = 1) -> "SymbolicPoint":
        return SymbolicPoint(self._core, self.offset + k)

    @property
    def materialized(self) -> tuple[int, int]:
        c = self._core
        return (-len(c.bwd) - self.offset, len(c.fwd) - 1 - self.offset)

    @property
    def deterministic_radius(self):
        """Radius beyond which symbols follow fixed rules, relative to site 0."""
        r = self._core.det_radius
        return None if r is None else r + abs(self.offset)

    @classmethod
    def from_word(cls, spec: SubshiftSpec, word: Sequence[int], lo: int,
                  successor=None, predecessor=None) -> "SymbolicPoint":
        """Point equal to ``word`` on ``[lo, lo+len-1]`` with rule-based tails.

        ``lo`` must be <= 0 and the word must cover site 0.
        """
        w = np.asarray(word, dtype=np.int64)
        hi = lo + len(w) - 1
        if lo > 0 or hi < 0:
            raise SubshiftError("word must cover site 0")
        for a, b in zip(w[:-1], w[1:]):
            if spec.A[a, b] == 0:
                raise SubshiftError(f"word violates adjacency at pair ({a}, {b})")
        succ = successor_rule(spec) if successor is None else np.asarray(successor)
        pred = predecessor_rule(spec) if predecessor is None else np.asarray(predecessor)
        core = _Core(spec, w[-lo], _RuleTail(succ), _RuleTail(pred),
                     fwd_word=w[-lo + 1 :], bwd_word=w[: -lo][::-1],
                     det_radius=max(hi, -lo))
        core.rules = (tuple(succ.tolist()), tuple(pred.tolist()))
        return cls(core)


def successor_rule(spec: SubshiftSpec) -> np.ndarray:
    """Default ``q(p)``: the smallest letter allowed after ``p``."""
    rows = spec.A.astype(bool)
    if not np.all(rows.any(axis=1)):
        raise SubshiftError("some letter has no allowed successor")
    return np.argmax(rows, axis=1)


def predecessor_rule(spec: SubshiftSpec) -> np.ndarray:
    """Smallest letter ``r`` with ``A[r, p] = 1`` for each ``p``."""
    cols = spec.A.astype(bool)
    if not np.all(cols.any(axis=0)):
        raise SubshiftError("some letter has no allowed predecessor")
    return np.argmax(cols, axis=0)


def sample_path(spec: SubshiftSpec, rng, window: int = 0) -> SymbolicPoint:
    """Draw a point from the two-sided stationary Markov measure.

    Three child streams are spawned from ``rng`` (a ``numpy`` Generator,
    seed or ``SeedSequence``): one for the letter at site 0, one for the
    forward tail and one for the backward tail.
    """
    if window < 0:
        raise SubshiftError("window must be >= 0")
    if isinstance(rng, np.random.Generator):
        children = rng.spawn(3)
    else:
        ss = rng if isinstance(rng, np.random.SeedSequence) else np.random.SeedSequence(rng)
        children = [np.random.default_rng(s) for s in ss.spawn(3)]
    r0, rf, rb = children
    c = np.cumsum(spec.p)
    center = int(min(np.searchsorted(c, r0.random(), side="right"), spec.k - 1))
    core = _Core(spec, center, _RandomTail(spec.P, rf), _RandomTail(spec.P_hat, rb))
    pt = SymbolicPoint(core)
    if window:
        pt.word(-window, window)
    return pt


def _same_rules(a: SymbolicPoint, b: SymbolicPoint) -> bool:
    ra = getattr(a._core, "rules", None)
    return ra is not None and ra == getattr(b._core, "rules", None)


def shift_metric(x: SymbolicPoint, y: SymbolicPoint, radius: int | None = None) -> float:
    """``exp(-N)`` with ``N`` the largest M such that the points agree on |n| <= M.

    Points differing at site 0 are at distance ``e`` (N = -1). Equality
    on the compared range returns 0 only when it is certified: the same
    underlying point, or identical deterministic tails beyond the range.
    Otherwise :class:`InsufficientWindowError` is raised.
    """
    if x._core is y._core and x.offset == y.offset:
        return 0.0
    if radius is None:
        lo = max(x.materialized[0], y.materialized[0])
        hi = min(x.materialized[1], y.materialized[1])
        radius = max(min(-lo, hi), 0)
        rx, ry = x.deterministic_radius, y.deterministic_radius
        if rx is not None and ry is not None:
            # rule-based tails can be generated as far as needed
            radius = max(radius, rx, ry)
    wx = x.word(-radius, radius)
    wy = y.word(-radius, radius)
    diff = wx != wy
    if diff.any():
        dist = np.abs(np.arange(-radius, radius + 1)[diff]).min()
        return math.exp(-(int(dist) - 1))
    rx, ry = x.deterministic_radius, y.deterministic_radius
    if rx is not None and ry is not None and _same_rules(x, y) and radius >= max(rx, ry):
        return 0.0
    raise InsufficientWindowError(f"points agree on |n| <= {radius}; enlarge the window to separate them")


def truncate_environment(x: SymbolicPoint, n: int, q=None, pred=None) -> SymbolicPoint:
    """Copy ``x`` on ``|m| <= n`` and continue both tails deterministically.

    Forward symbols follow the successor map ``q``. Backward symbols use
    ``q`` too when ``A[q(p), p] = 1`` for every letter, and otherwise a
    predecessor map (``pred`` or the smallest admissible letter) so that
    the result stays inside the subshift.
    """
    spec = x.spec
    if n < 0:
        raise SubshiftError("cutoff must be >= 0")
    q = successor_rule(spec) if q is None else np.asarray(q, dtype=np.int64)
    if np.any(spec.A[np.arange(spec.k), q] == 0):
        bad = np.nonzero(spec.A[np.arange(spec.k), q] == 0)[0]
        raise SubshiftError(f"successor rule not admissible for letters {bad.tolist()}")
    if pred is None:
        pred = q if np.all(spec.A[q, np.arange(spec.k)] == 1) else predecessor_rule(spec)
    pred = np.asarray(pred, dtype=np.int64)
    if np.any(spec.A[pred, np.arange(spec.k)] == 0):
        raise SubshiftError("predecessor rule not admissible")
    return SymbolicPoint.from_word(spec, x.word(-n, n), -n, successor=q, predecessor=pred)


class Distortion(NamedTuple):
    ratio: float
    empty: bool


def bounded_distortion_ratio(spec: SubshiftSpec, cyl1, cyl2) -> Distortion:
    """``nu(C1 & C2) / (nu(C1) nu(C2))`` for cylinders on disjoint supports.

    Each cylinder is ``(base, word)``; ``cyl2`` must start strictly after
    ``cyl1`` ends. By the Markov property the ratio reduces to
    ``(P^gap)[a_j, b_0] / p[b_0]``.
    """
    (n, w1), (m, w2) = cyl1, cyl2
    w1, w2 = list(map(int, w1)), list(map(int, w2))
    end = n + len(w1) - 1
    if m <= end:
        raise SubshiftError("cylinder supports overlap")
    if cylinder_measure(spec, n, w1) == 0 or cylinder_measure(spec, m, w2) == 0:
        return Distortion(0.0, True)
    gap = m - end
    bridge = np.linalg.matrix_power(spec.P, gap)[w1[-1], w2[0]]
    if bridge == 0:
        return Distortion(0.0, True)
    return Distortion(float(bridge / spec.p[w2[0]]), False)


def mixing_profile(spec: SubshiftSpec, m_max: int = 50) -> np.ndarray:
    """``max_ij |(P^m)_ij - p_j|`` for ``m = 1..m_max``."""
    out = np.empty(m_max)
    Pm = np.eye(spec.k)
    for m in range(m_max):
        Pm = Pm @ spec.P
        out[m] = np.abs(Pm - spec.p[None, :]).max()
    return out


# --- torus maps -------------------------------------------------------------


@dataclass(frozen=True)
class TorusMap:
    """Hyperbolic torus map acting on exact rationals mod 1.

    ``variant`` is ``"doubling"`` (d=1) or ``"cat"`` (d=2).
    """

    variant: str
    budget_bits: int = 4096

    def __post_init__(self):
        if self.variant not in ("doubling", "cat"):
            raise ValueError(f"unknown torus map {self.variant!r}")

    @property
    def dim(self) -> int:
        return 1 if self.variant == "doubling" else 2


_CAT = ((2, 1), (1, 1))
_CAT_INV = ((1, -1), (-1, 2))


def _frac(x: Fraction) -> Fraction:
    return x - (x.numerator // x.denominator)


def _as_point(tmap: TorusMap, w0):
    if tmap.dim == 1:
        x = w0[0] if isinstance(w0, (tuple, list)) else w0
        return (_frac(Fraction(x)),)
    return tuple(_frac(Fraction(c)) for c in w0)


def _apply(mat, pt):
    return tuple(_frac(mat[i][0] * pt[0] + mat[i][1] * pt[1]) for i in range(2))


@dataclass
class Orbit:
    indices: np.ndarray
    points: list
    preimage_bits: list


def orbit(tmap: TorusMap, w0, a: int, b: int, rng=None) -> Orbit:
    """Exact iterates ``T^n w0`` for ``n`` in ``[a, b]``.

    Backward doubling iterates need a fibre choice per step; the bits come
    from ``rng`` and are returned for reproducibility. Each backward step
    doubles the denominator, which is charged against the precision budget.
    """
    if b < a:
        raise ValueError("empty range")
    pt0 = _as_point(tmap, w0)
    fwd = {0: pt0}
    cur = pt0
    for n in range(1, max(b, 0) + 1):
        cur = (_frac(2 * cur[0]),) if tmap.variant == "doubling" else _apply(_CAT, cur)
        fwd[n] = cur
    bits = []
    if a < 0:
        if tmap.variant == "doubling":
            need = pt0[0].denominator.bit_length() + (-a)
            if need > tmap.budget_bits:
                raise PrecisionBudgetError(need, tmap.budget_bits)
            if rng is None:
                raise ValueError("backward doubling orbit needs an rng for preimage bits")
            gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
            bits = gen.integers(0, 2, size=-a).tolist()
        cur = pt0
        for i, n in enumerate(range(-1, a - 1, -1)):
            if tmap.variant == "doubling":
                cur = ((cur[0] + bits[i]) / 2,)
            else:
                cur = _apply(_CAT_INV, cur)
            fwd[n] = cur
    idx = np.arange(a, b + 1)
    pts = [fwd[int(n)] if tmap.dim > 1 else fwd[int(n)][0] for n in idx]
    return Orbit(idx, pts, bits)
