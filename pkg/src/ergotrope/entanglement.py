"""Entanglement entropy of free-fermion ground states and its scaling.

All entropies are in nats.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticeBox, build_hamiltonian
from .linalg import SymTridiag, dense_eigen, tridiagonal_eigen
from .potentials import Free, draw_phases
from .spectral import EnergyWindow, ProjectionMatrix, fermi_projection

CLAMP = 1e-9
CLAMP_HARD = 1e-6


def binary_entropy(x):
    """``h(x) = -x ln x - (1 - x) ln(1 - x)`` with ``h(0) = h(1) = 0``."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -CLAMP) or np.any(arr > 1 + CLAMP):
        raise ValueError("binary entropy argument outside [0, 1]")
    p = np.clip(arr, 0.0, 1.0)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.where(p > 0, p * np.log(p), 0.0) - np.where(q > 0, q * np.log(q), 0.0)
    return float(out) if out.ndim == 0 else out


def entropy_of_block(P, block: LatticeBox, host: LatticeBox | None = None) -> float:
    """``Tr h(P_block)`` for a projection given on ``host``.

    ``P`` is a :class:`ProjectionMatrix` or a square array. In one
    dimension the host may be omitted and is taken from the index offset.
    """
    M = P.matrix if isinstance(P, ProjectionMatrix) else np.asarray(P)
    if host is None:
        if block.d != 1:
            raise ValueError("host box required for d > 1")
        off = P.index_offset if isinstance(P, ProjectionMatrix) else 0
        host = LatticeBox.interval(off, off + M.shape[0] - 1)
    if not host.contains(block):
        raise ValueError("block not inside host box")
    idx = host.indices(block.sites())
    mu = np.linalg.eigvalsh(M[np.ix_(idx, idx)])
    if mu.size and (mu.min() < -CLAMP_HARD or mu.max() > 1 + CLAMP_HARD):
        raise ValueError(f"block spectrum [{mu.min()}, {mu.max()}] leaves [0, 1]: not a projection")
    return float(binary_entropy(np.clip(mu, 0.0, 1.0)).sum())


@dataclass
class EntropyCurve:
    L: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    samples: int
    meta: dict = field(default_factory=dict)
    raw: np.ndarray | None = None  # (samples, len(L))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["L", "mean_S", "stderr", "samples"])
            for L, m, s in zip(self.L, self.mean, self.stderr):
                w.writerow([int(L), repr(float(m)), repr(float(s)), self.samples])


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r2: float
    fit_range: tuple

    @property
    def rate(self) -> float:
        return -self.slope

    @property
    def prefactor(self) -> float:
        return math.exp(self.intercept)

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "range": list(self.fit_range)}


def decay_fit(distances, values, fit_range=None) -> DecayFit:
    """Least-squares line through ``(n, ln value)``; ``R^2 = 0`` if degenerate."""
    n = np.asarray(distances, dtype=float)
    v = np.asarray(values, dtype=float)
    if fit_range is not None:
        lo, hi = fit_range
        keep = (n >= lo) & (n <= hi)
        n, v = n[keep], v[keep]
    keep = v > 1e-30
    n, v = n[keep], v[keep]
    if len(n) < 5:
        raise ValueError("decay fit needs at least 5 positive points")
    y = np.log(v)
    slope, intercept = np.polyfit(n, y, 1)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float(((y - (slope * n + intercept)) ** 2).sum())
    r2 = 0.0 if ss_tot <= 1e-300 else max(0.0, 1.0 - ss_res / ss_tot)
    rng = (float(n.min()), float(n.max())) if fit_range is None else tuple(fit_range)
    return DecayFit(float(slope), float(intercept), r2, rng)


def _eigen(H, eps_f=None):
    M = H.matrix
    if isinstance(M, SymTridiag):
        return tridiagonal_eigen(M, upper=eps_f)
    return dense_eigen(M, upper=eps_f)


def _entropy_task(args):
    spec, kernel, phase, eps_f, Ls, d, margin = args
    out = np.empty(len(Ls))
    if margin is not None:
        side = max(Ls) + 2 * margin
        host = LatticeBox.centered(side, d)
        P = fermi_projection(_eigen(build_hamiltonian(spec, phase, host, kernel), eps_f), eps_f)
        for i, L in enumerate(Ls):
            out[i] = entropy_of_block(P.matrix, LatticeBox.centered(L, d), host)
        return out
    # separate host of side 5L per block
    for i, L in enumerate(Ls):
        host = LatticeBox.centered(5 * L, d)
        P = fermi_projection(_eigen(build_hamiltonian(spec, phase, host, kernel), eps_f), eps_f)
        out[i] = entropy_of_block(P.matrix, LatticeBox.centered(L, d), host)
    return out


def _run(tasks, fn, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks))  # map preserves task order


def entropy_scaling_study(spec, eps_f: float, L_list, samples: int = 64, rng=0, kernel=None,
                          host_margin: int | None = None, stratified: bool = True,
                          jobs: int = 1) -> EntropyCurve:
    """Monte Carlo mean of ``S_Lambda(eps_f)`` over centred blocks of side ``L``.

    With ``host_margin`` one host of side ``max(L) + 2 * host_margin`` is
    diagonalised per sample and every block is cut from it. Without it,
    each block gets its own host of side ``5 L`` (margin ``2 L``).
    Phases are drawn once from ``rng``; results are reduced in sample order
    so ``jobs`` never changes the output.
    """
    Ls = [int(L) for L in L_list]
    if sorted(set(Ls)) != Ls:
        raise ValueError("L values must be strictly increasing")
    d = getattr(spec, "dim", 1)
    if isinstance(spec, Free):
        samples = 1
    side = max(Ls) + 2 * host_margin if host_margin is not None else None
    box = LatticeBox.centered(side, d) if side else None
    phases = draw_phases(spec, samples, rng, stratified=stratified, box=box) if not isinstance(spec, Free) else [0.0]
    tasks = [(spec, kernel, ph, eps_f, Ls, d, host_margin) for ph in phases]
    raw = np.array(_run(tasks, _entropy_task, jobs))
    se = raw.std(axis=0, ddof=1) / math.sqrt(len(raw)) if len(raw) > 1 else np.zeros(len(Ls))
    meta = {"eps_f": eps_f, "dim": d, "host_margin": host_margin, "stratified": stratified}
    return EntropyCurve(np.array(Ls), raw.mean(axis=0), se, len(raw), meta, raw)


@dataclass
class DecayStudy:
    distances: np.ndarray
    mean_P: np.ndarray
    stderr_P: np.ndarray
    mean_Q: np.ndarray
    stderr_Q: np.ndarray
    fit_P: DecayFit | None
    fit_Q: DecayFit | None
    filling: float  # mean fraction of occupied states, an estimate of N(eps_f)
    samples: int

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "mean_abs_P", "stderr_P", "mean_Q", "stderr_Q"])
            for row in zip(self.distances, self.mean_P, self.stderr_P, self.mean_Q, self.stderr_Q):
                w.writerow([int(row[0])] + [repr(float(x)) for x in row[1:]])


def _decay_task(args):
    spec, kernel, phase, eps_f, window, half, dist = args
    host = LatticeBox.interval(-half, half)
    H = build_hamiltonian(spec, phase, host, kernel)
    upper = max(eps_f, window.hi) if math.isfinite(window.hi) else None
    eig = _eigen(H, upper)
    V = eig.vectors
    i0 = half
    occ = eig.values <= eps_f
    row_P = np.abs(V[i0, occ] @ V[i0 + dist][:, occ].T)
    sel = window.contains(eig.values)
    row_Q = np.abs(V[i0 + dist][:, sel]) @ np.abs(V[i0, sel])
    return row_P, row_Q, occ.sum() / host.size


def projection_decay_study(spec, eps_f: float, distances, samples: int = 64, rng=0, window=None,
                           host_half: int | None = None, kernel=None, fit_range=(5, 40),
                           stratified: bool = True, jobs: int = 1) -> DecayStudy:
    """Monte Carlo ``E|P(0, n)|`` and ``E Q_I(0, n)`` on a host ``[-H, H]``.

    ``window`` defaults to ``(-inf, eps_f]``. Exponential fits are attached
    when enough positive points fall in ``fit_range``.
    """
    dist = np.asarray(distances, dtype=np.int64)
    window = EnergyWindow.below(eps_f) if window is None else window
    half = int(host_half) if host_half is not None else int(2 * dist.max() + 50)
    if half < dist.max():
        raise ValueError("host box smaller than the largest distance")
    if isinstance(spec, Free):
        phases = [0.0]
    else:
        phases = draw_phases(spec, samples, rng, stratified=stratified,
                             box=LatticeBox.interval(-half, half))
    res = _run([(spec, kernel, ph, eps_f, window, half, dist) for ph in phases], _decay_task, jobs)
    Pm = np.array([r[0] for r in res])
    Qm = np.array([r[1] for r in res])
    k = len(res)
    se = (lambda A: A.std(axis=0, ddof=1) / math.sqrt(k)) if k > 1 else (lambda A: np.zeros(A.shape[1]))

    def fit(vals):
        try:
            return decay_fit(dist, vals, fit_range)
        except ValueError:
            return None

    mP, mQ = Pm.mean(axis=0), Qm.mean(axis=0)
    return DecayStudy(dist, mP, se(Pm), mQ, se(Qm), fit(mP), fit(mQ),
                      float(np.mean([r[2] for r in res])), k)


@dataclass(frozen=True)
class AreaLawVerdict:
    verdict: str
    slope: float
    slope_ci: float
    r2: float
    volume_slope: float
    volume_mean: float


def area_law_fit(curve: EntropyCurve, d: int = 1, area_tol: float = 0.02, enhanced_r2: float = 0.9,
                 volume_rel: float = 0.05, volume_min: float = 0.05, z: float = 1.96) -> AreaLawVerdict:
    """Classify ``S(L)`` as Area, EnhancedArea, Volume or Undetermined.

    ``S / L^{d-1}`` is regressed on ``ln L``. Volume is tested first: ``S / L^d``
    roughly constant (relative slope <= ``volume_rel``) at a level above
    ``volume_min``. Area needs ``|slope| <= area_tol`` with the ``z``-level
    interval containing 0; the interval combines the regression residuals
    with the Monte Carlo error of the means. EnhancedArea needs a positive
    slope with ``R^2 >= enhanced_r2``.
    """
    L = np.asarray(curve.L, dtype=float)
    if len(L) < 4 or L.max() / L.min() < 3:
        raise ValueError("need at least 4 L values spanning a factor >= 3")
    S = np.asarray(curve.mean, dtype=float)
    se = np.asarray(curve.stderr, dtype=float) if curve.stderr is not None else np.zeros_like(S)
    x = np.log(L)
    xc = x - x.mean()
    w = xc / (xc**2).sum()  # slope = w . y

    def line(y, yerr):
        slope = float(w @ y)
        icpt = float(y.mean() - slope * x.mean())
        resid = y - (slope * x + icpt)
        dof = len(y) - 2
        s_reg = math.sqrt((resid**2).sum() / dof / (xc**2).sum()) if dof > 0 else 0.0
        s_mc = math.sqrt(float((w**2 * yerr**2).sum()))
        ss_tot = float(((y - y.mean()) ** 2).sum())
        r2 = 0.0 if ss_tot <= 1e-300 else max(0.0, 1 - float((resid**2).sum()) / ss_tot)
        return slope, math.hypot(s_reg, s_mc), r2

    yv = S / L**d
    vslope, _, _ = line(yv, se / L**d)
    vmean = float(yv.mean())
    ya = S / L ** (d - 1)
    slope, s_err, r2 = line(ya, se / L ** (d - 1))
    ci = z * s_err
    if vmean > volume_min and abs(vslope) <= volume_rel * vmean:
        verdict = "Volume"
    elif abs(slope) <= area_tol and abs(slope) <= ci + 1e-15:
        verdict = "Area"
    elif slope > 0 and r2 >= enhanced_r2:
        verdict = "EnhancedArea"
    else:
        verdict = "Undetermined"
    return AreaLawVerdict(verdict, slope, ci, r2, vslope, vmean)
