"""Randomised checks shared by the unit and acceptance suites."""
import math

import numpy as np

from ergotrope.arithmetic import Frequency
from ergotrope.cocycle import transfer_from_determinants, transfer_matrix
from ergotrope.lattice import LatticeBox, build_hamiltonian
from ergotrope.linalg import DenseSym, SingularShiftError, SymTridiag, dense_eigen, tridiagonal_eigen
from ergotrope.potentials import AlmostMathieu, Free
from ergotrope.spectral import (EnergyWindow, bad_membership, default_time_grid, dynamical_amplitude,
                                eigenfunction_correlator, fermi_projection, green_entry,
                                green_via_determinants, res_membership)


def random_tridiag(rng, n, offset=0, scale=3.0):
    return SymTridiag(rng.uniform(-scale, scale, n),
                      rng.uniform(0.5, 1.5, n - 1) * rng.choice([-1, 1], n - 1), offset)


def _random_sym(r, n):
    if r.random() < 0.5:
        return random_tridiag(r, n).to_dense()
    A = r.normal(size=(n, n)) / math.sqrt(n)
    return A + A.T


def perturbation_counterexamples(r, pairs, grid=41):
    """Count lambda in Bad(M, e) outside Bad(M~, e/2) | Res(M~, sqrt e)."""
    bad = 0
    for _ in range(pairs):
        n = 2 * int(r.integers(1, 8)) + 1
        M = _random_sym(r, n)
        eps = float(10 ** r.uniform(-3, -0.5))
        E = r.normal(size=(n, n))
        E = E + E.T
        E *= r.uniform(0, 1) * eps**2 / 100 / np.linalg.norm(E, 2)
        Mt = M + E
        et = dense_eigen(DenseSym(Mt))
        lo, hi = np.linalg.eigvalsh(M)[[0, -1]]
        for lam in np.linspace(lo - 1, hi + 1, grid):
            if bad_membership(DenseSym(M), lam, eps) and not (
                    bad_membership(DenseSym(Mt), lam, eps / 2) or res_membership(Mt, lam, math.sqrt(eps), et)):
                bad += 1
    return bad



def correlator_domination_violations(r, instances):
    worst_p, worst_dyn = -np.inf, -np.inf
    alpha = Frequency.golden()
    times = default_time_grid(t_max=200.0, n_linear=400)
    for k in range(instances):
        g = [0.0, 0.5, 1.5, 3.0][k % 4]
        half = int(r.integers(5, 30))
        spec = Free() if g == 0 else AlmostMathieu(g, alpha)
        H = build_hamiltonian(spec, float(r.random()), LatticeBox.interval(-half, half))
        e = tridiagonal_eigen(H.matrix)
        eps_f = float(r.uniform(e.values[0] - 0.5, e.values[-1] + 0.5))
        P = fermi_projection(e, eps_f).matrix
        Q = eigenfunction_correlator(e, EnergyWindow(e.values[0] - 1, eps_f)).matrix
        worst_p = max(worst_p, float((np.abs(P) - Q).max()))
        lo = float(r.uniform(-5, 3))
        win = EnergyWindow(lo, lo + float(r.uniform(0.2, 4)))
        QI = eigenfunction_correlator(e, win).matrix
        m, n = (int(x) for x in r.integers(-half, half + 1, 2))
        amp = dynamical_amplitude(e, win, m, n, times)
        worst_dyn = max(worst_dyn, amp - QI[m + half, n + half])
    return worst_p, worst_dyn


def green_identity_worst(r, instances):
    """Largest relative mismatch of determinant Green entries and transfer products."""
    worst_g = worst_t = 0.0
    for _ in range(instances):
        n = int(r.integers(1, 60))
        T = random_tridiag(r, n, offset=int(r.integers(-20, 20)))
        lam = float(r.uniform(-5, 5))
        k, l = sorted(int(x) for x in r.integers(0, n, 2) + T.index_offset)
        try:
            g = green_entry(T, lam, k, l)
        except SingularShiftError:
            continue
        s, lg = green_via_determinants(T, lam, k, l)
        worst_g = max(worst_g, abs(s * math.exp(lg) - g) / abs(g))
        V = r.uniform(-3, 3, n)
        want = np.eye(2)
        for v in V:
            want = transfer_matrix(lam, v) @ want
        got = transfer_from_determinants(V, lam)
        worst_t = max(worst_t, float(np.abs(got - want).max() / np.abs(want).max()))
    return worst_g, worst_t
