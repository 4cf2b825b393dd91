import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from ergotrope.arithmetic import Frequency
from ergotrope.cocycle import maryland_lyapunov_closed_form
from ergotrope.maryland import (MarylandParams, ResonanceError, dos, eigenvector, eta_root,
                                fourier_coeff_l, ids, ids_inverse, label_target, label_to_eigenvalue,
                                maryland_verify, psi0, t_coefficients, write_verify_csv)

SQ2 = math.sqrt(2)


@pytest.fixture(scope="module")
def params():
    return MarylandParams(2.0, Frequency.golden(), 0.1)


def test_dos_examples():
    assert dos(0.0, 2.0) == pytest.approx(SQ2 / (4 * math.pi), abs=1e-13)
    lam = np.linspace(-7, 7, 57)
    assert np.allclose(dos(lam, 1.3), dos(-lam, 1.3), atol=1e-12)
    assert dos(10.0, 1.0) < 1.0 / (math.pi * 8**2)
    assert np.all(dos(lam, 0.4) > 0)


def test_dos_against_adaptive_quadrature():
    for lam, g in [(0.3, 0.5), (-1.7, 2.0), (2.5, 1.0)]:
        f = lambda th: (g / math.pi) / ((2 * math.cos(th) - lam) ** 2 + g * g) / (2 * math.pi)
        want, _ = quad(f, 0, 2 * math.pi, limit=200, epsabs=1e-14)
        assert dos(lam, g) == pytest.approx(want, rel=1e-10)


def test_ids_examples():
    assert ids(0.0, 2.0) == pytest.approx(0.5, abs=1e-15)
    assert ids(-1e6, 2.0) < 1e-5 and ids(1e6, 2.0) > 1 - 1e-5
    val, _ = quad(lambda x: dos(x, 2.0), -50, 50, limit=400)
    tail = ids(-50, 2.0) + 1 - ids(50, 2.0)
    assert val == pytest.approx(1 - tail, abs=1e-8)
    assert val == pytest.approx(1.0, abs=0.03)  # Cauchy tails beyond +-50 carry ~ 2g/(50 pi)


def test_ids_monotone():
    lam = np.linspace(-20, 20, 4001)
    assert np.all(ids(lam + 1e-3, 0.7) > ids(lam, 0.7))


def test_ids_derivative_is_dos():
    lam = np.linspace(-5, 5, 21)
    h = 1e-5
    assert np.allclose((ids(lam + h, 1.5) - ids(lam - h, 1.5)) / (2 * h), dos(lam, 1.5), atol=1e-8)


def test_ids_inverse_examples():
    assert ids_inverse(0.5, 2.0) == pytest.approx(0.0, abs=1e-12)
    assert ids_inverse(1e-4, 2.0) < -50
    assert ids_inverse(0.6, 2.0) > 0
    with pytest.raises(ValueError):
        ids_inverse(1e-12, 2.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-4, 1 - 1e-4), st.floats(0.2, 5))
def test_ids_roundtrip(target, g):
    assert abs(ids(ids_inverse(target, g), g) - target) <= 1e-10


def test_label_offset(params):
    # N(lambda_l) = frac(omega + l alpha + 1/2): omega = 0.4 puts label 0 at lambda = 1/2 shift
    p = MarylandParams(2.0, Frequency.golden(), 0.0)
    assert label_to_eigenvalue(p, 0) == pytest.approx(0.0, abs=1e-12)
    neg = MarylandParams(-2.0, Frequency.golden(), 0.1)
    assert label_target(neg, 3) == pytest.approx(1 - label_target(params, 3), abs=1e-15)
    vals = [label_to_eigenvalue(params, l) for l in range(-20, 21)]
    assert len(set(np.round(vals, 12))) == 41


def test_eta_root_examples():
    r = eta_root(0.0, 2.0)
    assert r.eta == pytest.approx(1j * (1 - SQ2), abs=1e-14)
    assert r.gamma == pytest.approx(math.log(1 + SQ2), abs=1e-14)
    assert r.phi == pytest.approx(math.pi / 2, abs=1e-14)
    for lam, g in [(0.0, 2.0), (2.0, 1.0), (-3.1, 0.4)]:
        r = eta_root(lam, g)
        other = complex(lam, g) - r.eta
        assert r.eta * other == pytest.approx(1.0, abs=1e-12)
        assert abs(r.eta) < 1


def test_eta_gamma_matches_closed_form():
    for lam in np.linspace(-6, 6, 49):
        for g in (0.5, 1.0, 2.0, 3.5):
            assert eta_root(lam, g).gamma == pytest.approx(maryland_lyapunov_closed_form(lam, g), abs=1e-10)


def test_fourier_coeff_examples():
    assert fourier_coeff_l(1, 0.0, 2.0) == pytest.approx(2j * (SQ2 - 1), abs=1e-14)
    assert abs(fourier_coeff_l(2, 0.0, 2.0)) < 1e-15
    m = np.arange(1, 40)
    assert np.all(np.abs(fourier_coeff_l(m, 0.0, 2.0)) <= 2 * np.exp(-0.88 * m))
    with pytest.raises(ValueError):
        fourier_coeff_l(0, 0.0, 2.0)


def test_fourier_coeff_is_phase_expansion():
    # l_m are the Fourier coefficients of log(c / conj c) = 2i arg c, c = 2 cos th - lam - i g
    lam, g, K = 0.7, 1.3, 4096
    th = 2 * np.pi * np.arange(K) / K
    logc = np.log(2 * np.cos(th) - lam - 1j * g)
    a = np.fft.fft(logc - np.conj(logc)) / K
    m = np.arange(1, 20)
    assert np.allclose(a[m], fourier_coeff_l(m, lam, g), atol=1e-12)
    assert np.allclose(a[-m], fourier_coeff_l(m, lam, g), atol=1e-12)
    # the log c coefficients themselves are -eta_0^m / m
    eta = eta_root(lam, g).eta
    assert np.allclose((np.fft.fft(logc) / K)[m], -(eta**m) / m, atol=1e-12)


def test_t_coefficients(params):
    tc = t_coefficients(MarylandParams(2.0, Frequency.golden(), 0.1, m_t=60), 0.0)
    alpha = float(Frequency.golden())
    l1 = fourier_coeff_l(1, 0.0, 2.0)
    assert abs(tc.plus[0]) == pytest.approx(abs(l1) / (2 * abs(math.sin(math.pi * alpha))))
    assert np.max(np.abs(tc.plus[30:])) < 1e-8
    # t(theta) is purely imaginary: t_{-m} = -conj(t_m)
    assert np.allclose(tc.minus, -np.conj(tc.plus))
    assert tc.rho > 0


def test_resonance_detected():
    from fractions import Fraction

    p = MarylandParams(1.0, Frequency(Fraction(1, 3)), 0.1, m_t=10)
    with pytest.raises(ResonanceError):
        t_coefficients(p, 0.0)


def test_psi0_normalised_and_decaying(params):
    n = np.arange(-80, 81)
    v = psi0(params, 0.0, n)
    assert (np.abs(v) ** 2).sum() == pytest.approx(1.0, abs=1e-4)
    k = np.arange(1, 25)
    a = np.abs(psi0(params, 0.0, k))
    rate = np.polyfit(k, np.log(a), 1)[0]
    assert rate <= -0.5 * eta_root(0.0, 2.0).gamma


def test_eigenvector_residual(params):
    from ergotrope.lattice import LatticeBox, build_hamiltonian
    from ergotrope.potentials import Maryland

    box = LatticeBox.interval(-200, 200)
    T = build_hamiltonian(Maryland(2.0, params.alpha), params.omega, box).matrix
    for l in (-7, 0, 12):
        lam, psi = eigenvector(params, l, box.sites()[:, 0])
        r = T.to_dense() @ psi - lam * psi
        assert np.linalg.norm(r[5:-5]) <= 1e-3 * np.linalg.norm(psi)


@pytest.mark.parametrize("g", [2.0, -2.0, 1.0])
def test_verify_small(g, tmp_path):
    p = MarylandParams(g, Frequency.golden(), 0.1)
    rows = maryland_verify(p, range(-10, 11), half_width=120)
    assert max(r.error for r in rows) <= 1e-3
    assert min(r.overlap for r in rows) >= 0.999
    write_verify_csv(rows, tmp_path / "v.csv")
    assert (tmp_path / "v.csv").read_text().startswith("label,predicted,matched,abs_error,overlap,residual")
