"""Neumann-to-Dirichlet data: separable oracles for the interior map on the
rectangle and the empty disc, closed forms for the exterior diagonals."""

import math

import numpy as np
import pytest
from scipy import special

from spectral_ends import ntd
from spectral_ends.ntd import SliceSpec
from spectral_ends.specfun import BranchMode


def _rect_exact_diag(lam, M):
    # oracle: derived — separation of variables on the half-strip: mode
    # sin(k pi y) solves with cosh(gamma x), NtD entry coth(gamma)/gamma
    gamma = np.sqrt(np.arange(1, M + 1) ** 2 * math.pi**2 - lam)
    return 1.0 / (gamma * np.tanh(gamma))


def test_rectangle_interior_ntd_matches_separable(rect_asm):
    data = rect_asm.data
    for lam in (-2.0, 0.5, 1.5):
        R = ntd.interior_ntd(data, lam, data.full)
        exact = np.diag(_rect_exact_diag(lam, data.M))
        err = np.abs(R - exact).max() / np.abs(exact).max()
        assert err < 1e-2


def test_rectangle_ntd_slices_consistent(rect_asm):
    data = rect_asm.data
    full = ntd.interior_ntd(data, 0.5, data.full)
    sub = ntd.interior_ntd(data, 0.5, SliceSpec(2, 3))
    assert np.allclose(sub, full[1:3, 1:3], atol=1e-14)
    rect = ntd.interior_ntd(data, 0.5, SliceSpec(1, 1), SliceSpec(2, 3))
    assert np.allclose(rect, full[0:1, 1:3], atol=1e-14)
    with pytest.raises(ntd.NtdError):
        ntd.interior_ntd(data, 0.5, SliceSpec(1, data.M + 1))


def _disc_exact_diag(lam, rho, orders):
    # oracle: derived — interior NtD of the empty disc in the Fourier basis:
    # I_n(kr)/(k I_n') for lam < 0, J_n(kr)/(k J_n') for lam > 0
    out = []
    for n in orders:
        n = abs(n)
        if lam < 0:
            k = math.sqrt(-lam)
            out.append(special.iv(n, k * rho) / (k * special.ivp(n, k * rho)))
        else:
            k = math.sqrt(lam)
            out.append(special.jv(n, k * rho) / (k * special.jvp(n, k * rho)))
    return np.array(out)


def test_empty_disc_interior_ntd_matches_bessel(disc_asm):
    data = disc_asm.data
    rho = data.rho_art
    for lam in (-1.0, -3.0, 0.5):
        R = ntd.interior_ntd(data, lam, data.full)
        exact = _disc_exact_diag(lam, rho, data.orders)
        scale = np.abs(exact).max()
        assert np.abs(np.diag(R).real - exact).max() / scale < 5e-3
        off = R - np.diag(np.diag(R))
        assert np.abs(off).max() / scale < 5e-3


def test_r0_reference_is_symmetric(rect_asm, disc_asm):
    assert rect_asm.r0_asymmetry < 1e-8
    assert disc_asm.r0_asymmetry < 1e-8


def test_cylinder_diag_closed_form():
    kappa = np.array([1.0, 4.0, 9.0])
    lam = 2.5
    T = ntd.cylinder_ntd_diag(kappa, lam, BranchMode.POSITIVE_REAL)
    # below-threshold channels decay: real positive entries
    exact = 1.0 / np.sqrt(kappa[1:] - lam)
    assert np.allclose(T[1:], exact, rtol=1e-14)
    # the open channel (kappa < lam) is oscillatory: imaginary entry
    assert T[0] == pytest.approx(1.0 / complex(0, math.sqrt(lam - 1.0)), rel=1e-14)
    slc = ntd.cylinder_ntd_diag(kappa, lam, BranchMode.POSITIVE_REAL, SliceSpec(2, 3))
    assert np.allclose(slc, exact, rtol=1e-14)
    with pytest.raises(ntd.NtdError):
        ntd.cylinder_ntd_diag(kappa, 4.0, BranchMode.POSITIVE_REAL)


def test_disc_diag_outgoing_asymptotics():
    # oracle: derived — for large |z| the outgoing quotient H_n/(k H_n')
    # approaches -i/k (since H_n' ~ i H_n)
    lam = 900.0
    vals = ntd.disc_ntd_diag(2.0, lam, (0, 1, -1))
    assert np.abs(vals - (-1j / 30.0)).max() < 0.05 / 30.0
    with pytest.raises(ntd.NtdError):
        ntd.disc_ntd_diag(2.0, 0.0, (0,))


def test_interior_pole_raises(rect_asm):
    data = rect_asm.data
    with pytest.raises(ntd.NtdError):
        ntd.interior_ntd(data, float(data.mu[0]), data.full)
