"""Special-function oracles: ascending series, Wronskian, branch control."""

import math

import numpy as np
import pytest

from spectral_ends.specfun import (
    ABS_Z_MAX,
    ABS_Z_MIN,
    BranchMode,
    MAX_ORDER,
    SpecFunError,
    branch_sqrt,
    hankel1,
)

EULER_GAMMA = 0.5772156649015328606


def _j0_series(z, terms=25):
    # oracle: derived — ascending series sum (-1)^k (z^2/4)^k / (k!)^2
    total, term = 0.0 + 0j, 1.0 + 0j
    for k in range(terms):
        total += term
        term *= -(z * z / 4.0) / ((k + 1) ** 2)
    return total


def _y0_series(z, terms=25):
    # oracle: derived — Y0 = (2/pi)[(ln(z/2) + gamma) J0 + sum h_k (z^2/4)^k ...]
    s, term, h = 0.0 + 0j, 1.0 + 0j, 0.0
    for k in range(1, terms):
        term *= -(z * z / 4.0) / (k * k)
        h += 1.0 / k
        s -= term * h
    return (2.0 / math.pi) * ((np.log(z / 2.0) + EULER_GAMMA) * _j0_series(z, terms) + s)


def test_hankel_order0_matches_ascending_series():
    for z in (0.5, 1.0, 1.0 + 0.4j, 2.0 - 0.7j):
        h, _ = hankel1(0, z)
        exact = _j0_series(z) + 1j * _y0_series(z)
        assert abs(h - exact) <= 1e-12 * max(1.0, abs(exact))


def test_hankel_derivative_matches_finite_difference():
    # oracle: derived — central difference of the function itself
    delta = 1e-6
    for n in (0, 1, 3, 7):
        for z in (1.3, 2.0 + 1.0j, 8.0 - 0.3j):
            _, hp = hankel1(n, z)
            hplus, _ = hankel1(n, z + delta)
            hminus, _ = hankel1(n, z - delta)
            fd = (hplus - hminus) / (2 * delta)
            assert abs(hp - fd) <= 1e-7 * max(1.0, abs(hp))


def test_hankel_wronskian_on_complex_grid():
    # oracle: derived — W{H1_n, H2_n}(z) = -4i/(pi z) with H2(z) = conj(H1(conj z))
    zs = [complex(r, i) for r in (0.3, 1.1, 4.0, 20.0) for i in (-1.0, -0.1, 0.0, 0.5)]
    for n in (0, 1, 2, 5):
        for z in zs:
            h1, h1p = hankel1(n, z)
            h2 = np.conj(hankel1(n, np.conj(z))[0])
            h2p = np.conj(hankel1(n, np.conj(z))[1])
            w = h1 * h2p - h1p * h2
            exact = -4j / (math.pi * z)
            assert abs(w - exact) <= 1e-9 * max(1.0, abs(h1) * abs(h2p))


def test_hankel_negative_orders():
    # trivial: reflection H_{-n} = (-1)^n H_n
    for n in (1, 2, 5):
        h, hp = hankel1(n, 2.0 + 0.5j)
        hm, hmp = hankel1(-n, 2.0 + 0.5j)
        sign = -1.0 if n % 2 else 1.0
        assert hm == sign * h and hmp == sign * hp


def test_hankel_range_contract():
    with pytest.raises(SpecFunError):
        hankel1(0, 0.5 * ABS_Z_MIN)
    with pytest.raises(SpecFunError):
        hankel1(0, 2.0 * ABS_Z_MAX)
    with pytest.raises(SpecFunError):
        hankel1(MAX_ORDER + 1, 1.0)


def test_branch_sqrt_squares_back():
    rng = np.random.default_rng(7)
    ws = rng.standard_normal(500) + 1j * rng.standard_normal(500)
    for mode in BranchMode:
        for w in ws:
            r = branch_sqrt(w, mode)
            assert abs(r * r - w) <= 1e-12 * max(1.0, abs(w))


def test_branch_sqrt_halfplane_conventions():
    rng = np.random.default_rng(8)
    ws = rng.standard_normal(500) + 1j * rng.standard_normal(500)
    for w in ws:
        rp = branch_sqrt(w, BranchMode.POSITIVE_REAL)
        assert rp.real > 0 or (rp.real == 0 and rp.imag >= 0)
        rn = branch_sqrt(w, BranchMode.NEGATIVE_IMAG)
        assert rn.imag < 0 or (rn.imag == 0 and rn.real >= 0)


@pytest.mark.parametrize(
    "mode,path_base",
    [
        # each path crosses the real axis away from the mode's branch cut
        (BranchMode.POSITIVE_REAL, 1.0),  # cut on the negative reals
        (BranchMode.NEGATIVE_IMAG, -1.0),  # cut on the positive reals
    ],
)
def test_branch_sqrt_continuity_along_paths(mode, path_base):
    t = np.linspace(-1.0, 1.0, 1000)
    ws = path_base + 1j * t
    vals = np.array([branch_sqrt(w, mode) for w in ws])
    jumps = np.abs(np.diff(vals)) / np.abs(np.diff(ws))
    # |d sqrt(w)/dw| = 1/(2 sqrt(|w|)) <= 0.5 on these paths (|w| >= 1)
    assert jumps.max() <= 1.0
