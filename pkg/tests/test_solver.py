"""Matrix-pencil solver: synthetic closed-form roots, determinant oracle,
counting bound, monotonicity audit."""

import math

import numpy as np
import pytest

from spectral_ends import ntd, solver
from spectral_ends.ntd import NtdData

# Synthetic two-mode problem with decoupled branches:
#   R(lam) = diag(1/(1 - lam), 1/(2 - lam)),  T = diag(1/sqrt(4 - lam), ...)
# Branch 1 crosses sigma = -1 where sqrt(4 - lam) = lam - 1, i.e. at
# lam = (1 + sqrt(13))/2  (oracle: derived — quadratic lam^2 - lam - 3 = 0).
ROOT1 = (1.0 + math.sqrt(13.0)) / 2.0


def _synthetic(S=None):
    S = np.eye(2) if S is None else np.asarray(S, dtype=float)
    return NtdData(
        S=S,
        mu=np.array([1.0, 2.0]),
        kappa=np.array([4.0, 9.0]),
        R0=None,
        lambda0=-1.0,
        J=0,
        kind="interval",
    )


def test_find_eigenvalues_on_synthetic_closed_form():
    data = _synthetic()
    found = solver.find_eigenvalues(data, 0, (2.05, 3.95), tol=1e-10)
    assert len(found) == 1
    f = found[0]
    assert f.lam == pytest.approx(ROOT1, abs=1e-9)
    assert f.orth_residual == 0.0 and not f.embedded_flag
    assert f.window == (-np.inf, 4.0)
    # the crossing branch carries the first mode only
    assert abs(abs(f.vector[0]) - 1.0) < 1e-12


def test_find_eigenvalues_respects_pole_partition():
    # widen the window across both interior poles mu = 1, 2: still exactly
    # the one root, found despite the sigma wrap at the poles
    data = _synthetic()
    found = solver.find_eigenvalues(data, 0, (0.5, 3.95), tol=1e-10)
    assert [pytest.approx(ROOT1, abs=1e-9)] == [f.lam for f in found]


def test_find_eigenvalues_window_validation():
    data = _synthetic()
    with pytest.raises(solver.SolverError):
        solver.find_eigenvalues(data, 0, (2.0, 5.0))  # exceeds kappa_1 = 4
    with pytest.raises(solver.SolverError):
        solver.find_eigenvalues(data, 1, (2.0, 3.0))  # below kappa_1
    assert solver.find_eigenvalues(data, 0, (2.05, 3.95), K=0) == []


def test_count_bound():
    mu = np.array([1.0, 2.0, 3.0])
    nu = np.array([2.5])
    assert solver.count_bound(mu, nu, 2.8) == 1
    assert solver.count_bound(mu, nu, 0.5) == 0
    with pytest.warns(UserWarning, match="negative counting bound"):
        assert solver.count_bound(np.array([5.0]), nu, 4.0) == 0
    with pytest.raises(solver.SolverError):
        solver.count_bound(mu, nu, 2.0)  # coincides with an interior mu


def test_pencil_sigmas_against_determinant_sweep():
    # oracle: derived — roots of det(sigma R - T) located by sign-change
    # bisection on a fine sweep must match pencil_sigmas to 1e-8
    rng = np.random.default_rng(42)
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    R = q @ np.diag(rng.uniform(-3.0, 3.0, 6)) @ q.T
    T = rng.uniform(0.5, 2.0, 6)
    sigmas = np.sort(solver.pencil_sigmas(R, T, 6).sigma)
    grid = np.linspace(sigmas[0] - 1.0, sigmas[-1] + 1.0, 20001)
    signs = np.array([np.linalg.slogdet(s * R - np.diag(T))[0] for s in grid])
    roots = []
    for i in np.flatnonzero(signs[:-1] * signs[1:] < 0):
        a, b = grid[i], grid[i + 1]
        for _ in range(80):
            m = 0.5 * (a + b)
            if signs[i] * np.linalg.slogdet(m * R - np.diag(T))[0] <= 0:
                b = m
            else:
                a = m
        roots.append(0.5 * (a + b))
    assert len(roots) == len(sigmas)
    assert np.abs(np.array(roots) - sigmas).max() < 1e-8


def test_pencil_requires_positive_t():
    with pytest.raises(solver.SolverError):
        solver.pencil_sigmas(np.eye(2), np.array([1.0, -1.0]), 2)


def test_monotonicity_audit_catches_violations(monkeypatch):
    data = _synthetic()
    # a decreasing nonpositive branch is a contract violation the audit
    # must turn into a hard failure rather than a silent missed root
    monkeypatch.setattr(
        ntd, "interior_ntd", lambda d, lam, rows, cols=None: np.array([[-1.0 - 0.5 * lam]])
    )
    one = NtdData(
        S=np.eye(1), mu=np.array([100.0]), kappa=np.array([9.0]),
        R0=None, lambda0=-1.0, J=0, kind="interval",
    )
    with pytest.raises(solver.SolverError, match="monotonicity"):
        solver.find_eigenvalues(one, 0, (1.0, 8.0))


def test_orthogonality_residual():
    data = _synthetic(S=np.array([[1.0, 0.3], [0.2, 1.0]]))
    with pytest.raises(solver.SolverError):
        solver.orthogonality_residual(np.array([1.0]), data, 5.0, J=0)
    res = solver.orthogonality_residual(np.array([1.0]), data, 5.0, J=1)
    assert res >= 0.0
    # with diagonal coupling the cross block vanishes identically
    assert solver.orthogonality_residual(np.array([1.0]), _synthetic(), 5.0, J=1) == 0.0
