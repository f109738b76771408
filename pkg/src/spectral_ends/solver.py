"""Real-axis eigenvalue machinery built on the matrix pencil sigma*R - T.

lambda in the window [kappa_J, kappa_{J+1}) is an eigenvalue exactly when
sigma = -1 is an eigenvalue of the pencil on the rows above the window
(plus, for J > 0, an orthogonality condition on the rows below it).  The
sigma-curves are monotone increasing in lambda on pole-free subintervals, so
each crossing of -1 is found by bisection; the number of eigenvalues in a
window is bounded by the Neumann-minus-Dirichlet counting difference K.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from spectral_ends import ntd
from spectral_ends.ntd import NtdData, SliceSpec
from spectral_ends.specfun import BranchMode

DEFAULT_ROOT_TOL = 1e-8
EMBEDDED_FLAG_THRESHOLD = 1e-3
_MONOTONE_SAMPLES = 20
_MONOTONE_SLACK = 1e-9


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class PencilSpectrum:
    sigma: np.ndarray  # descending finite sigma-eigenvalues
    vectors: np.ndarray  # (len(sigma), M - J) unit coefficient vectors (rows)
    lam: float


@dataclass(frozen=True)
class EigenFinding:
    lam: float
    sigma_index: int  # which sigma-curve crossed -1 (0 = largest)
    vector: np.ndarray  # coefficients of the Neumann trace in the sliced basis
    orth_residual: float  # 0.0 for J = 0 (no condition to test)
    embedded_flag: bool
    window: tuple  # (kappa_J, kappa_{J+1}); kappa_0 = -inf


def pencil_sigmas(R: np.ndarray, T: np.ndarray, K: int) -> PencilSpectrum:
    """Largest K sigma-eigenvalues of the pencil sigma*R - T.

    T is the vector of positive diagonal entries.  Computed as reciprocals of
    the eigenvalues of T^{-1/2} R T^{-1/2}; zero eigenvalues correspond to
    infinite sigma and are discarded.
    """
    T = np.asarray(T, dtype=float)
    if (T <= 0).any():
        raise SolverError("pencil requires strictly positive diagonal T (window violation)")
    w = 1.0 / np.sqrt(T)
    B = w[:, None] * np.asarray(R, dtype=float) * w[None, :]
    B = 0.5 * (B + B.T)
    eta, d = np.linalg.eigh(B)
    finite = np.abs(eta) > 1e-13 * max(1.0, float(np.abs(eta).max(initial=0.0)))
    eta, d = eta[finite], d[:, finite]
    sigma = 1.0 / eta
    order = np.argsort(sigma)[::-1]
    order = order[: min(K, len(order))]
    c = (w[:, None] * d[:, order]).T
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    return PencilSpectrum(sigma=sigma[order], vectors=c, lam=np.nan)


def count_bound(mu, nu, lambda2: float) -> int:
    """Counting bound K = #{mu < lambda2} - #{nu < lambda2} (clamped at 0)."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if np.abs(mu - lambda2).min(initial=np.inf) < 1e-12:
        raise SolverError(f"lambda2 = {lambda2} coincides with an interior Neumann eigenvalue")
    K = int((mu < lambda2).sum()) - int((nu < lambda2).sum())
    if K < 0:
        warnings.warn(
            f"negative counting bound {K} at lambda2 = {lambda2} (discretization artifact); "
            "clamping to 0"
        )
        K = 0
    return K


def _sigma_at(data: NtdData, J: int, lam: float) -> PencilSpectrum:
    """All finite sigma-eigenvalues (descending) of the window-J pencil."""
    slc = SliceSpec(J + 1, data.M)
    R = ntd.interior_ntd(data, lam, slc)
    T = ntd.cylinder_ntd_diag(data.kappa, lam, BranchMode.POSITIVE_REAL, slc)
    spec = pencil_sigmas(np.real(R), np.real(T), data.M - J)
    return PencilSpectrum(sigma=spec.sigma, vectors=spec.vectors, lam=lam)


def orthogonality_residual(c: np.ndarray, data: NtdData, lam: float, J: int | None = None) -> float:
    """Scale-free residual of the embedded-eigenvalue orthogonality condition.

    Tests || [R0_{1:J, J+1:M} + S_{1:J} {D(lambda) - D(lambda0)} S_{J+1:M}*] c ||
    relative to the operator norm of the bracketed matrix.  A small value is a
    diagnostic for an embedded eigenvalue, never a proof.
    """
    if J is None:
        J = data.J
    if J <= 0:
        raise SolverError("orthogonality condition only applies for J > 0")
    B = ntd.interior_ntd(data, lam, SliceSpec(1, J), SliceSpec(J + 1, data.M))
    scale = float(np.linalg.norm(B, 2))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(B @ c) / scale)


def _pole_subintervals(data: NtdData, lo: float, hi: float):
    margins = np.maximum(1e-6, 1e-6 * np.abs(data.mu))
    cuts = [(m - d, m + d) for m, d in zip(data.mu, margins) if lo < m < hi]
    cuts.sort()
    out, start = [], lo
    for a, b in cuts:
        if a > start:
            out.append((start, min(a, hi)))
        start = max(start, b)
    if start < hi:
        out.append((start, hi))
    return out


def _eta_at(data: NtdData, J: int, lam: float):
    """Descending eigenvalues eta of T^{-1/2} R T^{-1/2} and back-transformed
    unit vectors c.

    The sigma-eigenvalues of the pencil are sigma = 1/eta, and sigma = -1
    corresponds to eta = -1.  Unlike the sorted sigma branches (which wrap
    through infinity where det R = 0), the eta branches are continuous, and on
    pole-free subintervals every branch with eta <= 0 is strictly increasing:
    d eta/d lambda = d*(R' - eta T')d / (d*Td) with R' positive semidefinite
    and T', T positive, so it is positive whenever eta <= 0.  Each branch
    therefore crosses -1 at most once, from below.
    """
    slc = SliceSpec(J + 1, data.M)
    R = np.real(ntd.interior_ntd(data, lam, slc))
    T = np.real(ntd.cylinder_ntd_diag(data.kappa, lam, BranchMode.POSITIVE_REAL, slc))
    if (T <= 0).any():
        raise SolverError(f"lambda = {lam} outside the window (nonpositive T entry)")
    w = 1.0 / np.sqrt(T)
    B = w[:, None] * R * w[None, :]
    eta, d = np.linalg.eigh(0.5 * (B + B.T))
    order = np.argsort(eta)[::-1]
    eta, d = eta[order], d[:, order]
    c = (w[:, None] * d).T
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    return eta, c


def _audit_monotone(data: NtdData, J: int, a: float, b: float):
    """Monotonicity audit on the nonpositive eta branches (see _eta_at)."""
    lams = np.linspace(a, b, _MONOTONE_SAMPLES)
    prev = None
    for lam in lams:
        cur, _ = _eta_at(data, J, float(lam))
        if prev is not None:
            slack = _MONOTONE_SLACK * (1.0 + np.abs(prev))
            bad = (prev <= 0.0) & (cur < prev - slack)
            if bad.any():
                j = int(np.argmax(bad))
                raise SolverError(
                    f"monotonicity violation of sigma-branch {j + 1} on "
                    f"[{a:.6g}, {b:.6g}] near lambda = {lam:.6g} "
                    f"(eta {prev[j]:.6g} -> {cur[j]:.6g}); aborting root search"
                )
        prev = cur
    return lams


def find_eigenvalues(
    data: NtdData,
    J: int,
    search: tuple,
    tol: float = DEFAULT_ROOT_TOL,
    K: int | None = None,
) -> list[EigenFinding]:
    """Roots of sigma_j(lambda) = -1 in the window [search[0], search[1]].

    The search interval must lie inside [kappa_J, kappa_{J+1}) (kappa_0 is
    -infinity).  The interval is partitioned at interior Neumann poles; on
    each pole-free subinterval each monotone branch crosses -1 at most once
    and is bisected to a bracket of width tol.
    """
    if tol <= 0:
        raise SolverError("tol must be positive")
    lo, hi = float(search[0]), float(search[1])
    kJ = -np.inf if J == 0 else float(data.kappa[J - 1])
    kJ1 = float(data.kappa[J]) if J < data.M else np.inf
    if not (kJ <= lo < hi <= kJ1):
        raise SolverError(
            f"search window [{lo}, {hi}] not inside [kappa_{J}, kappa_{J + 1}) = "
            f"[{kJ:.6g}, {kJ1:.6g})"
        )
    if K is None:
        K = data.M - J
    K = min(K, data.M - J)
    if K <= 0:
        return []

    findings = []
    for a, b in _pole_subintervals(data, lo, hi):
        # shrink slightly away from window/threshold endpoints
        a = a + max(1e-9, 1e-12 * abs(a))
        b = b - max(1e-9, 1e-12 * abs(b))
        if b <= a:
            continue
        _audit_monotone(data, J, a, b)
        ea, _ = _eta_at(data, J, a)
        eb, _ = _eta_at(data, J, b)
        for j in range(min(len(ea), len(eb))):
            # eta_j decreasing: crossing of -1 needs eta(a) > -1 > eta(b)
            fa, fb = ea[j] + 1.0, eb[j] + 1.0
            if fa == 0.0 or fb == 0.0 or fa * fb > 0:
                continue
            x0, x1 = a, b
            while x1 - x0 > tol:
                xm = 0.5 * (x0 + x1)
                em, _ = _eta_at(data, J, xm)
                f = em[j] + 1.0
                if fa * f <= 0:
                    x1 = xm
                else:
                    x0, fa = xm, f
            root = 0.5 * (x0 + x1)
            _, vecs = _eta_at(data, J, root)
            c = vecs[j]
            if J > 0:
                res = orthogonality_residual(c, data, root, J)
                flag = res < EMBEDDED_FLAG_THRESHOLD
            else:
                res, flag = 0.0, False
            findings.append(
                EigenFinding(
                    lam=root,
                    sigma_index=j,
                    vector=c,
                    orth_residual=res,
                    embedded_flag=flag,
                    window=(kJ, kJ1),
                )
            )
    findings.sort(key=lambda f: f.lam)
    if len(findings) > K:
        warnings.warn(
            f"{len(findings)} crossings exceed the counting bound K = {K}; "
            "check pole margins"
        )
    return findings
