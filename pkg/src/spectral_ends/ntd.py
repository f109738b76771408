"""Neumann-to-Dirichlet matrix data.

The interior NtD map in the transverse basis is the eigen-expansion
R(lambda) = S D(lambda) S* with D_mm = 1/(mu_m - lambda), optionally
accelerated around a reference point lambda0 by replacing the slowly
convergent sum with the directly computed R0(lambda0) plus the rapidly
convergent correction S {D(lambda) - D(lambda0)} S*.  The exterior NtD of a
cylindrical end is diagonal with entries 1/sqrt(kappa_k - lambda); on the
artificial circle it is diagonal with Hankel-quotient entries.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from spectral_ends import fem, specfun
from spectral_ends.fem import DiscreteOperator, InteriorEigenBasis
from spectral_ends.specfun import BranchMode
from spectral_ends.transverse import TransverseBasis, merge_thresholds

DEFAULT_LAMBDA0 = -1.0
_POLE_MARGIN = 1e-9


class NtdError(ValueError):
    pass


@dataclass(frozen=True)
class SliceSpec:
    """1-based inclusive row range a:b of the global transverse ordering."""

    a: int
    b: int

    def __post_init__(self):
        if not 1 <= self.a <= self.b:
            raise NtdError(f"invalid slice {self.a}:{self.b}")

    def rows(self) -> slice:
        return slice(self.a - 1, self.b)

    @property
    def size(self) -> int:
        return self.b - self.a + 1


@dataclass(frozen=True)
class NtdData:
    S: np.ndarray  # (M, N) coupling matrix, rows in global transverse order
    mu: np.ndarray  # (N,) interior Neumann eigenvalues
    kappa: np.ndarray  # (M,) thresholds (interval) or Fourier orders (circle)
    R0: np.ndarray | None  # (M, M) reference NtD at lambda0
    lambda0: float
    J: int  # threshold index of the active window [kappa_J, kappa_{J+1})
    kind: str  # "interval" | "circle"
    rho_art: float | None = None
    orders: tuple | None = None

    def __post_init__(self):
        for a in (self.S, self.mu, self.kappa) + (() if self.R0 is None else (self.R0,)):
            a.setflags(write=False)

    @property
    def M(self) -> int:
        return len(self.kappa)

    @property
    def full(self) -> SliceSpec:
        return SliceSpec(1, self.M)


def coupling_matrix(
    basis: InteriorEigenBasis, bases: list[TransverseBasis], mesh=None
) -> tuple[np.ndarray, np.ndarray, list]:
    """Coupling matrix S_km = (w_k, U_m restricted to the interface).

    Rows follow the global transverse ordering (per-end bases merged sorted by
    kappa); returns (S, global kappa, ordering index).
    """
    kappa, index = merge_thresholds(bases)
    complex_case = any(tb.kind == "circle" for tb in bases)
    N = len(basis.mu)
    S = np.zeros((len(index), N), dtype=complex if complex_case else float)
    from spectral_ends.fem import _GAUSS_W  # 4-point rule shared with assembly

    for k, (tb, i) in enumerate(index):
        trace = basis.traces.get(tb.end_tag)
        if trace is None:
            raise NtdError(f"no interior trace data on interface tag {tb.end_tag}")
        w = np.conj(tb.modes[i](trace.gauss_params))  # (e, 4)
        wq = trace.lengths[:, None] * _GAUSS_W[None, :] * w
        S[k] = np.einsum("ep,epn->n", wq, trace.gauss_values)
    return S, kappa, index


def r0_reference(
    op: DiscreteOperator,
    bases: list[TransverseBasis],
    lambda0: float = DEFAULT_LAMBDA0,
    mu: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Reference NtD matrix R0_{kl} = (R0 w_k, w_l) at lambda0 by direct solves.

    Returns (symmetrized R0, asymmetry diagnostic |R0 - R0*| / |R0|).
    """
    _, index = merge_thresholds(bases)
    solver = fem.NeumannBvpSolver(op, lambda0, mu)
    loads, sols = [], []
    for tb, i in index:
        load = fem.interface_load(op, {tb.end_tag: tb.modes[i]})
        loads.append(load)
        sols.append(solver.solve(load))
    L = np.stack(loads)  # (M, nodes)
    P = np.stack(sols)
    # (R0 w_k, w_l) = integral of Phi_k * conj(w_l) = conj(load_l) . Phi_k
    R0 = np.conj(L) @ P.T
    adj = R0.conj().T if np.iscomplexobj(R0) else R0.T
    denom = np.linalg.norm(R0)
    asym = float(np.linalg.norm(R0 - adj) / denom) if denom > 0 else 0.0
    R0 = 0.5 * (R0 + adj)
    return R0, asym


def _diag_coeff(mu: np.ndarray, lam: complex) -> np.ndarray:
    dist = np.abs(mu - lam)
    if len(mu) and dist.min() < _POLE_MARGIN:
        m = int(np.argmin(dist))
        raise NtdError(f"lambda = {lam} at interior Neumann pole mu_{m + 1} = {mu[m]:.9g}")
    return 1.0 / (mu - lam)


def interior_ntd(
    d: NtdData, lam: complex, rows: SliceSpec, cols: SliceSpec | None = None
) -> np.ndarray:
    """Interior NtD block R(lambda)[rows, cols] in the transverse basis.

    Uses the accelerated form around lambda0 when d.R0 is present, the direct
    eigen-expansion otherwise.
    """
    if cols is None:
        cols = rows
    if rows.b > d.M or cols.b > d.M:
        raise NtdError(f"slice exceeds basis size M = {d.M}")
    D = _diag_coeff(d.mu, lam)
    Sr = d.S[rows.rows()]
    Sc = d.S[cols.rows()]
    if d.R0 is None:
        return (Sr * D[None, :]) @ Sc.conj().T
    D0 = 1.0 / (d.mu - d.lambda0)
    corr = (Sr * (D - D0)[None, :]) @ Sc.conj().T
    return d.R0[rows.rows(), cols.rows()] + corr


def cylinder_ntd_diag(
    kappa: np.ndarray, lam: complex, mode: BranchMode, slc: SliceSpec | None = None
) -> np.ndarray:
    """Diagonal entries T_kk = 1/sqrt(kappa_k - lambda) on the selected branch."""
    kappa = np.asarray(kappa, dtype=float)
    if slc is not None:
        kappa = kappa[slc.rows()]
    if np.abs(kappa - lam).min() < _POLE_MARGIN:
        raise NtdError(f"lambda = {lam} at a threshold branch point")
    out = np.array([1.0 / specfun.branch_sqrt(k - lam, mode) for k in kappa])
    if np.isrealobj(np.asarray(lam)) and np.abs(out.imag).max() == 0.0:
        return out.real
    return out


def disc_ntd_diag(rho_art: float, lam: complex, orders) -> np.ndarray:
    """Diagonal exterior NtD on the artificial circle, H_n/(sqrt(lambda) H_n')."""
    if lam == 0:
        raise NtdError("lambda = 0 is a branch point of the exterior problem")
    root = specfun.branch_sqrt(lam, BranchMode.NEGATIVE_IMAG)
    z = rho_art * root
    out = np.empty(len(orders), dtype=complex)
    for k, n in enumerate(orders):
        h, hp = specfun.hankel1(n, z)
        if abs(hp) < 1e-13:
            warnings.warn(
                f"exterior NtD entry for order {n} at lambda = {lam} is at a pole"
            )
            out[k] = math.inf
        else:
            out[k] = h / (root * hp)
    return out
