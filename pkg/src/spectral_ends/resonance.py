"""Resonance detection by complex-plane condition-number scans.

The eigenvalue pencil continues off the real axis with J = 0: the matched
problem is singular where det(R(lambda) + T(lambda)) = 0 on the outgoing
branch (the same sigma = -1 condition the real-axis solver bisects for).
Resonances are located as local maxima of the condition number of R + T on
a grid in the closed lower half-plane, then refined by re-scanning
successively smaller windows ("zooming").  log|det(R T^{-1} + I)| is kept as
a secondary diagnostic that discriminates zeros from the nearby poles at
interior Neumann eigenvalues.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from spectral_ends import ntd
from spectral_ends.ntd import NtdData
from spectral_ends.specfun import BranchMode, SpecFunError

DEFAULT_RE_COUNT = 101
DEFAULT_IM_COUNT = 51
DEFAULT_ZOOM_LEVELS = 3


class ResonanceError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    re_lo: float
    re_hi: float
    re_count: int
    im_lo: float
    im_hi: float
    im_count: int

    def __post_init__(self):
        if self.re_count < 2 or self.im_count < 2:
            raise ResonanceError("grid counts must be at least 2")
        if not (self.re_lo < self.re_hi and self.im_lo < self.im_hi):
            raise ResonanceError("grid ranges must be increasing")
        if self.im_hi > 0:
            raise ResonanceError("scan grids live in the lower half-plane (Im <= 0)")

    @property
    def re(self) -> np.ndarray:
        return np.linspace(self.re_lo, self.re_hi, self.re_count)

    @property
    def im(self) -> np.ndarray:
        return np.linspace(self.im_lo, self.im_hi, self.im_count)

    @property
    def spacing(self) -> tuple:
        return (
            (self.re_hi - self.re_lo) / (self.re_count - 1),
            (self.im_hi - self.im_lo) / (self.im_count - 1),
        )


@dataclass(frozen=True)
class ScanGrid:
    spec: GridSpec
    cond: np.ndarray  # (im_count, re_count) condition numbers (NaN = invalid node)
    logabsdet: np.ndarray  # (im_count, re_count) log|det(R T^{-1} + I)|

    def __post_init__(self):
        self.cond.setflags(write=False)
        self.logabsdet.setflags(write=False)


@dataclass(frozen=True)
class ResonanceEstimate:
    lam: complex
    zoom_level: int
    final_grid_spacing: float
    quality: float  # condition number at the estimate
    nearby_neumann_pole: float | None  # mu_m inside the final window, if any
    unresolved_pole_pair: bool  # estimate within 2 spacings of that pole
    boundary_warning: bool  # a zoom window had to be shifted


def resonance_matrix(data: NtdData, lam: complex) -> np.ndarray:
    """Full matched matrix [R0 + S{D(lambda) - D(lambda0)}S*] + T(lambda)."""
    if data.R0 is None:
        raise ResonanceError("resonance continuation requires the accelerated form (R0)")
    R = ntd.interior_ntd(data, lam, data.full)
    T = _t_diag(data, lam)
    return R + np.diag(T)


def _t_diag(data: NtdData, lam: complex) -> np.ndarray:
    """Cylinder/disc NtD diagonal on the outgoing (resonance) branch.

    Closed channels (kappa_k > Re lambda) keep the decaying branch of
    sqrt(kappa_k - lambda); open channels take the opposite root, which turns
    exp(-s x) into the outgoing wave exp(+i sqrt(lambda - kappa_k) x) that
    grows for Im lambda < 0.  The disc diagonal is already outgoing through
    its Hankel-function branch; the disc formula is taken with respect to the
    radially-outward normal (the interior's own outward direction), so its
    matching sign is opposite the cylinder one.
    """
    if data.kind == "circle":
        return -ntd.disc_ntd_diag(data.rho_art, lam, data.orders)
    T = np.asarray(
        ntd.cylinder_ntd_diag(data.kappa, lam, BranchMode.POSITIVE_REAL), dtype=complex
    )
    T[data.kappa < lam.real] *= -1.0
    return T


def _nudge(data: NtdData, lam: complex) -> complex:
    """Move lambda off poles/branch points by one part in 1e6."""
    step = 1e-6 * max(1.0, abs(lam))
    for _ in range(8):
        near_mu = len(data.mu) and np.abs(data.mu - lam).min() < 1e-9
        near_kappa = data.kind == "interval" and np.abs(data.kappa - lam).min() < 1e-9
        near_zero = data.kind == "circle" and abs(lam) < 1e-9
        if not (near_mu or near_kappa or near_zero):
            return lam
        lam = lam - step - 1j * step
    return lam


def _node_values(data: NtdData, lam: complex) -> tuple:
    lam = _nudge(data, lam)
    try:
        A = resonance_matrix(data, lam)
        T = _t_diag(data, lam)
    except (SpecFunError, ntd.NtdError):
        return math.nan, math.nan
    s = np.linalg.svd(A, compute_uv=False)
    cond = math.inf if s[-1] == 0.0 else float(s[0] / s[-1])
    sign, logdet = np.linalg.slogdet(A / T[None, :])
    return cond, float(logdet)


def condition_scan(data: NtdData, spec: GridSpec, workers: int = 1) -> ScanGrid:
    """Condition number and log|det| of the matched matrix over the grid."""
    res = spec.re
    ims = spec.im
    points = [complex(r, i) for i in ims for r in res]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(lambda z: _node_values(data, z), points))
    else:
        vals = [_node_values(data, z) for z in points]
    cond = np.array([v[0] for v in vals]).reshape(spec.im_count, spec.re_count)
    logdet = np.array([v[1] for v in vals]).reshape(spec.im_count, spec.re_count)
    return ScanGrid(spec=spec, cond=cond, logabsdet=logdet)


def _local_maxima(grid: ScanGrid) -> list:
    """Nodes strictly exceeding all their neighbours in condition number.

    Interior nodes compare against all 8 neighbours.  Nodes on the top row
    are also admitted when it lies on the real axis (resonances and pole/zero
    pairs hugging the axis peak there, with no neighbours above); the other
    boundary rows/columns are artificial window edges and never seed.
    """
    c = grid.cond
    rows = range(1, c.shape[0] - 1 + (1 if grid.spec.im_hi == 0.0 else 0))
    out = []
    for i in rows:
        for j in range(1, c.shape[1] - 1):
            v = c[i, j]
            if not np.isfinite(v):
                continue
            patch = c[i - 1 : i + 2, j - 1 : j + 2].copy()
            patch[1, 1] = -np.inf
            with np.errstate(invalid="ignore"):
                if (v > patch).all():
                    out.append((i, j))
    return out


def _global_max(grid: ScanGrid):
    c = np.where(np.isfinite(grid.cond), grid.cond, -np.inf)
    i, j = np.unravel_index(int(np.argmax(c)), c.shape)
    return int(i), int(j)


def locate_and_zoom(
    data: NtdData,
    scan: ScanGrid,
    levels: int = DEFAULT_ZOOM_LEVELS,
    workers: int = 1,
) -> list[ResonanceEstimate]:
    """Zoom-refine every local condition-number maximum of the initial scan."""
    if levels < 1:
        raise ResonanceError("levels must be at least 1")
    seeds = _local_maxima(scan)
    if not seeds:
        seeds = [_global_max(scan)]
    estimates = []
    for i, j in seeds:
        est = _zoom_seed(data, scan, i, j, levels, workers)
        if est is not None:
            estimates.append(est)
    # deduplicate estimates that converged to the same point
    estimates.sort(key=lambda e: (e.lam.real, e.lam.imag))
    unique = []
    for e in estimates:
        if unique and abs(e.lam - unique[-1].lam) < 2 * e.final_grid_spacing:
            if e.quality > unique[-1].quality:
                unique[-1] = e
            continue
        unique.append(e)
    return unique


def _zoom_seed(data, scan, i, j, levels, workers):
    spec = scan.spec
    grid = scan
    boundary_warning = False
    lam = complex(spec.re[j], spec.im[i])
    for level in range(1, levels + 1):
        dre, dim = spec.spacing
        re_lo, re_hi = lam.real - 1.5 * dre, lam.real + 1.5 * dre
        im_lo, im_hi = lam.imag - 1.5 * dim, lam.imag + 1.5 * dim
        if im_hi > 0:  # clamp the window into the lower half-plane
            im_lo, im_hi = im_lo - im_hi, 0.0
        spec = GridSpec(re_lo, re_hi, scan.spec.re_count, im_lo, im_hi, scan.spec.im_count)
        grid = condition_scan(data, spec, workers)
        ii, jj = _global_max(grid)
        if ii in (0, grid.cond.shape[0] - 1) or jj in (0, grid.cond.shape[1] - 1):
            boundary_warning = True
            warnings.warn(
                f"zoom level {level}: maximum on the window boundary near "
                f"{complex(spec.re[jj], spec.im[ii]):.6g}; window shifted"
            )
        lam = complex(spec.re[jj], spec.im[ii])
    dre, dim = spec.spacing
    spacing = max(dre, dim)
    pole = None
    near = np.flatnonzero((data.mu >= spec.re_lo) & (data.mu <= spec.re_hi))
    if len(near):
        pole = float(data.mu[near[np.argmin(np.abs(data.mu[near] - lam.real))]])
    unresolved = pole is not None and abs(lam - pole) < 2 * spacing
    return ResonanceEstimate(
        lam=lam,
        zoom_level=levels,
        final_grid_spacing=spacing,
        quality=float(grid.cond[_global_max(grid)]),
        nearby_neumann_pole=pole,
        unresolved_pole_pair=unresolved,
        boundary_warning=boundary_warning,
    )


def write_scan_csv(grid: ScanGrid, path):
    """CSV serialization with header re,im,cond,logabsdet (row-major)."""
    with open(path, "w") as f:
        f.write("re,im,cond,logabsdet\n")
        for i, im in enumerate(grid.spec.im):
            for j, re in enumerate(grid.spec.re):
                f.write(f"{re:.17g},{im:.17g},{grid.cond[i, j]:.17g},{grid.logabsdet[i, j]:.17g}\n")
