"""End-to-end orchestration: geometry -> mesh -> interior eigenpairs ->
transverse bases -> NtD data -> eigenvalue search / resonance scan."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from spectral_ends import fem, mesh as meshmod, ntd, resonance, solver
from spectral_ends.geometry import GeometryDesc, build_preset
from spectral_ends.ntd import DEFAULT_LAMBDA0, NtdData
from spectral_ends.transverse import DEFAULT_MODES, circle_basis, interval_basis


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@dataclass
class RunConfig:
    geometry: str
    params: dict = field(default_factory=dict)
    refine: int = 3
    lambda_max: float = 100.0
    M: int | None = None  # transverse modes per end (default 20; 21 on a circle)
    J: int = 0
    lambda0: float = DEFAULT_LAMBDA0
    search: tuple | None = None  # (lo, hi) inside [kappa_J, kappa_{J+1})
    tol: float = solver.DEFAULT_ROOT_TOL

    def modes_per_end(self, circle: bool) -> int:
        if self.M is not None:
            return self.M
        return DEFAULT_MODES + 1 if circle else DEFAULT_MODES


@dataclass
class Assembled:
    config: RunConfig
    geometry: GeometryDesc
    mesh: meshmod.Mesh
    op: fem.DiscreteOperator
    basis: fem.InteriorEigenBasis
    nu: np.ndarray
    bases: list
    data: NtdData
    r0_asymmetry: float
    warnings: list
    timings: dict


def _transverse_bases(g: GeometryDesc, M: int) -> list:
    if g.artificial_circle is not None:
        rho = g.artificial_circle[1]
        return [circle_basis(rho, M, end_tag=g.circle_tag)]
    return [
        interval_basis(e.width, e.side_coeffs[0], e.side_coeffs[1], M, end_tag=e.tag)
        for e in g.ends
    ]


def build(config: RunConfig) -> Assembled:
    timings, notes = {}, []

    def stage(name):
        timings[name] = time.perf_counter()

    def done(name):
        timings[name] = time.perf_counter() - timings[name]

    try:
        g = build_preset(config.geometry, config.params)
    except Exception as e:
        raise PipelineError("geometry", str(e)) from e

    stage("mesh")
    try:
        m = meshmod.generate(g)
        for _ in range(config.refine):
            m = meshmod.refine(m, g)
    except Exception as e:
        raise PipelineError("mesh", str(e)) from e
    done("mesh")

    stage("fem")
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            op = fem.assemble(m, g, "neumann")
            basis = fem.neumann_eigs(op, config.lambda_max)
            opd = fem.assemble(m, g, "dirichlet")
            nu = fem.dirichlet_eigs(opd, config.lambda_max)
        notes.extend(str(w.message) for w in caught)
    except Exception as e:
        raise PipelineError("fem", str(e)) from e
    done("fem")

    stage("ntd")
    try:
        circle = g.artificial_circle is not None
        bases = _transverse_bases(g, config.modes_per_end(circle))
        S, kappa, _ = ntd.coupling_matrix(basis, bases)
        R0, asym = ntd.r0_reference(op, bases, config.lambda0, basis.mu)
        data = NtdData(
            S=S,
            mu=basis.mu,
            kappa=kappa,
            R0=R0,
            lambda0=config.lambda0,
            J=config.J,
            kind="circle" if circle else "interval",
            rho_art=g.artificial_circle[1] if circle else None,
            orders=bases[0].orders if circle else None,
        )
    except Exception as e:
        raise PipelineError("ntd", str(e)) from e
    done("ntd")

    return Assembled(
        config=config,
        geometry=g,
        mesh=m,
        op=op,
        basis=basis,
        nu=nu,
        bases=bases,
        data=data,
        r0_asymmetry=asym,
        warnings=notes,
        timings=timings,
    )


def default_search(asm: Assembled) -> tuple:
    """Default window inside [kappa_J, kappa_{J+1}) for the eigenvalue search."""
    J = asm.config.J
    kappa = asm.data.kappa
    hi = float(kappa[J]) if J < len(kappa) else asm.config.lambda_max
    if J == 0:
        has_dirichlet = any(s.coeff.is_dirichlet for s in asm.geometry.segments)
        lo = 0.0 if has_dirichlet else -10.0
    else:
        lo = float(kappa[J - 1])
    width = hi - lo
    return (lo + 1e-9 * max(1.0, abs(lo)), hi - 1e-6 * max(1.0, width))


def run_eigen(config: RunConfig) -> tuple:
    """Full eigenvalue pipeline; returns (Assembled, K, findings)."""
    asm = build(config)
    if asm.data.kind == "circle":
        raise PipelineError("solver", "eigenvalue search requires cylindrical ends")
    search = config.search if config.search is not None else default_search(asm)
    lam2 = search[1]
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            K = solver.count_bound(asm.data.mu, asm.nu, lam2)
            K = min(K, asm.data.M - config.J)
            findings = solver.find_eigenvalues(
                asm.data, config.J, search, tol=config.tol, K=K
            )
        asm.warnings.extend(str(w.message) for w in caught)
    except solver.SolverError as e:
        raise PipelineError("solver", str(e)) from e
    return asm, K, findings


def run_resonance_scan(
    config: RunConfig, grid: resonance.GridSpec, levels: int, workers: int = 1
) -> tuple:
    """Full resonance pipeline; returns (Assembled, ScanGrid, estimates)."""
    asm = build(config)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            scan = resonance.condition_scan(asm.data, grid, workers)
            estimates = resonance.locate_and_zoom(asm.data, scan, levels, workers)
        asm.warnings.extend(str(w.message) for w in caught)
    except (resonance.ResonanceError, ntd.NtdError) as e:
        raise PipelineError("resonance", str(e)) from e
    return asm, scan, estimates
