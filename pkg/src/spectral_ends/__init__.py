"""Spectral and resonance computations on planar domains with cylindrical ends.

The pipeline: describe the truncated interior domain (geometry), mesh it
(mesh), compute interior Neumann/Dirichlet eigenpairs and boundary value
problems with P1 elements (fem), expand interface data in the transversal
eigenbasis (transverse), assemble Neumann-to-Dirichlet matrix data (ntd),
then locate real eigenvalues through the matrix pencil (solver) or complex
resonances through condition-number scans (resonance).
"""

from spectral_ends.geometry import GeometryDesc, RobinCoeff, build_preset
from spectral_ends.mesh import Mesh, generate, refine, read_mesh, write_mesh

__all__ = [
    "GeometryDesc",
    "RobinCoeff",
    "build_preset",
    "Mesh",
    "generate",
    "refine",
    "read_mesh",
    "write_mesh",
]
