"""P1 finite elements on the truncated interior domain.

Provides the discrete operator (stiffness including the potential term, mass,
Robin boundary matrix, Dirichlet constraints), the interior Neumann and
Dirichlet eigenpairs below a cutoff, and the Neumann-data boundary value
problem at a reference spectral point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from spectral_ends.geometry import GeometryDesc, INTERFACE_TAG_BASE
from spectral_ends.mesh import Mesh, cross2

_DENSE_LIMIT = 3000
# 4-point Gauss-Legendre on [0, 1]
_GAUSS_X = 0.5 + 0.5 * np.array(
    [-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526]
)
_GAUSS_W = 0.5 * np.array(
    [0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538]
)


class FemError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteOperator:
    stiffness: sp.csr_matrix  # grad-grad plus potential term
    mass: sp.csr_matrix
    robin: sp.csr_matrix
    dirichlet_nodes: np.ndarray  # sorted node indices constrained to zero
    mesh: Mesh
    geometry: GeometryDesc
    interface_bc: str  # "neumann" | "dirichlet"

    @property
    def free_nodes(self) -> np.ndarray:
        mask = np.ones(self.mesh.num_nodes, dtype=bool)
        mask[self.dirichlet_nodes] = False
        return np.flatnonzero(mask)

    def interface_edges(self) -> dict:
        """tag -> (e, 2) node-index array of interface mesh edges."""
        out = {}
        for i, j, tag in self.mesh.boundary_edges:
            if tag >= INTERFACE_TAG_BASE:
                out.setdefault(int(tag), []).append((int(i), int(j)))
        return {tag: np.array(edges, dtype=int) for tag, edges in out.items()}


@dataclass(frozen=True)
class TraceData:
    """Piecewise-linear interface trace of a family of interior modes."""

    edges: np.ndarray  # (e, 2) node indices
    lengths: np.ndarray  # (e,) physical edge lengths
    gauss_params: np.ndarray  # (e, 4) interface parameter (s or theta) at Gauss nodes
    gauss_values: np.ndarray  # (e, 4, N) mode values at Gauss nodes


@dataclass(frozen=True)
class InteriorEigenBasis:
    mu: np.ndarray  # ascending eigenvalues
    modes: np.ndarray  # (num_nodes, N) mass-orthonormal nodal vectors
    traces: dict  # tag -> TraceData
    lambda_max: float


def interface_param(g: GeometryDesc, tag: int, pts: np.ndarray) -> np.ndarray:
    """Interface parameter of physical points: arclength s or angle theta."""
    pts = np.atleast_2d(pts)
    if g.artificial_circle is not None and tag == g.circle_tag:
        (cx, cy), _ = g.artificial_circle
        return np.arctan2(pts[:, 1] - cy, pts[:, 0] - cx)
    return g.end_by_tag(tag).arclength(pts)


def _tag_coeffs(g: GeometryDesc) -> dict:
    return {seg.tag: seg.coeff for seg in g.segments}


def assemble(m: Mesh, g: GeometryDesc, interface_bc: str = "neumann") -> DiscreteOperator:
    if interface_bc not in ("neumann", "dirichlet"):
        raise FemError(f"interface_bc must be 'neumann' or 'dirichlet', got {interface_bc!r}")
    coeffs = _tag_coeffs(g)
    known_tags = set(coeffs)
    known_tags.update(e.tag for e in g.ends)
    if g.artificial_circle is not None:
        known_tags.add(g.circle_tag)
    present = set(int(t) for t in np.unique(m.boundary_edges[:, 2]))
    missing = present - known_tags
    if missing:
        raise FemError(f"mesh boundary tags {sorted(missing)} absent from geometry table")

    n = m.num_nodes
    p = m.nodes[m.triangles]  # (t, 3, 2)
    # P1 gradients: grad phi_k = rot90(opposite edge) / (2 area)
    e0 = p[:, 2] - p[:, 1]
    e1 = p[:, 0] - p[:, 2]
    e2 = p[:, 1] - p[:, 0]
    area = 0.5 * cross2(e2, -e1)
    grads = np.stack([e0, e1, e2], axis=1)  # (t, 3, 2) edge opposite node k
    grads = np.stack([-grads[:, :, 1], grads[:, :, 0]], axis=2) / (2 * area)[:, None, None]

    rows = np.repeat(m.triangles, 3, axis=1).reshape(-1)
    cols = np.tile(m.triangles, (1, 3)).reshape(-1)
    ke = np.einsum("tid,tjd->tij", grads, grads) * area[:, None, None]
    me = (area[:, None, None] / 12.0) * (np.ones((3, 3)) + np.eye(3))
    if g.potential is not None:
        # 3-point (edge-midpoint) rule, exact through degree 2
        mids = 0.5 * (p[:, [1, 2, 0]] + p[:, [2, 0, 1]])  # (t, 3, 2)
        qv = g.potential(mids[:, :, 0], mids[:, :, 1])  # (t, 3)
        # phi_k at the midpoint opposite node k is 0, at the other two 1/2
        phi = 0.5 * (np.ones((3, 3)) - np.eye(3))  # (point, node)
        qe = np.einsum("tp,pi,pj->tij", qv, phi, phi) * (area / 3.0)[:, None, None]
        ke = ke + qe
    K = sp.coo_matrix((ke.reshape(-1), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((me.reshape(-1), (rows, cols)), shape=(n, n)).tocsr()

    dirichlet = set()
    r_rows, r_cols, r_vals = [], [], []
    for i, j, tag in m.boundary_edges:
        tag = int(tag)
        if tag >= INTERFACE_TAG_BASE:
            if interface_bc == "dirichlet":
                dirichlet.update((int(i), int(j)))
            continue
        c = coeffs[tag]
        if c.is_dirichlet:
            dirichlet.update((int(i), int(j)))
        elif not c.is_neumann:
            length = float(np.linalg.norm(m.nodes[j] - m.nodes[i]))
            w = c.a / c.b
            # 4-point Gauss of (a/b) phi_i phi_j along the edge
            phi = np.stack([1.0 - _GAUSS_X, _GAUSS_X])  # (node, point)
            ee = w * length * np.einsum("p,ip,jp->ij", _GAUSS_W, phi, phi)
            for a_, ra in enumerate((int(i), int(j))):
                for b_, rb in enumerate((int(i), int(j))):
                    r_rows.append(ra)
                    r_cols.append(rb)
                    r_vals.append(ee[a_, b_])
    R = sp.coo_matrix((r_vals, (r_rows, r_cols)), shape=(n, n)).tocsr()
    return DiscreteOperator(
        stiffness=K,
        mass=M,
        robin=R,
        dirichlet_nodes=np.array(sorted(dirichlet), dtype=int),
        mesh=m,
        geometry=g,
        interface_bc=interface_bc,
    )


def _free_system(op: DiscreteOperator):
    free = op.free_nodes
    A = (op.stiffness + op.robin)[free][:, free]
    B = op.mass[free][:, free]
    return free, A.tocsc(), B.tocsc()


def _eig_below(op: DiscreteOperator, lambda_max: float):
    """All discrete eigenpairs with eigenvalue <= lambda_max (mass-orthonormal)."""
    if lambda_max <= 0 and op.interface_bc == "dirichlet":
        pass  # Dirichlet spectra are positive; caller gets an empty list
    free, A, B = _free_system(op)
    nf = len(free)
    if nf == 0:
        raise FemError("no free nodes (entire boundary Dirichlet?)")
    if nf <= _DENSE_LIMIT:
        vals, vecs = scipy.linalg.eigh(A.toarray(), B.toarray())
    else:
        sigma = -1.0
        k = min(nf - 2, 64)
        v0 = np.ones(nf)
        while True:
            vals, vecs = spla.eigsh(A, k=k, M=B, sigma=sigma, which="LM", v0=v0)
            order = np.argsort(vals)
            vals, vecs = vals[order], vecs[:, order]
            if vals[-1] > lambda_max or k >= nf - 2:
                break
            k = min(nf - 2, 2 * k)
    keep = vals <= lambda_max
    return free, vals[keep], vecs[:, keep]


def _interface_traces(op: DiscreteOperator, modes: np.ndarray) -> dict:
    g = op.geometry
    circle = g.artificial_circle is not None
    traces = {}
    for tag, edges in op.interface_edges().items():
        pi, pj = op.mesh.nodes[edges[:, 0]], op.mesh.nodes[edges[:, 1]]
        lengths = np.linalg.norm(pj - pi, axis=1)
        # Gauss nodes in physical space, then interface parameter there
        gp = pi[:, None, :] + _GAUSS_X[None, :, None] * (pj - pi)[:, None, :]
        params = interface_param(g, tag, gp.reshape(-1, 2)).reshape(len(edges), 4)
        if circle and tag == g.circle_tag:
            # keep each edge's angles on one branch of atan2
            base = params[:, :1]
            params = base + np.mod(params - base + math.pi, 2 * math.pi) - math.pi
        vals = (
            modes[edges[:, 0]][:, None, :] * (1.0 - _GAUSS_X)[None, :, None]
            + modes[edges[:, 1]][:, None, :] * _GAUSS_X[None, :, None]
        )
        traces[tag] = TraceData(
            edges=edges, lengths=lengths, gauss_params=params, gauss_values=vals
        )
    return traces


def neumann_eigs(op: DiscreteOperator, lambda_max: float) -> InteriorEigenBasis:
    """All interior Neumann-interface eigenpairs with mu <= lambda_max."""
    if op.interface_bc != "neumann":
        raise FemError("neumann_eigs requires an operator assembled with interface_bc='neumann'")
    if lambda_max <= 0:
        raise FemError("lambda_max must be positive")
    free, vals, vecs = _eig_below(op, lambda_max)
    modes = np.zeros((op.mesh.num_nodes, len(vals)))
    modes[free] = vecs
    return InteriorEigenBasis(
        mu=vals, modes=modes, traces=_interface_traces(op, modes), lambda_max=lambda_max
    )


def dirichlet_eigs(op: DiscreteOperator, lambda_max: float) -> np.ndarray:
    """Ascending interior eigenvalues with Dirichlet data on the interfaces."""
    if op.interface_bc != "dirichlet":
        raise FemError(
            "dirichlet_eigs requires an operator assembled with interface_bc='dirichlet'"
        )
    if lambda_max <= 0:
        raise FemError("lambda_max must be positive")
    _, vals, _ = _eig_below(op, lambda_max)
    return vals


def interface_load(op: DiscreteOperator, rhs: dict) -> np.ndarray:
    """Load vector l_i = integral over the interfaces of rhs * phi_i.

    rhs maps interface tag -> callable of the interface parameter (arclength
    for cylindrical ends, angle for the artificial circle); 4-point Gauss per
    interface edge.
    """
    g = op.geometry
    circle = g.artificial_circle is not None
    load = np.zeros(op.mesh.num_nodes, dtype=complex)
    for tag, edges in op.interface_edges().items():
        f = rhs.get(tag)
        if f is None:
            continue
        pi, pj = op.mesh.nodes[edges[:, 0]], op.mesh.nodes[edges[:, 1]]
        lengths = np.linalg.norm(pj - pi, axis=1)
        gp = pi[:, None, :] + _GAUSS_X[None, :, None] * (pj - pi)[:, None, :]
        params = interface_param(g, tag, gp.reshape(-1, 2)).reshape(len(edges), 4)
        if circle and tag == g.circle_tag:
            base = params[:, :1]
            params = base + np.mod(params - base + math.pi, 2 * math.pi) - math.pi
        fv = np.asarray(f(params), dtype=complex)
        wi = lengths[:, None] * _GAUSS_W[None, :]
        np.add.at(load, edges[:, 0], (wi * fv * (1.0 - _GAUSS_X)[None, :]).sum(axis=1))
        np.add.at(load, edges[:, 1], (wi * fv * _GAUSS_X[None, :]).sum(axis=1))
    if abs(load.imag).max(initial=0.0) == 0.0:
        return load.real
    return load


class NeumannBvpSolver:
    """Factorized (stiffness + robin - lambda0 * mass) solver on free nodes."""

    def __init__(self, op: DiscreteOperator, lambda0: float, mu: np.ndarray | None = None):
        if op.interface_bc != "neumann":
            raise FemError("BVP solver requires a Neumann-interface operator")
        if mu is not None and len(mu):
            dist = np.abs(np.asarray(mu) - lambda0)
            i = int(np.argmin(dist))
            if dist[i] < 1e-6:
                raise FemError(
                    f"lambda0 = {lambda0} within 1e-6 of interior Neumann eigenvalue "
                    f"mu_{i + 1} = {mu[i]:.9g}"
                )
        self.op = op
        self.lambda0 = lambda0
        free, A, B = _free_system(op)
        self.free = free
        self._lu = spla.splu((A - lambda0 * B).tocsc())

    def solve(self, load: np.ndarray) -> np.ndarray:
        v = np.zeros(self.op.mesh.num_nodes, dtype=load.dtype)
        if np.iscomplexobj(load):
            lf = load[self.free]
            v[self.free] = self._lu.solve(lf.real) + 1j * self._lu.solve(lf.imag)
        else:
            v[self.free] = self._lu.solve(load[self.free])
        return v


def solve_neumann_bvp(
    op: DiscreteOperator,
    lambda0: float,
    rhs_trace: dict,
    mu: np.ndarray | None = None,
) -> np.ndarray:
    """Solve the interior problem with Neumann interface data rhs_trace at lambda0."""
    solver = NeumannBvpSolver(op, lambda0, mu)
    return solver.solve(interface_load(op, rhs_trace))
