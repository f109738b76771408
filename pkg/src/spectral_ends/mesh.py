"""Structured triangular meshing of the preset geometries.

Each preset is meshed from mapped structured blocks (rectangles, polar
blocks, transfinite gap patches) glued conformally by node deduplication.
Midpoint refinement projects new boundary nodes back onto exact curves.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from spectral_ends.geometry import (
    Arc,
    GeometryDesc,
    Segment,
    boundary_table,
)

MESH_HEADER = "# spectral-ends mesh v1"
_DEDUP_DECIMALS = 9
_TAG_TOL = 1e-7


def cross2(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """z-component of the cross product of stacked 2-d vectors."""
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


class MeshError(ValueError):
    pass


class MeshFormatError(MeshError):
    pass


@dataclass(frozen=True)
class Mesh:
    nodes: np.ndarray  # (n, 2)
    triangles: np.ndarray  # (t, 3), CCW
    boundary_edges: np.ndarray  # (e, 3): node i, node j, tag

    def __post_init__(self):
        for a in (self.nodes, self.triangles, self.boundary_edges):
            a.setflags(write=False)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        return 0.5 * cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    def total_area(self) -> float:
        return float(self.areas().sum())

    def min_angle(self) -> float:
        """Smallest interior angle over all triangles, in degrees."""
        p = self.nodes[self.triangles]
        amin = np.inf
        for k in range(3):
            u = p[:, (k + 1) % 3] - p[:, k]
            v = p[:, (k + 2) % 3] - p[:, k]
            cosa = (u * v).sum(axis=1) / (
                np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
            )
            amin = min(amin, np.degrees(np.arccos(np.clip(cosa, -1, 1))).min())
        return float(amin)

    def max_edge_length(self) -> float:
        p = self.nodes[self.triangles]
        h = 0.0
        for k in range(3):
            e = p[:, (k + 1) % 3] - p[:, k]
            h = max(h, float(np.linalg.norm(e, axis=1).max()))
        return h

    def edges_with_tag(self, tag: int) -> np.ndarray:
        return self.boundary_edges[self.boundary_edges[:, 2] == tag]


def _tri_min_angle(p0, p1, p2) -> float:
    pts = (np.asarray(p0), np.asarray(p1), np.asarray(p2))
    best = np.inf
    for k in range(3):
        u = pts[(k + 1) % 3] - pts[k]
        v = pts[(k + 2) % 3] - pts[k]
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        if nu == 0 or nv == 0:
            return 0.0
        best = min(best, math.acos(max(-1.0, min(1.0, float(u @ v) / (nu * nv)))))
    return best


class _Builder:
    """Accumulates nodes (deduplicated by rounded coordinates) and triangles."""

    def __init__(self):
        self.nodes = []
        self._index = {}
        self.triangles = []

    def node(self, x: float, y: float) -> int:
        key = (round(float(x), _DEDUP_DECIMALS), round(float(y), _DEDUP_DECIMALS))
        idx = self._index.get(key)
        if idx is None:
            idx = len(self.nodes)
            self.nodes.append((float(x), float(y)))
            self._index[key] = idx
        return idx

    def tri(self, i: int, j: int, k: int):
        a, b, c = self.nodes[i], self.nodes[j], self.nodes[k]
        area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(area2) < 1e-15:
            raise MeshError("degenerate triangle generated")
        if area2 < 0:
            j, k = k, j
        self.triangles.append((i, j, k))

    def quad(self, n00: int, n10: int, n11: int, n01: int):
        """Split a quad into two triangles, picking the better diagonal."""
        p = [self.nodes[n] for n in (n00, n10, n11, n01)]
        d1 = min(_tri_min_angle(p[0], p[1], p[2]), _tri_min_angle(p[0], p[2], p[3]))
        d2 = min(_tri_min_angle(p[0], p[1], p[3]), _tri_min_angle(p[1], p[2], p[3]))
        if d1 >= d2:
            self.tri(n00, n10, n11)
            self.tri(n00, n11, n01)
        else:
            self.tri(n00, n10, n01)
            self.tri(n10, n11, n01)

    def mapped_grid(self, f, ubreaks, vbreaks) -> np.ndarray:
        """Add a structured block of quads; f(u, v) -> (x, y)."""
        nu, nv = len(ubreaks), len(vbreaks)
        grid = np.empty((nu, nv), dtype=int)
        for i, u in enumerate(ubreaks):
            for j, v in enumerate(vbreaks):
                x, y = f(u, v)
                grid[i, j] = self.node(x, y)
        for i in range(nu - 1):
            for j in range(nv - 1):
                self.quad(grid[i, j], grid[i + 1, j], grid[i + 1, j + 1], grid[i, j + 1])
        return grid


def _boundary_edge_set(triangles) -> list:
    count = {}
    for i, j, k in triangles:
        for a, b in ((i, j), (j, k), (k, i)):
            key = (min(a, b), max(a, b))
            count[key] = count.get(key, 0) + 1
    return [e for e, c in count.items() if c == 1]


def _point_curve_distance(p, curve) -> float:
    p = np.asarray(p, dtype=float)
    if isinstance(curve, Segment):
        a = np.array(curve.p0)
        d = np.array(curve.p1) - a
        t = float((p - a) @ d) / float(d @ d)
        t = min(1.0, max(0.0, t))
        return float(np.linalg.norm(p - (a + t * d)))
    if isinstance(curve, Arc):
        v = p - np.array(curve.center)
        r = float(np.linalg.norm(v))
        radial = abs(r - curve.radius)
        span = abs(curve.theta1 - curve.theta0)
        if span >= 2 * math.pi - 1e-12:
            return radial
        th = math.atan2(v[1], v[0])
        lo, hi = min(curve.theta0, curve.theta1), max(curve.theta0, curve.theta1)
        for shift in (-2 * math.pi, 0.0, 2 * math.pi):
            if lo - 1e-9 <= th + shift <= hi + 1e-9:
                return radial
        return np.inf
    raise TypeError(type(curve))


def _tag_boundary_edges(nodes, triangles, table) -> np.ndarray:
    edges = _boundary_edge_set(triangles)
    tagged = []
    for i, j in edges:
        best_tag, best_d = None, np.inf
        for tag, _, curve in table:
            d = max(
                _point_curve_distance(nodes[i], curve),
                _point_curve_distance(nodes[j], curve),
            )
            if d < best_d:
                best_tag, best_d = tag, d
        if best_d > _TAG_TOL:
            raise MeshError(
                f"boundary edge ({i},{j}) at {nodes[i]}-{nodes[j]} lies on no "
                f"geometry curve (distance {best_d:.2e})"
            )
        tagged.append((i, j, best_tag))
    return np.array(sorted(tagged), dtype=int)


def _finish(builder: _Builder, g: GeometryDesc) -> Mesh:
    nodes = np.array(builder.nodes, dtype=float)
    triangles = np.array(builder.triangles, dtype=int)
    edges = _tag_boundary_edges(nodes, triangles, boundary_table(g))
    return Mesh(nodes, triangles, edges)


# ---------------------------------------------------------------------------
# preset base meshes


def _base_rect(g: GeometryDesc, n: int) -> Mesh:
    b = _Builder()
    lin = np.linspace(0.0, 1.0, n + 1)
    b.mapped_grid(lambda u, v: (u, v), lin, lin)
    return _finish(b, g)


def _base_bent(g: GeometryDesc) -> Mesh:
    b = _Builder()
    nw, nl, na = 2, 2, 2
    wbr = np.linspace(1.0, 2.0, nw + 1)
    b.mapped_grid(lambda u, v: (u, v), wbr, np.linspace(-1.0, 0.0, nl + 1))
    b.mapped_grid(
        lambda r, t: (r * math.cos(t), r * math.sin(t)),
        wbr, np.linspace(0.0, math.pi / 4, na + 1),
    )
    c, s = math.cos(math.pi / 4), math.sin(math.pi / 4)
    b.mapped_grid(
        lambda u, v: (c * u - s * v, s * u + c * v),
        wbr, np.linspace(0.0, 1.0, nl + 1),
    )
    return _finish(b, g)


def _base_obstructed(g: GeometryDesc) -> Mesh:
    p = g.params
    W = Lx = 1.0
    d, r = p["delta"], p["radius"]

    def rho(th):
        """Distance from the disc center to the outer rectangle along th."""
        best = np.inf
        ct, st = math.cos(th), math.sin(th)
        if ct > 1e-14:
            best = min(best, Lx / ct)
        if st > 1e-14:
            best = min(best, (W - d) / st)
        if st < -1e-14:
            best = min(best, (-W - d) / st)
        return best

    thc_lo = math.atan2(-W - d, Lx)
    thc_hi = math.atan2(W - d, Lx)
    angles = []
    for lo, hi in ((-math.pi / 2, thc_lo), (thc_lo, thc_hi), (thc_hi, math.pi / 2)):
        # chord spacing on the obstacle comparable to the first radial layer,
        # which is 0.22x the local gap between the disc and the outer boundary
        gap = min(rho(th) - r for th in np.linspace(lo, hi, 7))
        target = min(math.pi / 8, 0.18 / r, 0.3 * gap / r)
        n = max(2, round((hi - lo) / target))
        angles.extend(np.linspace(lo, hi, n + 1)[:-1])
    angles.append(math.pi / 2)
    tbr = np.array([0.0, 0.22, 0.55, 1.0])

    b = _Builder()
    b.mapped_grid(
        lambda th, t: (
            (r + t * (rho(th) - r)) * math.cos(th),
            d + (r + t * (rho(th) - r)) * math.sin(th),
        ),
        np.array(angles), tbr,
    )
    return _finish(b, g)


def _fan_disc(b: _Builder, center, radius, angles, n_rings):
    """Polar fan: center node, rings of constant angle layout, outer at `radius`."""
    cx, cy = center
    ic = b.node(cx, cy)
    rings = []
    for i in range(1, n_rings + 1):
        r = radius * i / n_rings
        rings.append([b.node(cx + r * math.cos(a), cy + r * math.sin(a)) for a in angles])
    first = rings[0]
    m = len(angles)
    for k in range(m):
        b.tri(ic, first[k], first[(k + 1) % m])
    for inner, outer in zip(rings[:-1], rings[1:]):
        for k in range(m):
            k1 = (k + 1) % m
            b.quad(inner[k], outer[k], outer[k1], inner[k1])
    return rings[-1]


def _annulus(b: _Builder, center, r_in, r_out, angles, n_layers, closed=True):
    cx, cy = center
    rings = []
    for i in range(n_layers + 1):
        r = r_in + (r_out - r_in) * i / n_layers
        rings.append([b.node(cx + r * math.cos(a), cy + r * math.sin(a)) for a in angles])
    m = len(angles)
    span = m if closed else m - 1
    for inner, outer in zip(rings[:-1], rings[1:]):
        for k in range(span):
            k1 = (k + 1) % m
            b.quad(inner[k], outer[k], outer[k1], inner[k1])


def _coarsen_angles(angles, min_gap):
    """Subset of an ascending angle list with consecutive gaps >= min_gap."""
    kept = [angles[0]]
    for a in angles[1:]:
        if a - kept[-1] >= min_gap:
            kept.append(a)
    if len(kept) > 1 and angles[0] + 2 * math.pi - kept[-1] < min_gap:
        kept.pop()
    return np.array(kept)


def _merge_ring(b: _Builder, center, r_in, ang_in, r_out, ang_out):
    """Triangulate the annulus between two rings with different angle layouts.

    Two-pointer sweep over the merged ascending angle lists; produces
    len(ang_in) + len(ang_out) triangles. The lists must start at the same
    angle (ang_in a subset of ang_out, as _coarsen_angles guarantees).
    """
    cx, cy = center
    inner = [b.node(cx + r_in * math.cos(a), cy + r_in * math.sin(a)) for a in ang_in]
    outer = [b.node(cx + r_out * math.cos(a), cy + r_out * math.sin(a)) for a in ang_out]
    ai = list(ang_in) + [ang_in[0] + 2 * math.pi]
    ao = list(ang_out) + [ang_out[0] + 2 * math.pi]
    ni, no = len(inner), len(outer)
    i = j = 0
    while i < ni or j < no:
        if i < ni and (j >= no or ai[i + 1] <= ao[j + 1]):
            b.tri(inner[i % ni], outer[j % no], inner[(i + 1) % ni])
            i += 1
        else:
            b.tri(inner[i % ni], outer[j % no], outer[(j + 1) % no])
            j += 1


def _base_cshape(g: GeometryDesc) -> Mesh:
    p = g.params
    eps, rho_art = p["eps"], p["rho_art"]
    r1, r2 = math.hypot(1.0, eps), math.hypot(1.1, eps)
    th1, th2 = math.atan2(eps, 1.0), math.atan2(eps, 1.1)
    target = 0.35  # barrier angular spacing

    b = _Builder()
    # gap patch between the barrier tips (transfinite between the two arcs);
    # subdivide across the opening so the cells stay near-square
    nu = max(2, round(2 * eps / 0.2))

    def gap(u, v):
        a1 = -th1 + 2 * th1 * u
        a2 = -th2 + 2 * th2 * u
        x = (1 - v) * r1 * math.cos(a1) + v * r2 * math.cos(a2)
        y = (1 - v) * r1 * math.sin(a1) + v * r2 * math.sin(a2)
        return x, y

    b.mapped_grid(gap, np.linspace(0, 1, nu + 1), np.linspace(0, 1, 2))

    # cavity disc: a thin annulus at the boundary resolution (gap angles plus
    # uniform barrier angles), a merge ring that coarsens the angle layout so
    # the fine gap spacing does not reach the center, then a center fan
    nb = max(8, round((2 * math.pi - 2 * th1) / target))
    gap_angles = -th1 + 2 * th1 * np.linspace(0, 1, nu + 1)
    barrier = np.linspace(th1, 2 * math.pi - th1, nb + 1)[1:-1]
    disc_angles = np.concatenate([gap_angles, barrier])
    _annulus(b, (0.0, 0.0), 0.82 * r1, r1, disc_angles, 1)
    coarse = _coarsen_angles(disc_angles, 0.5)
    _merge_ring(b, (0.0, 0.0), 0.5 * r1, coarse, 0.82 * r1, disc_angles)
    _fan_disc(b, (0.0, 0.0), 0.5 * r1, coarse, n_rings=1)

    # exterior annulus from the outer barrier arc to the artificial circle
    nb2 = max(8, round((2 * math.pi - 2 * th2) / target))
    gap2 = -th2 + 2 * th2 * np.linspace(0, 1, nu + 1)
    ann_angles = np.concatenate([gap2, np.linspace(th2, 2 * math.pi - th2, nb2 + 1)[1:-1]])
    n_layers = max(1, round((rho_art - r2) / target))
    _annulus(b, (0.0, 0.0), r2, rho_art, ann_angles, n_layers)
    return _finish(b, g)


def _base_gaussian(g: GeometryDesc) -> Mesh:
    rho_art = g.params["rho_art"]
    b = _Builder()
    angles = np.linspace(0, 2 * math.pi, 13)[:-1]
    _fan_disc(b, (0.0, 0.0), rho_art, angles, n_rings=max(3, round(rho_art)))
    return _finish(b, g)


def generate(g: GeometryDesc, h0: float | None = None) -> Mesh:
    """Mesh the preset geometry; refine the base mesh until edges are <= h0.

    h0=None returns the intrinsic coarse base mesh of the preset (the level-0
    mesh of the accuracy ladder).
    """
    if h0 is not None and h0 <= 0:
        raise MeshError("h0 must be positive")
    if g.name in ("rect-test", "straight-waveguide"):
        n = 4 if h0 is None else max(2, math.ceil(1.0 / h0))
        return _base_rect(g, n)
    if g.name == "bent-waveguide":
        m = _base_bent(g)
    elif g.name == "obstructed-strip":
        m = _base_obstructed(g)
    elif g.name == "cshape-cavity":
        if h0 is not None and h0 >= g.params["eps"]:
            raise MeshError("h0 too coarse to resolve the cavity gap")
        m = _base_cshape(g)
    elif g.name == "gaussian-potential":
        m = _base_gaussian(g)
    else:
        raise MeshError(f"no mesher for geometry {g.name!r}")
    if h0 is not None:
        while m.max_edge_length() > h0:
            m = refine(m, g)
    return m


def refine(m: Mesh, g: GeometryDesc) -> Mesh:
    """Uniform 4-way midpoint refinement with boundary-arc projection."""
    table = {tag: curve for tag, _, curve in boundary_table(g)}
    nodes = [tuple(p) for p in m.nodes]
    mid = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        k = mid.get(key)
        if k is None:
            p = 0.5 * (m.nodes[i] + m.nodes[j])
            k = len(nodes)
            nodes.append((float(p[0]), float(p[1])))
            mid[key] = k
        return k

    triangles = []
    for i, j, k in m.triangles:
        a, b_, c = midpoint(i, j), midpoint(j, k), midpoint(k, i)
        triangles.extend([(i, a, c), (a, j, b_), (c, b_, k), (a, b_, c)])

    boundary = []
    for i, j, tag in m.boundary_edges:
        k = midpoint(i, j)
        curve = table[tag]
        if isinstance(curve, Arc):
            p = curve.project(nodes[k])
            span = abs(curve.theta1 - curve.theta0)
            if span < 2 * math.pi - 1e-12:
                if _point_curve_distance(p, curve) > _TAG_TOL:
                    raise MeshError(
                        f"projected midpoint {tuple(p)} left the angular range of "
                        f"the arc with tag {tag}"
                    )
            nodes[k] = (float(p[0]), float(p[1]))
        boundary.extend([(i, k, tag), (k, j, tag)])

    nodes = np.array(nodes, dtype=float)
    tri = np.array(triangles, dtype=int)
    # projection can flip orientation only for pathological meshes; re-check
    p = nodes[tri]
    area2 = cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    if (area2 <= 0).any():
        raise MeshError("refinement produced a non-positive triangle")
    return Mesh(nodes, tri, np.array(sorted(boundary), dtype=int))


# ---------------------------------------------------------------------------
# mesh file v1


def write_mesh(m: Mesh, path):
    with open(path, "w") as f:
        f.write(MESH_HEADER + "\n")
        f.write(f"nodes {len(m.nodes)}\n")
        for x, y in m.nodes:
            f.write(f"{x:.17g} {y:.17g}\n")
        f.write(f"triangles {len(m.triangles)}\n")
        for i, j, k in m.triangles:
            f.write(f"{i} {j} {k}\n")
        f.write(f"edges {len(m.boundary_edges)}\n")
        for i, j, tag in m.boundary_edges:
            f.write(f"{i} {j} {tag}\n")


def read_mesh(path) -> Mesh:
    with open(path) as f:
        lines = f.read().splitlines()

    def fail(lineno, msg):
        raise MeshFormatError(f"{path}:{lineno + 1}: {msg}")

    if not lines or lines[0].strip() != MESH_HEADER:
        fail(0, f"expected header {MESH_HEADER!r}")
    pos = 1

    def section(name, lineno):
        parts = lines[lineno].split()
        if len(parts) != 2 or parts[0] != name:
            fail(lineno, f"expected '{name} <count>'")
        try:
            n = int(parts[1])
        except ValueError:
            fail(lineno, f"bad count {parts[1]!r}")
        if n < 0 or lineno + n >= len(lines) + 1:
            fail(lineno, f"count {n} exceeds file length")
        return n

    n = section("nodes", pos)
    nodes = np.empty((n, 2))
    for i in range(n):
        try:
            x, y = lines[pos + 1 + i].split()
            nodes[i] = (float(x), float(y))
        except ValueError:
            fail(pos + 1 + i, "expected 'x y'")
    pos += 1 + n

    t = section("triangles", pos)
    tri = np.empty((t, 3), dtype=int)
    flipped = 0
    for i in range(t):
        try:
            a, b, c = (int(v) for v in lines[pos + 1 + i].split())
        except ValueError:
            fail(pos + 1 + i, "expected 'i j k'")
        if not (0 <= a < n and 0 <= b < n and 0 <= c < n):
            fail(pos + 1 + i, f"triangle index out of range (node count {n})")
        area2 = cross2(nodes[b] - nodes[a], nodes[c] - nodes[a])
        if area2 < 0:
            b, c = c, b
            flipped += 1
        tri[i] = (a, b, c)
    pos += 1 + t

    e = section("edges", pos)
    edges = np.empty((e, 3), dtype=int)
    for i in range(e):
        try:
            a, b, tag = (int(v) for v in lines[pos + 1 + i].split())
        except ValueError:
            fail(pos + 1 + i, "expected 'i j tag'")
        if not (0 <= a < n and 0 <= b < n):
            fail(pos + 1 + i, f"edge index out of range (node count {n})")
        edges[i] = (a, b, tag)

    if flipped:
        warnings.warn(f"reoriented {flipped} non-CCW triangles while reading {path}")
    return Mesh(nodes, tri, edges)
