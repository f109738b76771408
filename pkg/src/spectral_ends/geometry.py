"""Truncated interior domains: boundary segments, Robin data, end attachments.

A geometry is the bounded interior domain together with either a list of
cylindrical-end attachments (each contributing an interface of finite width)
or an artificial circle enclosing an obstacle/potential.  Boundary curves are
kept exact (segments and circular arcs); meshing decides resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

INTERFACE_TAG_BASE = 100

PRESETS = (
    "bent-waveguide",
    "straight-waveguide",
    "obstructed-strip",
    "cshape-cavity",
    "gaussian-potential",
    "rect-test",
)


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class RobinCoeff:
    """Boundary-condition pair (a, b), normalized so a^2 + b^2 = 1.

    b = 0 is a pure Dirichlet condition, a = 0 pure Neumann; otherwise the
    weak form carries the coefficient a/b on the segment.
    """

    a: float
    b: float

    def __post_init__(self):
        norm = math.hypot(self.a, self.b)
        if norm == 0.0:
            raise GeometryError("RobinCoeff (0, 0) is not a boundary condition")
        object.__setattr__(self, "a", self.a / norm)
        object.__setattr__(self, "b", self.b / norm)

    @classmethod
    def dirichlet(cls) -> "RobinCoeff":
        return cls(1.0, 0.0)

    @classmethod
    def neumann(cls) -> "RobinCoeff":
        return cls(0.0, 1.0)

    @property
    def is_dirichlet(self) -> bool:
        return self.b == 0.0

    @property
    def is_neumann(self) -> bool:
        return self.a == 0.0


@dataclass(frozen=True)
class Segment:
    """Oriented straight segment from p0 to p1."""

    p0: tuple
    p1: tuple

    def point(self, t):
        t = np.asarray(t, dtype=float)
        x = self.p0[0] + (self.p1[0] - self.p0[0]) * t
        y = self.p0[1] + (self.p1[1] - self.p0[1]) * t
        return np.stack([x, y], axis=-1)

    @property
    def length(self) -> float:
        return math.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1])

    def endpoints(self):
        return self.p0, self.p1

    def project(self, p):
        """Closest point on the (infinite) line through the segment."""
        d = np.array(self.p1) - np.array(self.p0)
        d = d / np.linalg.norm(d)
        v = np.asarray(p) - np.array(self.p0)
        return np.array(self.p0) + d * float(v @ d)


@dataclass(frozen=True)
class Arc:
    """Circular arc, parametrized by angle from theta0 to theta1.

    theta1 > theta0 is counter-clockwise; decreasing is clockwise.  Stored
    exactly; meshing projects nodes onto it.
    """

    center: tuple
    radius: float
    theta0: float
    theta1: float

    def point(self, t):
        t = np.asarray(t, dtype=float)
        th = self.theta0 + (self.theta1 - self.theta0) * t
        x = self.center[0] + self.radius * np.cos(th)
        y = self.center[1] + self.radius * np.sin(th)
        return np.stack([x, y], axis=-1)

    @property
    def length(self) -> float:
        return self.radius * abs(self.theta1 - self.theta0)

    def endpoints(self):
        p = self.point(np.array([0.0, 1.0]))
        return tuple(p[0]), tuple(p[1])

    def project(self, p):
        """Radial projection of p onto the circle carrying the arc."""
        v = np.asarray(p, dtype=float) - np.array(self.center)
        r = np.linalg.norm(v)
        if r == 0.0:
            raise GeometryError("cannot project the arc center onto the arc")
        return np.array(self.center) + v * (self.radius / r)


@dataclass(frozen=True)
class BoundarySegment:
    curve: object  # Segment or Arc
    coeff: RobinCoeff
    tag: int

    def __post_init__(self):
        if self.curve.length <= 0.0:
            raise GeometryError(f"degenerate boundary segment (tag {self.tag})")


@dataclass(frozen=True)
class EndDesc:
    """A cylindrical end attached along `attach_line` (s = 0 at its start).

    side_coeffs are the Robin pairs on the two infinite side walls, in the
    order (wall at s = 0, wall at s = width).
    """

    attach_line: Segment
    width: float
    side_coeffs: tuple  # (RobinCoeff, RobinCoeff)
    outward_dir: tuple
    tag: int

    def __post_init__(self):
        if self.width <= 0.0:
            raise GeometryError("end width must be positive")
        d = np.array(self.attach_line.p1) - np.array(self.attach_line.p0)
        if abs(float(np.array(self.outward_dir) @ d)) > 1e-10 * np.linalg.norm(d):
            raise GeometryError("outward_dir must be perpendicular to the interface")

    def arclength(self, pts):
        """Arclength coordinate s in [0, width] of points on the interface."""
        p0 = np.array(self.attach_line.p0)
        d = (np.array(self.attach_line.p1) - p0) / self.attach_line.length
        return (np.atleast_2d(pts) - p0) @ d


@dataclass(frozen=True)
class GaussianSum:
    """Scalar potential q(x, y) = amplitude * sum_j exp(-decay * |r - r_j|^2)."""

    amplitude: float
    decay: float
    centers: tuple

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        q = np.zeros(np.broadcast(x, y).shape)
        for cx, cy in self.centers:
            q += np.exp(-self.decay * ((x - cx) ** 2 + (y - cy) ** 2))
        return self.amplitude * q


@dataclass(frozen=True)
class GeometryDesc:
    name: str
    params: dict
    segments: tuple  # of BoundarySegment (this is the fixed boundary)
    ends: tuple  # of EndDesc
    artificial_circle: tuple | None = None  # ((cx, cy), radius)
    potential: GaussianSum | None = None

    def __post_init__(self):
        if bool(self.ends) == (self.artificial_circle is not None):
            raise GeometryError(
                "exactly one of cylindrical ends / artificial circle must be present"
            )

    @property
    def circle_tag(self) -> int:
        return INTERFACE_TAG_BASE + 1

    def end_by_tag(self, tag: int) -> EndDesc:
        for e in self.ends:
            if e.tag == tag:
                return e
        raise KeyError(tag)


def boundary_table(g: GeometryDesc):
    """All boundary pieces as (tag, coeff, curve).

    Interface entries carry coeff None; the end of tag 100+n contributes its
    attach line, an artificial circle contributes the full circle (tag 101).
    """
    table = [(s.tag, s.coeff, s.curve) for s in g.segments]
    for e in g.ends:
        table.append((e.tag, None, e.attach_line))
    if g.artificial_circle is not None:
        (cx, cy), rho = g.artificial_circle
        table.append((g.circle_tag, None, Arc((cx, cy), rho, 0.0, 2.0 * math.pi)))
    return table


def closure_check(g: GeometryDesc, tol: float = 1e-12) -> bool:
    """Boundary curves plus interfaces must concatenate into closed loops."""
    pts = []
    for tag, _, curve in boundary_table(g):
        if isinstance(curve, Arc) and abs(abs(curve.theta1 - curve.theta0) - 2 * math.pi) < tol:
            continue  # full circle closes on its own
        pts.extend(curve.endpoints())
    unmatched = list(pts)
    while unmatched:
        p = unmatched.pop()
        for i, q in enumerate(unmatched):
            if math.hypot(p[0] - q[0], p[1] - q[1]) <= tol:
                unmatched.pop(i)
                break
        else:
            return False
    return True


def _rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _build_rect_test() -> GeometryDesc:
    D = RobinCoeff.dirichlet()
    N = RobinCoeff.neumann()
    segments = (
        BoundarySegment(Segment((0.0, 0.0), (1.0, 0.0)), D, 1),
        BoundarySegment(Segment((1.0, 1.0), (0.0, 1.0)), D, 2),
        BoundarySegment(Segment((0.0, 1.0), (0.0, 0.0)), N, 3),
    )
    end = EndDesc(
        attach_line=Segment((1.0, 0.0), (1.0, 1.0)),
        width=1.0,
        side_coeffs=(D, D),
        outward_dir=(1.0, 0.0),
        tag=INTERFACE_TAG_BASE + 1,
    )
    return GeometryDesc("rect-test", {}, segments, (end,))


def _build_straight_waveguide() -> GeometryDesc:
    D = RobinCoeff.dirichlet()
    N = RobinCoeff.neumann()
    segments = (
        BoundarySegment(Segment((0.0, 0.0), (1.0, 0.0)), D, 1),
        BoundarySegment(Segment((1.0, 1.0), (0.0, 1.0)), N, 2),
    )
    ends = (
        EndDesc(Segment((0.0, 0.0), (0.0, 1.0)), 1.0, (D, N), (-1.0, 0.0),
                INTERFACE_TAG_BASE + 1),
        EndDesc(Segment((1.0, 0.0), (1.0, 1.0)), 1.0, (D, N), (1.0, 0.0),
                INTERFACE_TAG_BASE + 2),
    )
    return GeometryDesc("straight-waveguide", {}, segments, ends)


def _build_bent_waveguide() -> GeometryDesc:
    """Width-1 guide bent through pi/4; Dirichlet on the inner (r=1) side,
    Neumann on the outer (r=2) side.  Unit-length straight arms connect the
    bend to the two interfaces."""
    D = RobinCoeff.dirichlet()
    N = RobinCoeff.neumann()
    R = _rot(math.pi / 4)

    def rp(u, v):
        p = R @ np.array([u, v])
        return (float(p[0]), float(p[1]))

    segments = (
        # arm A (below the bend, x in [1,2], y in [-1,0])
        BoundarySegment(Segment((1.0, 0.0), (1.0, -1.0)), D, 1),
        BoundarySegment(Segment((2.0, -1.0), (2.0, 0.0)), N, 2),
        # the bend
        BoundarySegment(Arc((0.0, 0.0), 1.0, 0.0, math.pi / 4), D, 3),
        BoundarySegment(Arc((0.0, 0.0), 2.0, 0.0, math.pi / 4), N, 4),
        # arm B (the pi/4-rotated copy, local coords u in [1,2], v in [0,1])
        BoundarySegment(Segment(rp(1.0, 0.0), rp(1.0, 1.0)), D, 5),
        BoundarySegment(Segment(rp(2.0, 1.0), rp(2.0, 0.0)), N, 6),
    )
    out_b = R @ np.array([0.0, 1.0])
    ends = (
        EndDesc(Segment((1.0, -1.0), (2.0, -1.0)), 1.0, (D, N), (0.0, -1.0),
                INTERFACE_TAG_BASE + 1),
        EndDesc(Segment(rp(1.0, 1.0), rp(2.0, 1.0)), 1.0, (D, N),
                (float(out_b[0]), float(out_b[1])), INTERFACE_TAG_BASE + 2),
    )
    return GeometryDesc("bent-waveguide", {}, segments, ends)


def _build_obstructed_strip(delta: float, radius: float, symmetry: str) -> GeometryDesc:
    """Acoustic strip {|y| < 1} obstructed by a sound-hard disc at (0, delta).

    Walls and obstacle carry Neumann conditions (the reference values for this
    benchmark are for the acoustic waveguide: with Dirichlet walls the
    operator would be bounded below by pi^2/4 and the tabulated eigenvalue
    near 1.505 could not exist).  The problem is reduced to x > 0 by a
    symmetry condition at x = 0 and truncated at x = 1; thresholds are
    (j pi / 2)^2 = 0, pi^2/4, pi^2, ...
    """
    if abs(delta) + radius >= 1.0:
        raise GeometryError("obstructed-strip requires |delta| + radius < 1")
    if radius <= 0.0:
        raise GeometryError("obstacle radius must be positive")
    if symmetry not in ("neumann", "dirichlet"):
        raise GeometryError(f"unknown symmetry condition {symmetry!r}")
    W, Lx = 1.0, 1.0  # half-width and truncation length
    d, r = delta, radius
    N = RobinCoeff.neumann()
    sym = N if symmetry == "neumann" else RobinCoeff.dirichlet()
    segments = (
        BoundarySegment(Segment((0.0, -W), (Lx, -W)), N, 1),
        BoundarySegment(Segment((Lx, W), (0.0, W)), N, 2),
        BoundarySegment(Segment((0.0, W), (0.0, d + r)), sym, 3),
        # right half of the obstacle disc, from top to bottom
        BoundarySegment(Arc((0.0, d), r, math.pi / 2, -math.pi / 2), N, 4),
        BoundarySegment(Segment((0.0, d - r), (0.0, -W)), sym, 5),
    )
    end = EndDesc(Segment((Lx, -W), (Lx, W)), 2 * W, (N, N), (1.0, 0.0),
                  INTERFACE_TAG_BASE + 1)
    return GeometryDesc(
        "obstructed-strip",
        {"delta": delta, "radius": radius, "symmetry": symmetry},
        segments, (end,),
    )


def _build_cshape_cavity(eps: float, rho_art: float) -> GeometryDesc:
    if not 0.0 < eps < 1.0:
        raise GeometryError("cshape-cavity requires eps in (0, 1)")
    r1 = math.hypot(1.0, eps)
    r2 = math.hypot(1.1, eps)
    if rho_art <= 1.05 * r2:
        raise GeometryError(
            f"artificial circle radius {rho_art} too close to the obstacle "
            f"(extent {r2:.4f})"
        )
    th1 = math.atan2(eps, 1.0)
    th2 = math.atan2(eps, 1.1)
    D = RobinCoeff.dirichlet()
    segments = (
        # inner arc of the barrier, the long way round from (1, eps) to (1, -eps)
        BoundarySegment(Arc((0.0, 0.0), r1, th1, 2 * math.pi - th1), D, 1),
        # outer arc, from (1.1, eps) to (1.1, -eps)
        BoundarySegment(Arc((0.0, 0.0), r2, th2, 2 * math.pi - th2), D, 2),
        # gap end caps
        BoundarySegment(Segment((1.0, eps), (1.1, eps)), D, 3),
        BoundarySegment(Segment((1.0, -eps), (1.1, -eps)), D, 4),
    )
    return GeometryDesc(
        "cshape-cavity", {"eps": eps, "rho_art": rho_art},
        segments, (), artificial_circle=((0.0, 0.0), rho_art),
    )


def _build_gaussian_potential(rho_art: float, amplitude: float, decay: float) -> GeometryDesc:
    if rho_art <= 1.5:
        raise GeometryError("gaussian-potential needs the circle well outside the barrier")
    s3 = math.sin(math.pi / 3)
    c3 = math.cos(math.pi / 3)
    q = GaussianSum(amplitude, decay, ((0.0, -1.0), (s3, c3), (-s3, c3)))
    return GeometryDesc(
        "gaussian-potential",
        {"rho_art": rho_art, "amplitude": amplitude, "decay": decay},
        (), (), artificial_circle=((0.0, 0.0), rho_art), potential=q,
    )


def build_preset(name: str, params: dict | None = None) -> GeometryDesc:
    """Construct one of the benchmark geometries.

    Presets: bent-waveguide, straight-waveguide, obstructed-strip (delta,
    radius, symmetry), cshape-cavity (eps, rho_art), gaussian-potential
    (rho_art, amplitude, decay), rect-test.
    """
    params = dict(params or {})
    if name == "rect-test":
        g = _build_rect_test()
    elif name == "straight-waveguide":
        g = _build_straight_waveguide()
    elif name == "bent-waveguide":
        g = _build_bent_waveguide()
    elif name == "obstructed-strip":
        g = _build_obstructed_strip(
            params.pop("delta", 0.0), params.pop("radius", 0.3),
            params.pop("symmetry", "neumann"),
        )
    elif name == "cshape-cavity":
        g = _build_cshape_cavity(params.pop("eps", 0.2), params.pop("rho_art", 1.5))
    elif name == "gaussian-potential":
        g = _build_gaussian_potential(
            params.pop("rho_art", 4.0), params.pop("amplitude", 40.0),
            params.pop("decay", 2.0),
        )
    else:
        raise GeometryError(f"unknown preset {name!r}")
    if params:
        raise GeometryError(f"unused parameters for preset {name!r}: {sorted(params)}")
    if not closure_check(g):
        raise GeometryError(f"preset {name!r} produced a non-closed boundary")
    return g
