"""Transversal eigenbases on the interfaces.

For interval interfaces (cylindrical ends) the eigenpairs (kappa_j, w_j) of
-w'' = kappa w with the end's side-wall boundary conditions are closed-form
for Dirichlet/Neumann walls and come from bisection on the characteristic
equation for general Robin walls.  For the artificial circle the basis is the
Fourier family e^{in theta} in the order (0, 1, -1, 2, -2, ...).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from spectral_ends.geometry import RobinCoeff

DEFAULT_MODES = 20


class TransverseError(ValueError):
    pass


@dataclass(frozen=True)
class TransverseBasis:
    kappa: np.ndarray  # ascending eigenvalues (interval) or Fourier orders (circle)
    modes: tuple  # callables w_j(s) on [0, L] (interval) or w_n(theta) (circle)
    end_tag: int
    kind: str  # "interval" | "circle"
    length: float  # interval length L, or circumference for a circle
    orders: tuple | None = None  # circle only: (0, 1, -1, 2, -2, ...)

    def __post_init__(self):
        self.kappa.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.modes)


def _sine_mode(L, k):
    c = math.sqrt(2.0 / L)
    return lambda s: c * np.sin(k * np.asarray(s))


def _cosine_mode(L, k):
    if k == 0.0:
        c = 1.0 / math.sqrt(L)
        return lambda s: c * np.ones_like(np.asarray(s, dtype=float))
    c = math.sqrt(2.0 / L)
    return lambda s: c * np.cos(k * np.asarray(s))


def _robin_char(k, L, left: RobinCoeff, right: RobinCoeff) -> float:
    """Characteristic determinant for w = A cos(ks) + B sin(ks).

    Outward-normal convention: a w - b w' = 0 at s = 0, a w + b w' = 0 at
    s = L.
    """
    al, bl = left.a, left.b
    ar, br = right.a, right.b
    skl, ckl = math.sin(k * L), math.cos(k * L)
    return al * (ar * skl + br * k * ckl) + bl * k * (ar * ckl - br * k * skl)


def _robin_mode(L, k, left: RobinCoeff):
    """Eigenfunction satisfying the left Robin condition, L2-normalized."""
    # a A - b k B = 0 at s = 0  =>  (A, B) proportional to (b k, a)
    A, B = left.b * k, left.a
    # closed-form integral of (A cos ks + B sin ks)^2 on [0, L]
    s2k = math.sin(2 * k * L) / (2 * k)
    c2k = (1.0 - math.cos(2 * k * L)) / (2 * k)
    nrm2 = (
        A * A * (L + s2k) / 2.0
        + B * B * (L - s2k) / 2.0
        + A * B * c2k
    )
    A, B = A / math.sqrt(nrm2), B / math.sqrt(nrm2)
    return lambda s: A * np.cos(k * np.asarray(s)) + B * np.sin(k * np.asarray(s))


def interval_basis(
    L: float, left: RobinCoeff, right: RobinCoeff, M: int = DEFAULT_MODES, end_tag: int = 0
) -> TransverseBasis:
    """First M transversal eigenpairs on an interval of length L."""
    if L <= 0:
        raise TransverseError("interval length must be positive")
    if M < 1:
        raise TransverseError("M must be at least 1")
    j = np.arange(1, M + 1)
    if left.is_dirichlet and right.is_dirichlet:
        k = j * math.pi / L
        modes = tuple(_sine_mode(L, ki) for ki in k)
    elif left.is_dirichlet and right.is_neumann:
        k = (j - 0.5) * math.pi / L
        modes = tuple(_sine_mode(L, ki) for ki in k)
    elif left.is_neumann and right.is_dirichlet:
        k = (j - 0.5) * math.pi / L
        modes = tuple(_cosine_mode(L, ki) for ki in k)
    elif left.is_neumann and right.is_neumann:
        k = (j - 1) * math.pi / L
        modes = tuple(_cosine_mode(L, ki) for ki in k)
    else:
        k = _robin_roots(L, left, right, M)
        modes = tuple(_robin_mode(L, ki, left) for ki in k)
    return TransverseBasis(
        kappa=k.astype(float) ** 2, modes=modes, end_tag=end_tag, kind="interval", length=L
    )


def _robin_roots(L, left, right, M) -> np.ndarray:
    """Bisection roots of the Robin characteristic equation.

    Sturm interlacing puts one root of the characteristic determinant in each
    interval between consecutive Dirichlet-Dirichlet wavenumbers j*pi/L, so
    those provide guaranteed brackets.
    """
    roots = []
    grid = np.linspace(0.0, (M + 2) * math.pi / L, 40 * (M + 2))
    f = np.array([_robin_char(k, L, left, right) for k in grid])
    for i in range(len(grid) - 1):
        if len(roots) == M:
            break
        a, b = grid[i], grid[i + 1]
        fa, fb = f[i], f[i + 1]
        if fa == 0.0:
            if a > 0 and (not roots or a - roots[-1] > 1e-9):
                roots.append(a)
            continue
        if fa * fb > 0:
            continue
        for _ in range(200):
            m = 0.5 * (a + b)
            fm = _robin_char(m, L, left, right)
            if fm == 0.0 or b - a < 1e-12:
                break
            if fa * fm < 0:
                b = m
            else:
                a, fa = m, fm
        r = 0.5 * (a + b)
        if r > 1e-9 and (not roots or r - roots[-1] > 1e-9):
            roots.append(r)
    if len(roots) < M:
        raise TransverseError(
            f"Robin root finder found only {len(roots)} of {M} transversal roots"
        )
    return np.array(roots[:M])


def circle_basis(rho_art: float, M: int = DEFAULT_MODES + 1, end_tag: int = 0) -> TransverseBasis:
    """Fourier basis on the artificial circle, orders (0, 1, -1, 2, -2, ...)."""
    if rho_art <= 0:
        raise TransverseError("circle radius must be positive")
    if M % 2 == 0:
        raise TransverseError("circle basis size M must be odd so orders pair up")
    orders = [0]
    for n in range(1, (M + 1) // 2):
        orders.extend([n, -n])
    c = 1.0 / math.sqrt(2.0 * math.pi * rho_art)

    def make(n):
        return lambda theta: c * np.exp(1j * n * np.asarray(theta))

    return TransverseBasis(
        # transverse eigenvalue of -d^2/ds^2 on the circle (arclength s);
        # its stable sort keeps the (0, 1, -1, 2, -2, ...) pair order
        kappa=np.array([(n / rho_art) ** 2 for n in orders]),
        modes=tuple(make(n) for n in orders),
        end_tag=end_tag,
        kind="circle",
        length=2.0 * math.pi * rho_art,
        orders=tuple(orders),
    )


def merge_thresholds(bases) -> tuple[np.ndarray, list]:
    """Global transverse ordering: per-end modes merged, sorted by kappa.

    Returns (sorted kappa array, list of (basis, local index)) so row k of the
    coupling matrix corresponds to entry k here.  Ties keep per-end order
    (stable sort), making the global order deterministic.
    """
    entries = []
    for tb in bases:
        for i, kap in enumerate(tb.kappa):
            entries.append((float(kap), len(entries), tb, i))
    entries.sort(key=lambda e: (e[0], e[1]))
    kappa = np.array([e[0] for e in entries])
    index = [(e[2], e[3]) for e in entries]
    return kappa, index
