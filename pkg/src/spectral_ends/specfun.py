"""Branch-controlled square roots and Hankel functions for complex arguments.

The square-root branches encode the two continuation conventions used by the
pipeline: PositiveReal for the cylindrical-end exponents sqrt(kappa - lambda)
and NegativeImag for the radiating sqrt(lambda) on the artificial circle.
Bessel/Hankel evaluation is delegated to scipy.special, wrapped with the
supported-range contract so out-of-range arguments fail loudly instead of
silently degrading.
"""

from __future__ import annotations

import enum

import numpy as np
from scipy import special

MAX_ORDER = 60
ABS_Z_MIN = 1e-3
ABS_Z_MAX = 100.0


class SpecFunError(ValueError):
    pass


class BranchMode(enum.Enum):
    """Square-root branch selection.

    PositiveReal: Re(result) > 0, tie-break Im >= 0 when Re = 0.
    NegativeImag: Im(result) < 0, tie-break Re >= 0 when Im = 0.
    Principal: numpy principal branch (Re >= 0, cut on the negative reals).
    """

    POSITIVE_REAL = "positive-real"
    NEGATIVE_IMAG = "negative-imag"
    PRINCIPAL = "principal"


def branch_sqrt(w: complex, mode: BranchMode) -> complex:
    """Square root of w on the branch selected by mode (total function)."""
    r = complex(np.sqrt(complex(w)))
    if mode is BranchMode.PRINCIPAL:
        return r
    if mode is BranchMode.POSITIVE_REAL:
        # principal already has Re >= 0 with Im >= 0 on the Re = 0 boundary
        return r
    if mode is BranchMode.NEGATIVE_IMAG:
        if r.imag > 0.0 or (r.imag == 0.0 and r.real < 0.0):
            r = -r
        return r
    raise SpecFunError(f"unknown branch mode {mode!r}")


def hankel1(n: int, z: complex) -> tuple[complex, complex]:
    """Hankel function of the first kind H_n(z) and its z-derivative.

    Supported range: 1e-3 <= |z| <= 100, |n| <= 60; negative orders via
    H_{-n} = (-1)^n H_n.
    """
    n = int(n)
    z = complex(z)
    az = abs(z)
    if not ABS_Z_MIN <= az <= ABS_Z_MAX:
        raise SpecFunError(
            f"|z| = {az:.3e} outside supported range [{ABS_Z_MIN}, {ABS_Z_MAX}]"
        )
    if abs(n) > MAX_ORDER:
        raise SpecFunError(f"order |{n}| exceeds supported maximum {MAX_ORDER}")
    sign = 1.0
    if n < 0:
        sign = -1.0 if n % 2 else 1.0
        n = -n
    h = complex(special.hankel1(n, z))
    hm1 = complex(special.hankel1(n - 1, z)) if n > 0 else -complex(special.hankel1(1, z))
    hp = hm1 - (n / z) * h
    return sign * h, sign * hp
