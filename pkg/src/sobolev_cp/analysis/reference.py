"""Closed-form values of ``C_p`` on the unit disk and unit square.

Each constant is computed from its own oracle rather than typed in:
the first zero of ``J0`` by bisection on its power series, the square
torsion integral from its one-dimensional Fourier series, and the remaining
two from exact formulas.
"""

import math
from functools import lru_cache

import numpy as np

from ..geometry import Disk, Polygon, polygon_signed_area

__all__ = [
    "bessel_j0",
    "bessel_j0_first_zero",
    "square_torsion_integral",
    "square_torsional_rigidity",
    "reference_value",
    "reference_for_domain",
]


def bessel_j0(x):
    """``J0(x)`` from its Maclaurin series (fine for the small ``x`` used here)."""
    total, term, k = 0.0, 1.0, 0
    q = (x / 2.0) ** 2
    while abs(term) > 1e-18 * max(1.0, abs(total)) or k < 3:
        total += term
        k += 1
        term *= -q / (k * k)
    return total


@lru_cache(maxsize=None)
def bessel_j0_first_zero():
    lo, hi = 2.0, 3.0
    while hi - lo > 4 * np.finfo(float).eps * hi:
        mid = 0.5 * (lo + hi)
        if bessel_j0(lo) * bessel_j0(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=None)
def square_torsion_integral(terms=400):
    """``int w`` over the unit square, where ``-Laplace(w) = 1`` and ``w = 0`` on the boundary.

    ``1/12 - (16/pi^5) sum_{n odd} tanh(n pi / 2) / n^5``.
    """
    s = math.fsum(math.tanh(n * math.pi / 2) / n**5 for n in range(1, 2 * terms, 2))
    return 1.0 / 12.0 - 16.0 / math.pi**5 * s


def square_torsional_rigidity():
    """Torsional rigidity ``P = 4 int w`` of the unit square (about 0.140577)."""
    return 4.0 * square_torsion_integral()


def reference_value(kind, p):
    """Closed-form ``C_p`` for ``kind`` in {"unit_disk", "unit_square"} and ``p`` in {1, 2}.

    Returns None when nothing is catalogued.
    """
    p = float(p)
    if kind == "unit_disk":
        if p == 2.0:
            return bessel_j0_first_zero() ** 2
        if p == 1.0:
            # torsion function (1 - r^2)/4 integrates to pi/8
            return 8.0 / math.pi
    elif kind == "unit_square":
        if p == 2.0:
            return 2.0 * math.pi**2
        if p == 1.0:
            return 4.0 / square_torsional_rigidity()
    return None


def reference_for_domain(domain, p):
    """Closed-form ``C_p`` for any disk or axis-aligned square, via the scaling law."""
    if isinstance(domain, Disk):
        base = reference_value("unit_disk", p)
        scale = domain.radius
    elif isinstance(domain, Polygon) and _is_axis_square(domain.vertices):
        base = reference_value("unit_square", p)
        scale = math.sqrt(polygon_signed_area(np.asarray(domain.vertices)))
    else:
        return None
    if base is None:
        return None
    return base * scale ** (-4.0 / float(p))


def _is_axis_square(vertices):
    v = np.asarray(vertices, dtype=float)
    if len(v) != 4:
        return False
    edges = np.roll(v, -1, axis=0) - v
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    axis = np.all((np.abs(edges[:, 0]) < 1e-12) | (np.abs(edges[:, 1]) < 1e-12))
    return bool(axis and np.allclose(lengths, lengths[0], rtol=1e-12))
