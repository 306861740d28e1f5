"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""

import math
import numbers

import numpy as np

from .exceptions import InvalidExponentError, InvalidInputError, NoInteriorVerticesError


def check_exponent(p, minimum=1.0):
    """Return ``p`` as a float, raising if it is not a finite real >= ``minimum``."""
    if isinstance(p, bool) or not isinstance(p, numbers.Real):
        raise InvalidExponentError(f"exponent p must be a real number, got {p!r}")
    p = float(p)
    if not math.isfinite(p) or p < minimum:
        raise InvalidExponentError(f"exponent must satisfy p >= {minimum:g}, got p = {p!r}")
    return p


def check_positive(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise InvalidInputError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise InvalidInputError(f"{name} must be positive, got {value!r}")
    return value


def check_points(points):
    """Coerce ``points`` to a float array of shape (n, 2)."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1 and arr.shape[0] == 2:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidInputError(f"expected planar points of shape (n, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("points contain non-finite coordinates")
    return arr


def check_mesh(mesh, require_interior=True):
    """Check that ``mesh`` looks like a :class:`~sobolev_cp.geometry.TriMesh`."""
    from .geometry import TriMesh

    if not isinstance(mesh, TriMesh):
        raise InvalidInputError(f"expected a TriMesh, got {type(mesh).__name__}")
    if require_interior and mesh.interior.size == 0:
        raise NoInteriorVerticesError("mesh has no interior vertices")
    return mesh


def check_field_values(values, n_vertices):
    arr = np.asarray(values, dtype=float)
    if arr.shape != (n_vertices,):
        raise InvalidInputError(
            f"field has {arr.shape} values, mesh has {n_vertices} vertices"
        )
    return arr
