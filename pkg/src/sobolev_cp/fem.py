"""Piecewise-linear finite elements on a :class:`~sobolev_cp.geometry.TriMesh`.

Dirichlet conditions are imposed by elimination: the stiffness operator
acts on interior vertices only.  Nonlinear integrals of the form
``int max(u, 0)^q`` use a fixed 6-point rule exact for degree 4.
"""

import csv
import io
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .exceptions import CgStalledError, InvalidInputError
from .validation import check_exponent, check_field_values, check_mesh

__all__ = [
    "QuadratureRule",
    "DUNAVANT_4",
    "ScalarField",
    "StiffnessOperator",
    "assemble_stiffness",
    "assemble_mass",
    "element_stiffness",
    "dirichlet_energy",
    "integrate_power",
    "weak_power_load",
    "solve_spd",
    "boundary_flux",
    "field_to_csv",
    "field_to_json",
]


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Quadrature on the reference triangle in barycentric coordinates.

    Weights are normalized to sum to one, so a triangle integral is
    ``area * sum(weights * f(points))``.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(w) != len(pts):
            raise InvalidInputError("quadrature points must be barycentric triples")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-14:
            raise InvalidInputError("quadrature weights must be positive and sum to 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)


def _dunavant_4():
    a1, w1 = 0.445948490915965, 0.223381589678011
    a2, w2 = 0.091576213509771, 0.109951743655322
    b1, b2 = 1 - 2 * a1, 1 - 2 * a2
    pts = [
        (b1, a1, a1), (a1, b1, a1), (a1, a1, b1),
        (b2, a2, a2), (a2, b2, a2), (a2, a2, b2),
    ]
    w = np.array([w1] * 3 + [w2] * 3)
    return QuadratureRule(np.array(pts), w / w.sum(), 4)


DUNAVANT_4 = _dunavant_4()


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Nodal values of a P1 function on a mesh."""

    mesh: object
    values: np.ndarray
    zero_on_boundary: bool = False

    def __post_init__(self):
        values = check_field_values(self.values, self.mesh.n_vertices).copy()
        if self.zero_on_boundary and np.any(values[self.mesh.boundary_mask] != 0):
            raise InvalidInputError("field is flagged zero-on-boundary but has nonzero boundary values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_interior(cls, mesh, interior_values):
        values = np.zeros(mesh.n_vertices)
        values[mesh.interior] = interior_values
        return cls(mesh, values, zero_on_boundary=True)

    @classmethod
    def interpolate(cls, mesh, func):
        """Nodal interpolant of ``func(x, y)``."""
        values = np.asarray(func(mesh.vertices[:, 0], mesh.vertices[:, 1]), dtype=float)
        values = np.broadcast_to(values, (mesh.n_vertices,)).copy()
        return cls(mesh, values)

    @property
    def interior_values(self):
        return self.values[self.mesh.interior]

    def scaled(self, factor):
        return ScalarField(self.mesh, factor * self.values, self.zero_on_boundary)

    @cached_property
    def gradients(self):
        """Constant gradient on each triangle, shape (m, 2)."""
        return np.einsum("ti,tij->tj", self.values[self.mesh.triangles], self.mesh.basis_gradients)

    def quadrature_values(self, rule=DUNAVANT_4):
        return self.values[self.mesh.triangles] @ rule.points.T

    def __call__(self, points):
        """Evaluate the P1 interpolant at arbitrary points (NaN outside the mesh)."""
        from .validation import check_points

        pts = check_points(points)
        tri, bary = _locate(self.mesh, pts)
        out = np.full(len(pts), np.nan)
        ok = tri >= 0
        out[ok] = np.einsum("ij,ij->i", bary[ok], self.values[self.mesh.triangles[tri[ok]]])
        return out


def _locate(mesh, pts):
    """Find the containing triangle and barycentric coordinates of each point."""
    from scipy.spatial import cKDTree

    p = mesh.vertices[mesh.triangles]
    centroids = p.mean(axis=1)
    tree = cKDTree(centroids)
    k = min(16, mesh.n_triangles)
    _, cand = tree.query(pts, k=k)
    cand = np.atleast_2d(cand).reshape(len(pts), k)
    tri = np.full(len(pts), -1)
    bary = np.zeros((len(pts), 3))
    for col in range(k):
        todo = tri < 0
        if not np.any(todo):
            break
        t = cand[todo, col]
        a, b, c = p[t, 0], p[t, 1], p[t, 2]
        q = pts[todo]
        det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
        l1 = ((q[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (q[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])) / det
        l2 = ((b[:, 0] - a[:, 0]) * (q[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (q[:, 0] - a[:, 0])) / det
        l0 = 1 - l1 - l2
        lam = np.column_stack([l0, l1, l2])
        inside = np.all(lam >= -1e-12, axis=1)
        idx = np.flatnonzero(todo)[inside]
        tri[idx] = t[inside]
        bary[idx] = lam[inside]
    return tri, bary


@dataclass(frozen=True, eq=False)
class StiffnessOperator:
    """P1 stiffness matrix restricted to interior vertices.

    ``matrix[i, j]`` couples interior vertices ``interior[i]`` and
    ``interior[j]``.  ``full`` is the unconstrained matrix over all vertices.
    """

    mesh: object
    matrix: sp.csr_matrix
    full: sp.csr_matrix
    interior: np.ndarray

    @property
    def size(self):
        return self.matrix.shape[0]

    @cached_property
    def diagonal(self):
        return self.matrix.diagonal()

    def __matmul__(self, x):
        return self.matrix @ x


def element_stiffness(mesh):
    """Local 3x3 stiffness blocks, shape (m, 3, 3)."""
    g = mesh.basis_gradients
    return np.einsum("tik,tjk->tij", g, g) * mesh.areas[:, None, None]


def _assemble(mesh, local):
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_vertices
    full = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    full.sum_duplicates()
    full.sort_indices()
    return full


def assemble_stiffness(mesh):
    """Assemble the Dirichlet-eliminated P1 stiffness operator."""
    check_mesh(mesh)
    full = _assemble(mesh, element_stiffness(mesh))
    full = 0.5 * (full + full.T)
    interior = mesh.interior
    matrix = full[interior][:, interior].tocsr()
    matrix.sort_indices()
    return StiffnessOperator(mesh, matrix, full.tocsr(), interior)


def assemble_mass(mesh):
    """Exact consistent P1 mass matrix over all vertices."""
    local = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    blocks = mesh.areas[:, None, None] * local[None]
    return _assemble(mesh, blocks)


def dirichlet_energy(field):
    """``int |grad u|^2`` of the P1 interpolant."""
    g = field.gradients
    return float(np.sum(np.einsum("ij,ij->i", g, g) * field.mesh.areas))


def integrate_power(field, p, rule=DUNAVANT_4):
    """``int max(u, 0)^p`` by quadrature on each triangle."""
    p = check_exponent(p)
    uq = np.maximum(field.quadrature_values(rule), 0.0)
    per_tri = (uq**p) @ rule.weights
    return float(np.sum(per_tri * field.mesh.areas))


def weak_power_load(field, p, rule=DUNAVANT_4, full=False):
    """Load vector ``b_i = int max(u, 0)^(p-1) lambda_i`` over interior basis functions.

    With ``full=True`` the vector covers every vertex, boundary ones included.
    """
    p = check_exponent(p)
    mesh = field.mesh
    if p == 1.0:
        fq = np.ones((mesh.n_triangles, len(rule.weights)))
    else:
        fq = np.maximum(field.quadrature_values(rule), 0.0) ** (p - 1.0)
    # (m, q) x (q, 3) -> per-vertex contributions of each triangle
    local = (fq * rule.weights) @ rule.points * mesh.areas[:, None]
    load = np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)
    return load if full else load[mesh.interior]


def solve_spd(K, load, tol=1e-10, x0=None, maxiter=None):
    """Jacobi-preconditioned conjugate gradients for ``K x = load``.

    Stops when ``||load - K x|| <= tol * ||load||``.  Raises
    :class:`CgStalledError` after ``20 sqrt(n) + 1000`` iterations.
    """
    A = K.matrix if isinstance(K, StiffnessOperator) else sp.csr_matrix(K)
    b = np.asarray(load, dtype=float)
    n = A.shape[0]
    if b.shape != (n,):
        raise InvalidInputError(f"load has shape {b.shape}, operator has size {n}")
    if maxiter is None:
        maxiter = int(20 * math.sqrt(n)) + 1000
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    inv_diag = 1.0 / A.diagonal()
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    rnorm = np.linalg.norm(r)
    if rnorm <= tol * bnorm:
        return x
    z = inv_diag * r
    d = z.copy()
    rz = r @ z
    for it in range(1, maxiter + 1):
        Ad = A @ d
        alpha = rz / (d @ Ad)
        x += alpha * d
        r -= alpha * Ad
        rnorm = np.linalg.norm(r)
        if rnorm <= tol * bnorm:
            return x
        z = inv_diag * r
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
    raise CgStalledError(
        f"CG reached relative residual {rnorm / bnorm:.3e} > {tol:.1e} after {maxiter} iterations",
        residual=rnorm / bnorm,
        iterations=maxiter,
    )


def boundary_flux(field):
    """``sum over boundary edges of |grad u_T| * edge length``."""
    mesh = field.mesh
    tri = _boundary_edge_triangles(mesh)
    g = field.gradients[tri]
    e = mesh.vertices[mesh.boundary_edges[:, 1]] - mesh.vertices[mesh.boundary_edges[:, 0]]
    return float(np.sum(np.hypot(g[:, 0], g[:, 1]) * np.hypot(e[:, 0], e[:, 1])))


def _boundary_edge_triangles(mesh):
    m = mesh.n_triangles
    directed = np.concatenate(
        [mesh.triangles[:, [0, 1]], mesh.triangles[:, [1, 2]], mesh.triangles[:, [2, 0]]]
    )
    owner = np.tile(np.arange(m), 3)
    n = mesh.n_vertices
    keys = directed[:, 0] * n + directed[:, 1]
    order = np.argsort(keys, kind="stable")
    bkeys = mesh.boundary_edges[:, 0] * n + mesh.boundary_edges[:, 1]
    pos = np.searchsorted(keys[order], bkeys)
    return owner[order[pos]]


# -- export -------------------------------------------------------------------


def _field_rows(field):
    v = field.mesh.vertices
    for i in range(field.mesh.n_vertices):
        yield i, float(v[i, 0]), float(v[i, 1]), float(field.values[i])


def field_to_csv(field):
    """CSV text with columns ``vertex, x, y, value``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["vertex", "x", "y", "value"])
    for i, x, y, val in _field_rows(field):
        writer.writerow([i, f"{x:.17g}", f"{y:.17g}", f"{val:.17g}"])
    return buf.getvalue()


def field_to_json(field):
    rows = [{"vertex": i, "x": x, "y": y, "value": val} for i, x, y, val in _field_rows(field)]
    return json.dumps(rows)
