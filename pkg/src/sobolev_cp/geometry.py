"""Planar domains, conformal maps of the unit disk and triangular meshes.

Three families of domains are supported:

* disks, meshed with concentric polar rings;
* simple polygons, meshed on a structured grid when every edge is axis
  aligned and falls on grid lines, and by constrained Delaunay refinement
  (Shewchuk's Triangle) otherwise;
* images ``f(r D)`` of a scaled unit disk under a conformal map, meshed by
  pushing the vertices of a unit-disk mesh through the map.

All lengths are dimensionless.
"""

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import (
    FoldedMeshError,
    InvalidInputError,
    InvalidMapError,
    InvalidPolygonError,
    PoleHitError,
    ResolutionTooCoarseError,
)
from .validation import check_positive

POLE_TOL = 1e-14

__all__ = [
    "ConformalMap",
    "Disk",
    "Polygon",
    "MapImage",
    "TriMesh",
    "eval_map",
    "eval_derivative",
    "mesh_disk",
    "mesh_polygon",
    "mesh_map_image",
    "mesh_domain",
    "domain_from_json",
    "domain_to_json",
    "map_from_json",
    "map_to_json",
]


# ---------------------------------------------------------------------------
# Conformal maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConformalMap:
    """An analytic map of the unit disk.

    ``kind`` is one of ``"power_series"``, ``"moebius"`` or ``"linear"``.
    ``coeffs`` holds ``(a1, ..., aN)`` for a power series
    ``f(z) = a0 + sum_k a_k z^k``, ``(a, b, c, d)`` for the Moebius map
    ``(a z + b) / (c z + d)`` and ``(a, b)`` for ``a z + b``.  ``a0`` is only
    used by power series.

    Use the :meth:`power_series`, :meth:`moebius` and :meth:`linear`
    constructors rather than calling the class directly.
    """

    kind: str
    coeffs: tuple
    a0: complex = 0j

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "a0", complex(self.a0))
        if not all(math.isfinite(c.real) and math.isfinite(c.imag) for c in coeffs + (self.a0,)):
            raise InvalidMapError("map coefficients must be finite")
        if self.kind == "power_series":
            if not coeffs or not any(c != 0 for c in coeffs):
                raise InvalidMapError("power series needs a nonzero coefficient among a1..aN")
        elif self.kind == "moebius":
            if len(coeffs) != 4:
                raise InvalidMapError("Moebius map needs exactly four coefficients (a, b, c, d)")
            a, b, c, d = coeffs
            if a * d - b * c == 0:
                raise InvalidMapError("Moebius map is degenerate: ad - bc = 0")
        elif self.kind == "linear":
            if len(coeffs) != 2:
                raise InvalidMapError("linear map needs exactly two coefficients (a, b)")
            if coeffs[0] == 0:
                raise InvalidMapError("linear map needs a nonzero slope")
        else:
            raise InvalidMapError(f"unknown map kind {self.kind!r}")

    @classmethod
    def power_series(cls, coeffs, a0=0j):
        return cls("power_series", tuple(coeffs), a0)

    @classmethod
    def moebius(cls, a, b, c, d):
        return cls("moebius", (a, b, c, d))

    @classmethod
    def linear(cls, a, b=0j):
        return cls("linear", (a, b))

    @property
    def is_linear(self):
        """True when the map is affine, whatever its representation."""
        if self.kind == "linear":
            return True
        if self.kind == "moebius":
            return self.coeffs[2] == 0
        return all(c == 0 for c in self.coeffs[1:])

    def __call__(self, z):
        return eval_map(self, z)

    def derivative(self, z):
        return eval_derivative(self, z)

    def pole(self):
        """Location of the Moebius pole, or None if there is none in C."""
        if self.kind == "moebius" and self.coeffs[2] != 0:
            _, _, c, d = self.coeffs
            return -d / c
        return None


def _moebius_denominator(fmap, z):
    _, _, c, d = fmap.coeffs
    den = c * z + d
    scale = np.maximum(np.abs(c) * np.abs(z), abs(d))
    if np.any(np.abs(den) <= POLE_TOL * np.maximum(scale, 1.0)):
        raise PoleHitError("Moebius denominator vanishes at an evaluation point")
    return den


def eval_map(fmap, z):
    """Evaluate ``fmap`` at ``z`` (scalar or array of complex points)."""
    scalar = np.isscalar(z)
    z = np.asarray(z, dtype=complex)
    if fmap.kind == "linear":
        a, b = fmap.coeffs
        out = a * z + b
    elif fmap.kind == "moebius":
        a, b, _, _ = fmap.coeffs
        out = (a * z + b) / _moebius_denominator(fmap, z)
    else:
        # Horner on a1 + a2 z + ... then multiply by z
        acc = np.zeros_like(z)
        for c in reversed(fmap.coeffs):
            acc = acc * z + c
        out = fmap.a0 + z * acc
    return complex(out) if scalar else out


def eval_derivative(fmap, z):
    """Exact derivative ``f'(z)`` of ``fmap``."""
    scalar = np.isscalar(z)
    z = np.asarray(z, dtype=complex)
    if fmap.kind == "linear":
        out = np.full_like(z, fmap.coeffs[0])
    elif fmap.kind == "moebius":
        a, b, c, d = fmap.coeffs
        den = _moebius_denominator(fmap, z)
        out = (a * d - b * c) / den**2
    else:
        acc = np.zeros_like(z)
        n = len(fmap.coeffs)
        for k in range(n, 0, -1):
            acc = acc * z + k * fmap.coeffs[k - 1]
        out = acc
    return complex(out) if scalar else out


# ---------------------------------------------------------------------------
# Domain specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Disk:
    radius: float = 1.0
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "radius", check_positive(self.radius, "disk radius"))
        center = tuple(float(c) for c in self.center)
        if len(center) != 2:
            raise InvalidInputError("disk center must be a point [x, y]")
        object.__setattr__(self, "center", center)


@dataclass(frozen=True)
class Polygon:
    vertices: tuple

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise InvalidPolygonError("polygon vertices must be a list of [x, y] points")
        _check_simple_ccw(verts)
        object.__setattr__(self, "vertices", tuple(map(tuple, verts.tolist())))


@dataclass(frozen=True)
class MapImage:
    map: ConformalMap
    r: float

    def __post_init__(self):
        r = float(self.r)
        if not 0.0 < r < 1.0:
            raise InvalidInputError(f"map_image radius r must lie in (0, 1), got {r!r}")
        object.__setattr__(self, "r", r)


def _pair(value):
    if isinstance(value, (int, float)):
        return complex(value)
    re, im = value
    return complex(float(re), float(im))


def map_from_json(obj):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidMapError("map must be an object with a 'kind' field")
    coeffs = [_pair(c) for c in obj.get("coeffs", [])]
    kind = obj["kind"]
    if kind == "power_series":
        return ConformalMap.power_series(coeffs, _pair(obj.get("a0", 0.0)))
    if kind in ("moebius", "linear"):
        return ConformalMap(kind, tuple(coeffs))
    raise InvalidMapError(f"unknown map kind {kind!r}")


def map_to_json(fmap):
    out = {"kind": fmap.kind, "coeffs": [[c.real, c.imag] for c in fmap.coeffs]}
    if fmap.kind == "power_series" and fmap.a0 != 0:
        out["a0"] = [fmap.a0.real, fmap.a0.imag]
    return out


def domain_from_json(obj):
    """Build a domain from its JSON form (a dict or a JSON string)."""
    if isinstance(obj, str):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"malformed domain JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise InvalidInputError("domain must be a JSON object")
    kind = obj.get("type")
    try:
        if kind == "disk":
            return Disk(obj.get("radius", 1.0), tuple(obj.get("center", (0.0, 0.0))))
        if kind == "polygon":
            return Polygon(tuple(map(tuple, obj["vertices"])))
        if kind == "map_image":
            return MapImage(map_from_json(obj["map"]), obj["r"])
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"incomplete {kind} domain: {exc}") from None
    raise InvalidInputError(f"unknown domain type {kind!r}")


def domain_to_json(domain):
    if isinstance(domain, Disk):
        return {"type": "disk", "radius": domain.radius, "center": list(domain.center)}
    if isinstance(domain, Polygon):
        return {"type": "polygon", "vertices": [list(v) for v in domain.vertices]}
    if isinstance(domain, MapImage):
        return {"type": "map_image", "map": map_to_json(domain.map), "r": domain.r}
    raise InvalidInputError(f"not a domain: {domain!r}")


# ---------------------------------------------------------------------------
# Meshes
# ---------------------------------------------------------------------------


def _signed_areas(vertices, triangles):
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def _frozen(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Conforming, counterclockwise triangulation of a planar domain.

    Boundary edges and flags are derived from the connectivity: an edge used
    by a single triangle is a boundary edge, oriented so the domain lies on
    its left.  Arrays are made read-only at construction.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    h: float
    boundary_edges: np.ndarray = field(init=False)
    boundary_mask: np.ndarray = field(init=False)

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=float)
        triangles = np.asarray(self.triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise InvalidInputError("mesh vertices must have shape (n, 2)")
        if triangles.ndim != 2 or triangles.shape[1] != 3 or triangles.shape[0] == 0:
            raise InvalidInputError("mesh triangles must have shape (m, 3) with m > 0")
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise InvalidInputError("triangle index out of range")
        if np.any(_signed_areas(vertices, triangles) <= 0):
            raise InvalidInputError("mesh has a triangle with non-positive signed area")
        edges = _boundary_edges(triangles)
        mask = np.zeros(len(vertices), dtype=bool)
        mask[edges.ravel()] = True
        object.__setattr__(self, "vertices", _frozen(vertices))
        object.__setattr__(self, "triangles", _frozen(triangles))
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "boundary_edges", _frozen(edges))
        object.__setattr__(self, "boundary_mask", _frozen(mask))

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @cached_property
    def areas(self):
        return _frozen(_signed_areas(self.vertices, self.triangles))

    @cached_property
    def area(self):
        return float(math.fsum(self.areas))

    @cached_property
    def interior(self):
        """Global ids of the interior (free) vertices, ascending."""
        return _frozen(np.flatnonzero(~self.boundary_mask))

    @cached_property
    def basis_gradients(self):
        """Gradients of the three barycentric functions on each triangle, shape (m, 3, 2)."""
        p = self.vertices[self.triangles]
        # gradient of lambda_i is the rotated opposite edge over twice the area
        e0 = p[:, 2] - p[:, 1]
        e1 = p[:, 0] - p[:, 2]
        e2 = p[:, 1] - p[:, 0]
        edges = np.stack([e0, e1, e2], axis=1)
        grads = np.stack([-edges[..., 1], edges[..., 0]], axis=-1)
        return _frozen(grads / (2.0 * self.areas)[:, None, None])

    @cached_property
    def centroid(self):
        c = self.vertices[self.triangles].mean(axis=1)
        return (self.areas @ c) / self.areas.sum()

    @cached_property
    def boundary_length(self):
        e = self.vertices[self.boundary_edges[:, 1]] - self.vertices[self.boundary_edges[:, 0]]
        return float(math.fsum(np.hypot(e[:, 0], e[:, 1])))

    def edge_lengths(self):
        p = self.vertices[self.triangles]
        d = p - np.roll(p, -1, axis=1)
        return np.hypot(d[..., 0], d[..., 1])

    def transformed(self, scale=1.0, rotation=0.0, shift=(0.0, 0.0)):
        """Return a copy with vertices mapped by ``x -> scale * R(rotation) x + shift``."""
        c, s = math.cos(rotation), math.sin(rotation)
        rot = np.array([[c, -s], [s, c]])
        verts = scale * (self.vertices @ rot.T) + np.asarray(shift, dtype=float)
        return TriMesh(verts, self.triangles, self.h * scale)

    def to_json(self):
        return {
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary_edges": self.boundary_edges.tolist(),
        }


def _boundary_edges(triangles):
    directed = np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=0
    )
    undirected = np.sort(directed, axis=1)
    _, inverse, counts = np.unique(undirected, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    if np.any(counts > 2):
        raise InvalidInputError("non-conforming mesh: an edge is shared by more than two triangles")
    # an interior edge must be traversed once in each direction
    _, dcounts = np.unique(directed, axis=0, return_counts=True)
    if np.any(dcounts > 1):
        raise InvalidInputError("inconsistent triangle orientation")
    boundary = directed[counts[inverse] == 1]
    if len(boundary) == 0:
        raise InvalidInputError("mesh has no boundary")
    # every boundary vertex must have exactly one incoming and one outgoing edge
    out_deg = np.bincount(boundary[:, 0], minlength=triangles.max() + 1)
    in_deg = np.bincount(boundary[:, 1], minlength=triangles.max() + 1)
    if np.any(out_deg != in_deg) or np.any(out_deg > 1):
        raise InvalidInputError("boundary edges do not form simple closed loops")
    order = np.lexsort((boundary[:, 1], boundary[:, 0]))
    return boundary[order]


# -- disk ---------------------------------------------------------------------


def _stitch_rings(inner, outer, coords):
    """Triangulate the annulus between two closed vertex rings.

    Advances around both rings, each time closing the triangle whose new
    diagonal is shorter.
    """
    ni, no = len(inner), len(outer)
    tris = []
    i = j = 0
    while i < ni or j < no:
        if i >= ni:
            take_outer = True
        elif j >= no:
            take_outer = False
        else:
            d_out = coords[outer[(j + 1) % no]] - coords[inner[i]]
            d_in = coords[inner[(i + 1) % ni]] - coords[outer[j]]
            take_outer = d_out @ d_out <= d_in @ d_in
        if take_outer:
            tris.append((inner[i % ni], outer[j % no], outer[(j + 1) % no]))
            j += 1
        else:
            tris.append((inner[i % ni], outer[j % no], inner[(i + 1) % ni]))
            i += 1
    return tris


def mesh_disk(radius=1.0, center=(0.0, 0.0), h=0.05):
    """Structured polar mesh of a disk.

    ``ceil(radius / h)`` concentric rings; ring ``k`` carries ``6k`` equally
    spaced vertices so edge lengths stay close to ``h`` and triangles are
    nearly equilateral.
    """
    radius = check_positive(radius, "radius")
    h = check_positive(h, "h")
    if h >= radius:
        raise InvalidInputError(f"need 0 < h < radius, got h = {h}, radius = {radius}")
    n_rings = math.ceil(radius / h - 1e-9)
    if n_rings < 3:
        raise ResolutionTooCoarseError(f"h = {h} gives only {n_rings} rings; at least 3 are needed")

    n_total = 1 + 3 * n_rings * (n_rings + 1)
    coords = np.zeros((n_total, 2))
    tris = []
    prev_ids = None
    for k in range(1, n_rings + 1):
        count = 6 * k
        angles = 2 * math.pi * np.arange(count) / count
        rk = radius * k / n_rings
        start = 1 + 3 * k * (k - 1)
        ids = np.arange(start, start + count)
        coords[ids, 0] = rk * np.cos(angles)
        coords[ids, 1] = rk * np.sin(angles)
        if k == 1:
            tris.extend((0, ids[j], ids[(j + 1) % count]) for j in range(count))
        else:
            tris.extend(_stitch_rings(prev_ids, ids, coords))
        prev_ids = ids

    verts = coords + np.asarray(center, dtype=float)
    tris = np.asarray(tris, dtype=np.int64)
    flip = _signed_areas(verts, tris) < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return TriMesh(verts, tris, h)


# -- polygon --------------------------------------------------------------------


def _segments_intersect(p1, p2, q1, q2):
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-14 else (1 if v > 0 else -1)

    def on_segment(a, b, c):
        return min(a[0], b[0]) - 1e-14 <= c[0] <= max(a[0], b[0]) + 1e-14 and min(
            a[1], b[1]
        ) - 1e-14 <= c[1] <= max(a[1], b[1]) + 1e-14

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_segment(p1, p2, q1):
        return True
    if o2 == 0 and on_segment(p1, p2, q2):
        return True
    if o3 == 0 and on_segment(q1, q2, p1):
        return True
    if o4 == 0 and on_segment(q1, q2, p2):
        return True
    return False


def polygon_signed_area(verts):
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _check_simple_ccw(verts):
    n = len(verts)
    if n < 3:
        raise InvalidPolygonError("polygon needs at least 3 vertices")
    if not np.all(np.isfinite(verts)):
        raise InvalidPolygonError("polygon has non-finite coordinates")
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        if np.allclose(a, b, rtol=0, atol=1e-14):
            raise InvalidPolygonError("polygon has repeated consecutive vertices")
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            if _segments_intersect(a, b, verts[j], verts[(j + 1) % n]):
                raise InvalidPolygonError("polygon is self-intersecting")
    if polygon_signed_area(verts) <= 0:
        raise InvalidPolygonError("polygon vertices must be in counterclockwise order")


def points_in_polygon(points, verts):
    """Even-odd test for many points against one polygon."""
    x, y = points[:, 0][:, None], points[:, 1][:, None]
    x0, y0 = verts[:, 0][None, :], verts[:, 1][None, :]
    x1, y1 = np.roll(verts[:, 0], -1)[None, :], np.roll(verts[:, 1], -1)[None, :]
    crosses = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    return np.count_nonzero(crosses & (x < xint), axis=1) % 2 == 1


def _grid_divisions(coords, h, max_factor=8):
    """Smallest cell count >= extent/h that puts every coordinate on a grid line."""
    lo, hi = coords.min(), coords.max()
    extent = hi - lo
    base = math.ceil(extent / h - 1e-9)
    for n in range(base, max_factor * base + 1):
        t = (coords - lo) * n / extent
        if np.all(np.abs(t - np.round(t)) < 1e-9):
            return n
    return None


def _mesh_rectilinear(verts, h):
    nx = _grid_divisions(verts[:, 0], h)
    ny = _grid_divisions(verts[:, 1], h)
    if nx is None or ny is None:
        return None
    xmin, ymin = verts.min(axis=0)
    xmax, ymax = verts.max(axis=0)
    xs = np.linspace(xmin, xmax, nx + 1)
    ys = np.linspace(ymin, ymax, ny + 1)
    # snap polygon coordinates to the exact grid values
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    centers = np.column_stack([(xs[i] + xs[i + 1]).ravel() / 2, (ys[j] + ys[j + 1]).ravel() / 2])
    inside = points_in_polygon(centers, verts)
    ci, cj = i.ravel()[inside], j.ravel()[inside]

    def vid(a, b):
        return a * (ny + 1) + b

    v00, v10 = vid(ci, cj), vid(ci + 1, cj)
    v01, v11 = vid(ci, cj + 1), vid(ci + 1, cj + 1)
    alt = (ci + cj) % 2 == 1
    t1 = np.where(alt[:, None], np.column_stack([v00, v10, v01]), np.column_stack([v00, v10, v11]))
    t2 = np.where(alt[:, None], np.column_stack([v10, v11, v01]), np.column_stack([v00, v11, v01]))
    tris = np.concatenate([t1, t2])
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    all_verts = np.column_stack([gx.ravel(), gy.ravel()])
    used, tris = np.unique(tris, return_inverse=True)
    tris = tris.reshape(-1, 3)
    return TriMesh(all_verts[used], tris, h)


def _split_boundary(verts, h):
    pts = []
    for a, b in zip(verts, np.roll(verts, -1, axis=0)):
        n = max(1, math.ceil(np.hypot(*(b - a)) / h - 1e-9))
        t = np.arange(n)[:, None] / n
        pts.append(a + t * (b - a))
    pts = np.concatenate(pts)
    idx = np.arange(len(pts))
    return pts, np.column_stack([idx, np.roll(idx, -1)])


def _mesh_delaunay(verts, h):
    import triangle

    pts, segs = _split_boundary(verts, h)
    max_area = math.sqrt(3) / 4 * h * h
    for _ in range(8):
        out = triangle.triangulate(
            {"vertices": pts, "segments": segs}, f"pq30a{max_area:.17g}Q"
        )
        mesh_verts = np.asarray(out["vertices"], dtype=float)
        tris = np.asarray(out["triangles"], dtype=np.int64)
        flip = _signed_areas(mesh_verts, tris) < 0
        tris[flip] = tris[flip][:, [0, 2, 1]]
        mesh = TriMesh(mesh_verts, tris, h)
        if mesh.edge_lengths().max() <= 1.5 * h:
            return mesh
        max_area *= 0.5
    raise InvalidInputError("could not reach the requested edge length")  # pragma: no cover


def mesh_polygon(vertices, h):
    """Triangulate a simple counterclockwise polygon with edges at most ``1.5 h``.

    Axis-aligned polygons whose corners fall on a uniform grid are meshed
    with that grid (each cell split into two right triangles, diagonals
    alternating); anything else goes through constrained Delaunay
    refinement with a 30 degree minimum angle.
    """
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 2:
        raise InvalidPolygonError("polygon vertices must be a list of [x, y] points")
    _check_simple_ccw(verts)
    h = check_positive(h, "h")
    edges = np.roll(verts, -1, axis=0) - verts
    if np.all((edges[:, 0] == 0) | (edges[:, 1] == 0)):
        mesh = _mesh_rectilinear(verts, h)
        if mesh is not None:
            return mesh
    return _mesh_delaunay(verts, h)


# -- conformal images ---------------------------------------------------------


def _moebius_recentering(fmap, r):
    """Disk automorphism parameter ``a`` sending 0 to the preimage of the image center.

    For a Moebius map ``g(z) = f(r z)`` the image of the unit disk is a disk,
    and with ``m_a(z) = (z + a) / (1 + conj(a) z)`` the composition
    ``g(m_a(z))`` is affine, so the pushed mesh is a similarity copy of the
    unit-disk mesh.  ``a`` is the reflection of the pole in the unit circle.
    """
    _, _, c, d = fmap.coeffs
    if c == 0:
        return 0j
    return -np.conj(c * r) / np.conj(d)


def _critical_points(fmap):
    """Zeros of ``f'`` for a power series (Moebius and affine maps have none)."""
    if fmap.kind != "power_series":
        return np.empty(0, dtype=complex)
    dcoeffs = [k * c for k, c in enumerate(fmap.coeffs, start=1)]
    while dcoeffs and dcoeffs[-1] == 0:
        dcoeffs.pop()
    if len(dcoeffs) < 2:
        return np.empty(0, dtype=complex)
    return np.roots(dcoeffs[::-1])


def _closed_curve_is_simple(w):
    """True if the closed polyline through the points ``w`` has no crossing edges."""
    a = np.column_stack([w.real, w.imag])
    b = np.roll(a, -1, axis=0)
    n = len(a)
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))  # first and last edges share a vertex
    i, j = i[keep], j[keep]

    def orient(p, q, x):
        return (q[:, 0] - p[:, 0]) * (x[:, 1] - p[:, 1]) - (q[:, 1] - p[:, 1]) * (x[:, 0] - p[:, 0])

    d1 = orient(a[i], b[i], a[j])
    d2 = orient(a[i], b[i], b[j])
    d3 = orient(a[j], b[j], a[i])
    d4 = orient(a[j], b[j], b[i])
    return not np.any((d1 * d2 <= 0) & (d3 * d4 <= 0))


def _boundary_loop(disk_mesh):
    """Boundary vertex ids of a disk mesh in counterclockwise order."""
    nxt = dict(map(tuple, np.asarray(disk_mesh.boundary_edges).tolist()))
    start = next(iter(nxt))
    loop, v = [start], nxt[start]
    while v != start:
        loop.append(v)
        v = nxt[v]
    return np.array(loop)


def mesh_map_image(fmap, r, h, recenter=True, disk_mesh=None):
    """Mesh of ``f(r D)`` obtained by pushing a unit-disk mesh through the map.

    ``h`` is the resolution of the unit-disk parameter mesh, so it measures
    element size relative to the size of the image.  Moebius maps are
    precomposed with a disk automorphism (see ``_moebius_recentering``) when
    ``recenter`` is true; this leaves the image domain unchanged but keeps
    the pushed mesh uniform as ``r -> 1``.
    """
    r = float(r)
    if not 0.0 < r < 1.0:
        raise InvalidInputError(f"r must lie in (0, 1), got {r!r}")
    pole = fmap.pole()
    if pole is not None and abs(pole) <= r * (1.0 + 1e-12):
        raise PoleHitError(f"map has a pole at {pole} inside the closed disk of radius {r}")
    crit = _critical_points(fmap)
    if np.any(np.abs(crit) <= r):
        raise FoldedMeshError(
            f"f' vanishes at {crit[np.abs(crit) <= r][0]:.6g}, inside the disk of radius {r}; "
            "the map is not univalent there"
        )
    if disk_mesh is None:
        disk_mesh = mesh_disk(1.0, (0.0, 0.0), h)
    z = disk_mesh.vertices[:, 0] + 1j * disk_mesh.vertices[:, 1]
    # ring vertices lie on |z| = 1 up to rounding; keep them there
    z[disk_mesh.boundary_mask] /= np.abs(z[disk_mesh.boundary_mask])
    a = _moebius_recentering(fmap, r) if (recenter and fmap.kind == "moebius") else 0j
    if a != 0:
        z = (z + a) / (1 + np.conj(a) * z)
    w = eval_map(fmap, r * z)
    verts = np.column_stack([w.real, w.imag])
    areas = _signed_areas(verts, np.asarray(disk_mesh.triangles))
    if np.any(areas <= 0):
        raise FoldedMeshError(
            f"{np.count_nonzero(areas <= 0)} image triangles are folded; "
            "the map is not univalent on this disk or the mesh is too coarse"
        )
    if fmap.kind == "power_series" and not _closed_curve_is_simple(w[_boundary_loop(disk_mesh)]):
        raise FoldedMeshError(f"the image of |z| = {r} crosses itself; the map is not univalent")
    scale = math.sqrt(areas.sum() / math.pi)
    return TriMesh(verts, disk_mesh.triangles, disk_mesh.h * scale)


def mesh_domain(domain, h):
    """Mesh any supported domain description."""
    if isinstance(domain, Disk):
        return mesh_disk(domain.radius, domain.center, h)
    if isinstance(domain, Polygon):
        return mesh_polygon(domain.vertices, h)
    if isinstance(domain, MapImage):
        return mesh_map_image(domain.map, domain.r, h)
    raise InvalidInputError(f"not a domain: {domain!r}")
