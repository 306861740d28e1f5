import cmath
import math

import numpy as np
import pytest

from sobolev_cp import (
    ConformalMap,
    Disk,
    FoldedMeshError,
    InvalidInputError,
    InvalidMapError,
    InvalidPolygonError,
    MapImage,
    PoleHitError,
    Polygon,
    ResolutionTooCoarseError,
    TriMesh,
    domain_from_json,
    eval_derivative,
    eval_map,
    mesh_disk,
    mesh_domain,
    mesh_map_image,
    mesh_polygon,
)
from sobolev_cp.geometry import domain_to_json, map_from_json, map_to_json, points_in_polygon

from conftest import L_SHAPE, UNIT_SQUARE


def test_moebius_values_and_derivative():
    f = ConformalMap.moebius(-1, 1, 1, 1)  # (1 - z) / (1 + z)
    assert eval_map(f, 0j) == 1
    assert abs(eval_map(f, 0.5) - 1 / 3) < 1e-15
    assert abs(eval_derivative(f, 0j) + 2) < 1e-15
    z = np.array([0.3 + 0.2j, -0.4j])
    np.testing.assert_allclose(eval_derivative(f, z), -2 / (1 + z) ** 2, rtol=1e-14)


def test_power_series_horner_matches_direct_sum():
    coeffs = [1, 0.2 - 0.1j, 0, 0.05j]
    f = ConformalMap.power_series(coeffs, a0=0.3)
    z = np.exp(1j * np.linspace(0, 6, 7)) * 0.7
    direct = 0.3 + sum(c * z ** (k + 1) for k, c in enumerate(coeffs))
    np.testing.assert_allclose(f(z), direct, rtol=1e-14)
    dd = sum((k + 1) * c * z**k for k, c in enumerate(coeffs))
    np.testing.assert_allclose(f.derivative(z), dd, rtol=1e-14)


def test_pole_hit():
    f = ConformalMap.moebius(1, 0, 1, 1)
    with pytest.raises(PoleHitError):
        eval_map(f, -1.0 + 0j)
    assert f.pole() == -1


@pytest.mark.parametrize(
    "obj",
    [
        {"kind": "moebius", "coeffs": [1, 2, 2, 4]},  # ad - bc = 0
        {"kind": "power_series", "coeffs": [0, 0]},
        {"kind": "linear", "coeffs": [0, 1]},
        {"kind": "spline", "coeffs": [1]},
        {"coeffs": [1]},
    ],
)
def test_invalid_maps(obj):
    with pytest.raises(InvalidMapError):
        map_from_json(obj)


def test_is_linear():
    assert ConformalMap.linear(2).is_linear
    assert ConformalMap.power_series([2, 0, 0]).is_linear
    assert not ConformalMap.power_series([1, 0.2]).is_linear
    assert ConformalMap.moebius(1, 2, 0, 1).is_linear


def test_map_json_round_trip():
    f = ConformalMap.power_series([1, 0.2 + 0.1j], a0=0.5)
    g = map_from_json(map_to_json(f))
    assert g == f


@pytest.mark.parametrize(
    "domain",
    [
        Disk(2.0, (1.0, -1.0)),
        Polygon(UNIT_SQUARE),
        MapImage(ConformalMap.moebius(-1, 1, 1, 1), 0.5),
    ],
)
def test_domain_json_round_trip(domain):
    assert domain_from_json(domain_to_json(domain)) == domain


@pytest.mark.parametrize(
    "text",
    [
        "{not json",
        '{"type":"hexagon"}',
        '{"type":"polygon"}',
        '{"type":"map_image","map":{"kind":"linear","coeffs":[2,0]},"r":1.2}',
        '{"type":"disk","radius":-1}',
    ],
)
def test_invalid_domain_json(text):
    with pytest.raises(InvalidInputError):
        domain_from_json(text)


def test_polygon_validation():
    with pytest.raises(InvalidPolygonError):
        Polygon(UNIT_SQUARE[::-1])  # clockwise
    with pytest.raises(InvalidPolygonError):
        Polygon(((0, 0), (1, 1), (1, 0), (0, 1)))  # bow tie


def _check_mesh_invariants(mesh, h):
    assert np.all(mesh.areas > 0)
    assert mesh.edge_lengths().max() <= 1.5 * h + 1e-12
    # each interior edge is shared by exactly two triangles with opposite orientation
    t = mesh.triangles
    directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    assert len({tuple(e) for e in directed.tolist()}) == len(directed)
    # Euler characteristic of a disk-like domain
    edges = {tuple(sorted(e)) for e in directed.tolist()}
    assert mesh.n_vertices - len(edges) + mesh.n_triangles == 1


def test_disk_mesh():
    mesh = mesh_disk(1.0, (0.0, 0.0), 0.05)
    _check_mesh_invariants(mesh, 0.05)
    r = np.hypot(*mesh.vertices[mesh.boundary_mask].T)
    np.testing.assert_allclose(r, 1.0, rtol=1e-14)
    assert abs(mesh.area - math.pi) / math.pi < 2e-3
    assert abs(mesh.boundary_length - 2 * math.pi) / (2 * math.pi) < 1e-3


def test_disk_mesh_too_coarse():
    with pytest.raises(ResolutionTooCoarseError):
        mesh_disk(1.0, (0, 0), 0.6)
    with pytest.raises(InvalidInputError):
        mesh_disk(1.0, (0, 0), 1.5)


@pytest.mark.parametrize("verts", [UNIT_SQUARE, L_SHAPE, ((0, 0), (1, 0), (0.3, 0.8))])
def test_polygon_mesh(verts):
    mesh = mesh_polygon(verts, 0.05)
    _check_mesh_invariants(mesh, 0.05)
    v = np.asarray(verts, dtype=float)
    x, y = v.T
    exact = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    assert abs(mesh.area - exact) < 1e-12 * exact
    # every polygon corner is a mesh vertex
    for corner in v:
        assert np.min(np.hypot(*(mesh.vertices - corner).T)) < 1e-12
    assert np.all(points_in_polygon(mesh.centroid[None, :], v) | (len(v) == 6))


def test_l_shape_area_is_exact():
    assert abs(mesh_polygon(L_SHAPE, 0.02).area - 0.75) < 1e-10


def test_moebius_image_mesh_is_a_similar_disk():
    f = ConformalMap.moebius(-1, 1, 1, 1)
    mesh = mesh_map_image(f, 0.5, 0.05)
    # the image of |z| < 0.5 is the disk with diameter [1/3, 3]
    c = (1 / 3 + 3) / 2
    rad = (3 - 1 / 3) / 2
    bd = mesh.vertices[mesh.boundary_mask]
    np.testing.assert_allclose(np.hypot(bd[:, 0] - c, bd[:, 1]), rad, rtol=1e-12)


def test_power_series_image_folds_past_critical_point():
    f = ConformalMap.power_series([1, 1])  # z + z^2, critical point at -1/2
    mesh_map_image(f, 0.4, 0.05)
    for h in (0.1, 0.05, 0.02):
        with pytest.raises(FoldedMeshError):
            mesh_map_image(f, 0.9, h)


def test_simple_curve_check():
    from sobolev_cp.geometry import _closed_curve_is_simple

    t = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    assert _closed_curve_is_simple(np.exp(1j * t))
    assert not _closed_curve_is_simple(np.sin(t) + 1j * np.sin(2 * t))


def test_pole_inside_disk():
    f = ConformalMap.moebius(1, 0, 1, -0.5)
    with pytest.raises(PoleHitError):
        mesh_map_image(f, 0.6, 0.05)


def test_transformed_mesh_and_invalid_mesh():
    mesh = mesh_disk(1.0, (0, 0), 0.1)
    moved = mesh.transformed(scale=2.0, rotation=0.3, shift=(1, 2))
    assert abs(moved.area - 4 * mesh.area) < 1e-12
    with pytest.raises(InvalidInputError):
        TriMesh(mesh.vertices, mesh.triangles[:, ::-1], 0.1)


def test_mesh_domain_dispatch():
    assert mesh_domain(Disk(), 0.1).n_vertices > 0
    assert mesh_domain(Polygon(UNIT_SQUARE), 0.1).n_vertices == 121
    img = mesh_domain(MapImage(ConformalMap.linear(2), 0.5), 0.1)
    assert abs(img.area - math.pi) < 0.01
