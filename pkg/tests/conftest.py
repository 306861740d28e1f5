import functools

import pytest

from sobolev_cp import mesh_disk, mesh_polygon, minimize_quotient

UNIT_SQUARE = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
# unit square minus its upper-right 0.5 x 0.5 quarter
L_SHAPE = ((0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (0.5, 0.5), (0.5, 1.0), (0.0, 1.0))


@functools.lru_cache(maxsize=None)
def disk_mesh(h=0.02):
    return mesh_disk(1.0, (0.0, 0.0), h)


@functools.lru_cache(maxsize=None)
def square_mesh(h=0.02):
    return mesh_polygon(UNIT_SQUARE, h)


@functools.lru_cache(maxsize=None)
def l_mesh(h=0.02):
    return mesh_polygon(L_SHAPE, h)


@functools.lru_cache(maxsize=None)
def solved(kind, p, h=0.02):
    mesh = {"disk": disk_mesh, "square": square_mesh, "L": l_mesh}[kind](h)
    return minimize_quotient(mesh, p=p)


@pytest.fixture(scope="session")
def solve():
    return solved


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.REPORT):
        ok, detail = mod.REPORT[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
