import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad
from sklearn.base import clone
from sklearn.exceptions import ConvergenceWarning

from sobolev_cp import (
    Disk,
    InvalidExponentError,
    NoInteriorVerticesError,
    NotConvergedError,
    SobolevExtremal,
    SolverConfig,
    TriMesh,
    el_residual,
    mesh_disk,
    minimize_quotient,
)
from sobolev_cp.solver import inverse_power_eigenvalue

from conftest import disk_mesh, solved


def test_config_validation():
    with pytest.raises(InvalidExponentError, match="p >= 1"):
        SolverConfig(p=0.5)
    with pytest.raises(ValueError):
        SolverConfig(max_iter=0)


def test_mesh_without_interior_vertices():
    mesh = TriMesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]), 1.0)
    with pytest.raises(NoInteriorVerticesError):
        minimize_quotient(mesh)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_converged_result_identities(p):
    res = solved("disk", p, 0.04)
    assert res.converged
    assert abs(res.p_norm_integral - 1) < 1e-12
    assert abs(res.lam * res.p_norm_integral ** ((p - 2) / p) - res.cp) <= 1e-12 * res.cp
    assert res.residual < 1e-7
    assert el_residual(res.phi, res.lam, p) == pytest.approx(res.residual, rel=1e-6, abs=1e-12)
    assert np.all(res.phi.values >= 0) and np.all(res.phi.values[res.mesh.boundary_mask] == 0)
    hist = np.array(res.quotient_history)
    assert np.all(np.diff(hist) <= 4 * np.finfo(float).eps * hist[:-1])


def test_p2_agrees_with_inverse_power_iteration():
    mesh = disk_mesh(0.04)
    lam, vec = inverse_power_eigenvalue(mesh)
    res = solved("disk", 2.0, 0.04)
    assert abs(lam - res.cp) < 1e-10 * lam
    # eigenvectors agree up to normalization
    a, b = vec / vec.max(), res.phi.values / res.phi.values.max()
    assert np.abs(a - b).max() < 1e-6


def test_p1_extremal_is_the_torsion_function():
    res = solved("disk", 1.0, 0.02)
    r = np.hypot(*res.mesh.vertices.T)
    w = (1 - r**2) / 4
    scale = res.phi.values.max() / w.max()
    assert np.abs(res.phi.values - scale * w).max() < 2e-3 * res.phi.values.max()


def test_p15_disk_against_radial_ode():
    # radial shooting for u'' + u'/r + u^(1/2) = 0, u'(0) = 0, first zero at R;
    # by scaling C_p(unit disk) follows from R and the integrals of the profile
    from scipy.integrate import solve_ivp

    p = 1.5

    def rhs(r, y):
        u, v = y
        return [v, -max(u, 0.0) ** (p - 1) - (v / r if r > 0 else 0.0)]

    def hit(r, y):
        return y[0]

    hit.terminal, hit.direction = True, -1
    sol = solve_ivp(rhs, [1e-9, 50], [1.0, 0.0], events=hit, rtol=1e-12, atol=1e-14, dense_output=True)
    R = sol.t_events[0][0]
    u = lambda r: sol.sol(r)[0]
    energy = quad(lambda r: sol.sol(r)[1] ** 2 * 2 * math.pi * r, 0, R, limit=200)[0]
    ip = quad(lambda r: max(u(r), 0.0) ** p * 2 * math.pi * r, 0, R, limit=200)[0]
    cp_R = energy / ip ** (2 / p)
    cp_unit = cp_R * R ** (4 / p)
    res = solved("disk", p, 0.02)
    assert abs(res.cp - cp_unit) / cp_unit < 5e-3


def test_not_converged_carries_result():
    with pytest.raises(NotConvergedError) as err:
        minimize_quotient(disk_mesh(0.08), p=3.0, max_iter=1)
    assert err.value.result is not None and not err.value.result.converged


def test_to_dict_keys():
    d = solved("disk", 2.0, 0.04).to_dict()
    assert {"cp", "lambda", "sobolev_constant", "converged", "iterations"} <= set(d)
    assert d["sobolev_constant"] == pytest.approx(d["cp"] ** -0.5)


class TestEstimator:
    def test_get_params_and_clone(self):
        est = SobolevExtremal(p=1.5, h=0.05)
        params = est.get_params()
        assert params["p"] == 1.5 and params["h"] == 0.05
        assert clone(est).get_params() == params
        est.set_params(p=2.0)
        assert est.p == 2.0

    def test_fit_predict_on_domain_and_json(self):
        est = SobolevExtremal(p=2.0, h=0.05).fit({"type": "disk", "radius": 1})
        assert est.converged_ and abs(est.cp_ - 5.78319) / 5.78319 < 0.01
        vals = est.predict(np.array([[0.0, 0.0], [2.0, 0.0]]))
        assert vals[0] > 0 and np.isnan(vals[1])
        est2 = SobolevExtremal(p=2.0, h=0.05).fit(Disk())
        assert est2.cp_ == est.cp_

    def test_fit_on_mesh(self):
        mesh = mesh_disk(1.0, (0, 0), 0.08)
        est = SobolevExtremal(p=1.0).fit(mesh)
        assert est.mesh_ is mesh and est.n_iter_ >= 1

    def test_predict_before_fit(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            SobolevExtremal().predict(np.zeros((1, 2)))

    def test_convergence_warning(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            est = SobolevExtremal(p=3.0, h=0.08, max_iter=1).fit(Disk())
        assert not est.converged_
        assert any(issubclass(w.category, ConvergenceWarning) for w in caught)

    def test_invalid_exponent(self):
        with pytest.raises(InvalidExponentError):
            SobolevExtremal(p=0.9, h=0.1).fit(Disk())
