"""Minimization of the Sobolev quotient ``int |grad u|^2 / (int u^p)^(2/p)``.

The discrete minimizer is found by a damped fixed-point iteration on the
Euler-Lagrange equation ``-Laplace(phi) = Lambda phi^(p-1)``: solve
``K w = b(phi)``, normalize, and move towards ``w`` with a backtracking step
that never lets the quotient increase.  At ``p = 2`` this is inverse power
iteration; at ``p = 1`` the first solve is already the exact minimizer.
"""

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse.linalg as spla
from sklearn.base import BaseEstimator
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_is_fitted

from . import fem
from .exceptions import InvalidInputError, NotConvergedError
from .validation import check_exponent, check_mesh, check_points, check_positive

__all__ = [
    "SolverConfig",
    "SolveResult",
    "minimize_quotient",
    "sobolev_constant",
    "el_residual",
    "inverse_power_eigenvalue",
    "SobolevExtremal",
]

# relative slack for "the quotient did not increase"; covers summation rounding only
DESCENT_SLACK = 4 * np.finfo(float).eps


@dataclass(frozen=True)
class SolverConfig:
    p: float = 2.0
    quotient_tol: float = 1e-10
    el_tol: float = 1e-7
    max_iter: int = 500
    min_step: float = 2.0**-20
    linear_tol: float = 1e-11

    def __post_init__(self):
        object.__setattr__(self, "p", check_exponent(self.p))
        for name in ("quotient_tol", "el_tol", "min_step", "linear_tol"):
            check_positive(getattr(self, name), name)
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InvalidInputError(f"max_iter must be a positive integer, got {self.max_iter!r}")


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Discrete extremal and the constants derived from it.

    ``phi`` is normalized so that ``p_norm_integral`` (``int phi^p``) is 1 up
    to rounding; ``cp`` and ``lam`` are nevertheless computed from the stored
    integrals so the relation ``lam * I^((p-2)/p) = cp`` holds exactly.
    """

    p: float
    cp: float
    lam: float
    phi: fem.ScalarField
    energy: float
    p_norm_integral: float
    pminus1_integral: float
    iterations: int
    residual: float
    h: float
    converged: bool = True
    quotient_history: tuple = field(default=(), repr=False)

    @property
    def mesh(self):
        return self.phi.mesh

    @property
    def sobolev_constant(self):
        return sobolev_constant(self)

    def to_dict(self):
        """JSON-ready summary (the nodal field is not included)."""
        out = {k: v for k, v in asdict(self).items() if k not in ("phi", "quotient_history")}
        out["lambda"] = out.pop("lam")
        out["sobolev_constant"] = self.sobolev_constant
        return out


def sobolev_constant(result):
    """``S_p = C_p^(-1/2)``."""
    cp = result.cp if isinstance(result, SolveResult) else float(result)
    return cp ** -0.5


def _normalize(mesh, interior_values, p):
    values = np.maximum(interior_values, 0.0)
    f = fem.ScalarField.from_interior(mesh, values)
    norm = fem.integrate_power(f, p)
    if not norm > 0:
        raise NotConvergedError("iterate collapsed to zero")
    return fem.ScalarField.from_interior(mesh, values * norm ** (-1.0 / p))


def el_residual(phi, lam, p, K=None):
    """Relative discrete Euler-Lagrange residual ``||K phi - lam b(phi)|| / ||K phi||``."""
    p = check_exponent(p)
    if K is None:
        K = fem.assemble_stiffness(phi.mesh)
    kphi = K @ phi.interior_values
    res = kphi - lam * fem.weak_power_load(phi, p)
    denom = np.linalg.norm(kphi)
    if denom == 0.0:
        return float(np.linalg.norm(res)) if np.any(res) else 0.0
    return float(np.linalg.norm(res) / denom)


def _make_result(phi, p, K, load, iterations, history, converged):
    energy = fem.dirichlet_energy(phi)
    ip = fem.integrate_power(phi, p)
    lam = energy / ip
    cp = energy / ip ** (2.0 / p)
    pm1 = phi.mesh.area if p == 1.0 else _integrate_pminus1(phi, p)
    kphi = K @ phi.interior_values
    residual = float(np.linalg.norm(kphi - lam * load) / np.linalg.norm(kphi))
    return SolveResult(
        p=p, cp=cp, lam=lam, phi=phi, energy=energy, p_norm_integral=ip,
        pminus1_integral=pm1, iterations=iterations, residual=residual,
        h=phi.mesh.h, converged=converged, quotient_history=tuple(history),
    )


def _integrate_pminus1(phi, p):
    rule = fem.DUNAVANT_4
    uq = np.maximum(phi.quadrature_values(rule), 0.0)
    return float(np.sum(((uq ** (p - 1.0)) @ rule.weights) * phi.mesh.areas))


def minimize_quotient(mesh, config=None, **overrides):
    """Minimize the Sobolev quotient over nonnegative P1 functions vanishing on the boundary.

    Parameters
    ----------
    mesh : TriMesh
    config : SolverConfig, optional
        Keyword ``overrides`` are applied on top of it (``p=1.5`` etc.).

    Returns
    -------
    SolveResult

    Raises
    ------
    NotConvergedError
        After ``config.max_iter`` outer iterations; the best iterate is
        attached as ``exc.result``.
    """
    check_mesh(mesh)
    config = SolverConfig(**{**asdict(config or SolverConfig()), **overrides})
    p = config.p
    K = fem.assemble_stiffness(mesh)

    ones = fem.ScalarField(mesh, np.ones(mesh.n_vertices))
    torsion = fem.solve_spd(K, fem.weak_power_load(ones, 1.0), tol=config.linear_tol)
    phi = _normalize(mesh, torsion, p)
    quotient = fem.dirichlet_energy(phi)
    history = [quotient]
    load = fem.weak_power_load(phi, p)

    for it in range(1, config.max_iter + 1):
        lam = quotient / fem.integrate_power(phi, p)
        w = fem.solve_spd(K, load, tol=config.linear_tol, x0=phi.interior_values / lam)
        w = _normalize(mesh, w, p).interior_values
        step = 1.0
        current = phi.interior_values
        while True:
            cand = _normalize(mesh, (1.0 - step) * current + step * w, p)
            q_cand = fem.dirichlet_energy(cand)
            if q_cand <= quotient * (1.0 + DESCENT_SLACK):
                break
            step *= 0.5
            if step < config.min_step:
                cand, q_cand = phi, quotient
                break
        change = abs(quotient - q_cand) / quotient
        phi, quotient = cand, q_cand
        history.append(quotient)
        load = fem.weak_power_load(phi, p)
        kphi = K @ phi.interior_values
        lam = quotient / fem.integrate_power(phi, p)
        residual = np.linalg.norm(kphi - lam * load) / np.linalg.norm(kphi)
        if change < config.quotient_tol and residual < config.el_tol:
            return _make_result(phi, p, K, load, it, history, True)

    result = _make_result(phi, p, K, load, config.max_iter, history, False)
    raise NotConvergedError(
        f"no convergence in {config.max_iter} iterations (EL residual {result.residual:.3e})",
        result=result,
    )


def inverse_power_eigenvalue(mesh, tol=1e-14, max_iter=2000):
    """First Dirichlet eigenvalue of the P1 pencil ``(K, M)`` by inverse iteration.

    Uses the exact consistent mass matrix and a sparse LU factorization,
    sharing nothing with :func:`minimize_quotient` beyond stiffness assembly.
    Returns ``(eigenvalue, nodal eigenvector normalized in L2)``.
    """
    check_mesh(mesh)
    K = fem.assemble_stiffness(mesh).matrix.tocsc()
    idx = mesh.interior
    M = fem.assemble_mass(mesh)[idx][:, idx].tocsr()
    lu = spla.splu(K)
    x = np.ones(K.shape[0])
    lam_old = math.inf
    for _ in range(max_iter):
        y = lu.solve(M @ x)
        y /= math.sqrt(y @ (M @ y))
        lam = (y @ (K @ y)) / (y @ (M @ y))
        if abs(lam - lam_old) <= tol * lam:
            x = y
            break
        x, lam_old = y, lam
    values = np.zeros(mesh.n_vertices)
    values[idx] = np.abs(x)
    return float(lam), values


class SobolevExtremal(BaseEstimator):
    """Estimator wrapper: fit a domain, predict the extremal function.

    Parameters
    ----------
    p : float, default=2.0
        Exponent, ``p >= 1``.
    h : float, default=0.02
        Mesh resolution, used when ``fit`` receives a domain rather than a mesh.
    quotient_tol, el_tol, max_iter, min_step, linear_tol
        Passed to :class:`SolverConfig`.

    Attributes
    ----------
    mesh_ : TriMesh
    result_ : SolveResult
    cp_, lambda_, sobolev_constant_ : float
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, p=2.0, h=0.02, quotient_tol=1e-10, el_tol=1e-7, max_iter=500,
                 min_step=2.0**-20, linear_tol=1e-11):
        self.p = p
        self.h = h
        self.quotient_tol = quotient_tol
        self.el_tol = el_tol
        self.max_iter = max_iter
        self.min_step = min_step
        self.linear_tol = linear_tol

    def _config(self):
        return SolverConfig(p=self.p, quotient_tol=self.quotient_tol, el_tol=self.el_tol,
                            max_iter=self.max_iter, min_step=self.min_step,
                            linear_tol=self.linear_tol)

    def fit(self, X, y=None):
        """Solve on ``X``: a TriMesh, a domain object, or a domain JSON dict/string."""
        from .geometry import TriMesh, domain_from_json, mesh_domain

        config = self._config()
        if isinstance(X, TriMesh):
            mesh = X
        else:
            domain = domain_from_json(X) if isinstance(X, (dict, str)) else X
            mesh = mesh_domain(domain, check_positive(self.h, "h"))
        try:
            result = minimize_quotient(mesh, config)
        except NotConvergedError as exc:
            warnings.warn(str(exc), ConvergenceWarning, stacklevel=2)
            result = exc.result
        self.mesh_ = mesh
        self.result_ = result
        self.cp_ = result.cp
        self.lambda_ = result.lam
        self.sobolev_constant_ = result.sobolev_constant
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        return self

    def predict(self, X):
        """Extremal function at the points ``X`` (shape (n, 2)); NaN outside the mesh."""
        check_is_fitted(self, "result_")
        return self.result_.phi(check_points(X))
