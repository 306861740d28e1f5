"""Schwarz-lemma sweep: ``Phi(r) = r^(4/p) C_p(f(r D)) / C_p(D)`` over a grid of radii."""

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ..exceptions import (
    CgStalledError,
    FoldedMeshError,
    InvalidInputError,
    NotConvergedError,
    PoleHitError,
    SweepTooSparseError,
)
from ..geometry import eval_derivative, mesh_disk, mesh_map_image
from ..solver import SolverConfig, minimize_quotient
from ..validation import check_exponent, check_positive

__all__ = [
    "R_CEILING",
    "SchwarzRow",
    "SchwarzSweep",
    "schwarz_sweep",
    "richardson_limit",
    "log_convexity_margins",
    "SWEEP_CSV_COLUMNS",
]

R_CEILING = 0.95
EPS_MONO = 1e-3
EPS_CONST = 1e-3
EPS_CVX = 1e-2
# relative level of solver noise in 1/Phi; keeps a constant reciprocal from failing the convexity test
NOISE_FLOOR = 1e-9

SWEEP_CSV_COLUMNS = ("r", "log_r", "cp_image", "phi_ratio", "reciprocal")


@dataclass(frozen=True)
class SchwarzRow:
    r: float
    log_r: float
    cp_scaled_disk: float
    cp_image: float = math.nan
    ratio: float = math.nan
    reciprocal: float = math.nan
    valid: bool = True
    reason: str = ""


@dataclass(frozen=True, eq=False)
class SchwarzSweep:
    p: float
    map: object
    h: float
    cp_unit_disk: float
    rows: tuple
    is_monotone_decreasing: bool
    is_constant: bool
    reciprocal_logconvex: object  # bool, or None when p > 2
    extrapolated_limit: float
    expected_limit: float

    @property
    def valid_rows(self):
        return tuple(row for row in self.rows if row.valid)

    @property
    def skipped_rows(self):
        return [{"r": row.r, "reason": row.reason} for row in self.rows if not row.valid]

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_CSV_COLUMNS)
        for row in self.valid_rows:
            writer.writerow(
                [f"{v:.17g}" for v in (row.r, row.log_r, row.cp_image, row.ratio, row.reciprocal)]
            )
        return buf.getvalue()

    def verdicts(self):
        out = {
            "p": self.p,
            "monotone_decreasing": "constant" if self.is_constant else self.is_monotone_decreasing,
            "constant": self.is_constant,
            "extrapolated_limit": self.extrapolated_limit,
            "expected_limit": self.expected_limit,
            "skipped_rows": self.skipped_rows,
        }
        if self.reciprocal_logconvex is not None:
            out["reciprocal_logconvex"] = self.reciprocal_logconvex
        return out

    @property
    def passed(self):
        checks = [self.is_constant or self.is_monotone_decreasing]
        if self.reciprocal_logconvex is not None:
            checks.append(self.reciprocal_logconvex)
        return all(checks)


def richardson_limit(r, values):
    """Extrapolate ``values(r) = v0 + c r^2`` to ``r = 0`` from two samples."""
    (r1, r2), (v1, v2) = r, values
    return (r2 * r2 * v1 - r1 * r1 * v2) / (r2 * r2 - r1 * r1)


def log_convexity_margins(r, reciprocal):
    """Second divided differences of ``reciprocal`` against ``log r`` and the tolerance floor."""
    s = np.log(np.asarray(r, dtype=float))
    y = np.asarray(reciprocal, dtype=float)
    slopes = np.diff(y) / np.diff(s)
    d2 = 2.0 * np.diff(slopes) / (s[2:] - s[:-2])
    scale = float(np.median(np.abs(d2))) if len(d2) else 0.0
    noise = 4.0 * NOISE_FLOOR * float(np.max(np.abs(y))) / float(np.min(np.diff(s))) ** 2
    return d2, EPS_CVX * scale + noise


def _solve_row(args):
    fmap, r, h, p, config, disk_mesh = args
    try:
        mesh = mesh_map_image(fmap, r, h, disk_mesh=disk_mesh)
        return minimize_quotient(mesh, config).cp, ""
    except (FoldedMeshError, PoleHitError, NotConvergedError, CgStalledError) as exc:
        return math.nan, f"{type(exc).__name__}: {exc}"


def _check_grid(r_grid, allow_large_r):
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or len(r) == 0:
        raise InvalidInputError("r grid must be a non-empty list of radii")
    if np.any(np.diff(r) <= 0):
        raise InvalidInputError("r grid must be strictly increasing")
    ceiling = 1.0 if allow_large_r else R_CEILING
    if r[0] <= 0 or r[-1] > ceiling or r[-1] >= 1.0:
        raise InvalidInputError(
            f"radii must lie in (0, {ceiling}]" + ("" if allow_large_r else "; pass allow_large_r to exceed 0.95")
        )
    return r


def schwarz_sweep(fmap, p, r_grid, h=0.02, allow_large_r=False, threads=1, config=None):
    """Solve on ``f(r D)`` for each ``r`` and render the monotonicity/convexity verdicts.

    Rows whose mesh folds or whose solve fails are kept but marked invalid and
    excluded from the verdicts.  ``reciprocal_logconvex`` is only evaluated
    for ``p <= 2``.
    """
    p = check_exponent(p)
    h = check_positive(h, "h")
    r = _check_grid(r_grid, allow_large_r)
    config = SolverConfig(p=p) if config is None else replace(config, p=p)

    disk = mesh_disk(1.0, (0.0, 0.0), h)
    cp_unit = minimize_quotient(disk, config).cp
    jobs = [(fmap, float(ri), h, p, config, disk) for ri in r]
    if threads and threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            solved = list(pool.map(_solve_row, jobs))
    else:
        solved = [_solve_row(job) for job in jobs]

    rows = []
    for ri, (cp_image, reason) in zip(r, solved):
        scaled = ri ** (-4.0 / p) * cp_unit
        if reason:
            rows.append(SchwarzRow(float(ri), math.log(ri), scaled, valid=False, reason=reason))
            continue
        ratio = ri ** (4.0 / p) * cp_image / cp_unit
        rows.append(SchwarzRow(float(ri), math.log(ri), scaled, cp_image, ratio, 1.0 / ratio))

    valid = [row for row in rows if row.valid]
    if len(valid) < 4:
        raise SweepTooSparseError(f"only {len(valid)} valid rows; at least 4 are needed")
    ratio = np.array([row.ratio for row in valid])
    rv = np.array([row.r for row in valid])

    monotone = bool(np.all(ratio[1:] < ratio[:-1] * (1.0 + EPS_MONO)))
    mean = ratio.mean()
    constant = bool(np.max(np.abs(ratio - mean)) / mean < EPS_CONST)
    if p <= 2.0:
        d2, tol = log_convexity_margins(rv, 1.0 / ratio)
        logconvex = bool(np.all(d2 >= -tol))
    else:
        logconvex = None

    return SchwarzSweep(
        p=p,
        map=fmap,
        h=h,
        cp_unit_disk=cp_unit,
        rows=tuple(rows),
        is_monotone_decreasing=monotone,
        is_constant=constant,
        reciprocal_logconvex=logconvex,
        extrapolated_limit=float(richardson_limit(rv[:2], ratio[:2])),
        expected_limit=abs(eval_derivative(fmap, 0j)) ** (-4.0 / p),
    )
