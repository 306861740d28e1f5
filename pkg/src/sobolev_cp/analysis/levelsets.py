"""Superlevel-set diagnostics of the extremal function.

For ``t`` on a uniform grid in ``[0, phi_M]`` each triangle is clipped
against ``phi >= t`` (the P1 interpolant is linear there, so the clipped
piece is a triangle or a quadrilateral) and the following are accumulated:

* ``A(t)``  area of ``{phi >= t}``
* ``l(t)``  length of the contour ``{phi = t}`` (marching triangles)
* ``H0(t)`` ``int_{phi >= t} phi^(p-1)``
* ``H1(t)`` ``-(p/2) int_{phi >= t} phi^(p-1) <grad phi, x - x0>``

:func:`verify_levelset_inequalities` then checks the differential
inequalities linking them by central differences on the grid.
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .. import fem
from ..exceptions import InsufficientRegularRowsError, InvalidInputError
from ..validation import check_exponent

__all__ = [
    "LEVELSET_CSV_COLUMNS",
    "LevelSetTable",
    "LevelSetVerdicts",
    "level_set_table",
    "clip_superlevel",
    "verify_levelset_inequalities",
]

LEVELSET_CSV_COLUMNS = ("t", "A", "l", "H0", "H1", "flags")
MIN_SAMPLES = 16
INEQ_TOL = 0.03
IDENTITY_TOL = 0.05


@dataclass(frozen=True, eq=False)
class LevelSetTable:
    p: float
    lam: float
    phi_max: float
    base_point: tuple
    t: np.ndarray
    area: np.ndarray
    length: np.ndarray
    H0: np.ndarray
    H1: np.ndarray
    flags: tuple

    @property
    def regular(self):
        return np.array([not f for f in self.flags])

    def isoperimetric_ratio(self):
        """``l^2 / (4 pi A)`` on rows with positive area (NaN elsewhere)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.area > 0, self.length**2 / (4 * math.pi * self.area), np.nan)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(LEVELSET_CSV_COLUMNS)
        for i in range(len(self.t)):
            nums = (self.t[i], self.area[i], self.length[i], self.H0[i], self.H1[i])
            writer.writerow([f"{v:.17g}" for v in nums] + [self.flags[i]])
        return buf.getvalue()


@dataclass(frozen=True)
class LevelSetVerdicts:
    coarea_bound: bool  # (H0^2)' <= -8 pi A t^(p-1) / Lambda
    h1_identity: bool  # H1' = -p t^(p-1) A
    combined_monotone: bool  # d/dt [H0^2 - 8 pi / (p Lambda) H1] <= 0
    rows_used: int
    worst_coarea: float
    worst_identity: float
    worst_combined: float

    @property
    def passed(self):
        return self.coarea_bound and self.h1_identity and self.combined_monotone

    def to_dict(self):
        return {
            "coarea_bound": self.coarea_bound,
            "h1_identity": self.h1_identity,
            "combined_monotone": self.combined_monotone,
            "rows_used": self.rows_used,
            "worst_coarea": self.worst_coarea,
            "worst_identity": self.worst_identity,
            "worst_combined": self.worst_combined,
        }


def clip_superlevel(coords, values, t):
    """Clip triangles against ``values >= t``.

    Parameters
    ----------
    coords : (m, 3, 2) array
    values : (m, 3) array of nodal values
    t : float

    Returns
    -------
    sub_coords : (k, 3, 2) array
        Sub-triangles covering the superlevel part.
    sub_values : (k, 3) array
    parent : (k,) array
        Index of the source triangle of each sub-triangle.
    seg_length : (m,) array
        Length of the contour segment inside each triangle.
    """
    order = np.argsort(-values, axis=1, kind="stable")
    v = np.take_along_axis(values, order, axis=1)
    P = np.take_along_axis(coords, order[..., None], axis=1)
    v0, v1, v2 = v[:, 0], v[:, 1], v[:, 2]
    P0, P1, P2 = P[:, 0], P[:, 1], P[:, 2]

    full = v2 >= t
    two = (v1 >= t) & ~full
    one = (v0 >= t) & (v1 < t)

    def cross(Pa, Pb, va, vb, mask):
        s = (va[mask] - t) / (va[mask] - vb[mask])
        return Pa[mask] + s[:, None] * (Pb[mask] - Pa[mask])

    tv = np.full(1, t)
    pieces_c, pieces_v, pieces_p = [], [], []
    idx = np.flatnonzero(full)
    pieces_c.append(P[full])
    pieces_v.append(v[full])
    pieces_p.append(idx)

    seg = np.zeros(len(values))
    idx = np.flatnonzero(two)
    if len(idx):
        q12 = cross(P1, P2, v1, v2, two)
        q02 = cross(P0, P2, v0, v2, two)
        tt = np.broadcast_to(tv, (len(idx),))
        pieces_c.append(np.stack([P0[two], P1[two], q12], axis=1))
        pieces_v.append(np.column_stack([v0[two], v1[two], tt]))
        pieces_p.append(idx)
        pieces_c.append(np.stack([P0[two], q12, q02], axis=1))
        pieces_v.append(np.column_stack([v0[two], tt, tt]))
        pieces_p.append(idx)
        d = q12 - q02
        seg[idx] = np.hypot(d[:, 0], d[:, 1])
    idx = np.flatnonzero(one)
    if len(idx):
        q01 = cross(P0, P1, v0, v1, one)
        q02 = cross(P0, P2, v0, v2, one)
        tt = np.broadcast_to(tv, (len(idx),))
        pieces_c.append(np.stack([P0[one], q01, q02], axis=1))
        pieces_v.append(np.column_stack([v0[one], tt, tt]))
        pieces_p.append(idx)
        d = q01 - q02
        seg[idx] = np.hypot(d[:, 0], d[:, 1])
    return (
        np.concatenate(pieces_c),
        np.concatenate(pieces_v),
        np.concatenate(pieces_p),
        seg,
    )


def _row_integrals(coords, values, grads, p, base, rule):
    sub_c, sub_v, parent, seg = clip_superlevel(coords, values, rule["t"])
    e1 = sub_c[:, 1] - sub_c[:, 0]
    e2 = sub_c[:, 2] - sub_c[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    bary, w = rule["points"], rule["weights"]
    phi_q = np.maximum(sub_v @ bary.T, 0.0)
    x_q = np.einsum("qi,kij->kqj", bary, sub_c)
    weight = phi_q ** (p - 1.0) if p != 1.0 else np.ones_like(phi_q)
    g = grads[parent]
    radial = np.einsum("kj,kqj->kq", g, x_q - base)
    A = float(np.sum(area))
    H0 = float(np.sum(area * (weight @ w)))
    H1 = float(-0.5 * p * np.sum(area * ((weight * radial) @ w)))
    return A, float(np.sum(seg)), H0, H1


def level_set_table(result, base_point=None, samples=64):
    """Tabulate ``A``, ``l``, ``H0``, ``H1`` on a uniform grid of levels.

    Row flags: ``"boundary"`` at ``t = 0`` (the contour is the domain
    boundary, ``l`` is reported as its length), ``"empty"`` at ``t = phi_M``,
    ``"vertex"`` when ``t`` coincides with a nodal value (non-regular level).
    """
    if int(samples) != samples or samples < 2:
        raise InvalidInputError(f"samples must be an integer >= 2, got {samples!r}")
    samples = int(samples)
    phi = result.phi
    mesh = phi.mesh
    p = result.p
    base = np.asarray(mesh.centroid if base_point is None else base_point, dtype=float)
    if base.shape != (2,):
        raise InvalidInputError("base point must be [x, y]")
    coords = mesh.vertices[mesh.triangles]
    values = phi.values[mesh.triangles]
    grads = phi.gradients
    phi_max = float(phi.values.max())
    t_grid = np.linspace(0.0, phi_max, samples)
    rule = {"points": fem.DUNAVANT_4.points, "weights": fem.DUNAVANT_4.weights}
    nodal = np.sort(phi.values)

    area, length, H0, H1, flags = [], [], [], [], []
    for i, t in enumerate(t_grid):
        A, l, h0, h1 = _row_integrals(coords, values, grads, p, base, {**rule, "t": t})
        if i == 0:
            flag, l = "boundary", mesh.boundary_length
        elif i == samples - 1:
            flag = "empty"
        else:
            k = np.searchsorted(nodal, t)
            near = [abs(nodal[j] - t) for j in (k - 1, k) if 0 <= j < len(nodal)]
            flag = "vertex" if min(near) <= 1e-12 * phi_max else ""
        area.append(A)
        length.append(l)
        H0.append(h0)
        H1.append(h1)
        flags.append(flag)

    return LevelSetTable(
        p=p,
        lam=result.lam,
        phi_max=phi_max,
        base_point=tuple(float(b) for b in base),
        t=t_grid,
        area=np.array(area),
        length=np.array(length),
        H0=np.array(H0),
        H1=np.array(H1),
        flags=tuple(flags),
    )


def verify_levelset_inequalities(table, p=None):
    """Check the three level-set relations by central differences.

    (a) ``(H0^2)' <= -8 pi A t^(p-1) / Lambda``
    (b) ``H1' = -p t^(p-1) A`` within 5 % relative
    (c) ``d/dt [H0^2 - 8 pi H1 / (p Lambda)] <= 0``

    (a) and (c) allow 3 % of the larger term at each level.  Endpoints and
    flagged rows are skipped.
    """
    p = table.p if p is None else check_exponent(p)
    t, A, H0, H1 = table.t, table.area, table.H0, table.H1
    lam = table.lam
    usable = [
        i for i in range(1, len(t) - 1)
        if not table.flags[i] and A[i] > 0 and t[i] > 0
    ]
    if len(usable) < 8:
        raise InsufficientRegularRowsError(f"only {len(usable)} usable levels; need at least 8")
    idx = np.array(usable)
    dt = t[idx + 1] - t[idx - 1]
    d_h0sq = (H0[idx + 1] ** 2 - H0[idx - 1] ** 2) / dt
    d_h1 = (H1[idx + 1] - H1[idx - 1]) / dt
    tp = t[idx] ** (p - 1.0)

    bound = -8.0 * math.pi * A[idx] * tp / lam
    tol_a = INEQ_TOL * np.maximum(np.abs(d_h0sq), np.abs(bound))
    margin_a = (d_h0sq - bound) / np.maximum(np.abs(bound), np.abs(d_h0sq))

    target = -p * tp * A[idx]
    rel_b = np.abs(d_h1 - target) / np.abs(target)

    coef = 8.0 * math.pi / (p * lam)
    d_comb = d_h0sq - coef * d_h1
    scale_c = np.maximum(np.abs(d_h0sq), np.abs(coef * d_h1))
    tol_c = INEQ_TOL * scale_c

    return LevelSetVerdicts(
        coarea_bound=bool(np.all(d_h0sq <= bound + tol_a)),
        h1_identity=bool(np.all(rel_b <= IDENTITY_TOL)),
        combined_monotone=bool(np.all(d_comb <= tol_c)),
        rows_used=len(idx),
        worst_coarea=float(np.max(margin_a)),
        worst_identity=float(np.max(rel_b)),
        worst_combined=float(np.max(d_comb / scale_c)),
    )
