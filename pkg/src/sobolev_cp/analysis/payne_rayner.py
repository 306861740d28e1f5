"""Reverse Hoelder (Payne-Rayner type) report and its p = 1 Saint-Venant case."""

import math
from dataclasses import asdict, dataclass

from .. import fem
from ..exceptions import WrongExponentError

__all__ = [
    "EQUALITY_TOL",
    "PayneRaynerReport",
    "SaintVenantRecord",
    "payne_rayner_report",
    "saint_venant_check",
]

EQUALITY_TOL = 0.02


@dataclass(frozen=True)
class PayneRaynerReport:
    """Both sides of ``(int phi^(p-1))^2 >= 8 pi / (p C_p) (int phi^p)^(2 - 2/p)``.

    ``length_flux`` and ``length_el`` are the two evaluations of the boundary
    length in the metric ``|grad phi| ds``: the boundary integral itself and
    ``Lambda int phi^(p-1)``.  ``area`` is ``int |grad phi|^2``.
    """

    p: float
    cp: float
    lhs: float
    rhs: float
    deficit: float
    relative_deficit: float
    length_flux: float
    length_el: float
    area: float
    iso_lhs: float
    iso_rhs: float
    equality_flag: bool

    @property
    def holds(self):
        """Inequality satisfied up to the discretization allowance."""
        return self.deficit >= -EQUALITY_TOL * self.rhs

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SaintVenantRecord:
    area_squared: float
    two_pi_p: float
    ratio: float
    torsional_rigidity: float

    def to_dict(self):
        return asdict(self)


def payne_rayner_report(result):
    """Evaluate the reverse Hoelder inequality and its conformal-metric form on a solve."""
    p, cp = result.p, result.cp
    ip = result.p_norm_integral
    pm1 = result.pminus1_integral
    lhs = pm1 * pm1
    rhs = 8.0 * math.pi / (p * cp) * ip ** (2.0 - 2.0 / p)
    deficit = lhs - rhs
    length_el = result.lam * pm1
    area = result.energy
    return PayneRaynerReport(
        p=p,
        cp=cp,
        lhs=lhs,
        rhs=rhs,
        deficit=deficit,
        relative_deficit=deficit / rhs,
        length_flux=fem.boundary_flux(result.phi),
        length_el=length_el,
        area=area,
        iso_lhs=length_el**2,
        iso_rhs=8.0 * math.pi / p * area,
        equality_flag=bool(deficit / rhs < EQUALITY_TOL),
    )


def saint_venant_check(result, area=None):
    """Compare ``2 pi P`` with ``A^2`` where ``P = 4 / C_1`` is the torsional rigidity."""
    if result.p != 1.0:
        raise WrongExponentError(f"Saint-Venant check needs a p = 1 solve, got p = {result.p}")
    area = result.mesh.area if area is None else float(area)
    rigidity = 4.0 / result.cp
    two_pi_p = 2.0 * math.pi * rigidity
    return SaintVenantRecord(area * area, two_pi_p, two_pi_p / (area * area), rigidity)
