"""Computable checks of the Schwarz-lemma and reverse Hoelder statements."""

from .levelsets import (
    LevelSetTable,
    LevelSetVerdicts,
    level_set_table,
    verify_levelset_inequalities,
)
from .payne_rayner import (
    PayneRaynerReport,
    SaintVenantRecord,
    payne_rayner_report,
    saint_venant_check,
)
from .reference import reference_for_domain, reference_value
from .schwarz import SchwarzRow, SchwarzSweep, schwarz_sweep

__all__ = [
    "LevelSetTable",
    "LevelSetVerdicts",
    "level_set_table",
    "verify_levelset_inequalities",
    "PayneRaynerReport",
    "SaintVenantRecord",
    "payne_rayner_report",
    "saint_venant_check",
    "reference_for_domain",
    "reference_value",
    "SchwarzRow",
    "SchwarzSweep",
    "schwarz_sweep",
]
