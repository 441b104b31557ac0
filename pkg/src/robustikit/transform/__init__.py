"""Model-to-model transformations and their sufficient conditions."""

from .conditions import Vacuity, is_vacuous, thm1_condition, thm2_condition, vacuity_report
from .inject import check_inputs, inject, injection_inputs
from .robustify import (
    PRESERVING,
    REPURPOSING,
    RobustifyOutcome,
    hetero_name,
    robustify,
    robustify_preserving,
    robustify_repurposing,
)

__all__ = [
    "PRESERVING",
    "REPURPOSING",
    "RobustifyOutcome",
    "Vacuity",
    "check_inputs",
    "hetero_name",
    "inject",
    "injection_inputs",
    "is_vacuous",
    "robustify",
    "robustify_preserving",
    "robustify_repurposing",
    "thm1_condition",
    "thm2_condition",
    "vacuity_report",
]
