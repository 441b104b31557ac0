"""Exhaustive decision procedures with witnesses."""

from .checks import (
    check_feasibility,
    check_forward_simulation,
    check_invariant_preservation,
    check_partitioning,
    recheck,
)
from .params import PartitioningViolation, compartment, compartment_map, idx_c, par_c, par_c_eps, safpar
from .report import FAILS, HOLDS, UNKNOWN, CheckReport

__all__ = [
    "FAILS",
    "HOLDS",
    "UNKNOWN",
    "CheckReport",
    "PartitioningViolation",
    "check_feasibility",
    "check_forward_simulation",
    "check_invariant_preservation",
    "check_partitioning",
    "compartment",
    "compartment_map",
    "idx_c",
    "par_c",
    "par_c_eps",
    "recheck",
    "safpar",
]
