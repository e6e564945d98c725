"""Numeric tolerances and backend selection shared by every module."""

import os
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # |‖u‖ - 1| allowed for a Line direction
    unit_norm: float = 1e-12
    # per-entry deviation of BᵀB from I for a Subspace basis
    orthonormal: float = 1e-10
    # rows with squared norm at or below this are treated as zero
    zero_row: float = 0.0
    # switch to compensated summation at this many terms
    fsum_threshold: int = 100_000
    # relative slack used by property checks on the sandwich inequality
    sandwich_rel: float = 1e-9
    # CNW refuses epsilon above this (delta_l = 0 at 1/2)
    cnw_eps_max: float = 0.499


TOL = Tolerances()

_FALSE = {"0", "false", "no", "off", ""}


def numba_enabled() -> bool:
    """True unless ``PROJCORESET_NUMBA`` is set to a false-ish value."""
    return os.environ.get("PROJCORESET_NUMBA", "1").strip().lower() not in _FALSE
