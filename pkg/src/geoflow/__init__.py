"""Geodesic flows on metric Lie algebras, coordinate charts and null frames,
with finite-time blow-up certification and conserved-quantity monitoring."""

from .errors import GeoflowError, InputError, InvariantViolation, StateError
from .integrator import (
    BlowUp,
    Completed,
    IntegratorConfig,
    LeftDomain,
    StepLimit,
    Trajectory,
    escape_time_bracket,
    integrate,
    max_drift,
    write_csv,
)

__all__ = [
    "BlowUp",
    "Completed",
    "GeoflowError",
    "InputError",
    "IntegratorConfig",
    "InvariantViolation",
    "LeftDomain",
    "StateError",
    "StepLimit",
    "Trajectory",
    "escape_time_bracket",
    "integrate",
    "max_drift",
    "write_csv",
]
