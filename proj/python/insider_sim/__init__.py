"""Insider-threat identification and mitigation simulator."""

from ._core import (
    Divergence,
    Error,
    NotStabilizable,
    ParseError,
    Scenario,
    ValidationError,
    default_scenario_path,
    pe_check,
    simulate,
    solve_care,
    sweep_trigger,
    theta_star,
)

__all__ = [
    "Divergence",
    "Error",
    "NotStabilizable",
    "ParseError",
    "Scenario",
    "ValidationError",
    "default_scenario_path",
    "pe_check",
    "simulate",
    "solve_care",
    "sweep_trigger",
    "theta_star",
]
