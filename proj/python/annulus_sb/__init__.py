"""Radial solutions, stability indicators and mountain-pass candidates on annuli."""

from ._core import (
    Annulus,
    ConfigError,
    Grid,
    InvariantViolation,
    Nonlinearity,
    SaturationError,
    SolverError,
    __version__,
    energy,
    in_cone,
    luxemburg_norm,
    mountain_pass,
    project_cone,
    random_cone_field,
    run,
    solve_radial,
    stability,
    tm_probe,
    version_info,
)

__all__ = [
    "Annulus",
    "ConfigError",
    "Grid",
    "InvariantViolation",
    "Nonlinearity",
    "SaturationError",
    "SolverError",
    "energy",
    "in_cone",
    "luxemburg_norm",
    "mountain_pass",
    "project_cone",
    "random_cone_field",
    "run",
    "solve_radial",
    "stability",
    "tm_probe",
    "version_info",
]
