"""Welding Grunsky operators and Loewner energy of circle homeomorphisms."""
from .errors import (
    DSLParseError,
    InvalidParameterError,
    NumericFailure,
    WeldingError,
)
from .harmonic import GrunskyTable, grunsky_table, grunsky_table_for, log_ratio_grid
from .homeo import (
    CircleHomeo,
    compose,
    identity,
    invert,
    iterate,
    log_derivative_series,
    parse_homeo,
    rotation,
)
from .operators import (
    build_composition,
    classical_blocks,
    grunsky_from_composition,
    grunsky_from_table,
    grunsky_matrix,
)
from .spectral import EnergyReport, energy_report, iterate_energy

__all__ = [
    "CircleHomeo",
    "DSLParseError",
    "EnergyReport",
    "GrunskyTable",
    "InvalidParameterError",
    "NumericFailure",
    "WeldingError",
    "build_composition",
    "classical_blocks",
    "compose",
    "energy_report",
    "grunsky_from_composition",
    "grunsky_from_table",
    "grunsky_matrix",
    "grunsky_table",
    "grunsky_table_for",
    "identity",
    "invert",
    "iterate",
    "iterate_energy",
    "log_derivative_series",
    "log_ratio_grid",
    "parse_homeo",
    "rotation",
]
