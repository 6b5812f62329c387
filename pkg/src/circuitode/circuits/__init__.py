"""Circuit equation systems: the text format and the built-in catalog."""

from .catalog import (
    CATALOG,
    CircuitCatalogEntry,
    CircuitVariant,
    Signal,
    ValidationFixture,
    builtin_circuit,
    builtin_names,
)
from .parser import parse_relation, parse_system, render_system
from .system import EquationSystem

__all__ = [
    "CATALOG",
    "CircuitCatalogEntry",
    "CircuitVariant",
    "EquationSystem",
    "Signal",
    "ValidationFixture",
    "builtin_circuit",
    "builtin_names",
    "parse_relation",
    "parse_system",
    "render_system",
]
