"""Built-in circuits with their published single ODEs and numeric fixtures."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction as Q
from functools import lru_cache
from importlib import resources

from ..errors import UnknownCircuit
from .parser import parse_relation, parse_system
from .system import EquationSystem

__all__ = [
    "Signal",
    "ValidationFixture",
    "CircuitVariant",
    "CircuitCatalogEntry",
    "CATALOG",
    "builtin_circuit",
    "builtin_names",
    "load_data",
]


@dataclass(frozen=True)
class Signal:
    """Excitation as a finite sum of terms with rational parameters.

    Each term is (kind, amplitude, frequency_or_power) with kind in
    {"poly", "sin", "cos"}: poly means amplitude*t^power, sin means
    amplitude*sin(frequency*t) and likewise for cos.
    """

    terms: tuple = ()

    @classmethod
    def sin(cls, amplitude=1, frequency=1):
        return cls((("sin", Q(amplitude), Q(frequency)),))

    @classmethod
    def const(cls, value=0):
        return cls((("poly", Q(value), 0),))

    def __add__(self, other: "Signal") -> "Signal":
        return Signal(self.terms + other.terms)

    def describe(self) -> str:
        parts = []
        for kind, a, w in self.terms:
            if kind == "poly":
                parts.append(f"{a}*t^{w}" if w else f"{a}")
            else:
                parts.append(f"{a}*{kind}({w}*t)")
        return " + ".join(parts) or "0"


@dataclass(frozen=True)
class ValidationFixture:
    """Rational constants, initial values and excitations for numeric checks.

    ``base_ic`` gives values of original unknowns at t = 0; entries may be
    partial, missing ones are computed from the equations.
    """

    constants: dict
    base_ic: dict
    excitations: dict = field(default_factory=dict)
    span: tuple = (0, 1)
    step: float = 1e-4


@dataclass(frozen=True)
class CircuitVariant:
    """The same circuit with some constants fixed, and its published ODE."""

    name: str
    assignment: dict
    expected_output: str
    label: str


@dataclass(frozen=True)
class CircuitCatalogEntry:
    name: str
    description: str
    expected_output: str | None
    label: str
    fixture: ValidationFixture | None = None
    variants: tuple = ()
    data_file: str = ""

    def expected_polynomial(self, system: EquationSystem | None = None):
        """The expected relation as a differential polynomial lhs - rhs."""
        if self.expected_output is None:
            return None
        return parse_relation(self.expected_output, system or builtin_circuit(self.name)[0])


CATALOG = {
    "ota": CircuitCatalogEntry(
        name="ota",
        description="operational transconductance amplifier in semistate form",
        expected_output="C*x3' = C*g_m3*e1' + g_m3*g_m4*e1",
        label="OTA circuit, single ODE for the input current x3",
        fixture=ValidationFixture(
            constants={"C": Q(1), "g_m3": Q(2), "g_m4": Q(3)},
            base_ic={"x1": Q(0), "x2": Q(1, 2), "x3": Q(-3, 2)},
            excitations={"e1": Signal.sin()},
        ),
        data_file="ota.sys",
    ),
    "duffing": CircuitCatalogEntry(
        name="duffing",
        description="damped resonant circuit with a cubic flux-controlled inductor",
        expected_output="psi'' = -(a + 3*b*psi^2)*R*psi' - a*psi/C - b*psi^3/C - v0'",
        label="damped resonant circuit, Duffing-type equation for the flux psi",
        fixture=ValidationFixture(
            constants={"C": Q(1), "R": Q(1, 2), "a": Q(1), "b": Q(1, 10)},
            base_ic={"psi": Q(1, 2), "v_C": Q(0)},
            excitations={"v0": Signal.sin()},
        ),
        data_file="duffing.sys",
    ),
    "chua": CircuitCatalogEntry(
        name="chua",
        description="Chua's circuit with an arctangent nonlinear resistor",
        expected_output=(
            "C1*C2*R*L*(v_C1^2 + V0^2)^3*v_C1^(4) = -("
            "((C1 + C2)*L*v_C1''' + C1*R*v_C1'' + v_C1')*(v_C1^2 + V0^2)^3"
            " - I0*V0*(C2*L*R*v_C1''' + L*v_C1'' + R*v_C1')*(v_C1^2 + V0^2)^2"
            " + 2*I0*V0*L*v_C1*v_C1'*(3*C2*R*v_C1'' + v_C1')*(v_C1^2 + V0^2)"
            " - I0*V0*(6*v_C1^2 - 2*V0^2)*C2*L*R*v_C1'^3)"
        ),
        label="Chua's circuit, fourth-order ODE for the voltage across C1",
        fixture=ValidationFixture(
            constants={"C1": Q(1), "C2": Q(2), "R": Q(1), "L": Q(1), "I0": Q(1), "V0": Q(1)},
            base_ic={"v_C1": Q(0), "v_C2": Q(1, 2), "i_L": Q(1, 4), "i_nl": Q(0), "v_nl": Q(0)},
            span=(0, Q(1, 10)),
        ),
        data_file="chua.sys",
    ),
    "rectifier": CircuitCatalogEntry(
        name="rectifier",
        description="peak rectifier with a nonideal source and an exponential diode",
        expected_output=(
            "C*R_a*(V_T*R_a + R_e*(C*R_a*v_a' + v_a + R_a*I_s))*v_a'' = "
            "-(R_a*(V_T*v_a' - (v0' - v_a')*(C*R_a*v_a' + v_a + R_a*I_s))"
            " + v_a'*R_e*(C*R_a*v_a' + v_a + R_a*I_s))"
        ),
        label="peak rectifier, second-order ODE for the output voltage v_a",
        fixture=ValidationFixture(
            constants={"C": Q(1), "R_a": Q(1), "R_e": Q(1, 2), "I_s": Q(1, 10), "V_T": Q(1)},
            base_ic={"v_a": Q(0), "v_D": Q(0)},
            excitations={"v0": Signal.sin()},
        ),
        variants=(
            CircuitVariant(
                name="ideal_source",
                assignment={"R_e": Q(0)},
                expected_output=(
                    "C*R_a*V_T*v_a'' = -V_T*v_a' + (v0' - v_a')*(C*R_a*v_a' + v_a + R_a*I_s)"
                ),
                label="peak rectifier driven by an ideal voltage source",
            ),
        ),
        data_file="rectifier.sys",
    ),
    "lc_diode": CircuitCatalogEntry(
        name="lc_diode",
        description="diode with series resistance feeding a parallel LC load",
        expected_output=(
            "V_T*C*L*(x' - v0')*x''' = -(V_T*(x' - v0')*x'"
            " + (x + C*L*x'')*((R/L*(x + C*L*x'') + (x' - v0'))^2 - V_T*(x'' - v0'')))"
        ),
        label="diode circuit with LC load, third-order ODE for the capacitor voltage",
        fixture=ValidationFixture(
            constants={"C": Q(1), "L": Q(1), "R": Q(1), "I_s": Q(1, 10), "V_T": Q(1)},
            base_ic={"x": Q(0), "i_L": Q(0), "v_D": Q(0), "i_D": Q(0)},
            excitations={"v0": Signal.sin()},
        ),
        data_file="lc_diode.sys",
    ),
    "transformer_rectifier": CircuitCatalogEntry(
        name="transformer_rectifier",
        description="rectifier behind a coupled transformer (stress test, no published ODE)",
        expected_output=None,
        label="transformer rectifier stress fixture",
        data_file="transformer_rectifier.sys",
    ),
}


def builtin_names() -> list:
    return list(CATALOG)


def load_data(filename: str) -> str:
    return resources.files(__package__).joinpath("data", filename).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def builtin_circuit(name: str) -> tuple:
    """Return (EquationSystem, CircuitCatalogEntry) for a catalog name."""
    entry = CATALOG.get(name)
    if entry is None:
        raise UnknownCircuit(f"unknown circuit {name!r}; available: {', '.join(CATALOG)}")
    return parse_system(load_data(entry.data_file), name=name), entry
