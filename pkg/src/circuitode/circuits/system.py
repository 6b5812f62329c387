"""Equation systems: declarations plus differential polynomials."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace
from fractions import Fraction
from typing import Mapping

from ..coeffield import CoefficientField
from ..diffpoly import DiffPolynomial, Ranking
from ..errors import UnknownVariable
from ..nonlinear_elim import proportional
from ..transcend import TranscendentalConstraint

__all__ = ["EquationSystem"]


@dataclass(frozen=True)
class EquationSystem:
    """A closed circuit description ready for elimination.

    ``constraints`` holds the original transcendental laws that were replaced
    by their differentiated forms; ``constraint.equation_index`` points at the
    equation that replaced it.
    """

    constants: tuple
    unknowns: tuple
    excitations: tuple
    equations: tuple
    constraints: tuple = ()
    suggested_ranking: Ranking | None = None
    default_target: str | None = None
    name: str = ""
    field: CoefficientField = dc_field(default=None, compare=False)

    def __post_init__(self):
        if self.field is None:
            object.__setattr__(self, "field", CoefficientField(tuple(self.constants)))
        if self.suggested_ranking is None:
            object.__setattr__(self, "suggested_ranking", Ranking(self.unknowns, self.excitations))
        if self.default_target is None:
            object.__setattr__(self, "default_target", self.suggested_ranking.unknowns[-1])
        if not self.equations:
            raise ValueError("an equation system needs at least one equation")
        if self.default_target not in self.unknowns:
            raise UnknownVariable(f"target {self.default_target!r} is not an unknown")
        declared = set(self.unknowns) | set(self.excitations)
        for p in self.equations:
            extra = p.functions() - declared
            if extra:
                raise UnknownVariable(f"undeclared functions {sorted(extra)} in {p}")

    def ranking_for(self, target: str | None = None) -> Ranking:
        """The suggested ranking with ``target`` moved to the lowest unknown slot."""
        target = target or self.default_target
        if target not in self.unknowns:
            raise UnknownVariable(f"{target!r} is not an unknown of {self.name or 'the system'}")
        order = [u for u in self.suggested_ranking.unknowns if u != target] + [target]
        return Ranking(order, self.suggested_ranking.excitations)

    def constraint_for(self, index: int) -> TranscendentalConstraint | None:
        for c in self.constraints:
            if c.equation_index == index:
                return c
        return None

    def substitute_constants(self, assignment: Mapping[str, Fraction]) -> "EquationSystem":
        """Fix some constants to rationals; the rest stay symbolic."""
        rest = tuple(c for c in self.constants if c not in assignment)
        fld = CoefficientField(rest)
        eqs = tuple(p.substitute_constants(assignment, fld) for p in self.equations)
        cons = tuple(c.substitute_constants(assignment, fld) for c in self.constraints)
        return replace(self, constants=rest, equations=eqs, constraints=cons, field=fld)

    def equivalent(self, other: "EquationSystem") -> bool:
        """Same declarations and pairwise proportional equations."""
        if (set(self.constants), self.unknowns, self.excitations) != \
                (set(other.constants), other.unknowns, other.excitations):
            return False
        if self.suggested_ranking != other.suggested_ranking:
            return False
        if len(self.equations) != len(other.equations):
            return False
        fld = self.field.union(other.field)
        return all(proportional(a.embed(fld), b.embed(fld))
                   for a, b in zip(self.equations, other.equations))

    def render(self) -> str:
        """DSL text that parses back to an equivalent system."""
        from .parser import render_system
        return render_system(self)
