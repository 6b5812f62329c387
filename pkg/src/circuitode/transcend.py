"""Turn element laws with one transcendental function into polynomial ODEs.

An equation ``P1*f(w) + P0 = 0`` with f in {exp, arctan, tan, log} is not a
differential polynomial.  Differentiating once and using f' = g(f, w)
(the chain rule) gives a polynomial relation between P0, P1, w and their
first derivatives.  The integration constant lost by differentiating is kept
as a :class:`TranscendentalConstraint` so initial values can be checked.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import mpmath

from .diffpoly import DerivativeTerm, DiffPolynomial, Ranking
from .errors import NestedTranscendental, UnsupportedTranscendental

__all__ = [
    "TranscendRule",
    "TranscendentalCall",
    "TranscendentalConstraint",
    "Algebraized",
    "RULES",
    "algebraize",
]


def _exp_relation(P0, P1, N, w, dw):
    # f' = f, f = -P0/P1
    return N - P0 * P1 * dw


def _arctan_relation(P0, P1, N, w, dw):
    # f' = 1/(1 + w^2)
    return (w * w + 1) * N + P1 * P1 * dw


def _tan_relation(P0, P1, N, w, dw):
    # f' = 1 + f^2
    return N + (P1 * P1 + P0 * P0) * dw


def _log_relation(P0, P1, N, w, dw):
    # f' = 1/w
    return w * N + P1 * P1 * dw


@dataclass(frozen=True)
class TranscendRule:
    """How to algebraize ``P1*f(w) + P0 = 0`` for one function f.

    ``relation(P0, P1, N, w, w')`` returns the polynomial relation, where
    N = P0'*P1 - P0*P1' so that d/dt f(w) = -N/P1^2.
    """

    function: str
    relation: Callable
    evaluate: Callable


RULES = {
    "exp": TranscendRule("exp", _exp_relation, mpmath.exp),
    "arctan": TranscendRule("arctan", _arctan_relation, mpmath.atan),
    "tan": TranscendRule("tan", _tan_relation, mpmath.tan),
    "log": TranscendRule("log", _log_relation, mpmath.log),
}


@dataclass(frozen=True)
class TranscendentalCall:
    """A call f(argument) that the parser replaced by a placeholder term."""

    placeholder: DerivativeTerm
    function: str
    argument: DiffPolynomial


@dataclass(frozen=True)
class TranscendentalConstraint:
    """The original law ``factor*f(argument) + offset = 0``."""

    function: str
    argument: DiffPolynomial
    factor: DiffPolynomial
    offset: DiffPolynomial
    equation_index: int = -1

    def residual(self, values: Mapping[DerivativeTerm, object],
                 assignment: Mapping[str, object] | None = None):
        """factor*f(argument) + offset at a point, in mpmath precision."""
        fn = RULES[self.function].evaluate

        def ev(p):
            total = mpmath.mpf(0)
            for m, c in p.terms.items():
                frac = c.to_fraction() if c.is_rational else c.evaluate(assignment or {})
                v = mpmath.mpf(frac.numerator) / frac.denominator
                for t, e in m:
                    x = values[t]
                    if isinstance(x, Fraction):
                        x = mpmath.mpf(x.numerator) / x.denominator
                    v *= mpmath.mpf(x) ** e
                total += v
            return total

        return ev(self.factor) * fn(ev(self.argument)) + ev(self.offset)

    def render(self, ranking: Ranking | None = None) -> str:
        factor = self.factor.render(ranking)
        if len(self.factor) > 1:
            factor = f"({factor})"
        call = f"{self.function}({self.argument.render(ranking)})"
        lhs = call if factor == "1" else f"-{call}" if factor == "-1" else f"{factor}*{call}"
        if self.offset:
            off = self.offset.render(ranking)
            lhs += f" - {off[1:]}" if off.startswith("-") else f" + {off}"
        return f"{lhs} = 0"

    def substitute_constants(self, assignment, field=None) -> "TranscendentalConstraint":
        return TranscendentalConstraint(
            self.function,
            self.argument.substitute_constants(assignment, field),
            self.factor.substitute_constants(assignment, field),
            self.offset.substitute_constants(assignment, field),
            self.equation_index,
        )


@dataclass(frozen=True)
class Algebraized:
    polynomial: DiffPolynomial
    constraint: TranscendentalConstraint | None = None
    note: str = ""


def algebraize(eq: DiffPolynomial, calls: Sequence[TranscendentalCall] = (),
               rules: Mapping[str, TranscendRule] = RULES,
               equation_index: int = -1) -> Algebraized:
    """Replace ``eq`` (with placeholder terms for ``calls``) by a polynomial.

    Polynomial input without calls passes through unchanged.
    """
    used = [c for c in calls if eq.degree(c.placeholder) > 0]
    if not used:
        return Algebraized(eq, None, "already polynomial")
    if len(used) > 1:
        raise UnsupportedTranscendental(
            "only one transcendental term per equation is supported, found "
            + ", ".join(c.function for c in used)
        )
    call = used[0]
    rule = rules.get(call.function)
    if rule is None:
        raise UnsupportedTranscendental(f"no algebraization rule for {call.function!r}")
    placeholders = {c.placeholder for c in calls}
    if call.argument.indeterminates() & placeholders:
        raise NestedTranscendental(f"nested transcendental call inside {call.function}(...)")
    parts = eq.coefficients(call.placeholder)
    if max(parts) != 1:
        raise UnsupportedTranscendental(
            f"{call.function}(...) must occur linearly, found degree {max(parts)}"
        )
    P1 = parts[1]
    P0 = parts.get(0, DiffPolynomial.zero(eq.field))
    if P1.indeterminates() & placeholders or P0.indeterminates() & placeholders:
        raise UnsupportedTranscendental("more than one transcendental term in one equation")
    w = call.argument
    N = P0.differentiate() * P1 - P0 * P1.differentiate()
    rel = rule.relation(P0, P1, N, w, w.differentiate())
    _, rel = rel.primitive()
    constraint = TranscendentalConstraint(call.function, w, P1, P0, equation_index)
    note = f"differentiated {call.function}({w}) once via the chain rule"
    return Algebraized(rel, constraint, note)
