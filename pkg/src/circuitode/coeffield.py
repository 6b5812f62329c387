"""Exact coefficient arithmetic over Q(c_1, ..., c_k).

Circuit constants are treated as algebraically independent symbols, so the
coefficient domain is the field of rational functions in those symbols with
rational (in fact integer, after clearing) coefficients.  Numerators and
denominators are sparse integer polynomials from ``sympy.polys.rings``; the
monomial order is lexicographic in declaration order, which also fixes the
sign convention of the canonical form.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import lcm
from numbers import Rational
from typing import Iterable, Mapping

from sympy.polys.domains import ZZ
from sympy.polys.orderings import lex
from sympy.polys.rings import PolyElement, PolyRing

from .errors import DivisionByZero, EvaluationSingular, UnboundConstant

__all__ = [
    "ConstPolynomial",
    "CoefficientField",
    "RationalCoefficient",
    "canonicalize",
    "field_arith",
    "evaluate_constants",
    "render_const_poly",
    "primitive_factor",
]

# Integer polynomial in the declared constant symbols.
ConstPolynomial = PolyElement


class CoefficientField:
    """The field Q(names), one shared instance per tuple of names."""

    _instances: dict = {}

    def __new__(cls, names: Iterable[str] = ()):
        names = tuple(names)
        inst = cls._instances.get(names)
        if inst is not None:
            return inst
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate constant symbols in {names}")
        inst = super().__new__(cls)
        inst.names = names
        inst.ring = PolyRing(names, ZZ, lex) if names else PolyRing((), ZZ, lex)
        inst._index = {n: i for i, n in enumerate(names)}
        inst.zero = RationalCoefficient._make(inst.ring.zero, inst.ring.one, inst)
        inst.one = RationalCoefficient._make(inst.ring.one, inst.ring.one, inst)
        cls._instances[names] = inst
        return inst

    def __reduce__(self):
        return (CoefficientField, (self.names,))

    def __repr__(self):
        return f"CoefficientField({list(self.names)!r})"

    def __contains__(self, name):
        return name in self._index

    def symbol(self, name: str) -> "RationalCoefficient":
        try:
            i = self._index[name]
        except KeyError:
            raise UnboundConstant(f"{name!r} is not a constant of {self!r}") from None
        return RationalCoefficient._make(self.ring.gens[i], self.ring.one, self)

    def __call__(self, value) -> "RationalCoefficient":
        if isinstance(value, RationalCoefficient):
            if value.field is self:
                return value
            return self.embed(value)
        if isinstance(value, PolyElement):
            return RationalCoefficient._make(value, self.ring.one, self)
        if isinstance(value, int):
            return RationalCoefficient._make(self.ring(value), self.ring.one, self)
        if isinstance(value, Rational):
            value = Fraction(value)
            return RationalCoefficient._make(
                self.ring(value.numerator), self.ring(value.denominator), self
            )
        if isinstance(value, str):
            return self.symbol(value)
        raise TypeError(f"cannot coerce {value!r} into {self!r}")

    def embed(self, value: "RationalCoefficient") -> "RationalCoefficient":
        """Map a coefficient into this field; its used symbols must exist here."""
        src = value.field
        if src is self:
            return value
        missing = sorted(n for n in value.symbols() if n not in self._index)
        if missing:
            raise UnboundConstant(f"constants {missing} are not declared in {self!r}")
        return RationalCoefficient._make(
            self._remap(value.num, src), self._remap(value.den, src), self
        )

    def _remap(self, poly, src):
        terms = {}
        for monom, c in poly.items():
            exps = [0] * len(self.names)
            for name, e in zip(src.names, monom):
                if e:
                    exps[self._index[name]] = e
            terms[tuple(exps)] = c
        return self.ring.from_dict(terms) if terms else self.ring.zero

    def poly_from_terms(self, terms: Mapping[tuple, int]) -> ConstPolynomial:
        return self.ring.from_dict(dict(terms)) if terms else self.ring.zero

    def union(self, other: "CoefficientField") -> "CoefficientField":
        names = list(self.names)
        names += [n for n in other.names if n not in self._index]
        return CoefficientField(names)


class RationalCoefficient:
    """Canonical quotient num/den of coprime integer polynomials.

    The denominator has a positive leading coefficient and the zero element
    is 0/1, so two coefficients are equal iff their parts are identical.
    Instances are immutable.
    """

    __slots__ = ("num", "den", "field", "_hash")

    @classmethod
    def _make(cls, num, den, field):
        self = object.__new__(cls)
        self.num = num
        self.den = den
        self.field = field
        self._hash = None
        return self

    def __new__(cls, num, den=None, field: CoefficientField | None = None):
        if field is None:
            raise TypeError("a CoefficientField is required")
        num = field.ring(num) if not isinstance(num, PolyElement) else num
        den = field.ring.one if den is None else den
        den = field.ring(den) if not isinstance(den, PolyElement) else den
        return canonicalize(num, den, field)

    # -- helpers --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, RationalCoefficient):
            if other.field is self.field:
                return other
            return self.field(other)
        if isinstance(other, (int, Rational)):
            return self.field(other)
        return NotImplemented

    @property
    def is_zero(self) -> bool:
        return not self.num

    @property
    def is_one(self) -> bool:
        return self.num.is_one and self.den.is_one

    @property
    def is_polynomial(self) -> bool:
        return self.den.is_one

    @property
    def is_rational(self) -> bool:
        """True when no constant symbol occurs."""
        return self.num.is_ground and self.den.is_ground

    def to_fraction(self) -> Fraction:
        if not self.is_rational:
            raise ValueError(f"{self} is not a rational number")
        return Fraction(int(self.num.LC if self.num else 0), int(self.den.LC))

    def symbols(self) -> set:
        used = set()
        for poly in (self.num, self.den):
            for monom in poly.itermonoms():
                used.update(n for n, e in zip(self.field.names, monom) if e)
        return used

    # -- arithmetic -----------------------------------------------------

    def __neg__(self):
        return RationalCoefficient._make(-self.num, self.den, self.field)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.den.is_one and other.den.is_one:
            return RationalCoefficient._make(self.num + other.num, self.den, self.field)
        if self.den == other.den:
            return canonicalize(self.num + other.num, self.den, self.field)
        return canonicalize(
            self.num * other.den + other.num * self.den, self.den * other.den, self.field
        )

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.den.is_one and other.den.is_one:
            return RationalCoefficient._make(self.num * other.num, self.den, self.field)
        # cross-cancel before multiplying keeps the operands small
        g1, a, d = self.num.cofactors(other.den)
        g2, c, b = other.num.cofactors(self.den)
        num, den = a * c, b * d
        if den.LC < 0:
            num, den = -num, -den
        return RationalCoefficient._make(num, den, self.field)

    __rmul__ = __mul__

    def inverse(self):
        if not self.num:
            raise DivisionByZero("inverse of zero coefficient")
        num, den = self.den, self.num
        if den.LC < 0:
            num, den = -num, -den
        return RationalCoefficient._make(num, den, self.field)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        return RationalCoefficient._make(self.num**k, self.den**k, self.field)

    # -- comparison -----------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, RationalCoefficient):
            if other.field is not self.field:
                try:
                    other = self.field(other)
                except UnboundConstant:
                    return False
            return self.num == other.num and self.den == other.den
        if isinstance(other, (int, Rational)):
            return self == self.field(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            if self.is_rational:
                self._hash = hash(self.to_fraction())
            else:
                self._hash = hash((frozenset(self.num.items()), frozenset(self.den.items())))
        return self._hash

    def __bool__(self):
        return bool(self.num)

    # -- evaluation -----------------------------------------------------

    def evaluate(self, assignment: Mapping[str, Fraction]) -> Fraction:
        return evaluate_constants(self, assignment)

    def substitute(self, assignment: Mapping[str, Fraction]) -> "RationalCoefficient":
        """Partially evaluate: replace some symbols by rationals."""
        num_terms, num_scale = _subs_poly(self.num, self.field, assignment)
        den_terms, den_scale = _subs_poly(self.den, self.field, assignment)
        if not den_terms:
            raise EvaluationSingular(f"denominator of {self} vanishes under {dict(assignment)}")
        num = self.field.poly_from_terms(num_terms)
        den = self.field.poly_from_terms(den_terms)
        # value = (num/num_scale) / (den/den_scale)
        return canonicalize(num * den_scale, den * num_scale, self.field)

    # -- rendering ------------------------------------------------------

    def __str__(self):
        num = render_const_poly(self.num, self.field.names)
        if self.den.is_one:
            return num
        if len(self.num) > 1:
            num = f"({num})"
        den = render_const_poly(self.den, self.field.names)
        if self.den.is_ground or den in self.field.names:
            return f"{num}/{den}"
        return f"{num}/({den})"

    def __repr__(self):
        return f"RationalCoefficient({self})"

    def latex(self) -> str:
        num = render_const_poly(self.num, self.field.names, latex=True)
        if self.den.is_one:
            return num
        den = render_const_poly(self.den, self.field.names, latex=True)
        return rf"\frac{{{num}}}{{{den}}}"


def canonicalize(num: ConstPolynomial, den: ConstPolynomial, field: CoefficientField) -> RationalCoefficient:
    """Reduce num/den to lowest terms with a positive leading denominator."""
    if not den:
        raise DivisionByZero("zero denominator")
    if not num:
        return field.zero
    if not den.is_one:
        _, num, den = num.cofactors(den)
        if den.LC < 0:
            num, den = -num, -den
    return RationalCoefficient._make(num, den, field)


def field_arith(op: str, a: RationalCoefficient, b: RationalCoefficient | None = None) -> RationalCoefficient:
    if op == "neg":
        return -a
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if isinstance(b, RationalCoefficient) and b.is_zero or b == 0:
            raise DivisionByZero("division by zero coefficient")
        return a / b
    raise ValueError(f"unknown field operation {op!r}")


def _eval_poly(poly, field, assignment):
    total = Fraction(0)
    names = field.names
    for monom, c in poly.items():
        term = Fraction(int(c))
        for name, e in zip(names, monom):
            if e:
                try:
                    v = assignment[name]
                except KeyError:
                    raise UnboundConstant(f"no value for constant {name!r}") from None
                term *= Fraction(v) ** e
        total += term
    return total


def evaluate_constants(a: RationalCoefficient, assignment: Mapping[str, Fraction]) -> Fraction:
    """Exact value of a coefficient under a rational assignment of all its symbols."""
    den = _eval_poly(a.den, a.field, assignment)
    num = _eval_poly(a.num, a.field, assignment)
    if den == 0:
        raise EvaluationSingular(f"denominator of {a} vanishes under the assignment")
    return num / den


def _subs_poly(poly, field, assignment):
    """Substitute some symbols; return integer terms plus the common scale."""
    acc: dict = {}
    for monom, c in poly.items():
        coef = Fraction(int(c))
        exps = list(monom)
        for i, name in enumerate(field.names):
            if exps[i] and name in assignment:
                coef *= Fraction(assignment[name]) ** exps[i]
                exps[i] = 0
        key = tuple(exps)
        acc[key] = acc.get(key, 0) + coef
    acc = {k: v for k, v in acc.items() if v}
    scale = reduce(lcm, (v.denominator for v in acc.values()), 1)
    return {k: int(v * scale) for k, v in acc.items()}, scale


def primitive_factor(coeffs: Iterable[RationalCoefficient]) -> RationalCoefficient:
    """Factor f such that every f*c is a polynomial and their gcd is 1."""
    coeffs = [c for c in coeffs if c]
    if not coeffs:
        raise DivisionByZero("no nonzero coefficient")
    field = coeffs[0].field
    den = coeffs[0].den
    for c in coeffs[1:]:
        if not c.den.is_one and c.den != den:
            den = den.lcm(c.den)
    nums = [c.num * den.exquo(c.den) if not c.den.is_one else c.num * den for c in coeffs]
    g = nums[0]
    for n in nums[1:]:
        if g.is_one or (g.is_ground and abs(g.LC) == 1):
            break
        g = g.gcd(n)
    return canonicalize(den, g, field)


def _render_monom(monom, names, latex=False):
    parts = []
    for name, e in zip(names, monom):
        if not e:
            continue
        sym = _latex_symbol(name) if latex else name
        if e == 1:
            parts.append(sym)
        else:
            parts.append(f"{sym}^{{{e}}}" if latex else f"{sym}^{e}")
    return (" " if latex else "*").join(parts)


def _latex_symbol(name: str) -> str:
    if "_" in name:
        head, tail = name.split("_", 1)
        return f"{head}_{{{tail.replace('_', '')}}}"
    return name


def render_const_poly(poly: ConstPolynomial, names, latex=False) -> str:
    """Deterministic text (or LaTeX) form, terms in lex order of the ring."""
    if not poly:
        return "0"
    out = []
    for monom, c in poly.terms():
        c = int(c)
        body = _render_monom(monom, names, latex)
        mag = abs(c)
        if body:
            text = body if mag == 1 else f"{mag}{' ' if latex else '*'}{body}"
        else:
            text = str(mag)
        if not out:
            out.append(text if c > 0 else f"-{text}")
        else:
            out.append(f"+ {text}" if c > 0 else f"- {text}")
    return " ".join(out)
