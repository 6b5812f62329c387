"""Differential polynomials in one derivation d/dt.

Indeterminates are derivative terms ``x^(k)`` of unknown functions and
excitations; coefficients live in a :class:`CoefficientField`, so constants
differentiate to zero.  Rankings are elimination rankings: every derivative
of a higher-listed function outranks every derivative of a lower-listed one.
"""

from __future__ import annotations

import enum
from fractions import Fraction
from math import comb
from numbers import Rational
from typing import Iterable, Mapping, NamedTuple, Sequence

from .coeffield import CoefficientField, RationalCoefficient, evaluate_constants, primitive_factor
from .errors import DivisionByZero, NoLeader, UnknownVariable

__all__ = [
    "DerivativeTerm",
    "DiffPolynomial",
    "Ranking",
    "LeaderParts",
    "Cmp",
    "differentiate",
    "poly_arith",
    "compare_rank",
    "leader_parts",
    "substitute",
]


class DerivativeTerm(NamedTuple):
    function: str
    order: int = 0

    def __str__(self):
        if self.order == 0:
            return self.function
        if self.order <= 2:
            return self.function + "'" * self.order
        return f"{self.function}^({self.order})"

    def derivative(self, k: int = 1) -> "DerivativeTerm":
        return DerivativeTerm(self.function, self.order + k)

    def latex(self) -> str:
        name = self.function
        if "_" in name:
            head, tail = name.split("_", 1)
            name = f"{head}_{{{tail}}}"
        if self.order == 0:
            return name
        if self.order <= 3:
            return {1: r"\dot{%s}", 2: r"\ddot{%s}", 3: r"\dddot{%s}"}[self.order] % name
        return f"{name}^{{({self.order})}}"


# A monomial is a sorted tuple of (DerivativeTerm, exponent) pairs; () is 1.
Monomial = tuple


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for t, e in b:
        d[t] = d.get(t, 0) + e
    return tuple(sorted(d.items()))


def _mono_pow(a: Monomial, k: int) -> Monomial:
    return tuple((t, e * k) for t, e in a)


class DiffPolynomial:
    """Sparse polynomial: mapping Monomial -> nonzero RationalCoefficient."""

    __slots__ = ("terms", "field", "_hash")

    def __init__(self, terms: Mapping | None = None, field: CoefficientField | None = None):
        if field is None:
            raise TypeError("a CoefficientField is required")
        self.field = field
        self.terms = {m: c for m, c in (terms or {}).items() if c}
        self._hash = None

    @classmethod
    def _trusted(cls, terms, field):
        self = object.__new__(cls)
        self.terms = terms
        self.field = field
        self._hash = None
        return self

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, field):
        return cls._trusted({}, field)

    @classmethod
    def constant(cls, value, field):
        c = field(value)
        return cls._trusted({(): c} if c else {}, field)

    @classmethod
    def var(cls, function: str, order: int = 0, field: CoefficientField | None = None):
        field = field if field is not None else CoefficientField(())
        return cls._trusted({((DerivativeTerm(function, order), 1),): field.one}, field)

    @classmethod
    def from_term(cls, term: DerivativeTerm, field, exp: int = 1):
        return cls._trusted({((term, exp),): field.one}, field)

    # -- coercion -------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, DiffPolynomial):
            if other.field is self.field:
                return self, other
            f = self.field.union(other.field)
            return self.embed(f), other.embed(f)
        if isinstance(other, (int, Rational, RationalCoefficient)):
            if isinstance(other, RationalCoefficient) and other.field is not self.field:
                f = self.field.union(other.field)
                return self.embed(f), DiffPolynomial.constant(f(other), f)
            return self, DiffPolynomial.constant(other, self.field)
        return None, NotImplemented

    def embed(self, field: CoefficientField) -> "DiffPolynomial":
        if field is self.field:
            return self
        return DiffPolynomial._trusted({m: field(c) for m, c in self.terms.items()}, field)

    # -- queries --------------------------------------------------------

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    @property
    def is_constant(self) -> bool:
        """True if no derivative term occurs (the zero polynomial included)."""
        return all(not m for m in self.terms)

    def constant_value(self) -> RationalCoefficient:
        if not self.is_constant:
            raise ValueError(f"{self} is not coefficient-only")
        return self.terms.get((), self.field.zero)

    def indeterminates(self) -> set:
        out = set()
        for m in self.terms:
            out.update(t for t, _ in m)
        return out

    def functions(self) -> set:
        return {t.function for t in self.indeterminates()}

    def max_order(self, function: str | None = None) -> int:
        orders = [t.order for t in self.indeterminates() if function is None or t.function == function]
        return max(orders, default=-1)

    def degree(self, term: DerivativeTerm) -> int:
        best = 0
        for m in self.terms:
            for t, e in m:
                if t == term and e > best:
                    best = e
        return best

    def coefficients(self, term: DerivativeTerm) -> dict:
        """Decompose as sum_d coeff_d * term^d; returns {d: coeff_d}."""
        parts: dict = {}
        for m, c in self.terms.items():
            d = 0
            rest = []
            for t, e in m:
                if t == term:
                    d = e
                else:
                    rest.append((t, e))
            parts.setdefault(d, {})[tuple(rest)] = c
        return {d: DiffPolynomial._trusted(tm, self.field) for d, tm in parts.items()}

    def coefficient(self, term: DerivativeTerm, d: int) -> "DiffPolynomial":
        return self.coefficients(term).get(d, DiffPolynomial.zero(self.field))

    def size(self) -> int:
        """Number of summands once coefficient numerators are expanded too."""
        return sum(len(c.num) for c in self.terms.values())

    # -- arithmetic -----------------------------------------------------

    def __neg__(self):
        return DiffPolynomial._trusted({m: -c for m, c in self.terms.items()}, self.field)

    def __add__(self, other):
        a, b = self._coerce(other)
        if b is NotImplemented:
            return b
        out = dict(a.terms)
        for m, c in b.terms.items():
            if m in out:
                s = out[m] + c
                if s:
                    out[m] = s
                else:
                    del out[m]
            else:
                out[m] = c
        return DiffPolynomial._trusted(out, a.field)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._coerce(other)
        if b is NotImplemented:
            return b
        return a + (-b)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        if b is NotImplemented:
            return b
        return b + (-a)

    def __mul__(self, other):
        if isinstance(other, (int, Rational)) or (
                isinstance(other, RationalCoefficient) and other.field is self.field):
            return self.scale(other)
        a, b = self._coerce(other)
        if b is NotImplemented:
            return b
        if len(a.terms) > len(b.terms):
            a, b = b, a
        out: dict = {}
        for m1, c1 in a.terms.items():
            for m2, c2 in b.terms.items():
                m = _mono_mul(m1, m2)
                c = c1 * c2
                if m in out:
                    s = out[m] + c
                    if s:
                        out[m] = s
                    else:
                        del out[m]
                else:
                    out[m] = c
        return DiffPolynomial._trusted(out, a.field)

    __rmul__ = __mul__

    def scale(self, c) -> "DiffPolynomial":
        c = self.field(c)
        if not c:
            return DiffPolynomial.zero(self.field)
        if c.is_one:
            return self
        return DiffPolynomial._trusted({m: v * c for m, v in self.terms.items()}, self.field)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        if k == 0:
            return DiffPolynomial.constant(1, self.field)
        if len(self.terms) == 1:
            (m, c), = self.terms.items()
            return DiffPolynomial._trusted({_mono_pow(m, k): c**k}, self.field)
        result = DiffPolynomial.constant(1, self.field)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __truediv__(self, other):
        if isinstance(other, DiffPolynomial):
            if not other.is_constant:
                raise TypeError("division by a non-constant differential polynomial")
            other = other.constant_value()
        c = self.field(other) if not isinstance(other, RationalCoefficient) else other
        if not c:
            raise DivisionByZero(f"division of {self} by zero")
        return self * c.inverse()

    def __eq__(self, other):
        if isinstance(other, DiffPolynomial):
            if other.field is not self.field:
                a, b = self._coerce(other)
                return a.terms == b.terms
            return self.terms == other.terms
        if isinstance(other, (int, Rational, RationalCoefficient)):
            return self == DiffPolynomial.constant(other, self.field)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # -- differentiation ------------------------------------------------

    def differentiate(self, k: int = 1) -> "DiffPolynomial":
        p = self
        for _ in range(k):
            p = p._d1()
        return p

    def _d1(self):
        out: dict = {}
        for m, c in self.terms.items():
            for i, (t, e) in enumerate(m):
                dt = t.derivative()
                factors = dict(m)
                if e == 1:
                    del factors[t]
                else:
                    factors[t] = e - 1
                factors[dt] = factors.get(dt, 0) + 1
                nm = tuple(sorted(factors.items()))
                nc = c * e if e != 1 else c
                if nm in out:
                    s = out[nm] + nc
                    if s:
                        out[nm] = s
                    else:
                        del out[nm]
                else:
                    out[nm] = nc
        return DiffPolynomial._trusted(out, self.field)

    def partial(self, term: DerivativeTerm) -> "DiffPolynomial":
        """Formal partial derivative with respect to one derivative term."""
        out: dict = {}
        for m, c in self.terms.items():
            factors = dict(m)
            e = factors.get(term, 0)
            if not e:
                continue
            if e == 1:
                del factors[term]
            else:
                factors[term] = e - 1
            out[tuple(sorted(factors.items()))] = c * e
        return DiffPolynomial._trusted(out, self.field)

    # -- substitution and evaluation ------------------------------------

    def substitute(self, term: DerivativeTerm, replacement: "DiffPolynomial",
                   divisor: "DiffPolynomial | None" = None) -> "DiffPolynomial":
        """Replace term by replacement/divisor and clear the divisor.

        Returns divisor^d * self(term := replacement/divisor) where d is the
        degree of term in self, so the result stays polynomial.
        """
        parts = self.coefficients(term)
        d = max(parts)
        if d == 0:
            return self
        if divisor is None:
            divisor = DiffPolynomial.constant(1, self.field)
        elif not isinstance(divisor, DiffPolynomial):
            divisor = DiffPolynomial.constant(divisor, self.field)
        if not divisor:
            raise DivisionByZero("substitution with zero divisor")
        result = DiffPolynomial.zero(self.field)
        rep_pows = [DiffPolynomial.constant(1, self.field)]
        div_pows = [DiffPolynomial.constant(1, self.field)]
        for _ in range(d):
            rep_pows.append(rep_pows[-1] * replacement)
            div_pows.append(div_pows[-1] * divisor)
        for i, coeff in parts.items():
            result = result + coeff * rep_pows[i] * div_pows[d - i]
        return result

    def evaluate(self, values: Mapping[DerivativeTerm, Fraction],
                 assignment: Mapping[str, Fraction] | None = None) -> Fraction:
        """Exact value at rational points for constants and derivative terms."""
        assignment = assignment or {}
        total = Fraction(0)
        for m, c in self.terms.items():
            v = evaluate_constants(c, assignment)
            for t, e in m:
                try:
                    v *= Fraction(values[t]) ** e
                except KeyError:
                    raise UnknownVariable(f"no value supplied for {t}") from None
            total += v
        return total

    def substitute_constants(self, assignment: Mapping[str, Fraction],
                             field: CoefficientField | None = None) -> "DiffPolynomial":
        """Replace some constant symbols by rationals.

        With ``field`` given, the result is moved into that field, which must
        contain every symbol left over.
        """
        target = field or self.field
        out: dict = {}
        for m, c in self.terms.items():
            v = target(c.substitute(assignment)) if target is not self.field else c.substitute(assignment)
            if v:
                out[m] = v
        return DiffPolynomial._trusted(out, target)

    def subs_terms(self, mapping: Mapping[DerivativeTerm, "DiffPolynomial"]) -> "DiffPolynomial":
        """Simultaneous substitution of derivative terms by polynomials."""
        result = DiffPolynomial.zero(self.field)
        for m, c in self.terms.items():
            acc = DiffPolynomial.constant(c, self.field)
            rest = []
            for t, e in m:
                if t in mapping:
                    acc = acc * mapping[t] ** e
                else:
                    rest.append((t, e))
            if rest:
                acc = acc * DiffPolynomial._trusted({tuple(rest): self.field.one}, self.field)
            result = result + acc
        return result

    # -- normalisation --------------------------------------------------

    def primitive(self) -> tuple:
        """Return (f, f*self) with polynomial coefficients of gcd 1 and a
        positive leading coefficient in the deterministic term order."""
        if not self.terms:
            return self.field.one, self
        f = primitive_factor(self.terms.values())
        p = self.scale(f)
        lead = p.terms[max(p.terms, key=_mono_sort_key)]
        if lead.num.LC < 0:
            f, p = -f, -p
        return f, p

    # -- rendering ------------------------------------------------------

    def sorted_terms(self, ranking: "Ranking | None" = None) -> list:
        if ranking is None:
            key = _mono_sort_key
        else:
            def key(m):
                return tuple(sorted(((ranking.key(t), e) for t, e in m), reverse=True))
        return sorted(self.terms.items(), key=lambda mc: key(mc[0]), reverse=True)

    def render(self, ranking: "Ranking | None" = None) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for m, c in self.sorted_terms(ranking):
            sign, body = _render_term(m, c, ranking)
            if not pieces:
                pieces.append(body if sign > 0 else f"-{body}")
            else:
                pieces.append(f"+ {body}" if sign > 0 else f"- {body}")
        return " ".join(pieces)

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"DiffPolynomial({self.render()})"

    def latex(self, ranking: "Ranking | None" = None) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for m, c in self.sorted_terms(ranking):
            sign, body = _latex_term(m, c, ranking)
            if not pieces:
                pieces.append(body if sign > 0 else f"-{body}")
            else:
                pieces.append(f"+ {body}" if sign > 0 else f"- {body}")
        return " ".join(pieces)


def _mono_sort_key(m):
    return tuple(sorted(((t.function, t.order, e) for t, e in m), reverse=True))


def _ordered_factors(m, ranking):
    if ranking is None:
        return sorted(m, key=lambda te: (te[0].function, te[0].order), reverse=True)
    return sorted(m, key=lambda te: ranking.key(te[0]), reverse=True)


def _render_monomial(m, ranking):
    parts = []
    for t, e in _ordered_factors(m, ranking):
        parts.append(str(t) if e == 1 else f"{t}^{e}")
    return "*".join(parts)


def _render_term(m, c, ranking):
    """Return (sign, text without leading sign)."""
    mono = _render_monomial(m, ranking)
    if c.is_rational:
        v = c.to_fraction()
        sign = 1 if v > 0 else -1
        v = abs(v)
        if not mono:
            return sign, str(v)
        if v == 1:
            return sign, mono
        if v.denominator == 1:
            return sign, f"{v.numerator}*{mono}"
        return sign, f"{v.numerator}/{v.denominator}*{mono}"
    sign = 1
    if len(c.num) == 1 and c.num.LC < 0:
        c, sign = -c, -1
    text = str(c)
    if not mono:
        return sign, text
    if len(c.num) > 1 and c.den.is_one:
        text = f"({text})"
    return sign, f"{text}*{mono}"


def _latex_term(m, c, ranking):
    parts = []
    for t, e in _ordered_factors(m, ranking):
        parts.append(t.latex() if e == 1 else f"{t.latex()}^{{{e}}}")
    mono = " ".join(parts)
    sign = 1
    if len(c.num) == 1 and c.num.LC < 0:
        c, sign = -c, -1
    if c.is_one and mono:
        return sign, mono
    text = c.latex()
    if len(c.num) > 1 and c.den.is_one and mono:
        text = rf"\left({text}\right)"
    return sign, f"{text} {mono}".strip()


class Cmp(enum.IntEnum):
    LT = -1
    EQ = 0
    GT = 1


class Ranking:
    """Elimination ranking from an ordered function list, highest first.

    Excitations are appended after the unknowns and so rank lowest.
    """

    def __init__(self, ordered_vars: Sequence[str], excitations: Sequence[str] = ()):
        self.unknowns = tuple(ordered_vars)
        self.excitations = tuple(excitations)
        self.ordered_vars = self.unknowns + self.excitations
        if len(set(self.ordered_vars)) != len(self.ordered_vars):
            raise ValueError(f"ranking lists a function twice: {self.ordered_vars}")
        n = len(self.ordered_vars)
        self._pos = {v: n - i for i, v in enumerate(self.ordered_vars)}

    def __repr__(self):
        return f"{type(self).__name__}({list(self.unknowns)!r}, excitations={list(self.excitations)!r})"

    def __eq__(self, other):
        return type(self) is type(other) and self.ordered_vars == other.ordered_vars and \
            self.excitations == other.excitations

    def __hash__(self):
        return hash((type(self).__name__, self.ordered_vars, self.excitations))

    def position(self, function: str) -> int:
        try:
            return self._pos[function]
        except KeyError:
            raise UnknownVariable(f"{function!r} is not declared in the ranking") from None

    def key(self, t: DerivativeTerm):
        return (self.position(t.function), t.order)

    def compare(self, u: DerivativeTerm, v: DerivativeTerm) -> Cmp:
        ku, kv = self.key(u), self.key(v)
        return Cmp.LT if ku < kv else Cmp.GT if ku > kv else Cmp.EQ

    def leader(self, p: DiffPolynomial) -> DerivativeTerm:
        terms = p.indeterminates()
        if not terms:
            raise NoLeader(f"{p} has no derivative terms")
        return max(terms, key=self.key)

    def is_excitation(self, function: str) -> bool:
        return function in self.excitations

    def poly_rank(self, p: DiffPolynomial):
        """Sort key for polynomials: (leader key, degree); constants lowest."""
        if p.is_constant:
            return (0, 0), 0
        u = self.leader(p)
        return self.key(u), p.degree(u)


class LeaderParts(NamedTuple):
    leader: DerivativeTerm
    degree: int
    initial: DiffPolynomial
    separant: DiffPolynomial


def leader_parts(p: DiffPolynomial, r: Ranking) -> LeaderParts:
    u = r.leader(p)
    parts = p.coefficients(u)
    d = max(parts)
    return LeaderParts(u, d, parts[d], p.partial(u))


def differentiate(p: DiffPolynomial, k: int = 1) -> DiffPolynomial:
    return p.differentiate(k)


def compare_rank(r: Ranking, u: DerivativeTerm, v: DerivativeTerm) -> Cmp:
    return r.compare(u, v)


def substitute(p, t, replacement, divisor=None):
    return p.substitute(t, replacement, divisor)


def poly_arith(op: str, p: DiffPolynomial, q) -> DiffPolynomial:
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    if op == "scale":
        return p.scale(q)
    raise ValueError(f"unknown operation {op!r}")


def leibniz_derivative(p: DiffPolynomial, q: DiffPolynomial, k: int) -> DiffPolynomial:
    """k-th derivative of a product via the general Leibniz formula."""
    total = DiffPolynomial.zero(p.field)
    for i in range(k + 1):
        total = total + (p.differentiate(i) * q.differentiate(k - i)).scale(comb(k, i))
    return total


def collect_functions(polys: Iterable[DiffPolynomial]) -> set:
    out = set()
    for p in polys:
        out |= p.functions()
    return out
