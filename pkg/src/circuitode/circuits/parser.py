"""Parser and printer for the equation-system text format.

Example::

    # OTA
    constants C, g_m3, g_m4;
    excitations e1;
    unknowns x1, x2, x3;
    ranking x1 > x2 > x3;
    target x3;
    C*x1' - C*x2' + g_m4*x1 - g_m4*x2 - x3 = 0;
    -C*x1' + C*x2' + g_m3*x1 = 0;
    x1 = e1;

Derivatives are written ``x'``, ``x''`` or ``x^(k)``; powers use ``^`` or
``**`` with a nonnegative integer exponent.  Division is allowed by constant
expressions only.  Calls to exp, arctan, tan and log are algebraized on the
fly, see :mod:`circuitode.transcend`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from ..coeffield import CoefficientField
from ..diffpoly import DerivativeTerm, DiffPolynomial, Ranking
from ..errors import (
    DivisionByZero,
    DuplicateDeclaration,
    NestedTranscendental,
    ParseError,
    UndeclaredSymbol,
    UnsupportedTranscendental,
)
from ..transcend import RULES, TranscendentalCall, algebraize
from .system import EquationSystem

__all__ = ["parse_system", "parse_relation", "render_system", "tokenize", "Token"]

KEYWORDS = ("constants", "excitations", "unknowns", "ranking", "target")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^'(),;=>])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # number, ident, op, eof
    text: str
    line: int
    column: int


def tokenize(text: str) -> list:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "newline":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _statements(tokens):
    """Split the token stream at semicolons."""
    stmt = []
    for tok in tokens:
        if tok.kind == "eof":
            if stmt:
                raise ParseError("missing ';' at end of statement", tok.line, tok.column)
            break
        if tok.text == ";" and tok.kind == "op":
            if not stmt:
                raise ParseError("empty statement", tok.line, tok.column)
            stmt.append(tok)
            yield stmt
            stmt = []
        else:
            stmt.append(tok)


class _Declarations:
    def __init__(self):
        self.constants: list = []
        self.excitations: list = []
        self.unknowns: list = []
        self.ranking: list | None = None
        self.target: Token | None = None
        self.kind: dict = {}

    def declare(self, kind, tok):
        if tok.text in self.kind:
            raise DuplicateDeclaration(
                f"{tok.text!r} is already declared as {self.kind[tok.text]}", tok.line, tok.column
            )
        if tok.text in KEYWORDS or tok.text in RULES:
            raise ParseError(f"{tok.text!r} is reserved", tok.line, tok.column)
        self.kind[tok.text] = kind
        getattr(self, kind).append(tok.text)


def _name_list(stmt, sep):
    """Identifiers separated by ``sep`` between the keyword and the ';'."""
    body = stmt[1:-1]
    if not body:
        raise ParseError(f"{stmt[0].text} needs at least one name", stmt[0].line, stmt[0].column)
    names = []
    for i, tok in enumerate(body):
        if i % 2 == 0:
            if tok.kind != "ident":
                raise ParseError(f"expected a name, got {tok.text!r}", tok.line, tok.column)
            names.append(tok)
        elif tok.text != sep:
            raise ParseError(f"expected {sep!r}, got {tok.text!r}", tok.line, tok.column)
    if len(body) % 2 == 0:
        tok = body[-1]
        raise ParseError(f"dangling {tok.text!r}", tok.line, tok.column)
    return names


class _ExprParser:
    """Recursive descent over one equation, evaluating as it goes."""

    def __init__(self, tokens, decls: _Declarations, field: CoefficientField, calls: list):
        self.toks = tokens
        self.i = 0
        self.decls = decls
        self.field = field
        self.calls = calls
        self.call_depth = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg, tok=None, cls=ParseError):
        tok = tok or self.tok
        return cls(msg, tok.line, tok.column)

    def take(self, text=None, kind=None) -> Token:
        tok = self.tok
        if (text is not None and tok.text != text) or (kind is not None and tok.kind != kind):
            want = repr(text) if text is not None else kind
            got = "end of statement" if tok.text == ";" else repr(tok.text)
            raise self.error(f"expected {want}, got {got}")
        self.i += 1
        return tok

    def at(self, *texts) -> bool:
        return self.tok.kind == "op" and self.tok.text in texts

    def expression(self) -> DiffPolynomial:
        acc = self.product()
        while self.at("+", "-"):
            op = self.take().text
            rhs = self.product()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def product(self) -> DiffPolynomial:
        acc = self.unary()
        while self.at("*", "/"):
            op = self.take()
            rhs = self.unary()
            if op.text == "*":
                acc = acc * rhs
                continue
            if not rhs.is_constant:
                raise self.error("division is only allowed by constant expressions", op)
            try:
                acc = acc / rhs
            except DivisionByZero:
                raise self.error("division by zero", op) from None
        return acc

    def unary(self) -> DiffPolynomial:
        if self.at("-"):
            self.take()
            return -self.unary()
        if self.at("+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> DiffPolynomial:
        base = self.primary()
        if self.at("^", "**"):
            self.take()
            if self.at("-"):
                raise self.error("negative exponents are not supported")
            if self.at("("):
                self.take("(")
                e = self.integer()
                self.take(")")
            else:
                e = self.integer()
            return base ** e
        return base

    def integer(self) -> int:
        tok = self.take(kind="number")
        if not tok.text.isdigit():
            raise self.error("expected a nonnegative integer", tok)
        return int(tok.text)

    def primary(self) -> DiffPolynomial:
        tok = self.tok
        if tok.kind == "number":
            self.take()
            return DiffPolynomial.constant(Fraction(tok.text), self.field)
        if self.at("("):
            self.take("(")
            inner = self.expression()
            self.take(")")
            return inner
        if tok.kind != "ident":
            got = "end of statement" if tok.text in (";", "") else repr(tok.text)
            raise self.error(f"expected an expression, got {got}")
        self.take()
        if self.at("("):
            return self.call(tok)
        kind = self.decls.kind.get(tok.text)
        if kind is None:
            raise self.error(f"undeclared symbol {tok.text!r}", tok, UndeclaredSymbol)
        if kind == "constants":
            if self.at("'"):
                raise self.error(f"constant {tok.text!r} cannot be differentiated")
            return DiffPolynomial.constant(self.field.symbol(tok.text), self.field)
        order = 0
        while self.at("'"):
            self.take()
            order += 1
        if order == 0 and self.at("^") and self.toks[self.i + 1].text == "(":
            self.take("^")
            self.take("(")
            order = self.integer()
            self.take(")")
        return DiffPolynomial.var(tok.text, order, self.field)

    def call(self, name: Token) -> DiffPolynomial:
        if name.text not in RULES:
            raise self.error(f"unsupported function {name.text!r}", name, UnsupportedTranscendental)
        if self.call_depth:
            raise NestedTranscendental(
                f"line {name.line}, column {name.column}: nested call to {name.text!r}"
            )
        self.take("(")
        self.call_depth += 1
        arg = self.expression()
        self.call_depth -= 1
        self.take(")")
        placeholder = DerivativeTerm(f"{name.text}#{len(self.calls)}", 0)
        self.calls.append(TranscendentalCall(placeholder, name.text, arg))
        return DiffPolynomial.from_term(placeholder, self.field)


def _parse_equation(stmt, decls, field):
    """Return (lhs - rhs, calls) for one equation statement."""
    calls: list = []
    p = _ExprParser(stmt, decls, field, calls)
    lhs = p.expression()
    p.take("=")
    rhs = p.expression()
    if p.tok.text != ";":
        raise p.error(f"unexpected {p.tok.text!r}")
    return lhs - rhs, calls


def _split(text):
    decls = _Declarations()
    equations = []
    for stmt in _statements(tokenize(text)):
        head = stmt[0]
        if head.kind == "ident" and head.text in KEYWORDS and \
                (len(stmt) < 2 or stmt[1].text not in ("=", "'", "^", "(")):
            if head.text == "ranking":
                if decls.ranking is not None:
                    raise DuplicateDeclaration("ranking declared twice", head.line, head.column)
                decls.ranking = _name_list(stmt, ">")
            elif head.text == "target":
                names = _name_list(stmt, ",")
                if len(names) != 1 or decls.target is not None:
                    raise ParseError("exactly one target may be declared", head.line, head.column)
                decls.target = names[0]
            else:
                for tok in _name_list(stmt, ","):
                    decls.declare(head.text, tok)
        else:
            equations.append(stmt)
    return decls, equations


def _build_ranking(decls) -> Ranking:
    if decls.ranking is None:
        return Ranking(decls.unknowns, decls.excitations)
    seen = set()
    for tok in decls.ranking:
        if tok.text not in decls.kind or decls.kind[tok.text] == "constants":
            raise UndeclaredSymbol(f"{tok.text!r} in ranking is not a declared function",
                                   tok.line, tok.column)
        if tok.text in seen:
            raise DuplicateDeclaration(f"{tok.text!r} ranked twice", tok.line, tok.column)
        seen.add(tok.text)
    names = [t.text for t in decls.ranking]
    unk = [n for n in names if decls.kind[n] == "unknowns"]
    exc = [n for n in names if decls.kind[n] == "excitations"]
    if names != unk + exc:
        tok = decls.ranking[0]
        raise ParseError("excitations must be ranked below every unknown", tok.line, tok.column)
    if set(unk) != set(decls.unknowns):
        missing = sorted(set(decls.unknowns) - set(unk))
        tok = decls.ranking[0]
        raise ParseError(f"ranking misses unknowns {missing}", tok.line, tok.column)
    exc += [e for e in decls.excitations if e not in exc]
    return Ranking(unk, exc)


def parse_system(text: str, name: str = "") -> EquationSystem:
    """Parse DSL text into an :class:`EquationSystem`."""
    decls, statements = _split(text)
    if not decls.unknowns:
        raise ParseError("no unknowns declared", 1, 1)
    if not statements:
        raise ParseError("no equations given", 1, 1)
    field = CoefficientField(tuple(decls.constants))
    ranking = _build_ranking(decls)
    target = ranking.unknowns[-1]
    if decls.target is not None:
        tok = decls.target
        if decls.kind.get(tok.text) != "unknowns":
            raise UndeclaredSymbol(f"target {tok.text!r} is not a declared unknown", tok.line, tok.column)
        target = tok.text
    equations, constraints = [], []
    for stmt in statements:
        poly, calls = _parse_equation(stmt, decls, field)
        if not poly:
            raise ParseError("equation is identically zero", stmt[0].line, stmt[0].column)
        try:
            result = algebraize(poly, calls, equation_index=len(equations))
        except UnsupportedTranscendental as exc:
            if isinstance(exc, ParseError):
                raise
            raise type(exc)(f"line {stmt[0].line}: {exc}") from None
        equations.append(result.polynomial)
        if result.constraint is not None:
            constraints.append(result.constraint)
    return EquationSystem(
        constants=tuple(decls.constants),
        unknowns=tuple(decls.unknowns),
        excitations=tuple(decls.excitations),
        equations=tuple(equations),
        constraints=tuple(constraints),
        suggested_ranking=ranking,
        default_target=target,
        name=name,
        field=field,
    )


def parse_relation(text: str, system: EquationSystem) -> DiffPolynomial:
    """Parse one polynomial relation ``lhs = rhs`` against a system's declarations.

    A trailing ';' is optional.  Transcendental calls are rejected.
    """
    decls = _Declarations()
    for kind in ("constants", "excitations", "unknowns"):
        for n in getattr(system, kind):
            decls.kind[n] = kind
    toks = tokenize(text)
    if toks[-2].text != ";":
        toks.insert(-1, Token("op", ";", toks[-1].line, toks[-1].column))
    stmts = list(_statements(toks))
    if len(stmts) != 1:
        raise ParseError("expected exactly one relation", 1, 1)
    poly, calls = _parse_equation(stmts[0], decls, system.field)
    if calls:
        raise UnsupportedTranscendental("expected a polynomial relation")
    return poly


def render_system(system: EquationSystem) -> str:
    r = system.suggested_ranking
    lines = []
    if system.name:
        lines.append(f"# {system.name}")
    if system.constants:
        lines.append(f"constants {', '.join(system.constants)};")
    if system.excitations:
        lines.append(f"excitations {', '.join(system.excitations)};")
    lines.append(f"unknowns {', '.join(system.unknowns)};")
    lines.append(f"ranking {' > '.join(r.ordered_vars)};")
    lines.append(f"target {system.default_target};")
    for i, eq in enumerate(system.equations):
        c = system.constraint_for(i)
        lines.append((c.render(r) if c is not None else f"{eq.render(r)} = 0") + ";")
    return "\n".join(lines) + "\n"
