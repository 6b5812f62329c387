"""Single ODEs from linear state and semistate systems.

For x' = A x + e with n states, the n equations and their derivatives up to
order n-2, together with the (n-1)-th derivative of the target's own
equation, form a linear system in the n^2 + 1 derivative terms.  With the
target's derivatives in the trailing columns, Gaussian elimination leaves a
row that only mentions the target: the sought ODE.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .coeffield import CoefficientField, RationalCoefficient
from .diffpoly import DerivativeTerm, DiffPolynomial, Ranking
from .errors import BudgetExceeded, NoRelationFound, UnknownVariable
from .nonlinear_elim import diff_eliminate, proportional

__all__ = [
    "LinearStateSystem",
    "SemistateSystem",
    "LinearOde",
    "DerivedSystem",
    "Triangularization",
    "build_derived_system",
    "gaussian_triangularize",
    "state_elim",
    "semistate_elim",
]


def _common_field(matrices, polys) -> CoefficientField:
    fld = CoefficientField(())
    for M in matrices:
        for row in M:
            for c in row:
                if isinstance(c, RationalCoefficient):
                    fld = fld.union(c.field)
    for p in polys:
        fld = fld.union(p.field)
    return fld


def _coerce_matrix(M, fld, n, what):
    if len(M) != n or any(len(row) != n for row in M):
        raise ValueError(f"{what} must be {n}x{n}")
    return tuple(tuple(fld(c) if not isinstance(c, RationalCoefficient) else fld.embed(c)
                       for c in row) for row in M)


def _coerce_forcing(forcing, fld, n, names):
    if forcing is None:
        forcing = [0] * n
    if len(forcing) != n:
        raise ValueError(f"forcing needs {n} entries")
    out = []
    for f in forcing:
        p = f.embed(fld) if isinstance(f, DiffPolynomial) else DiffPolynomial.constant(f, fld)
        bad = p.functions() & set(names)
        if bad:
            raise ValueError(f"forcing must not contain state variables, found {sorted(bad)}")
        out.append(p)
    return tuple(out)


class LinearStateSystem:
    """x' = A x + forcing, with forcing a vector of polynomials in excitations."""

    def __init__(self, A: Sequence[Sequence], forcing: Sequence | None = None,
                 state_names: Sequence[str] | None = None):
        n = len(A)
        names = tuple(state_names or (f"x{i + 1}" for i in range(n)))
        if len(names) != n or len(set(names)) != n:
            raise ValueError("state_names must be n distinct identifiers")
        polys = [f for f in (forcing or ()) if isinstance(f, DiffPolynomial)]
        self.field = _common_field([A], polys)
        self.A = _coerce_matrix(A, self.field, n, "A")
        self.forcing = _coerce_forcing(forcing, self.field, n, names)
        self.state_names = names

    @property
    def n(self) -> int:
        return len(self.state_names)

    def excitations(self) -> tuple:
        fs = set()
        for p in self.forcing:
            fs |= p.functions()
        return tuple(sorted(fs))

    def index(self, name: str) -> int:
        try:
            return self.state_names.index(name)
        except ValueError:
            raise UnknownVariable(f"{name!r} is not a state of this system") from None

    def equations(self) -> list:
        """The system as differential polynomials x_i' - (A x)_i - e_i."""
        fld = self.field
        out = []
        for i, xi in enumerate(self.state_names):
            p = DiffPolynomial.var(xi, 1, fld) - self.forcing[i]
            for j, xj in enumerate(self.state_names):
                if self.A[i][j]:
                    p = p - DiffPolynomial.var(xj, 0, fld).scale(self.A[i][j])
            out.append(p)
        return out


class SemistateSystem(LinearStateSystem):
    """E x' = A x + forcing with E possibly singular."""

    def __init__(self, E: Sequence[Sequence], A: Sequence[Sequence], forcing: Sequence | None = None,
                 state_names: Sequence[str] | None = None):
        n = len(A)
        polys = [f for f in (forcing or ()) if isinstance(f, DiffPolynomial)]
        super().__init__(A, forcing, state_names)
        self.field = _common_field([E, A], polys)
        self.E = _coerce_matrix(E, self.field, n, "E")
        self.A = _coerce_matrix(A, self.field, n, "A")
        self.forcing = _coerce_forcing(forcing, self.field, n, self.state_names)

    def is_standard(self) -> bool:
        one, zero = self.field.one, self.field.zero
        return all(self.E[i][j] == (one if i == j else zero)
                   for i in range(self.n) for j in range(self.n))

    def equations(self) -> list:
        fld = self.field
        out = []
        for i in range(self.n):
            p = -self.forcing[i]
            for j, xj in enumerate(self.state_names):
                if self.E[i][j]:
                    p = p + DiffPolynomial.var(xj, 1, fld).scale(self.E[i][j])
                if self.A[i][j]:
                    p = p - DiffPolynomial.var(xj, 0, fld).scale(self.A[i][j])
            out.append(p)
        return out


@dataclass(frozen=True)
class LinearOde:
    """sum_k coefficients[k] * target^(k) = rhs."""

    coefficients: tuple
    rhs: DiffPolynomial
    target: str

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def as_polynomial(self) -> DiffPolynomial:
        fld = self.rhs.field
        p = -self.rhs
        for k, c in enumerate(self.coefficients):
            if c:
                p = p + DiffPolynomial.var(self.target, k, fld).scale(c)
        return p

    def characteristic(self) -> list:
        """Coefficients c_0..c_m of the characteristic polynomial in s."""
        return list(self.coefficients)

    def equivalent(self, other: "LinearOde") -> bool:
        return self.target == other.target and proportional(self.as_polynomial(), other.as_polynomial())

    def render(self) -> str:
        fld = self.rhs.field
        lhs = DiffPolynomial.zero(fld)
        for k, c in enumerate(self.coefficients):
            if c:
                lhs = lhs + DiffPolynomial.var(self.target, k, fld).scale(c)
        r = Ranking([self.target], sorted(self.rhs.functions()))
        return f"{lhs.render(r)} = {self.rhs.render(r)}"

    def __str__(self):
        return self.render()


def _make_ode(poly: DiffPolynomial, target: str) -> LinearOde:
    _, poly = poly.primitive()
    fld = poly.field
    m = poly.max_order(target)
    coeffs = []
    rest = poly
    for k in range(m + 1):
        t = DerivativeTerm(target, k)
        c = poly.coefficient(t, 1)
        if c.indeterminates():
            raise NoRelationFound(f"relation is not linear in {target}: {poly}")
        coeffs.append(c.constant_value() if c else fld.zero)
        rest = rest - DiffPolynomial.from_term(t, fld).scale(coeffs[-1]) if c else rest
    if target in rest.functions():
        raise NoRelationFound(f"relation is not linear in {target}: {poly}")
    return LinearOde(tuple(coeffs), -rest, target)


@dataclass(frozen=True)
class DerivedSystem:
    matrix: tuple
    rhs: tuple
    columns: tuple

    @property
    def shape(self) -> tuple:
        return len(self.matrix), len(self.columns)


def build_derived_system(s: LinearStateSystem, target: str) -> DerivedSystem:
    """The (n-1)n + 1 equations over n^2 + 1 derivative columns."""
    t_idx = s.index(target)
    n = s.n
    others = [x for x in s.state_names if x != target]
    columns = [DerivativeTerm(x, k) for k in range(n - 1, -1, -1) for x in others]
    columns += [DerivativeTerm(target, k) for k in range(n, -1, -1)]
    col = {c: j for j, c in enumerate(columns)}
    zero = s.field.zero
    rows, rhs = [], []

    def add_row(i, k):
        row = [zero] * len(columns)
        row[col[DerivativeTerm(s.state_names[i], k + 1)]] = s.field.one
        for j, xj in enumerate(s.state_names):
            if s.A[i][j]:
                c = col[DerivativeTerm(xj, k)]
                row[c] = row[c] - s.A[i][j]
        rows.append(tuple(row))
        rhs.append(s.forcing[i].differentiate(k))

    for k in range(n - 1):
        for i in range(n):
            add_row(i, k)
    add_row(t_idx, n - 1)
    return DerivedSystem(tuple(rows), tuple(rhs), tuple(columns))


@dataclass(frozen=True)
class Triangularization:
    """Row echelon form U, transformed rhs, rank, pivot positions and the
    sign of the row permutation (for determinant checks)."""

    matrix: tuple
    rhs: tuple
    rank: int
    pivots: tuple
    sign: int

    def pivot_product(self):
        prod = None
        for i, j in self.pivots:
            prod = self.matrix[i][j] if prod is None else prod * self.matrix[i][j]
        return prod


def gaussian_triangularize(M: Sequence[Sequence], rhs: Sequence | None = None) -> Triangularization:
    """Exact Gaussian elimination with leftmost-column, first-nonzero-row pivots."""
    rows = [list(r) for r in M]
    rhs = list(rhs) if rhs is not None else [None] * len(rows)
    if len(rhs) != len(rows):
        raise ValueError("rhs length does not match the number of rows")
    n_rows = len(rows)
    n_cols = len(rows[0]) if rows else 0
    pivots = []
    sign = 1
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        p = next((i for i in range(r, n_rows) if rows[i][c]), None)
        if p is None:
            continue
        if p != r:
            rows[p], rows[r] = rows[r], rows[p]
            rhs[p], rhs[r] = rhs[r], rhs[p]
            sign = -sign
        piv = rows[r][c]
        inv = piv.inverse()
        for i in range(r + 1, n_rows):
            if not rows[i][c]:
                continue
            f = rows[i][c] * inv
            ri, rr = rows[i], rows[r]
            for j in range(c, n_cols):
                if rr[j]:
                    ri[j] = ri[j] - f * rr[j]
            if rhs[r] is not None:
                rhs[i] = rhs[i] - rhs[r].scale(f) if isinstance(rhs[r], DiffPolynomial) \
                    else rhs[i] - f * rhs[r]
        pivots.append((r, c))
        r += 1
    return Triangularization(tuple(tuple(row) for row in rows), tuple(rhs), len(pivots),
                             tuple(pivots), sign)


def state_elim(s: LinearStateSystem, target: str) -> LinearOde:
    """Single linear ODE for ``target`` via the derived system."""
    derived = build_derived_system(s, target)
    tri = gaussian_triangularize(derived.matrix, derived.rhs)
    first_target = len(derived.columns) - (s.n + 1)
    # the last nonzero row has the largest pivot column: the lowest-order relation
    row, col = tri.pivots[-1]
    if col < first_target:
        raise NoRelationFound(f"no relation for {target} alone")
    fld = s.field
    poly = -tri.rhs[row]
    for j in range(first_target, len(derived.columns)):
        if tri.matrix[row][j]:
            poly = poly + DiffPolynomial.from_term(derived.columns[j], fld).scale(tri.matrix[row][j])
    return _make_ode(poly, target)


def semistate_elim(s: SemistateSystem, target: str, budget: int | None = None) -> LinearOde:
    """Single ODE for ``target`` of E x' = A x + forcing.

    Runs the differential elimination, differentiating equations only when a
    reduction needs it.  The derivative-order budget defaults to 2n.
    """
    s.index(target)
    ranking = Ranking([x for x in s.state_names if x != target] + [target], s.excitations())
    if budget is None:
        budget = 2 * s.n
    try:
        chain = diff_eliminate(s.equations(), ranking, budget=budget, target=target)
    except BudgetExceeded as exc:
        raise NoRelationFound(f"derivative-order budget {budget} exhausted: {exc}") from exc
    return _make_ode(chain.element_for(target), target)
