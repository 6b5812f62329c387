"""Generic-case differential elimination.

A characteristic-set computation in the style of Ritt and Wu: repeatedly
extract a basic set from the current polynomials, pseudo-reduce everything
else modulo it (differentiating chain elements only when a proper derivative
of a leader has to be removed) and feed the nonzero remainders back in.

Case splitting on vanishing initials or separants is not performed.  Every
polynomial used as a multiplier, and every factor cancelled from a
remainder, is recorded in ``RegularChain.assumptions``; the results are
valid wherever those are nonzero.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from sympy.polys.domains import ZZ
from sympy.polys.orderings import lex
from sympy.polys.rings import PolyRing

from .coeffield import CoefficientField
from .diffpoly import DerivativeTerm, DiffPolynomial, Ranking, leader_parts
from .errors import (
    BudgetExceeded,
    EvaluationSingular,
    InconsistentSystem,
    NoLeader,
    NoRelationFound,
    NotSolvable,
)

__all__ = [
    "PseudoLog",
    "RegularChain",
    "RewriteRule",
    "pseudo_remainder",
    "reduce_by_chain",
    "autoreduce",
    "diff_eliminate",
    "rewrite_rules",
    "target_rule",
    "rule_from",
    "rules_equal_exact",
    "rules_equivalent",
    "proportional",
    "default_budget",
]


def default_budget(n_unknowns: int) -> int:
    return 3 * max(n_unknowns, 1)


# ---------------------------------------------------------------------------
# conversion to a flat sympy ring, for gcds and factorisation
# ---------------------------------------------------------------------------

@lru_cache(maxsize=256)
def _flat_ring(const_names: tuple, n_terms: int):
    gens = tuple(const_names) + tuple(f"_t{i}" for i in range(n_terms))
    return PolyRing(gens, ZZ, lex)


def _to_flat(polys: Sequence[DiffPolynomial]):
    """Map polynomial-coefficient DiffPolynomials into one flat ring."""
    fld = polys[0].field
    terms = sorted(set().union(*(p.indeterminates() for p in polys)))
    index = {t: i for i, t in enumerate(terms)}
    ring = _flat_ring(fld.names, len(terms))
    nc = len(fld.names)
    out = []
    for p in polys:
        d = {}
        for m, c in p.terms.items():
            if not c.den.is_one:
                raise ValueError("flat conversion needs polynomial coefficients")
            texp = [0] * len(terms)
            for t, e in m:
                texp[index[t]] = e
            texp = tuple(texp)
            for cm, cc in c.num.items():
                d[tuple(cm) + texp] = cc
        out.append(ring.from_dict(d) if d else ring.zero)
    return ring, terms, out


def _from_flat(elem, fld: CoefficientField, terms) -> DiffPolynomial:
    nc = len(fld.names)
    groups: dict = {}
    for monom, c in elem.items():
        cm, tm = monom[:nc], monom[nc:]
        mono = tuple((terms[i], e) for i, e in enumerate(tm) if e)
        groups.setdefault(tuple(sorted(mono)), {})[cm] = c
    return DiffPolynomial._trusted(
        {m: fld(fld.poly_from_terms(cs)) for m, cs in groups.items()}, fld
    )


def factor_assumption(p: DiffPolynomial) -> list:
    """Irreducible non-unit factors of a polynomial, constant symbols included."""
    if not p or (p.is_constant and p.constant_value().is_rational):
        return []
    den = p.field.ring.one
    for c in p.terms.values():
        if not c.den.is_one:
            den = den.lcm(c.den)
    if not den.is_one:
        p = p.scale(p.field(den))
    ring, terms, (flat,) = _to_flat([p])
    _, factors = flat.factor_list()
    out = []
    for f, _mult in factors:
        if f.is_ground:
            continue
        q = _from_flat(f, p.field, terms)
        lead = q.terms[max(q.terms, key=lambda m: tuple(sorted(m, reverse=True)))]
        out.append(-q if lead.num.LC < 0 else q)
    return out


# ---------------------------------------------------------------------------
# pseudo-division
# ---------------------------------------------------------------------------

@dataclass
class PseudoLog:
    """Record of I^a * S^b * f = sum_k q_k * g^(k) + remainder."""

    initial_power: int = 0
    separant_power: int = 0
    quotients: dict = dc_field(default_factory=dict)


def _prem_step(f: DiffPolynomial, g: DiffPolynomial, w: DerivativeTerm, init, d: int):
    """Eliminate the top power of w in f once: returns (I*f - lc*w^(e-d)*g, lc*w^(e-d))."""
    e = f.degree(w)
    lc = f.coefficient(w, e)
    q = lc * DiffPolynomial.from_term(w, f.field, e - d) if e > d else lc
    return init * f - q * g, q


def _reducible_term(f: DiffPolynomial, leader: DerivativeTerm, degree: int, r: Ranking):
    """Highest term of f that g (with this leader) can reduce, or None."""
    best = None
    for t in f.indeterminates():
        if t.function != leader.function:
            continue
        if t.order > leader.order or (t.order == leader.order and f.degree(t) >= degree):
            if best is None or r.key(t) > r.key(best):
                best = t
    return best


def pseudo_remainder(f: DiffPolynomial, g: DiffPolynomial, r: Ranking):
    """Full differential pseudo-remainder of f by g alone.

    Returns (remainder, log).  No normalisation is applied, so the identity
    recorded in the log holds literally.
    """
    lp = leader_parts(g, r)
    log = PseudoLog()
    derivs = {0: g}
    sep = lp.separant
    while True:
        w = _reducible_term(f, lp.leader, lp.degree, r)
        if w is None:
            return f, log
        k = w.order - lp.leader.order
        if k == 0:
            mult, d, h = lp.initial, lp.degree, g
            log.initial_power += 1
        else:
            if k not in derivs:
                derivs[k] = g.differentiate(k)
            mult, d, h = sep, 1, derivs[k]
            log.separant_power += 1
        f, q = _prem_step(f, h, w, mult, d)
        for kk in log.quotients:
            log.quotients[kk] = log.quotients[kk] * mult
        log.quotients[k] = log.quotients.get(k, DiffPolynomial.zero(f.field)) + q


# ---------------------------------------------------------------------------
# chains
# ---------------------------------------------------------------------------

def _normalize(p: DiffPolynomial, r: Ranking, assumptions: list | None = None) -> DiffPolynomial:
    """Primitive over the constants, leader content removed, positive initial."""
    if not p:
        return p
    _, p = p.primitive()
    if p.is_constant:
        return p
    lp = leader_parts(p, r)
    if not lp.initial.is_constant:
        parts = p.coefficients(lp.leader)
        if len(parts) == 1:
            content = lp.initial
            p = DiffPolynomial.from_term(lp.leader, p.field)
            if assumptions is not None:
                assumptions.append(content)
        else:
            ring, terms, flats = _to_flat(list(parts.values()) + [p])
            g = flats[0]
            for x in flats[1:-1]:
                g = g.gcd(x)
                if g.is_ground:
                    break
            if not g.is_ground:
                p = _from_flat(flats[-1].exquo(g), p.field, terms)
                if assumptions is not None:
                    assumptions.append(_from_flat(g, p.field, terms))
        _, p = p.primitive()
        lp = leader_parts(p, r)
    init = lp.initial
    lead_coeff = init.terms[max(init.terms, key=lambda m: _rank_key(m, r))]
    if lead_coeff.num.LC < 0:
        p = -p
    return p


def _rank_key(m, r: Ranking):
    return tuple(sorted(((r.key(t), e) for t, e in m), reverse=True))


class _Element:
    """A chain element with its leader data and cached derivatives."""

    __slots__ = ("poly", "leader", "degree", "initial", "separant", "_derivs")

    def __init__(self, poly: DiffPolynomial, r: Ranking):
        lp = leader_parts(poly, r)
        self.poly = poly
        self.leader = lp.leader
        self.degree = lp.degree
        self.initial = lp.initial
        self.separant = lp.separant
        self._derivs = {0: poly}

    def derivative(self, k: int) -> DiffPolynomial:
        if k not in self._derivs:
            base = max(j for j in self._derivs if j < k)
            self._derivs[k] = self._derivs[base].differentiate(k - base)
        return self._derivs[k]


def reduce_by_chain(f: DiffPolynomial, chain: Sequence, r: Ranking,
                    assumptions: list | None = None) -> DiffPolynomial:
    """Fully pseudo-reduce f modulo an autoreduced set.

    ``chain`` holds DiffPolynomials or prepared elements; multipliers used
    are appended to ``assumptions`` when given.
    """
    elems = [c if isinstance(c, _Element) else _Element(c, r) for c in chain]
    by_function = {e.leader.function: e for e in elems}
    f = _normalize(f, r)
    while f and not f.is_constant:
        best = None
        best_el = None
        for t in f.indeterminates():
            el = by_function.get(t.function)
            if el is None:
                continue
            if t.order > el.leader.order or (t.order == el.leader.order and f.degree(t) >= el.degree):
                if best is None or r.key(t) > r.key(best):
                    best, best_el = t, el
        if best is None:
            break
        k = best.order - best_el.leader.order
        if k == 0:
            mult, d, h = best_el.initial, best_el.degree, best_el.poly
        else:
            mult, d, h = best_el.separant, 1, best_el.derivative(k)
        while f.degree(best) >= d:
            f, _ = _prem_step(f, h, best, mult, d)
            if assumptions is not None:
                assumptions.append(mult)
        f = _normalize(f, r, assumptions)
    return f


def _is_reduced(p: DiffPolynomial, el: _Element) -> bool:
    u = el.leader
    for t in p.indeterminates():
        if t.function == u.function:
            if t.order > u.order:
                return False
            if t.order == u.order and p.degree(t) >= el.degree:
                return False
    return True


def _basic_set(polys: Sequence[DiffPolynomial], r: Ranking) -> list:
    ordered = sorted(polys, key=r.poly_rank)
    chosen: list = []
    used = set()
    for p in ordered:
        el = _Element(p, r)
        if el.leader.function in used:
            continue
        if all(_is_reduced(p, c) for c in chosen):
            chosen.append(el)
            used.add(el.leader.function)
    return chosen


@dataclass(frozen=True)
class RegularChain:
    """Autoreduced triangular set plus the polynomials assumed nonzero."""

    elements: tuple
    assumptions: tuple
    ranking: Ranking

    @property
    def leaders(self) -> list:
        return [leader_parts(p, self.ranking).leader for p in self.elements]

    def element_for(self, function: str) -> DiffPolynomial:
        for p in self.elements:
            if self.ranking.leader(p).function == function:
                return p
        raise NoRelationFound(f"no chain element is led by a derivative of {function!r}")

    def __len__(self):
        return len(self.elements)

    def render_assumptions(self) -> list:
        return [f"{a.render(self.ranking)} != 0" for a in self.assumptions]


def _dedupe_assumptions(polys: Iterable[DiffPolynomial], r: Ranking) -> tuple:
    seen = {}
    for p in polys:
        if p.is_constant and p.constant_value().is_rational:
            continue
        for f in factor_assumption(p):
            if f.is_constant and f.constant_value().is_rational:
                continue
            seen.setdefault(f, None)
    return tuple(sorted(seen, key=lambda q: (r.poly_rank(q), q.render(r))))


def _chain_from(elems: Sequence[_Element], assumptions: list, r: Ranking) -> RegularChain:
    elems = sorted(elems, key=lambda e: r.key(e.leader))
    extra = []
    for e in elems:
        extra.append(e.initial)
        extra.append(e.separant)
    return RegularChain(
        elements=tuple(e.poly for e in elems),
        assumptions=_dedupe_assumptions(list(assumptions) + extra, r),
        ranking=r,
    )


def autoreduce(polys: Iterable[DiffPolynomial], r: Ranking) -> RegularChain:
    """Reduce a set of polynomials to an autoreduced chain.

    Remainders of non-basic members modulo the current basic set are fed
    back until every polynomial reduces to zero.
    """
    return _characteristic_set(polys, r, budget=None)


def diff_eliminate(system, r: Ranking, budget: int | None = None,
                   target: str | None = None) -> RegularChain:
    """Characteristic set of a system of differential polynomials.

    ``system`` is either an object with an ``equations`` attribute (such as
    an EquationSystem) or a sequence of DiffPolynomials.  When ``target`` is
    given (or the system names a default target), the chain must contain an
    element led by a derivative of the target that involves only the target
    and excitations.
    """
    equations = list(getattr(system, "equations", system))
    if target is None:
        target = getattr(system, "default_target", None)
    if budget is None:
        budget = default_budget(len(r.unknowns))
    chain = _characteristic_set(equations, r, budget)
    if target is not None:
        p = chain.element_for(target)
        extra = p.functions() - {target} - set(r.excitations)
        if extra:
            raise NoRelationFound(
                f"relation for {target!r} still involves {sorted(extra)}"
            )
    return chain


def _characteristic_set(polys, r: Ranking, budget: int | None) -> RegularChain:
    assumptions: list = []
    pending = []
    for p in polys:
        if not p:
            continue
        if p.is_constant:
            raise InconsistentSystem(f"nonzero constant {p} among the equations")
        q = _normalize(p, r, assumptions)
        if q not in pending:
            pending.append(q)
    if not pending:
        raise NoLeader("no equation has a leader")
    unknowns = set(r.unknowns)
    while True:
        basic = _basic_set(pending, r)
        rest = []
        basic_polys = [e.poly for e in basic]
        for p in pending:
            if any(p == b for b in basic_polys):
                continue
            q = reduce_by_chain(p, basic, r, assumptions)
            if not q:
                continue
            if q.is_constant:
                raise InconsistentSystem(f"reduction produced the nonzero constant {q}")
            top = max((t.order for t in q.indeterminates() if t.function in unknowns), default=0)
            if budget is not None and top > budget:
                raise BudgetExceeded(
                    f"derivative order {top} exceeds the budget of {budget}",
                    partial_chain=_chain_from(basic, assumptions, r),
                )
            if q not in rest:
                rest.append(q)
        if not rest:
            return _chain_from(basic, assumptions, r)
        pending = basic_polys + rest


# ---------------------------------------------------------------------------
# rewrite rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RewriteRule:
    """lhs = rhs_num / rhs_den with both sides over lower-ranked terms."""

    lhs: DerivativeTerm
    rhs_num: DiffPolynomial
    rhs_den: DiffPolynomial

    def as_polynomial(self) -> DiffPolynomial:
        """rhs_den * lhs - rhs_num, the relation as a polynomial equal to 0."""
        return self.rhs_den * DiffPolynomial.from_term(self.lhs, self.rhs_num.field) - self.rhs_num

    @property
    def order(self) -> int:
        return self.lhs.order

    def rhs_value(self, values, assignment=None) -> Fraction:
        den = self.rhs_den.evaluate(values, assignment)
        if den == 0:
            raise EvaluationSingular(f"denominator of the rule for {self.lhs} vanishes")
        return self.rhs_num.evaluate(values, assignment) / den

    def numerator_size(self) -> int:
        return self.rhs_num.size()

    def substitute_constants(self, assignment, field=None) -> "RewriteRule":
        return RewriteRule(
            self.lhs,
            self.rhs_num.substitute_constants(assignment, field),
            self.rhs_den.substitute_constants(assignment, field),
        )

    def perturbed(self, extra: DiffPolynomial) -> "RewriteRule":
        """Same rule with ``extra`` added to the right-hand side."""
        return RewriteRule(self.lhs, self.rhs_num + self.rhs_den * extra, self.rhs_den)

    def render(self, ranking: Ranking | None = None) -> str:
        num = self.rhs_num.render(ranking)
        if self.rhs_den == 1:
            return f"{self.lhs} = {num}"
        if len(self.rhs_num) > 1 or num.startswith("-"):
            num = f"({num})"
        den = self.rhs_den.render(ranking)
        if len(self.rhs_den) > 1 or any(ch in den for ch in "*/ ") :
            den = f"({den})"
        return f"{self.lhs} = {num}/{den}"

    def render_cleared(self, ranking: Ranking | None = None) -> str:
        """den*lhs = num, the form without a fraction bar."""
        if self.rhs_den == 1:
            return f"{self.lhs} = {self.rhs_num.render(ranking)}"
        den = self.rhs_den.render(ranking)
        if len(self.rhs_den) > 1:
            den = f"({den})"
        return f"{den}*{self.lhs} = {self.rhs_num.render(ranking)}"

    def latex(self, ranking: Ranking | None = None) -> str:
        num = self.rhs_num.latex(ranking)
        if self.rhs_den == 1:
            return f"{self.lhs.latex()} = {num}"
        return rf"{self.lhs.latex()} = \frac{{{num}}}{{{self.rhs_den.latex(ranking)}}}"

    def __str__(self):
        return self.render()


def rule_from(p: DiffPolynomial, r: Ranking) -> RewriteRule:
    lp = leader_parts(p, r)
    if lp.degree != 1:
        raise NotSolvable(
            f"{p.render(r)} has degree {lp.degree} in its leader {lp.leader}"
        )
    tail = p - lp.initial * DiffPolynomial.from_term(lp.leader, p.field)
    num, den = -tail, lp.initial
    return RewriteRule(lp.leader, num, den)


def rewrite_rules(chain: RegularChain) -> list:
    """Solve each chain element for its leader; highest leader first."""
    r = chain.ranking
    rules = [rule_from(p, r) for p in chain.elements]
    rules.sort(key=lambda rule: r.key(rule.lhs), reverse=True)
    return rules


def target_rule(chain: RegularChain, target: str) -> RewriteRule:
    return rule_from(chain.element_for(target), chain.ranking)


# ---------------------------------------------------------------------------
# equality oracles
# ---------------------------------------------------------------------------

def _random_point(terms, names, rng, lo=-9, hi=9):
    def rnd():
        while True:
            v = Fraction(rng.randint(lo, hi), rng.randint(1, hi))
            if v:
                return v
    return {t: rnd() for t in terms}, {n: rnd() for n in names}


def rules_equivalent(a: RewriteRule, b: RewriteRule, points: int = 20, seed: int = 0) -> bool:
    """Decide a == b by exact evaluation at random rational points."""
    if a.lhs != b.lhs:
        return False
    rng = random.Random(seed)
    polys = [a.rhs_num, a.rhs_den, b.rhs_num, b.rhs_den]
    terms = sorted(set().union(*(p.indeterminates() for p in polys)))
    names = sorted(set(a.rhs_num.field.names) | set(b.rhs_num.field.names))
    checked = 0
    attempts = 0
    while checked < points:
        attempts += 1
        if attempts > 20 * points:
            raise EvaluationSingular("could not find enough nonsingular evaluation points")
        values, assignment = _random_point(terms, names, rng)
        da = a.rhs_den.evaluate(values, assignment)
        db = b.rhs_den.evaluate(values, assignment)
        if da == 0 or db == 0:
            continue
        if a.rhs_num.evaluate(values, assignment) * db != b.rhs_num.evaluate(values, assignment) * da:
            return False
        checked += 1
    return True


def rules_equal_exact(a: RewriteRule, b: RewriteRule) -> bool:
    """Cross-multiplication identity expanded symbolically."""
    return a.lhs == b.lhs and not (a.rhs_num * b.rhs_den - b.rhs_num * a.rhs_den)


def proportional(p: DiffPolynomial, q: DiffPolynomial) -> bool:
    """True if p = c*q for a nonzero constant-field element c."""
    if not p or not q:
        return not p and not q
    if set(p.terms) != set(q.terms):
        return False
    m0 = next(iter(p.terms))
    ratio = p.terms[m0] / q.terms[m0]
    return all(p.terms[m] == ratio * q.terms[m] for m in p.terms)
