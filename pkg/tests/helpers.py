"""Seeded random generators shared by property tests and the acceptance suite."""

from __future__ import annotations

import random
from fractions import Fraction

from circuitode.coeffield import CoefficientField
from circuitode.diffpoly import DerivativeTerm, DiffPolynomial, Ranking

NAMES = ("C", "R", "g")
FIELD = CoefficientField(NAMES)
FUNCS = ("x", "y", "z")
EXC = ("u",)
RANKING = Ranking(FUNCS, EXC)


def rand_fraction(rng: random.Random, lo=-5, hi=5) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.randint(1, 4))


def rand_const_poly(rng: random.Random, field=FIELD, terms=3, deg=2):
    total = field(0)
    for _ in range(rng.randint(1, terms)):
        c = field(rng.randint(-4, 4))
        for n in field.names:
            c = c * field.symbol(n) ** rng.randint(0, deg)
        total = total + c
    return total


def rand_coeff(rng: random.Random, field=FIELD, allow_zero=True):
    while True:
        num = rand_const_poly(rng, field)
        den = rand_const_poly(rng, field)
        if not den:
            continue
        c = num / den
        if allow_zero or c:
            return c


def rand_term(rng: random.Random, funcs=FUNCS + EXC, max_order=3) -> DerivativeTerm:
    return DerivativeTerm(rng.choice(funcs), rng.randint(0, max_order))


def rand_diffpoly(rng: random.Random, field=FIELD, n_terms=4, max_deg=2, funcs=FUNCS + EXC,
                  max_order=3, simple_coeffs=False) -> DiffPolynomial:
    p = DiffPolynomial.zero(field)
    for _ in range(rng.randint(1, n_terms)):
        c = field(rng.randint(-3, 3)) * (field.symbol(rng.choice(field.names))
                                         if not simple_coeffs and rng.random() < 0.5 else field(1))
        mono = DiffPolynomial.constant(c, field)
        for _ in range(rng.randint(0, max_deg)):
            mono = mono * DiffPolynomial.from_term(rand_term(rng, funcs, max_order), field)
        p = p + mono
    return p


def rand_point(rng: random.Random, terms, names=NAMES):
    values = {t: rand_fraction(rng) for t in terms}
    assignment = {n: Fraction(rng.randint(1, 7), rng.randint(1, 3)) for n in names}
    return values, assignment


def rand_state_matrix(rng: random.Random, n: int):
    return [[Fraction(rng.randint(-3, 3), rng.randint(1, 2)) for _ in range(n)] for _ in range(n)]


def nonconstant(rng, **kw) -> DiffPolynomial:
    while True:
        p = rand_diffpoly(rng, **kw)
        if p and not p.is_constant and p.functions() - set(EXC):
            return p
