import random
from fractions import Fraction

import pytest

from circuitode.coeffield import CoefficientField
from circuitode.diffpoly import DerivativeTerm, DiffPolynomial
from circuitode.errors import UnknownVariable
from circuitode.linear_elim import (
    LinearOde,
    LinearStateSystem,
    SemistateSystem,
    build_derived_system,
    gaussian_triangularize,
    semistate_elim,
    state_elim,
)
from circuitode.nonlinear_elim import proportional

from helpers import rand_state_matrix
from polyoracle import charpoly_cofactor, poly_divmod

F = CoefficientField(("C", "g", "g_m3", "g_m4", "a"))
C, g, g3, g4, a = (F.symbol(n) for n in F.names)
e1 = DiffPolynomial.var("e1", 0, F)


def det_cofactor(M):
    if len(M) == 1:
        return M[0][0]
    total = F.zero
    for j, c in enumerate(M[0]):
        if c:
            minor = [row[:j] + row[j + 1:] for row in M[1:]]
            total = total + (c if j % 2 == 0 else -c) * det_cofactor(minor)
    return total


@pytest.mark.parametrize("n,shape", [(1, (1, 2)), (2, (3, 5)), (3, (7, 10)), (4, (13, 17))])
def test_derived_system_shape(n, shape):
    s = LinearStateSystem(rand_state_matrix(random.Random(n), n), [e1] + [0] * (n - 1))
    assert build_derived_system(s, "x1").shape == shape


def test_derived_system_n2_by_hand():
    s = LinearStateSystem([[1, 2], [3, 4]], [e1, 0])
    d = build_derived_system(s, "x1")
    assert d.columns == (DerivativeTerm("x2", 1), DerivativeTerm("x2", 0), DerivativeTerm("x1", 2),
                         DerivativeTerm("x1", 1), DerivativeTerm("x1", 0))
    rows = [[c.to_fraction() for c in row] for row in d.matrix]
    # x1' - x1 - 2 x2 = e1 ; x2' - 3 x1 - 4 x2 = 0 ; x1'' - x1' - 2 x2' = e1'
    assert rows == [[0, -2, 0, 1, -1], [1, -4, 0, 0, -3], [-2, 0, 1, -1, 0]]
    assert d.rhs == (e1, DiffPolynomial.zero(F), e1.differentiate())


def test_triangularize_identity():
    eye = [[F(int(i == j)) for j in range(4)] for i in range(4)]
    tri = gaussian_triangularize(eye)
    assert tri.rank == 4 and [list(r) for r in tri.matrix] == eye and tri.sign == 1


def test_triangularize_dependent_rows():
    M = [[C, -C, F(0)], [C, -C, F(0)]]
    assert gaussian_triangularize(M).rank == 1


def test_triangularize_symbolic_determinant():
    rng = random.Random(4)
    syms = [F(0), F(1), F(-2), C, g, C + g, C * g - 1]
    done = 0
    while done < 5:
        M = [[rng.choice(syms) for _ in range(4)] for _ in range(4)]
        det = det_cofactor(M)
        if not det:
            continue
        tri = gaussian_triangularize(M)
        assert tri.rank == 4
        assert tri.pivot_product() * tri.sign == det
        done += 1


def test_state_elim_scalar():
    s = LinearStateSystem([[a]], [e1], ["x1"])
    ode = state_elim(s, "x1")
    assert ode.order == 1 and ode.coefficients == (-a, F.one)
    assert ode.rhs == e1


def test_state_elim_order_collapse():
    A = [[a, 0, 0], [0, a, 0], [0, 0, a]]
    ode = state_elim(LinearStateSystem(A, [e1, 0, 0]), "x1")
    assert ode.order == 1 and ode.coefficients == (-a, F.one) and ode.rhs == e1


def test_state_elim_symbolic_3x3_charpoly():
    A = [[F(0), F.one, F(0)], [F(0), F(0), F.one], [-g, -C, -a]]
    ode = state_elim(LinearStateSystem(A, [0, 0, e1]), "x1")
    assert ode.coefficients == (g, C, a, F.one)
    rng = random.Random(9)
    for _ in range(5):
        pt = {"g": Fraction(rng.randint(1, 9)), "C": Fraction(rng.randint(1, 9)), "a": Fraction(rng.randint(1, 9))}
        num = [[c.evaluate(pt) for c in row] for row in A]
        assert charpoly_cofactor(num) == [c.evaluate(pt) for c in ode.coefficients]


def test_charpoly_divides_det_many_systems():
    rng = random.Random(77)
    for _ in range(60):
        n = rng.choice([2, 3, 4])
        A = rand_state_matrix(rng, n)
        s = LinearStateSystem(A, [e1] + [0] * (n - 1))
        for target in s.state_names:
            cp = [c.to_fraction() for c in state_elim(s, target).characteristic()]
            assert not any(poly_divmod(charpoly_cofactor(A), cp)[1])


def test_state_elim_preserves_solutions():
    # Taylor data of x' = A x + u at t = 0 must satisfy the derived ODE and its derivatives
    rng = random.Random(5)
    for _ in range(20):
        n = rng.choice([2, 3])
        A = rand_state_matrix(rng, n)
        u = DiffPolynomial.var("u", 0, F)
        s = LinearStateSystem(A, [u] + [0] * (n - 1))
        target = rng.choice(s.state_names)
        ode = state_elim(s, target)
        du = [Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for _ in range(2 * n + 4)]
        xs = [[Fraction(rng.randint(-5, 5)) for _ in range(n)]]
        for j in range(n + 4):
            prev = xs[-1]
            xs.append([sum(A[i][k] * prev[k] for k in range(n)) + (du[j] if i == 0 else 0)
                       for i in range(n)])
        ti = s.index(target)
        vals = {DerivativeTerm("u", k): du[k] for k in range(len(du))}
        for shift in range(3):
            lhs = sum(c.to_fraction() * xs[k + shift][ti] for k, c in enumerate(ode.coefficients))
            assert lhs == ode.rhs.differentiate(shift).evaluate(vals, {})


def ota_semistate(sign=1):
    E = [[C, -C, 0], [-C, C, 0], [0, 0, 0]]
    A = [[-g4, g4, 1], [-g3, 0, 0], [-1, 0, 0]]
    return SemistateSystem(E, A, [0, 0, e1.scale(F(sign))], ["x1", "x2", "x3"])


def test_semistate_ota():
    ode = semistate_elim(ota_semistate(), "x3")
    want = (DiffPolynomial.var("x3", 1, F).scale(C) - e1.differentiate().scale(C * g3)
            - e1.scale(g3 * g4))
    assert ode.order == 1
    assert ode.equivalent(LinearOde((F.zero, C), e1.differentiate().scale(C * g3) + e1.scale(g3 * g4), "x3"))
    assert proportional(ode.as_polynomial(), want)


def test_semistate_ota_transfer_function():
    # H(s) = g_m3 (C s + g_m4) / (C s): rhs coefficients over characteristic coefficients
    ode = semistate_elim(ota_semistate(), "x3")
    lead = ode.coefficients[1]
    assert ode.coefficients[0] == 0
    b1 = ode.rhs.coefficient(DerivativeTerm("e1", 1), 1).constant_value()
    b0 = ode.rhs.coefficient(DerivativeTerm("e1", 0), 1).constant_value()
    assert b1 / lead == g3 and b0 / lead == g3 * g4 / C


def test_semistate_identity_matches_state_elim():
    rng = random.Random(3)
    for n in (2, 3):
        A = rand_state_matrix(rng, n)
        eye = [[int(i == j) for j in range(n)] for i in range(n)]
        forcing = [e1] + [0] * (n - 1)
        ss = SemistateSystem(eye, A, forcing)
        assert ss.is_standard()
        assert semistate_elim(ss, "x1").equivalent(state_elim(LinearStateSystem(A, forcing), "x1"))


def test_unknown_target():
    with pytest.raises(UnknownVariable):
        state_elim(LinearStateSystem([[a]], [e1]), "y")


def test_forcing_must_not_mention_states():
    with pytest.raises(ValueError):
        LinearStateSystem([[a]], [DiffPolynomial.var("x1", 0, F)])


def test_render():
    ode = state_elim(LinearStateSystem([[a]], [e1], ["x1"]), "x1")
    assert ode.render() == "x1' - a*x1 = e1"
