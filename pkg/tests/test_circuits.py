from pathlib import Path

import pytest

import circuitode.circuits as circuits
from circuitode.circuits import (
    CATALOG,
    builtin_circuit,
    builtin_names,
    parse_relation,
    parse_system,
    render_system,
)
from circuitode.circuits.parser import tokenize
from circuitode.errors import DuplicateDeclaration, NestedTranscendental, ParseError, UndeclaredSymbol, UnknownCircuit
from circuitode.nonlinear_elim import diff_eliminate, proportional, rule_from, rules_equal_exact, target_rule

DATA = Path(circuits.__file__).parent / "data"


def test_ota_file_equals_builtin():
    text = (DATA / "ota.sys").read_text(encoding="utf-8")
    assert parse_system(text, name="ota") == builtin_circuit("ota")[0]


def test_ota_equations_are_the_three_polynomials():
    s, _ = builtin_circuit("ota")
    want = ["C*x1' - C*x2' + g_m4*x1 - g_m4*x2 - x3 = 0",
            "-C*x1' + C*x2' + g_m3*x1 = 0",
            "x1 - e1 = 0"]
    assert [proportional(p, parse_relation(w, s)) for p, w in zip(s.equations, want)] == [True] * 3


def test_undeclared_symbol_location():
    text = "constants C, g_m3;\nunknowns x1;\nexcitations e1;\nC*x1' = g_m9*e1;\n"
    with pytest.raises(UndeclaredSymbol) as info:
        parse_system(text)
    assert "g_m9" in str(info.value)
    assert (info.value.line, info.value.column) == (4, 9)


def test_duplicate_declaration():
    with pytest.raises(DuplicateDeclaration):
        parse_system("constants C; unknowns C; C = 0;")


def test_nested_call_in_file():
    with pytest.raises(NestedTranscendental):
        parse_system("constants a; unknowns i, v; i = exp(a*exp(v));")


@pytest.mark.parametrize("bad", [
    "unknowns x; x = ;",
    "unknowns x; x^(y) = 0;",
    "unknowns x, y; x/y = 1;",
    "unknowns x; x = 1",
    "unknowns x; x = 1 $ 2;",
])
def test_malformed_input(bad):
    with pytest.raises(ParseError):
        parse_system(bad)


def test_tokenize_positions():
    toks = tokenize("x1'' = e1 # comment\n  y")
    assert [t.text for t in toks][:4] == ["x1", "'", "'", "="]
    assert (toks[-2].line, toks[-2].column) == (2, 3) and toks[-1].kind == "eof"


def test_exp_file_yields_diode_polynomial():
    s, _ = builtin_circuit("rectifier")
    diode = next(p for p in s.equations if "i_D" in p.functions() and "v_D" in p.functions()
                 and s.constraint_for(s.equations.index(p)) is not None)
    assert proportional(diode, parse_relation("V_T*i_D' = v_D'*(i_D + I_s)", s))


@pytest.mark.parametrize("name", builtin_names())
def test_round_trip(name):
    s, _ = builtin_circuit(name)
    again = parse_system(render_system(s), name=name)
    assert again.equivalent(s)
    assert again.suggested_ranking == s.suggested_ranking
    assert again.default_target == s.default_target
    assert len(again.constraints) == len(s.constraints)


@pytest.mark.parametrize("name", builtin_names())
def test_dimensional_closure(name):
    s, _ = builtin_circuit(name)
    assert len(s.unknowns) == len(s.equations)


def test_duffing_ranking_puts_psi_last():
    s, _ = builtin_circuit("duffing")
    assert s.suggested_ranking.unknowns[-1] == "psi"
    assert s.suggested_ranking.excitations == ("v0",)


def test_ranking_for_moves_target_last():
    s, _ = builtin_circuit("ota")
    assert s.ranking_for("x1").unknowns == ("x2", "x3", "x1")


def test_rectifier_ideal_source_variant():
    s, entry = builtin_circuit("rectifier")
    v = entry.variants[0]
    fixed = s.substitute_constants(v.assignment)
    assert "R_e" not in fixed.constants
    rule = target_rule(diff_eliminate(fixed, fixed.ranking_for()), "v_a")
    want = rule_from(parse_relation(v.expected_output, fixed), fixed.ranking_for())
    assert rules_equal_exact(rule, want)


def test_unknown_circuit():
    with pytest.raises(UnknownCircuit):
        builtin_circuit("nosuch")


def test_catalog_entries_complete():
    for name, entry in CATALOG.items():
        assert entry.label and entry.description and entry.data_file
        if entry.expected_output is not None:
            assert entry.fixture is not None
            assert entry.expected_polynomial() is not None
    assert CATALOG["transformer_rectifier"].expected_output is None


def test_render_mentions_transcendental_law():
    text = render_system(builtin_circuit("chua")[0])
    assert "arctan(" in text and "ranking" in text and "target v_C1" in text
