"""Command-line interface.

    circuitode derive --circuit ota --target x3
    circuitode check --circuit duffing
    circuitode list-circuits
    circuitode algebraize "i_D = I_s*(exp(v_D/V_T) - 1)" --constants I_s,V_T

Exit status: 0 on success, 1 on a mathematical failure (inconsistent
system, exhausted budget, failed check), 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from .circuits import CATALOG, Signal, ValidationFixture, builtin_circuit, parse_system
from .coeffield import render_const_poly
from .errors import CircuitODEError, EvaluationSingular, MathematicalFailure
from .nonlinear_elim import default_budget, diff_eliminate, rewrite_rules, target_rule

__all__ = ["RunConfig", "run", "main", "BUDGET_ENV"]

BUDGET_ENV = "CIRCUITODE_BUDGET"


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    circuit: str | None = None
    file: str | None = None
    target: str | None = None
    format: str = "text"
    budget: int | None = None
    all_rules: bool = False
    fixture: str | None = None
    span: tuple | None = None
    step: float | None = None
    series_order: int = 6
    equation: str | None = None
    constants: tuple = ()


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="circuitode", description="Single ODEs for nonlinear circuits.")
    p.add_argument("--version", action="version", version=f"circuitode {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def add_input(sp, formats):
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--circuit", help="built-in circuit name")
        src.add_argument("--file", help="equation system file")
        sp.add_argument("--target", help="unknown to derive the ODE for")
        sp.add_argument("--format", choices=formats, default="text")
        sp.add_argument("--budget", type=int, help=f"max derivative order (env {BUDGET_ENV})")

    d = sub.add_parser("derive", help="derive the single ODE for the target")
    add_input(d, ("text", "latex", "json"))
    d.add_argument("--all-rules", action="store_true", help="print every rewrite rule")

    c = sub.add_parser("check", help="derive and validate against the original system")
    add_input(c, ("text", "json"))
    c.add_argument("--fixture", help="JSON fixture file (required with --file)")
    c.add_argument("--span", nargs=2, type=float, metavar=("T0", "T1"))
    c.add_argument("--step", type=float)
    c.add_argument("--series-order", type=int, default=6)

    sub.add_parser("list-circuits", help="list the built-in circuits")

    a = sub.add_parser("algebraize", help="polynomial form of a transcendental element law")
    a.add_argument("equation", help="equation such as \"i = I_s*(exp(v/V_T) - 1)\"")
    a.add_argument("--constants", default="", help="comma-separated constant names")
    return p


def parse_args(argv) -> RunConfig:
    ns = _parser().parse_args(argv)
    budget = getattr(ns, "budget", None)
    if budget is None and os.environ.get(BUDGET_ENV):
        try:
            budget = int(os.environ[BUDGET_ENV])
        except ValueError:
            raise UsageError(f"{BUDGET_ENV} must be an integer") from None
    if budget is not None and budget < 0:
        raise UsageError("budget must be nonnegative")
    return RunConfig(
        subcommand=ns.subcommand,
        circuit=getattr(ns, "circuit", None),
        file=getattr(ns, "file", None),
        target=getattr(ns, "target", None),
        format=getattr(ns, "format", "text"),
        budget=budget,
        all_rules=getattr(ns, "all_rules", False),
        fixture=getattr(ns, "fixture", None),
        span=tuple(ns.span) if getattr(ns, "span", None) else None,
        step=getattr(ns, "step", None),
        series_order=getattr(ns, "series_order", 6),
        equation=getattr(ns, "equation", None),
        constants=tuple(c.strip() for c in getattr(ns, "constants", "").split(",") if c.strip()),
    )


# -- JSON helpers ------------------------------------------------------------

def _poly_json(p) -> dict:
    terms = []
    for m, c in p.sorted_terms():
        terms.append({
            "coefficient": {
                "numerator": render_const_poly(c.num, c.field.names),
                "denominator": render_const_poly(c.den, c.field.names),
            },
            "factors": [{"term": {"function": t.function, "order": t.order}, "power": e}
                        for t, e in m],
        })
    return {"terms": terms}


def _rule_json(rule, r) -> dict:
    return {
        "lhs": {"function": rule.lhs.function, "order": rule.lhs.order},
        "numerator": _poly_json(rule.rhs_num),
        "denominator": _poly_json(rule.rhs_den),
        "text": rule.render(r),
    }


# -- subcommands -------------------------------------------------------------

def _load(cfg: RunConfig):
    if cfg.circuit:
        system, entry = builtin_circuit(cfg.circuit)
        return system, entry, f"builtin:{cfg.circuit}"
    path = Path(cfg.file)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return parse_system(text, name=path.stem), None, str(path)


def _derive(cfg: RunConfig):
    system, entry, source = _load(cfg)
    target = cfg.target or system.default_target
    r = system.ranking_for(target)
    budget = cfg.budget if cfg.budget is not None else default_budget(len(r.unknowns))
    chain = diff_eliminate(system, r, budget=budget, target=target)
    rule = target_rule(chain, target)
    return system, entry, source, r, budget, chain, rule


def _cmd_derive(cfg: RunConfig, out) -> int:
    system, entry, source, r, budget, chain, rule = _derive(cfg)
    if cfg.format == "json":
        json.dump(_derive_json(system, entry, source, r, budget, chain, rule, cfg.all_rules),
                  out, indent=2)
        out.write("\n")
    elif cfg.format == "latex":
        out.write(f"\\[ {rule.latex(r)} \\]\n")
        for a in chain.assumptions:
            out.write(f"% assumes ${a.latex(r)} \\neq 0$\n")
    else:
        out.write(f"circuit: {system.name}\n")
        out.write(f"target: {rule.lhs.function}\n")
        out.write(f"order: {rule.order}\n")
        out.write(f"ode: {rule.render_cleared(r)}\n")
        out.write(f"rule: {rule.render(r)}\n")
        if cfg.all_rules:
            for other in rewrite_rules(chain):
                out.write(f"chain: {other.render(r)}\n")
        for a in chain.render_assumptions():
            out.write(f"assumes: {a}\n")
    return 0


def _derive_json(system, entry, source, r, budget, chain, rule, all_rules) -> dict:
    doc = {
        "format_version": 1,
        "circuit": system.name,
        "target": rule.lhs.function,
        "order": rule.order,
        "ode": rule.render_cleared(r),
        "rule": _rule_json(rule, r),
        "assumptions": [{"text": t, "polynomial": _poly_json(a)}
                        for t, a in zip(chain.render_assumptions(), chain.assumptions)],
        "provenance": {
            "source": source,
            "example": entry.label if entry else None,
            "ranking": list(r.ordered_vars),
            "budget": budget,
            "version": __version__,
        },
    }
    if all_rules:
        doc["rules"] = [_rule_json(x, r) for x in rewrite_rules(chain)]
    return doc


def _frac(v) -> Fraction:
    return Fraction(str(v))


def load_fixture(path: str) -> ValidationFixture:
    """Fixture file: constants, base_ic, excitations, optional span and step.

    Excitations map a name to a list of [kind, amplitude, frequency_or_power]
    triples with kind in poly, sin, cos.  Numbers may be given as strings
    like "1/10".
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read fixture {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"fixture {path} is not valid JSON: {exc}") from None
    try:
        signals = {}
        for name, terms in data.get("excitations", {}).items():
            sig = []
            for kind, a, w in terms:
                if kind not in ("poly", "sin", "cos"):
                    raise ValueError(f"unknown signal kind {kind!r}")
                sig.append((kind, _frac(a), int(w) if kind == "poly" else _frac(w)))
            signals[name] = Signal(tuple(sig))
        return ValidationFixture(
            constants={k: _frac(v) for k, v in data["constants"].items()},
            base_ic={k: _frac(v) for k, v in data["base_ic"].items()},
            excitations=signals,
            span=tuple(_frac(v) for v in data.get("span", (0, 1))),
            step=float(data.get("step", 1e-4)),
        )
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"malformed fixture {path}: {exc}") from None


def _cmd_check(cfg: RunConfig, out) -> int:
    from .numcheck import validate

    system, entry, source, r, budget, chain, rule = _derive(cfg)
    if cfg.fixture:
        fixture = load_fixture(cfg.fixture)
    elif entry is not None and entry.fixture is not None:
        fixture = entry.fixture
    else:
        raise UsageError("no validation fixture: pass --fixture")
    report = validate(system, rule, fixture, name=system.name, series_order=cfg.series_order,
                      span=cfg.span, step=cfg.step)
    if cfg.format == "json":
        doc = _derive_json(system, entry, source, r, budget, chain, rule, False)
        doc["check"] = report
        json.dump(doc, out, indent=2)
        out.write("\n")
    else:
        out.write(f"circuit: {system.name}\n")
        out.write(f"target: {rule.lhs.function}\n")
        out.write(f"ode: {rule.render_cleared(r)}\n")
        for a in chain.render_assumptions():
            out.write(f"assumes: {a}\n")
        out.write(f"series residuals (order {report['series_order']}): "
                  f"{' '.join(report['series_residuals'])}\n")
        dev = report["max_relative_deviation"]
        out.write(f"trajectory deviation on [{report['span'][0]:g}, {report['span'][1]:g}], "
                  f"h = {report['step']:g}: {'n/a' if dev is None else f'{dev:.3e}'}\n")
        if "error" in report:
            out.write(f"trajectory error: {report['error']}\n")
        out.write(f"result: {'pass' if report['passed'] else 'FAIL'}\n")
    return 0 if report["passed"] else 1


def _cmd_list(cfg: RunConfig, out) -> int:
    width = max(len(n) for n in CATALOG)
    for name, entry in CATALOG.items():
        out.write(f"{name:<{width}}  {entry.label}\n")
    return 0


_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


def _cmd_algebraize(cfg: RunConfig, out) -> int:
    from .transcend import RULES

    eq = cfg.equation.strip().rstrip(";")
    names = []
    for m in _IDENT.finditer(eq):
        n = m.group()
        if n not in RULES and n not in names:
            names.append(n)
    consts = [n for n in names if n in cfg.constants]
    funcs = [n for n in names if n not in cfg.constants]
    if not funcs:
        raise UsageError("the equation mentions no unknown functions")
    text = ""
    if consts:
        text += f"constants {', '.join(consts)};\n"
    text += f"unknowns {', '.join(funcs)};\n{eq};\n"
    system = parse_system(text)
    r = system.suggested_ranking
    poly = system.equations[0]
    out.write(f"{poly.render(r)} = 0\n")
    c = system.constraint_for(0)
    if c is not None:
        out.write(f"retained: {c.render(r)}\n")
    return 0


_COMMANDS = {
    "derive": _cmd_derive,
    "check": _cmd_check,
    "list-circuits": _cmd_list,
    "algebraize": _cmd_algebraize,
}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        cfg = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else 2
    except UsageError as exc:
        err.write(f"circuitode: error: {exc}\n")
        return 2
    try:
        return _COMMANDS[cfg.subcommand](cfg, out)
    except (MathematicalFailure, EvaluationSingular) as exc:
        err.write(f"circuitode: {type(exc).__name__}: {exc}\n")
        return 1
    except UsageError as exc:
        err.write(f"circuitode: error: {exc}\n")
        return 2
    except CircuitODEError as exc:
        err.write(f"circuitode: {type(exc).__name__}: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run())
