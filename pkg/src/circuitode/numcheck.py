"""Numeric and formal checks that a derived ODE agrees with its circuit.

Two independent routes are compared:

* the original system, made explicit through a characteristic set under an
  orderly ranking (derivative order first), and
* the derived single ODE in companion form.

Both are integrated with fixed-step RK4 in extended precision.  In addition
the formal power-series solution of the original system is computed in exact
rational arithmetic and substituted into the derived rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import mpmath
import numpy as np

from .circuits.catalog import Signal, ValidationFixture
from .circuits.system import EquationSystem
from .diffpoly import DerivativeTerm, DiffPolynomial, Ranking
from .errors import EvaluationSingular, InconsistentIC, NonFiniteState
from .nonlinear_elim import RewriteRule, _characteristic_set, rewrite_rules

__all__ = [
    "ExplicitField",
    "Trajectory",
    "OriginalSystem",
    "original_system",
    "to_first_order",
    "rk4_integrate",
    "consistent_ic",
    "solution_series",
    "series_residual",
    "compare_trajectories",
    "rk4_order",
    "validate",
    "signal_series",
    "signal_value",
]

LD = np.longdouble


# ---------------------------------------------------------------------------
# excitations
# ---------------------------------------------------------------------------

def signal_series(sig: Signal, n: int) -> list:
    """First n Taylor coefficients at t = 0, exactly."""
    out = [Fraction(0)] * n
    for kind, a, w in sig.terms:
        if kind == "poly":
            if w < n:
                out[w] += a
            continue
        cycle = (0, 1, 0, -1) if kind == "sin" else (1, 0, -1, 0)
        fact = 1
        for k in range(n):
            if k:
                fact *= k
            if cycle[k % 4]:
                out[k] += a * cycle[k % 4] * Fraction(w) ** k / fact
    return out


def signal_value(sig: Signal, t, order: int = 0):
    """order-th derivative of the signal at float t, in long double."""
    t = LD(t)
    total = LD(0)
    for kind, a, w in sig.terms:
        a = LD(a.numerator) / LD(a.denominator)
        if kind == "poly":
            if order <= w:
                total += a * LD(math.perm(w, order)) * t ** (w - order)
            continue
        wf = LD(Fraction(w).numerator) / LD(Fraction(w).denominator)
        phase = order + (0 if kind == "sin" else 1)
        base = (np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x))[phase % 4]
        total += a * wf ** order * base(wf * t)
    return total


# ---------------------------------------------------------------------------
# truncated power series over Fraction
# ---------------------------------------------------------------------------

def _smul(a, b):
    n = min(len(a), len(b))
    return [sum((a[i] * b[k - i] for i in range(k + 1)), Fraction(0)) for k in range(n)]


def _sdiv(a, b):
    n = min(len(a), len(b))
    if b[0] == 0:
        raise EvaluationSingular("a denominator vanishes at the expansion point")
    q = []
    for k in range(n):
        s = a[k] - sum((q[i] * b[k - i] for i in range(k)), Fraction(0))
        q.append(s / b[0])
    return q


def _sderiv(a):
    return [a[k] * k for k in range(1, len(a))]


def _sint(a, c0):
    return [Fraction(c0)] + [a[k] / (k + 1) for k in range(len(a))]


class _SeriesEnv:
    """Series of functions and their derivatives, computed on demand."""

    def __init__(self, base: Mapping[str, list]):
        self.base = dict(base)
        self.cache: dict = {}

    def term(self, t: DerivativeTerm) -> list:
        key = (t.function, t.order)
        if key not in self.cache:
            s = self.base[t.function]
            for _ in range(t.order):
                s = _sderiv(s)
            self.cache[key] = s
        return self.cache[key]

    def poly(self, p: DiffPolynomial, n: int) -> list:
        """Series of p, truncated to the shortest valid length (at most n)."""
        total = [Fraction(0)] * n
        for m, c in p.terms.items():
            s = [c.to_fraction()] + [Fraction(0)] * (n - 1)
            for t, e in m:
                for _ in range(e):
                    s = _smul(s, self.term(t))
            if len(s) < len(total):
                total = total[:len(s)]
            for k in range(len(total)):
                total[k] += s[k]
        return total


# ---------------------------------------------------------------------------
# vector fields
# ---------------------------------------------------------------------------

@dataclass
class ExplicitField:
    """y' = rhs(t, y) on long double vectors.

    ``observe(name, t, y)`` returns the value of any function of the
    underlying system along a state.
    """

    dimension: int
    rhs: Callable
    states: tuple = ()
    observe: Callable | None = None

    def __call__(self, t, y):
        return self.rhs(t, y)

    @classmethod
    def from_callable(cls, dimension: int, func: Callable) -> "ExplicitField":
        return cls(dimension, lambda t, y: np.asarray(func(t, y), dtype=LD))


@dataclass
class Trajectory:
    """Uniform grid ``times`` and ``states`` with one row per grid point."""

    times: np.ndarray
    states: np.ndarray

    def __len__(self):
        return len(self.times)


def _ld(fr: Fraction):
    return LD(fr.numerator) / LD(fr.denominator)


def _compile(polys: Sequence[DiffPolynomial], slots: Mapping[DerivativeTerm, int]) -> Callable:
    """Compile rational-coefficient polynomials into one long double function."""
    consts: dict = {}
    exprs = []
    for p in polys:
        parts = []
        for m, c in p.terms.items():
            name = f"c{len(consts)}"
            consts[name] = _ld(c.to_fraction())
            factors = [name]
            for t, e in m:
                v = f"v[{slots[t]}]"
                factors.append(v if e == 1 else f"{v}**{e}")
            parts.append("*".join(factors))
        exprs.append(" + ".join(parts) if parts else "c_zero")
    consts["c_zero"] = LD(0)
    src = "def _f(v):\n    return (" + ", ".join(exprs) + ",)\n"
    ns = dict(consts)
    exec(compile(src, "<compiled polynomials>", "exec"), ns)
    return ns["_f"]


def _field_from_rules(rules: Sequence[RewriteRule], signals: Mapping[str, Signal],
                      excitations: Sequence[str]) -> ExplicitField:
    """Explicit field from rules whose right-hand sides only use states and inputs."""
    state_rules = [r for r in rules if r.order >= 1]
    alg_rules = {r.lhs.function: r for r in rules if r.order == 0}
    states = [DerivativeTerm(r.lhs.function, j) for r in state_rules for j in range(r.order)]
    slots = {t: i for i, t in enumerate(states)}
    exc_terms = sorted({t for r in rules for p in (r.rhs_num, r.rhs_den)
                        for t in p.indeterminates() if t.function in excitations})
    for t in exc_terms:
        slots[t] = len(slots)
    for r in rules:
        for t in r.rhs_num.indeterminates() | r.rhs_den.indeterminates():
            if t not in slots:
                raise EvaluationSingular(f"rule for {r.lhs} is not explicit: uses {t}")
    for e in excitations:
        if e not in signals and any(t.function == e for t in exc_terms):
            raise InconsistentIC(f"no signal given for excitation {e!r}")
    dim = len(states)
    ordered = state_rules + list(alg_rules.values())
    f = _compile([p for r in ordered for p in (r.rhs_num, r.rhs_den)], slots)
    idx = {r.lhs.function: i for i, r in enumerate(ordered)}
    shift = [i + 1 if i + 1 < dim and states[i + 1].function == states[i].function else None
             for i in range(dim)]
    last = {}
    for i, t in enumerate(states):
        if shift[i] is None:
            last[i] = idx[t.function]

    def values(t, y):
        v = np.empty(len(slots), dtype=LD)
        v[:dim] = y
        for k, term in enumerate(exc_terms):
            v[dim + k] = signal_value(signals[term.function], t, term.order)
        return v

    def rhs(t, y):
        out = f(values(t, y))
        dy = np.empty(dim, dtype=LD)
        for i in range(dim):
            if shift[i] is not None:
                dy[i] = y[shift[i]]
            else:
                j = last[i]
                den = out[2 * j + 1]
                if den == 0:
                    raise EvaluationSingular(f"denominator of the rule for {states[i]} vanishes")
                dy[i] = out[2 * j] / den
        return dy

    def observe(name, t, y):
        if DerivativeTerm(name, 0) in slots and slots[DerivativeTerm(name, 0)] < dim:
            return y[slots[DerivativeTerm(name, 0)]]
        if name in signals:
            return signal_value(signals[name], t)
        out = f(values(t, y))
        j = idx[name]
        return out[2 * j] / out[2 * j + 1]

    return ExplicitField(dim, rhs, tuple(states), observe)


def to_first_order(rule: RewriteRule, assignment: Mapping[str, Fraction] | None = None,
                   signals: Mapping[str, Signal] | None = None) -> ExplicitField:
    """Companion-form field (x, x', ..., x^(m-1)) for a rule x^(m) = N/D."""
    if assignment:
        rule = rule.substitute_constants(assignment)
    leftover = _const_symbols(rule.rhs_num) | _const_symbols(rule.rhs_den)
    if leftover:
        raise EvaluationSingular(f"constants {sorted(leftover)} have no value")
    excitations = sorted((rule.rhs_num.functions() | rule.rhs_den.functions()) - {rule.lhs.function})
    return _field_from_rules([rule], signals or {}, excitations)


def _const_symbols(p: DiffPolynomial) -> set:
    out = set()
    for c in p.terms.values():
        out |= c.symbols()
    return out


def rk4_integrate(f: ExplicitField, ic: Sequence, span: Sequence, h: float) -> Trajectory:
    """Classical fixed-step RK4; the step is adjusted to divide the span."""
    t0, t1 = LD(float(span[0])), LD(float(span[1]))
    if h <= 0 or t1 <= t0:
        raise ValueError("need h > 0 and a nondegenerate span")
    n = max(1, int(round(float((t1 - t0) / LD(h)))))
    h = (t1 - t0) / n
    y = np.array([_ld(Fraction(v)) if isinstance(v, Fraction) else LD(v) for v in ic], dtype=LD)
    if len(y) != f.dimension:
        raise ValueError(f"initial vector has {len(y)} entries, field has dimension {f.dimension}")
    times = t0 + h * np.arange(n + 1, dtype=LD)
    states = np.empty((n + 1, f.dimension), dtype=LD)
    states[0] = y
    for k in range(n):
        t = times[k]
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            partial = Trajectory(times[:k + 1], states[:k + 1])
            raise NonFiniteState(f"non-finite state at t = {float(times[k + 1])}", partial)
        states[k + 1] = y
    return Trajectory(times, states)


def rk4_order(f: ExplicitField, ic: Sequence, span: Sequence, h: float) -> float:
    """Observed convergence order from three step sizes h, h/2, h/4."""
    ends = [rk4_integrate(f, ic, span, h / 2 ** j).states[-1] for j in range(3)]
    e1 = float(np.max(np.abs(ends[0] - ends[1])))
    e2 = float(np.max(np.abs(ends[1] - ends[2])))
    return math.log2(e1 / e2)


# ---------------------------------------------------------------------------
# the original system
# ---------------------------------------------------------------------------

class _OrderlyRanking(Ranking):
    """Derivative order first, then the declared order; inputs always lowest."""

    def key(self, t: DerivativeTerm):
        return (0 if t.function in self.excitations else 1, t.order, self.position(t.function))


@dataclass
class OriginalSystem:
    """The circuit with constants fixed and solved for its highest derivatives."""

    system: EquationSystem
    assignment: dict
    rules: list
    state_functions: dict  # function -> order of its rule
    algebraic: dict        # function -> rule
    signals: dict = dc_field(default_factory=dict)

    def field(self) -> ExplicitField:
        return _field_from_rules(self.rules, self.signals, self.system.excitations)


def original_system(sys: EquationSystem, assignment: Mapping[str, Fraction],
                    signals: Mapping[str, Signal] | None = None) -> OriginalSystem:
    missing = [c for c in sys.constants if c not in assignment]
    if missing:
        raise EvaluationSingular(f"constants {missing} have no value")
    fixed = sys.substitute_constants(assignment)
    r = _OrderlyRanking(fixed.suggested_ranking.unknowns, fixed.suggested_ranking.excitations)
    chain = _characteristic_set(fixed.equations, r, None)
    rules = rewrite_rules(chain)
    covered = {rule.lhs.function for rule in rules}
    free = set(sys.unknowns) - covered
    if free:
        raise InconsistentIC(f"the system does not determine {sorted(free)}")
    return OriginalSystem(
        system=fixed,
        assignment=dict(assignment),
        rules=rules,
        state_functions={rl.lhs.function: rl.order for rl in rules if rl.order >= 1},
        algebraic={rl.lhs.function: rl for rl in rules if rl.order == 0},
        signals=dict(signals or {}),
    )


def _term_key(key) -> DerivativeTerm:
    if isinstance(key, DerivativeTerm):
        return key
    name = key.rstrip("'")
    return DerivativeTerm(name, len(key) - len(name))


def _exact_transcendental(fn: str, w: Fraction) -> Fraction | None:
    if fn in ("arctan", "tan") and w == 0:
        return Fraction(0)
    if fn == "exp" and w == 0:
        return Fraction(1)
    if fn == "log" and w == 1:
        return Fraction(0)
    return None


def _initial_state(orig: OriginalSystem, base_ic: Mapping) -> dict:
    """Values at t0 of every state term and algebraic unknown, exactly.

    Missing entries are filled from algebraic rules, from rules that are
    linear in a single missing state, and from transcendental constraints at
    points where they have a rational value.
    """
    signals = orig.signals
    known: dict = {}
    for key, v in base_ic.items():
        known[_term_key(key)] = Fraction(v)
    for name in orig.system.excitations:
        sig = signals.get(name, Signal())
        ser = signal_series(sig, 8)
        for j in range(8):
            known.setdefault(DerivativeTerm(name, j), ser[j] * math.factorial(j))
    supplied = dict(known)
    needed = [DerivativeTerm(f, j) for f, k in orig.state_functions.items() for j in range(k)]
    needed += [DerivativeTerm(f, 0) for f in orig.algebraic]

    def try_eval(p):
        ts = p.indeterminates()
        if all(t in known for t in ts):
            return p.evaluate(known)
        return None

    for _ in range(len(needed) + 2):
        progress = False
        for f, rule in orig.algebraic.items():
            t = DerivativeTerm(f, 0)
            num, den = try_eval(rule.rhs_num), try_eval(rule.rhs_den)
            if num is not None and den is not None:
                if den == 0:
                    raise EvaluationSingular(f"rule for {f} is singular at t0")
                val = num / den
                if t in known and known[t] != val:
                    raise InconsistentIC(f"initial value {f} = {known[t]} contradicts {f} = {val}")
                if t not in known:
                    known[t] = val
                    progress = True
            elif t in known:
                # solve den*value - num = 0 for a single missing state if linear
                rel = rule.rhs_den.scale(rule.rhs_den.field(known[t])) - rule.rhs_num
                missing = [u for u in rel.indeterminates() if u not in known]
                if len(missing) == 1 and rel.degree(missing[0]) == 1:
                    u = missing[0]
                    a = rel.coefficient(u, 1).evaluate(known)
                    b = rel.coefficient(u, 0).evaluate(known)
                    if a != 0:
                        known[u] = -b / a
                        progress = True
        for c in orig.system.constraints:
            terms = c.argument.indeterminates() | c.factor.indeterminates() | c.offset.indeterminates()
            missing = [u for u in terms if u not in known]
            if len(missing) != 1 or missing[0] in c.argument.indeterminates():
                continue
            u = missing[0]
            fw = _exact_transcendental(c.function, c.argument.evaluate(known))
            if fw is None or c.factor.degree(u) > 0:
                continue
            rel = c.factor.scale(c.factor.field(fw)) + c.offset
            if rel.degree(u) != 1:
                continue
            a = rel.coefficient(u, 1).evaluate(known)
            b = rel.coefficient(u, 0).evaluate(known)
            if a != 0:
                known[u] = -b / a
                progress = True
        if all(t in known for t in needed) or not progress:
            break
    absent = [str(t) for t in needed if t not in known]
    if absent:
        raise InconsistentIC(f"initial values of {absent} are not determined by the given data")
    for c in orig.system.constraints:
        with mpmath.workdps(40):
            res = c.residual(known)
        if abs(res) > mpmath.mpf("1e-25"):
            raise InconsistentIC(
                f"initial values violate {c.render(orig.system.suggested_ranking)} "
                f"(residual {mpmath.nstr(res, 5)})"
            )
    for t, v in supplied.items():
        if t.function in orig.system.unknowns and t.order == 0 and known.get(t) != v:
            raise InconsistentIC(f"supplied {t} = {v} is inconsistent")
    return known


def solution_series(orig: OriginalSystem, base_ic: Mapping, n: int) -> dict:
    """Exact Taylor coefficients (length n) at t0 = 0 of every unknown."""
    ic = _initial_state(orig, base_ic)
    kmax = max(orig.state_functions.values(), default=0)
    L = n + kmax + 1
    exc = {e: signal_series(orig.signals.get(e, Signal()), L + 8) for e in orig.system.excitations}
    current = {}
    for f, k in orig.state_functions.items():
        s = [ic[DerivativeTerm(f, j)] / math.factorial(j) for j in range(k)]
        current[f] = s + [Fraction(0)] * (L - k)
    state_rules = [r for r in orig.rules if r.order >= 1]
    for _ in range(L + 3):
        env = _SeriesEnv({**exc, **current})
        new = {}
        for rule in state_rules:
            k = rule.order
            rhs = _sdiv(env.poly(rule.rhs_num, L), env.poly(rule.rhs_den, L))
            s = rhs
            for j in range(k - 1, -1, -1):
                s = _sint(s, ic[DerivativeTerm(rule.lhs.function, j)])
            new[rule.lhs.function] = (s + [Fraction(0)] * L)[:L]
        if new == current:
            break
        current = new
    else:
        raise EvaluationSingular("series iteration did not settle")
    env = _SeriesEnv({**exc, **current})
    out = {f: s[:n] for f, s in current.items()}
    for f, rule in orig.algebraic.items():
        out[f] = _sdiv(env.poly(rule.rhs_num, L), env.poly(rule.rhs_den, L))[:n]
    for e, s in exc.items():
        out[e] = s[:n]
    return out


def consistent_ic(orig: OriginalSystem, rule: RewriteRule, base_ic: Mapping) -> list:
    """Exact x(t0), x'(t0), ..., x^(m-1)(t0) for the target of ``rule``."""
    m = rule.order
    ser = solution_series(orig, base_ic, m + 1)[rule.lhs.function]
    return [ser[j] * math.factorial(j) for j in range(m)]


def series_residual(orig: OriginalSystem, rule: RewriteRule, base_ic: Mapping, k: int) -> list:
    """First k Taylor coefficients of den*x^(m) - num along the exact solution."""
    if orig.assignment:
        rule = rule.substitute_constants(orig.assignment)
    deps = rule.rhs_num.indeterminates() | rule.rhs_den.indeterminates() | {rule.lhs}
    need = max(t.order for t in deps)
    ser = solution_series(orig, base_ic, k + need + 1)
    env = _SeriesEnv(ser)
    lhs = env.term(rule.lhs)
    res = [a - b for a, b in zip(_smul(env.poly(rule.rhs_den, k + 1), lhs),
                                 env.poly(rule.rhs_num, k + 1))]
    return res[:k]


# ---------------------------------------------------------------------------
# trajectories and reports
# ---------------------------------------------------------------------------

def compare_trajectories(orig: OriginalSystem, rule: RewriteRule, base_ic: Mapping,
                         span: Sequence, h: float) -> dict:
    """Max relative deviation of the target between the two routes."""
    target = rule.lhs.function
    rule = rule.substitute_constants(orig.assignment)
    ic0 = _initial_state(orig, base_ic)
    f_orig = orig.field()
    y0 = [ic0[t] for t in f_orig.states]
    traj_o = rk4_integrate(f_orig, y0, span, h)
    f_der = to_first_order(rule, None, orig.signals)
    traj_d = rk4_integrate(f_der, consistent_ic(orig, rule, base_ic), span, h)
    xo = np.array([f_orig.observe(target, t, y) for t, y in zip(traj_o.times, traj_o.states)],
                  dtype=LD)
    xd = traj_d.states[:, 0]
    dev = np.abs(xo - xd) / (1 + np.abs(xo))
    return {
        "max_relative_deviation": float(np.max(dev)),
        "steps": len(traj_o) - 1,
        "final_original": float(xo[-1]),
        "final_derived": float(xd[-1]),
    }


def validate(sys: EquationSystem, rule: RewriteRule, fixture: ValidationFixture,
             name: str = "", series_order: int = 6, span=None, step: float | None = None,
             tolerance: float = 1e-6) -> dict:
    """Series and trajectory checks; returns a JSON-ready report."""
    orig = original_system(sys, fixture.constants, fixture.excitations)
    residuals = series_residual(orig, rule, fixture.base_ic, series_order)
    nonzero = [i for i, c in enumerate(residuals) if c != 0]
    span = tuple(span or fixture.span)
    step = step or fixture.step
    report = {
        "circuit": name or sys.name,
        "target": rule.lhs.function,
        "order": rule.order,
        "series_order": series_order,
        "series_residuals": [str(c) for c in residuals],
        "series_ok": not nonzero,
        "first_nonzero_order": nonzero[0] if nonzero else None,
        "span": [float(span[0]), float(span[1])],
        "step": step,
        "tolerance": tolerance,
    }
    try:
        traj = compare_trajectories(orig, rule, fixture.base_ic, span, step)
        report.update(traj)
        report["trajectory_ok"] = traj["max_relative_deviation"] < tolerance
    except (NonFiniteState, EvaluationSingular) as exc:
        report["max_relative_deviation"] = None
        report["trajectory_ok"] = False
        report["error"] = str(exc)
    report["passed"] = report["series_ok"] and report["trajectory_ok"]
    return report
