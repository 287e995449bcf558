"""Execution semantics: expression evaluation over timed traces, the event
calendar, and admissibility checking.

Step indexing is 1-based throughout, matching the state sequence notation
used in trace reasoning. Arithmetic is exact; two evaluations of the same
program over the same trace agree bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional

from .syntax import (
    TIME_VAR,
    Arrow,
    Binary,
    Const,
    Expr,
    Hist,
    Initz,
    Ite,
    MinPos,
    NamedExpr,
    Pre,
    SpecProgram,
    TypeTag,
    Unary,
    Var,
)
from .values import INF, Value, value_from_json, value_to_json


class EvalError(Exception):
    """Raised when an expression cannot be evaluated (missing value, pre at
    the initial step, undefined arithmetic)."""


class CalendarExhausted(EvalError):
    """No timeout is strictly ahead of the current time and finite."""


State = dict[str, Value]


@dataclass
class Calendar:
    """Current timeout values; at every admissible step at least one must be
    strictly ahead of the current time and finite."""

    timeouts: list[Value] = field(default_factory=list)


def min_pos(deltas: Iterable[Value]) -> Fraction:
    """Least strictly-positive finite element of `deltas`.

    Negative, zero and infinite entries are ignored; if nothing remains the
    calendar is exhausted.
    """
    best: Optional[Fraction] = None
    for d in deltas:
        if d is INF:
            continue
        if not isinstance(d, (int, Fraction)) or isinstance(d, bool):
            raise EvalError(f"min_pos over non-numeric value {d!r}")
        if d > 0 and (best is None or d < best):
            best = Fraction(d)
    if best is None:
        raise CalendarExhausted(
            "no timeout is strictly greater than the current time and finite"
        )
    return best


def advance_time(prev_t: Optional[Fraction], cal: Calendar) -> Fraction:
    """Next time value: 0 at the initial step, otherwise the previous time
    plus the least positive timeout delta."""
    if prev_t is None:
        return Fraction(0)
    return prev_t + min_pos([to - prev_t for to in cal.timeouts])


@dataclass
class TimedTrace:
    """Paired state and time sequences. `times[i]` mirrors the value of the
    implicit variable `t` in `states[i]`."""

    states: list[State]
    times: list[Fraction]

    @classmethod
    def build(
        cls, states: list[State], times: Optional[list[Fraction]] = None
    ) -> "TimedTrace":
        """Validating constructor: injects `t`, requires strictly increasing
        times."""
        states = [dict(s) for s in states]
        if times is None:
            times = []
            for i, s in enumerate(states):
                if TIME_VAR not in s:
                    raise ValueError(f"state {i + 1} carries no time value")
                tv = s[TIME_VAR]
                if tv is INF or isinstance(tv, bool):
                    raise ValueError(f"state {i + 1} has a non-rational time")
                times.append(Fraction(tv))
        else:
            times = [Fraction(x) for x in times]
            if len(times) != len(states):
                raise ValueError("state and time sequences differ in length")
            for s, tv in zip(states, times):
                s.setdefault(TIME_VAR, tv)
                if Fraction(s[TIME_VAR]) != tv:
                    raise ValueError("state time disagrees with the time sequence")
        for a, b in zip(times, times[1:]):
            if not b > a:
                raise ValueError("times must be strictly increasing")
        return cls(states, times)

    def __len__(self) -> int:
        return len(self.states)

    def state(self, i: int) -> State:
        """1-based state access."""
        return self.states[i - 1]

    def time(self, i: int) -> Fraction:
        return self.times[i - 1]

    def to_json(self, var_order: Optional[list[str]] = None) -> dict:
        if var_order is None:
            seen: list[str] = []
            for s in self.states:
                for k in s:
                    if k != TIME_VAR and k not in seen:
                        seen.append(k)
            var_order = seen
        steps = []
        for s, tv in zip(self.states, self.times):
            step = {"t": value_to_json(Fraction(tv))}
            for name in var_order:
                if name in s:
                    step[name] = value_to_json(s[name])
            steps.append(step)
        return {"vars": var_order, "steps": steps}

    @classmethod
    def from_json(cls, obj: dict, types: Optional[dict[str, TypeTag]] = None) -> "TimedTrace":
        types = types or {}
        states: list[State] = []
        times: list[Fraction] = []
        for step in obj["steps"]:
            s: State = {}
            for name, raw in step.items():
                if name == TIME_VAR:
                    tv = value_from_json(raw, real=True)
                    if tv is INF or isinstance(tv, bool):
                        raise ValueError("time values must be finite rationals")
                    times.append(Fraction(tv))
                    s[TIME_VAR] = Fraction(tv)
                else:
                    real = types.get(name) == TypeTag.REAL
                    s[name] = value_from_json(raw, real=real)
            if TIME_VAR not in s:
                raise ValueError("every trace step needs a time value")
            states.append(s)
        return cls(states, times)

    def dumps(self, var_order: Optional[list[str]] = None) -> str:
        return json.dumps(self.to_json(var_order), indent=2)


EvalFn = Callable[[list[State], int], Value]

_COMPILED: dict[Expr, EvalFn] = {}


def compile_expr(e: Expr) -> EvalFn:
    """Compile an expression to a closure over (states, step). The closure
    reads `states` 0-based but takes 1-based step indices."""
    fn = _COMPILED.get(e)
    if fn is None:
        fn = _compile(e)
        _COMPILED[e] = fn
    return fn


def _compile(e: Expr) -> EvalFn:
    if isinstance(e, Const):
        v = e.value
        return lambda st, i: v
    if isinstance(e, Var):
        name = e.name
        def ev_var(st: list[State], i: int) -> Value:
            try:
                return st[i - 1][name]
            except KeyError:
                raise EvalError(f"variable '{name}' has no value at step {i}") from None
        return ev_var
    if isinstance(e, Unary):
        sub = compile_expr(e.sub)
        if e.op == "not":
            return lambda st, i: not sub(st, i)
        def ev_neg(st: list[State], i: int) -> Value:
            v = sub(st, i)
            try:
                return -v  # type: ignore[operator]
            except ArithmeticError as exc:
                raise EvalError(str(exc)) from None
        return ev_neg
    if isinstance(e, Binary):
        return _compile_binary(e)
    if isinstance(e, Ite):
        cond = compile_expr(e.cond)
        then = compile_expr(e.then)
        orelse = compile_expr(e.orelse)
        return lambda st, i: then(st, i) if cond(st, i) else orelse(st, i)
    if isinstance(e, Arrow):
        init = compile_expr(e.init)
        rest = compile_expr(e.rest)
        return lambda st, i: init(st, i) if i == 1 else rest(st, i)
    if isinstance(e, Pre):
        sub = compile_expr(e.sub)
        def ev_pre(st: list[State], i: int) -> Value:
            if i == 1:
                raise EvalError("pre has no value at the initial step")
            return sub(st, i - 1)
        return ev_pre
    if isinstance(e, Hist):
        sub = compile_expr(e.sub)
        def ev_hist(st: list[State], i: int) -> Value:
            for k in range(1, i + 1):
                if not sub(st, k):
                    return False
            return True
        return ev_hist
    if isinstance(e, Initz):
        sub = compile_expr(e.sub)
        return lambda st, i: True if i == 1 else sub(st, i - 1)
    if isinstance(e, MinPos):
        subs = [compile_expr(a) for a in e.args]
        return lambda st, i: min_pos(s(st, i) for s in subs)
    raise TypeError(f"unknown expression node {e!r}")


def _compile_binary(e: Binary) -> EvalFn:
    lhs = compile_expr(e.lhs)
    rhs = compile_expr(e.rhs)
    op = e.op
    if op == "and":
        return lambda st, i: lhs(st, i) and rhs(st, i)
    if op == "or":
        return lambda st, i: lhs(st, i) or rhs(st, i)
    if op == "=>":
        return lambda st, i: (not lhs(st, i)) or rhs(st, i)
    if op == "=":
        return lambda st, i: lhs(st, i) == rhs(st, i)
    if op in ("<", "<=", ">", ">="):
        import operator
        cmp = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge}[op]
        return lambda st, i: cmp(lhs(st, i), rhs(st, i))
    if op in ("+", "-", "*", "/"):
        import operator
        arith = {"+": operator.add, "-": operator.sub, "*": operator.mul}.get(op)
        if op == "/":
            def ev_div(st: list[State], i: int) -> Value:
                a, b = lhs(st, i), rhs(st, i)
                if a is INF or b is INF:
                    raise EvalError("division involving infinity is undefined")
                if b == 0:
                    raise EvalError("division by zero")
                return Fraction(a) / Fraction(b)
            return ev_div
        def ev_arith(st: list[State], i: int) -> Value:
            a, b = lhs(st, i), rhs(st, i)
            if op == "*" and (a is INF or b is INF):
                raise EvalError("multiplication involving infinity is undefined")
            try:
                return arith(a, b)  # type: ignore[misc]
            except ArithmeticError as exc:
                raise EvalError(str(exc)) from None
        return ev_arith
    raise TypeError(f"unknown binary operator {op!r}")


def eval_expr(e: Expr, trace: TimedTrace, i: int) -> Value:
    """Evaluate at step i (1-based)."""
    if not 1 <= i <= len(trace):
        raise EvalError(f"step {i} outside trace of length {len(trace)}")
    return compile_expr(e)(trace.states, i)


def eval_hist(e: Expr, trace: TimedTrace, i: int) -> bool:
    return bool(eval_expr(Hist(e), trace, i))


def eval_initz(e: Expr, trace: TimedTrace, i: int) -> bool:
    return bool(eval_expr(Initz(e), trace, i))


def calendar_constraint(program: SpecProgram) -> Optional[NamedExpr]:
    """The implicit constraint for `t` when the program has timeouts:
    time starts at 0 and jumps to the nearest pending timeout. Timeout
    values are read from the previous state, so the jump target is fixed
    before any same-step timeout update."""
    if not program.timeouts:
        return None
    t = Var(TIME_VAR)
    deltas = tuple(
        Binary("-", Pre(Var(name)), Pre(t)) for name in program.timeouts
    )
    rule = Arrow(
        Const(Fraction(0)),
        Binary("+", Pre(t), MinPos(deltas)),
    )
    return NamedExpr("calendar", Binary("=", t, rule))


def all_constraints(program: SpecProgram) -> list[NamedExpr]:
    cal = calendar_constraint(program)
    return program.transition + ([cal] if cal else [])


@dataclass
class AdmissibilityReport:
    ok: bool
    step: Optional[int] = None
    constraint: Optional[str] = None

    def __bool__(self) -> bool:
        return self.ok


def trace_admissible(program: SpecProgram, trace: TimedTrace) -> AdmissibilityReport:
    """Check every transition constraint (and the calendar rule, when
    present) at every step; report the first violation."""
    needed = set(program.vars)
    for i, s in enumerate(trace.states, start=1):
        missing = needed - set(s)
        if missing:
            raise EvalError(
                f"state {i} lacks values for: {', '.join(sorted(missing))}"
            )
    for i in range(2, len(trace) + 1):
        if not trace.time(i) > trace.time(i - 1):
            return AdmissibilityReport(False, i, "time-progress")
    constraints = all_constraints(program)
    fns = [(ne.display(f"constraint[{k}]"), compile_expr(ne.expr)) for k, ne in enumerate(constraints)]
    for i in range(1, len(trace) + 1):
        for name, fn in fns:
            if not fn(trace.states, i):
                return AdmissibilityReport(False, i, name)
    return AdmissibilityReport(True)


@dataclass
class InvariantReport:
    holds: bool
    step: Optional[int] = None

    def __bool__(self) -> bool:
        return self.holds


def check_invariant_on_trace(
    program: SpecProgram, prop: Expr, trace: TimedTrace
) -> InvariantReport:
    """True iff the property evaluates true at every step of the trace."""
    fn = compile_expr(prop)
    for i in range(1, len(trace) + 1):
        if not fn(trace.states, i):
            return InvariantReport(False, i)
    return InvariantReport(True)
