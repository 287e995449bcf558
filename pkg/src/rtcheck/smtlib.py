"""SMT-LIB 2.6 emission and model decoding.

State at step i is encoded by indexed symbols `|x@i|`. The temporal
operators unroll structurally: an arrow picks its left side exactly at the
initial step of the script (bounded unrollings start initial, inductive
step windows have no initial step), `pre` shifts the index.

Timeout slots may hold positive infinity; on the wire a designated negative
sentinel (-1) stands for it, which keeps the calendar's minimum-positive
selection correct without a special sort. Comparisons and sums over
possibly-infinite subterms are emitted with sentinel guards, and every
possibly-infinite variable is constrained to be either nonnegative or
exactly the sentinel, so equality stays structural and models decode
unambiguously.

Scripts are plain QF_LIRA/QF_LRA text with no solver-specific extensions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import sexpr as sx_reader
from .semantics import TimedTrace, calendar_constraint
from .syntax import (
    Arrow,
    Binary,
    Const,
    Expr,
    Hist,
    Initz,
    Ite,
    MinPos,
    Pre,
    SpecProgram,
    TIME_VAR,
    TypeTag,
    Unary,
    Var,
    free_vars,
)
from .transform import lower_temporal
from .typecheck import infer_type, type_check
from .values import INF, Value

SENTINEL = "(- 1)"


class EmissionError(Exception):
    pass


class DecodeError(Exception):
    pass


def _rat_text(x: Fraction) -> str:
    if x.denominator == 1:
        n = x.numerator
        return f"{n}.0" if n >= 0 else f"(- {-n}.0)"
    n, d = x.numerator, x.denominator
    if n >= 0:
        return f"(/ {n}.0 {d}.0)"
    return f"(- (/ {-n}.0 {d}.0))"


def _int_text(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def pre_depth(e: Expr) -> int:
    """Maximum chain of previous-state references the expression can reach."""
    if isinstance(e, (Const, Var)):
        return 0
    if isinstance(e, Unary):
        return pre_depth(e.sub)
    if isinstance(e, Binary):
        return max(pre_depth(e.lhs), pre_depth(e.rhs))
    if isinstance(e, Ite):
        return max(pre_depth(e.cond), pre_depth(e.then), pre_depth(e.orelse))
    if isinstance(e, Arrow):
        return max(pre_depth(e.init), pre_depth(e.rest))
    if isinstance(e, Pre):
        return 1 + pre_depth(e.sub)
    if isinstance(e, (Hist, Initz)):
        return 1 + pre_depth(e.sub)
    if isinstance(e, MinPos):
        return max((pre_depth(a) for a in e.args), default=0)
    raise TypeError(f"unknown expression node {e!r}")


def _check_linear(e: Expr, what: str) -> None:
    if isinstance(e, Binary):
        if e.op == "*" and not (_is_const(e.lhs) or _is_const(e.rhs)):
            raise EmissionError(
                f"nonlinear arithmetic in {what}: product of two variables"
            )
        if e.op == "/" and not _is_const(e.rhs):
            raise EmissionError(
                f"nonlinear arithmetic in {what}: non-constant divisor"
            )
        _check_linear(e.lhs, what)
        _check_linear(e.rhs, what)
    elif isinstance(e, Unary):
        _check_linear(e.sub, what)
    elif isinstance(e, Ite):
        _check_linear(e.cond, what)
        _check_linear(e.then, what)
        _check_linear(e.orelse, what)
    elif isinstance(e, Arrow):
        _check_linear(e.init, what)
        _check_linear(e.rest, what)
    elif isinstance(e, (Pre, Hist, Initz)):
        _check_linear(e.sub, what)
    elif isinstance(e, MinPos):
        for a in e.args:
            _check_linear(a, what)


def _is_const(e: Expr) -> bool:
    if isinstance(e, Const):
        return True
    if isinstance(e, Unary) and e.op == "-":
        return _is_const(e.sub)
    return False


def _contains_inf(e: Expr) -> bool:
    if isinstance(e, Const):
        return e.value is INF
    if isinstance(e, Var):
        return False
    if isinstance(e, Unary):
        return _contains_inf(e.sub)
    if isinstance(e, Binary):
        return _contains_inf(e.lhs) or _contains_inf(e.rhs)
    if isinstance(e, Ite):
        return any(_contains_inf(x) for x in (e.cond, e.then, e.orelse))
    if isinstance(e, Arrow):
        return _contains_inf(e.init) or _contains_inf(e.rest)
    if isinstance(e, (Pre, Hist, Initz)):
        return _contains_inf(e.sub)
    if isinstance(e, MinPos):
        return any(_contains_inf(a) for a in e.args)
    raise TypeError(f"unknown expression node {e!r}")


def tainted_vars(program: SpecProgram) -> set[str]:
    """Variables that may carry the infinity sentinel: timeout slots plus
    any real variable equationally fed from an infinity literal or another
    tainted variable. Only reals can hold infinity."""
    tainted = set(program.timeouts)
    changed = True
    while changed:
        changed = False
        for ne in program.transition:
            e = ne.expr
            if not (isinstance(e, Binary) and e.op == "="):
                continue
            for lhs, rhs in ((e.lhs, e.rhs), (e.rhs, e.lhs)):
                if not isinstance(lhs, Var) or lhs.name in tainted:
                    continue
                if program.vars.get(lhs.name) is not TypeTag.REAL:
                    continue
                if _contains_inf(rhs) or (free_vars(rhs) & tainted):
                    tainted.add(lhs.name)
                    changed = True
    tainted.discard(TIME_VAR)
    return tainted


@dataclass
class _Emitted:
    text: str
    tainted: bool


class Emitter:
    """Builds bounded-unrolling and inductive-step scripts for one
    (program, property) pair."""

    def __init__(
        self,
        program: SpecProgram,
        prop: Expr,
        lemmas: Optional[list[Expr]] = None,
        time_grid: Optional[list[Fraction]] = None,
    ):
        lowered, extras = lower_temporal(program, [prop] + list(lemmas or []))
        cal = calendar_constraint(lowered)
        if cal is not None:
            lowered.transition.append(cal)
        self.program = lowered
        self.prop = extras[0]
        self.lemmas = extras[1:]
        self.types = dict(lowered.vars)
        type_check(lowered)
        ptype = infer_type(self.prop, lowered)
        if ptype is not TypeTag.BOOL:
            raise EmissionError("property must be boolean")
        for k, lemma in enumerate(self.lemmas):
            if infer_type(lemma, lowered) is not TypeTag.BOOL:
                raise EmissionError(f"lemma {k} must be boolean")
        for ne in lowered.transition:
            _check_linear(ne.expr, ne.display("constraint"))
        _check_linear(self.prop, "property")
        self.tainted = tainted_vars(lowered)
        self.uses_time = lowered.uses_time() or TIME_VAR in free_vars(self.prop)
        for lemma in self.lemmas:
            self.uses_time = self.uses_time or TIME_VAR in free_vars(lemma)
        self.time_grid = [Fraction(g) for g in (time_grid or [])]
        if any(g <= 0 for g in self.time_grid):
            raise EmissionError("time grid deltas must be strictly positive")
        self.depth_pad = max(
            [pre_depth(ne.expr) for ne in lowered.transition]
            + [pre_depth(self.prop)]
            + [pre_depth(l) for l in self.lemmas]
            + [1]
        )
        self._let_counter = 0

    # ----- expression emission -------------------------------------------

    def _sym(self, name: str, step: int) -> str:
        return f"|{name}@{step}|"

    def _var_sort(self, name: str) -> str:
        if name == TIME_VAR:
            return "Real"
        ty = self.types.get(name)
        if ty is None:
            raise EmissionError(f"undeclared variable '{name}'")
        return {TypeTag.BOOL: "Bool", TypeTag.INT: "Int", TypeTag.REAL: "Real"}[ty]

    def emit(self, e: Expr, step: int, init_step: Optional[int]) -> _Emitted:
        if isinstance(e, Const):
            v = e.value
            if isinstance(v, bool):
                return _Emitted("true" if v else "false", False)
            if v is INF:
                return _Emitted(SENTINEL, True)
            if isinstance(v, Fraction):
                return _Emitted(_rat_text(v), False)
            return _Emitted(_int_text(v), False)
        if isinstance(e, Var):
            return _Emitted(self._sym(e.name, step), e.name in self.tainted)
        if isinstance(e, Unary):
            sub = self.emit(e.sub, step, init_step)
            if e.op == "not":
                return _Emitted(f"(not {sub.text})", False)
            if sub.tainted:
                raise EmissionError("cannot negate a possibly-infinite value")
            return _Emitted(f"(- {sub.text})", False)
        if isinstance(e, Binary):
            return self._emit_binary(e, step, init_step)
        if isinstance(e, Ite):
            c = self.emit(e.cond, step, init_step)
            a = self.emit(e.then, step, init_step)
            b = self.emit(e.orelse, step, init_step)
            return _Emitted(
                f"(ite {c.text} {a.text} {b.text})", a.tainted or b.tainted
            )
        if isinstance(e, Arrow):
            if init_step is not None and step == init_step:
                return self.emit(e.init, step, init_step)
            return self.emit(e.rest, step, init_step)
        if isinstance(e, Pre):
            return self.emit(e.sub, step - 1, init_step)
        if isinstance(e, (Hist, Initz)):
            raise EmissionError("history operators must be lowered before emission")
        if isinstance(e, MinPos):
            return self._emit_min_pos(e, step, init_step)
        raise TypeError(f"unknown expression node {e!r}")

    def _emit_binary(self, e: Binary, step: int, init_step: Optional[int]) -> _Emitted:
        op = e.op
        if op in ("and", "or"):
            a = self.emit(e.lhs, step, init_step)
            b = self.emit(e.rhs, step, init_step)
            return _Emitted(f"({op} {a.text} {b.text})", False)
        if op == "=>":
            a = self.emit(e.lhs, step, init_step)
            b = self.emit(e.rhs, step, init_step)
            return _Emitted(f"(=> {a.text} {b.text})", False)
        a = self.emit(e.lhs, step, init_step)
        b = self.emit(e.rhs, step, init_step)
        if op == "=":
            return _Emitted(f"(= {a.text} {b.text})", False)
        if op in ("<", "<=", ">", ">="):
            if op == ">":
                a, b, op = b, a, "<"
            elif op == ">=":
                a, b, op = b, a, "<="
            return _Emitted(self._guarded_cmp(op, a, b), False)
        if op in ("+", "-"):
            if not a.tainted and not b.tainted:
                return _Emitted(f"({op} {a.text} {b.text})", False)
            if op == "-" and b.tainted:
                raise EmissionError("cannot subtract a possibly-infinite value")
            guards = [f"(< {x.text} 0.0)" for x in (a, b) if x.tainted]
            guard = guards[0] if len(guards) == 1 else f"(or {' '.join(guards)})"
            return _Emitted(
                f"(ite {guard} {SENTINEL} ({op} {a.text} {b.text}))", True
            )
        if op in ("*", "/"):
            if a.tainted or b.tainted:
                raise EmissionError(
                    "cannot multiply or divide a possibly-infinite value"
                )
            if op == "/":
                return _Emitted(f"(/ {a.text} {b.text})", False)
            return _Emitted(f"(* {a.text} {b.text})", False)
        raise EmissionError(f"unknown operator '{op}'")

    def _guarded_cmp(self, op: str, a: _Emitted, b: _Emitted) -> str:
        # op is < or <=; infinity encodes as a negative sentinel while every
        # finite possibly-infinite value is nonnegative
        if not a.tainted and not b.tainted:
            return f"({op} {a.text} {b.text})"
        if a.tainted and b.tainted:
            if op == "<":
                return (
                    f"(and (>= {a.text} 0.0) "
                    f"(or (< {b.text} 0.0) (< {a.text} {b.text})))"
                )
            return (
                f"(ite (< {a.text} 0.0) (< {b.text} 0.0) "
                f"(or (< {b.text} 0.0) (<= {a.text} {b.text})))"
            )
        if b.tainted:
            return f"(or (< {b.text} 0.0) ({op} {a.text} {b.text}))"
        # a tainted, b finite: a must be finite and satisfy the comparison
        return f"(and (>= {a.text} 0.0) ({op} {a.text} {b.text}))"

    def _emit_min_pos(self, e: MinPos, step: int, init_step: Optional[int]) -> _Emitted:
        args = [self.emit(a, step, init_step) for a in e.args]
        self._let_counter += 1
        tag = self._let_counter
        binds = " ".join(f"(mp{tag}d{k} {a.text})" for k, a in enumerate(args))
        # fold with named intermediates so the text stays linear in the
        # number of timeouts
        body = f"(let ((mp{tag}m0 mp{tag}d0)) "
        closing = 1
        for k in range(1, len(args)):
            d = f"mp{tag}d{k}"
            prev = f"mp{tag}m{k - 1}"
            body += (
                f"(let ((mp{tag}m{k} (ite (and (> {d} 0.0) "
                f"(or (<= {prev} 0.0) (< {d} {prev}))) {d} {prev}))) "
            )
            closing += 1
        body += f"mp{tag}m{len(args) - 1}" + ")" * closing
        return _Emitted(f"(let ({binds}) {body})", False)

    def min_pos_guard(self, e: MinPos, step: int, init_step: Optional[int]) -> str:
        """Side condition: some delta is strictly positive (and finite, which
        the sentinel encoding gives for free)."""
        args = [self.emit(a, step, init_step) for a in e.args]
        pos = [f"(> {a.text} 0.0)" for a in args]
        return pos[0] if len(pos) == 1 else f"(or {' '.join(pos)})"

    # ----- script assembly -------------------------------------------------

    def _logic(self) -> str:
        tys = set(self.types.values())
        if self.uses_time:
            tys.add(TypeTag.REAL)
        has_int = TypeTag.INT in tys
        has_real = TypeTag.REAL in tys
        if has_int and has_real:
            return "QF_LIRA"
        if has_real:
            return "QF_LRA"
        if has_int:
            return "QF_LIA"
        return "QF_UF"

    def _decls(self, lo: int, hi: int) -> list[str]:
        out = []
        names = list(self.program.vars)
        if self.uses_time:
            names.append(TIME_VAR)
        for i in range(lo, hi + 1):
            for name in names:
                out.append(
                    f"(declare-const {self._sym(name, i)} {self._var_sort(name)})"
                )
            for name in names:
                if name in self.tainted:
                    s = self._sym(name, i)
                    out.append(f"(assert (or (>= {s} 0.0) (= {s} {SENTINEL})))")
        return out

    def _step_asserts(self, i: int, init_step: Optional[int]) -> list[str]:
        out = []
        for ne in self.program.transition:
            out.append(f"(assert {self.emit(ne.expr, i, init_step).text})")
            for node in _min_pos_nodes(ne.expr):
                if init_step is not None and i == init_step:
                    continue  # initial step takes the arrow's left side
                out.append(f"(assert {self.min_pos_guard(node, i, init_step)})")
        return out

    def _time_asserts(self, lo: int, hi: int, init_step: Optional[int]) -> list[str]:
        if not self.uses_time:
            return []
        out = []
        t = lambda i: self._sym(TIME_VAR, i)
        if init_step is not None:
            out.append(f"(assert (= {t(init_step)} 0.0))")
        else:
            out.append(f"(assert (>= {t(lo)} 0.0))")
        for i in range(lo + 1, hi + 1):
            out.append(f"(assert (> {t(i)} {t(i - 1)}))")
            if self.time_grid:
                opts = " ".join(
                    f"(= (- {t(i)} {t(i - 1)}) {_rat_text(g)})"
                    for g in self.time_grid
                )
                clause = opts if len(self.time_grid) == 1 else f"(or {opts})"
                out.append(f"(assert {clause})")
        return out

    def _header(self, comment: str) -> list[str]:
        return [
            f"; {comment}",
            "(set-option :produce-models true)",
            f"(set-logic {self._logic()})",
        ]

    def script_bmc(self, depth: int) -> str:
        """Violation search at exactly `depth` steps from the initial state."""
        lines = self._header(f"bounded reachability, depth {depth}")
        lines += self._decls(1, depth)
        lines += self._time_asserts(1, depth, init_step=1)
        for i in range(1, depth + 1):
            lines += self._step_asserts(i, init_step=1)
        for lemma in self.lemmas:
            for i in range(1, depth + 1):
                lines.append(f"(assert {self.emit(lemma, i, 1).text})")
        lines.append(f"(assert (not {self.emit(self.prop, depth, 1).text}))")
        lines.append("(check-sat)")
        lines.append("(get-model)")
        lines.append("(exit)")
        return "\n".join(lines) + "\n"

    def script_base(self, k: int) -> str:
        """Induction base: the property holds at every step up to k."""
        lines = self._header(f"induction base, depth {k}")
        lines += self._decls(1, k)
        lines += self._time_asserts(1, k, init_step=1)
        for i in range(1, k + 1):
            lines += self._step_asserts(i, init_step=1)
        for lemma in self.lemmas:
            for i in range(1, k + 1):
                lines.append(f"(assert {self.emit(lemma, i, 1).text})")
        bad = " ".join(
            f"(not {self.emit(self.prop, i, 1).text})" for i in range(1, k + 1)
        )
        lines.append(f"(assert (or {bad}))" if k > 1 else f"(assert {bad})")
        lines.append("(check-sat)")
        lines.append("(get-model)")
        lines.append("(exit)")
        return "\n".join(lines) + "\n"

    def script_step(self, k: int) -> str:
        """Inductive step over a window of k assumed states anywhere in the
        trace: constraints hold on the window, the property holds at the
        first k states, and fails at state k+1. Unsatisfiability proves the
        property k-inductive. Extra context states feed `pre` chains."""
        lo = 1 - self.depth_pad
        hi = k + 1
        lines = self._header(f"induction step, window {k}")
        lines += self._decls(lo, hi)
        lines += self._time_asserts(lo, hi, init_step=None)
        for i in range(1, hi + 1):
            lines += self._step_asserts(i, init_step=None)
        for lemma in self.lemmas:
            for i in range(1, hi + 1):
                lines.append(f"(assert {self.emit(lemma, i, None).text})")
        for i in range(1, k + 1):
            lines.append(f"(assert {self.emit(self.prop, i, None).text})")
        lines.append(f"(assert (not {self.emit(self.prop, hi, None).text}))")
        lines.append("(check-sat)")
        lines.append("(get-model)")
        lines.append("(exit)")
        return "\n".join(lines) + "\n"

    # ----- model decoding ---------------------------------------------------

    def decode_model(self, model_text: str, steps: int) -> TimedTrace:
        """Rebuild a timed trace from a solver model for a script unrolled
        from the initial state."""
        values = parse_model_values(model_text)
        states = []
        times = []
        for i in range(1, steps + 1):
            state: dict[str, Value] = {}
            for name in self.program.vars:
                ty = self.types[name]
                state[name] = self._decode_value(values, name, i, ty)
            if self.uses_time:
                tv = self._decode_value(values, TIME_VAR, i, TypeTag.REAL)
                if tv is INF or isinstance(tv, bool):
                    raise DecodeError(f"non-rational time at step {i}")
                state[TIME_VAR] = Fraction(tv)
            else:
                state[TIME_VAR] = Fraction(i - 1)
            times.append(Fraction(state[TIME_VAR]))
            states.append(state)
        return TimedTrace(states, times)

    def _decode_value(
        self, values: dict[str, Value], name: str, step: int, ty: TypeTag
    ) -> Value:
        key = f"{name}@{step}"
        if key not in values:
            # solver left the value unconstrained
            return {TypeTag.BOOL: False, TypeTag.INT: 0, TypeTag.REAL: Fraction(0)}[ty]
        v = values[key]
        if ty is TypeTag.BOOL:
            if not isinstance(v, bool):
                raise DecodeError(f"expected boolean for {key}, got {v!r}")
            return v
        if isinstance(v, bool):
            raise DecodeError(f"expected numeric for {key}, got {v!r}")
        if name in self.tainted:
            if v == -1:
                return INF
            if v < 0:
                raise DecodeError(
                    f"{key} carries a negative non-sentinel value {v}"
                )
        if ty is TypeTag.INT:
            if isinstance(v, Fraction):
                if v.denominator != 1:
                    raise DecodeError(f"non-integral value for {key}: {v}")
                return int(v)
            return int(v)
        return Fraction(v)


def _min_pos_nodes(e: Expr) -> list[MinPos]:
    out: list[MinPos] = []

    def walk(x: Expr) -> None:
        if isinstance(x, MinPos):
            out.append(x)
            for a in x.args:
                walk(a)
        elif isinstance(x, Unary):
            walk(x.sub)
        elif isinstance(x, Binary):
            walk(x.lhs)
            walk(x.rhs)
        elif isinstance(x, Ite):
            walk(x.cond)
            walk(x.then)
            walk(x.orelse)
        elif isinstance(x, Arrow):
            walk(x.rest)  # the guard only applies where the rule is active
        elif isinstance(x, (Pre, Hist, Initz)):
            walk(x.sub)

    walk(e)
    return out


def _sexpr_to_value(node: sx_reader.SExpr) -> Value:
    if isinstance(node, str):
        if node == "true":
            return True
        if node == "false":
            return False
        if "." in node:
            return Fraction(node)
        try:
            return int(node)
        except ValueError as exc:
            raise DecodeError(f"cannot decode model value {node!r}") from exc
    if not node:
        raise DecodeError("empty model value")
    head = node[0]
    if head == "-" and len(node) == 2:
        v = _sexpr_to_value(node[1])
        if isinstance(v, bool):
            raise DecodeError("negated boolean in model")
        return -v
    if head == "/" and len(node) == 3:
        a = _sexpr_to_value(node[1])
        b = _sexpr_to_value(node[2])
        if isinstance(a, bool) or isinstance(b, bool):
            raise DecodeError("boolean in rational")
        return Fraction(a) / Fraction(b)
    if head == "to_real" and len(node) == 2:
        v = _sexpr_to_value(node[1])
        if isinstance(v, bool):
            raise DecodeError("boolean in to_real")
        return Fraction(v)
    raise DecodeError(f"cannot decode model value {node!r}")


def parse_model_values(model_text: str) -> dict[str, Value]:
    """Collect `define-fun` bindings from `(get-model)` output."""
    try:
        top = sx_reader.parse_all(model_text)
    except sx_reader.SExprError as exc:
        raise DecodeError(f"malformed model: {exc}") from exc
    values: dict[str, Value] = {}

    def walk(node: sx_reader.SExpr) -> None:
        if not isinstance(node, list):
            return
        if node and node[0] == "define-fun":
            if len(node) < 5:
                raise DecodeError(f"malformed define-fun: {node!r}")
            name = sx_reader.strip_pipes(node[1])
            values[name] = _sexpr_to_value(node[4])
            return
        for child in node:
            walk(child)

    for node in top:
        walk(node)
    return values
