"""Front end for the `.rtc` source format.

A source file is either a standalone transition system (declarations,
assertions, properties) or a set of `system` blocks with contracts,
subcomponents and connections. Requirement pattern phrases may stand
wherever a boolean body is expected; in standalone programs they are
lowered on the spot, inside systems they are kept symbolic for the
contract engine to place.

The grammar is documented in docs/grammar.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from . import patterns as pt
from . import syntax as sx
from .contracts import (
    ComponentDef,
    ContractItem,
    EqDef,
    PortDecl,
    SystemModel,
    validate_model,
)
from .patterns import Interval, Pattern, PatternError
from .syntax import Expr, NamedExpr, SpecProgram, TIME_VAR, TypeTag, Var
from .values import INF


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        where = f" at {line}:{col}" if line else ""
        super().__init__(f"syntax error{where}: {message}")
        self.line = line
        self.col = col
        self.reason = message


KEYWORDS = {
    "var", "timeout", "eq", "assert", "property", "assume", "guarantee",
    "system", "component", "connect", "input", "output",
    "bool", "int", "real", "true", "false", "inf",
    "not", "and", "or", "ite", "pre", "hist", "initz", "min_pos",
    "whenever", "when", "always", "occurs", "holds", "during",
    "each", "sporadic", "with", "IAT", "jitter", "exclusively",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<decimal>\d+\.\d+)
  | (?P<number>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<op>->|=>|<=|>=|[-+*/=<>(){}\[\];:,])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident | keyword | number | decimal | string | op | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            col = pos - line_start + 1
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup or ""
        tok_text = m.group()
        col = pos - line_start + 1
        if kind == "ws" or kind == "comment":
            pass
        elif kind == "ident":
            k = "keyword" if tok_text in KEYWORDS else "ident"
            tokens.append(Token(k, tok_text, line, col))
        else:
            tokens.append(Token(kind, tok_text, line, col))
        nl = tok_text.count("\n")
        if nl:
            line += nl
            line_start = pos + tok_text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, n - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def at(self, kind: str, text: Optional[str] = None, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok.kind == kind and (text is None or tok.text == text)

    def at_kw(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "keyword" and tok.text in words

    def take(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            got = tok.text or tok.kind
            raise ParseError(f"expected {want!r}, found {got!r}", tok.line, tok.col)
        return self.take()

    def fail(self, message: str) -> None:
        tok = self.peek()
        raise ParseError(message, tok.line, tok.col)

    # ----- expressions ---------------------------------------------------

    def parse_expr(self) -> Expr:
        return self._parse_arrow()

    def _parse_arrow(self) -> Expr:
        lhs = self._parse_impl()
        if self.at("op", "->"):
            self.take()
            return sx.arrow(lhs, self._parse_arrow())
        return lhs

    def _parse_impl(self) -> Expr:
        lhs = self._parse_or()
        if self.at("op", "=>"):
            self.take()
            return sx.implies(lhs, self._parse_impl())
        return lhs

    def _parse_or(self) -> Expr:
        out = self._parse_and()
        while self.at_kw("or"):
            self.take()
            out = sx.Binary("or", out, self._parse_and())
        return out

    def _parse_and(self) -> Expr:
        out = self._parse_not()
        while self.at_kw("and"):
            self.take()
            out = sx.Binary("and", out, self._parse_not())
        return out

    def _parse_not(self) -> Expr:
        if self.at_kw("not"):
            self.take()
            return sx.lnot(self._parse_not())
        return self._parse_cmp()

    def _parse_cmp(self) -> Expr:
        lhs = self._parse_add()
        for op in ("=", "<=", ">=", "<", ">"):
            if self.at("op", op):
                self.take()
                return sx.Binary(op, lhs, self._parse_add())
        return lhs

    def _parse_add(self) -> Expr:
        out = self._parse_mul()
        while self.at("op", "+") or self.at("op", "-"):
            op = self.take().text
            out = sx.Binary(op, out, self._parse_mul())
        return out

    def _parse_mul(self) -> Expr:
        out = self._parse_unary()
        while self.at("op", "*") or self.at("op", "/"):
            op = self.take().text
            rhs = self._parse_unary()
            if (
                op == "/"
                and isinstance(out, sx.Const)
                and isinstance(rhs, sx.Const)
                and isinstance(out.value, Fraction)
                and isinstance(rhs.value, Fraction)
                and rhs.value != 0
            ):
                out = sx.Const(out.value / rhs.value)
            else:
                out = sx.Binary(op, out, rhs)
        return out

    def _parse_unary(self) -> Expr:
        if self.at("op", "-"):
            self.take()
            sub = self._parse_unary()
            if isinstance(sub, sx.Const) and not isinstance(sub.value, bool):
                if sub.value is INF:
                    self.fail("negative infinity is not a value")
                return sx.Const(-sub.value)
            return sx.neg(sub)
        return self._parse_primary()

    def _parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "number":
            self.take()
            return sx.Const(int(tok.text))
        if tok.kind == "decimal":
            self.take()
            return sx.Const(Fraction(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.take()
            e = self.parse_expr()
            self.expect("op", ")")
            return e
        if tok.kind == "keyword":
            if tok.text == "true":
                self.take()
                return sx.TRUE
            if tok.text == "false":
                self.take()
                return sx.FALSE
            if tok.text == "inf":
                self.take()
                return sx.inf()
            if tok.text in ("pre", "hist", "initz"):
                self.take()
                self.expect("op", "(")
                sub = self.parse_expr()
                self.expect("op", ")")
                ctor = {"pre": sx.pre, "hist": sx.hist, "initz": sx.initz}[tok.text]
                return ctor(sub)
            if tok.text == "ite":
                self.take()
                self.expect("op", "(")
                cond = self.parse_expr()
                self.expect("op", ",")
                then = self.parse_expr()
                self.expect("op", ",")
                orelse = self.parse_expr()
                self.expect("op", ")")
                return sx.ite(cond, then, orelse)
            self.fail(f"keyword '{tok.text}' cannot start an expression")
        if tok.kind == "ident":
            self.take()
            return Var(tok.text)
        self.fail(f"expected an expression, found {tok.text or tok.kind!r}")
        raise AssertionError  # unreachable

    # ----- patterns -------------------------------------------------------

    def _parse_rational(self) -> Fraction:
        negative = False
        if self.at("op", "-"):
            self.take()
            negative = True
        tok = self.peek()
        if tok.kind == "decimal":
            self.take()
            val = Fraction(tok.text)
        elif tok.kind == "number":
            self.take()
            val = Fraction(int(tok.text))
        else:
            self.fail("expected a numeric bound")
            raise AssertionError
        return -val if negative else val

    def _parse_interval(self) -> Interval:
        tok = self.peek()
        if self.at("op", "["):
            low_closed = True
        elif self.at("op", "("):
            low_closed = False
        else:
            self.fail("expected '[' or '(' to open an interval")
            raise AssertionError
        self.take()
        low = self._parse_rational()
        self.expect("op", ",")
        high = self._parse_rational()
        if self.at("op", "]"):
            high_closed = True
        elif self.at("op", ")"):
            high_closed = False
        else:
            self.fail("expected ']' or ')' to close an interval")
            raise AssertionError
        self.take()
        try:
            return Interval(low, high, low_closed, high_closed)
        except PatternError as exc:
            raise ParseError(str(exc), tok.line, tok.col) from exc

    def parse_pattern_or_expr(self) -> Union[Expr, Pattern]:
        if self.at_kw("whenever"):
            return self._parse_whenever()
        if self.at_kw("when"):
            return self._parse_when()
        if self.at_kw("always"):
            self.take()
            return pt.Always(self.parse_expr())
        e = self.parse_expr()
        if self.at_kw("occurs"):
            return self._parse_timing(e)
        return e

    def _pattern_error(self, exc: PatternError) -> ParseError:
        tok = self.peek()
        return ParseError(str(exc), tok.line, tok.col)

    def _parse_whenever(self) -> Pattern:
        self.expect("keyword", "whenever")
        cause = self.parse_expr()
        self.expect("keyword", "occurs")
        second = self.parse_expr()
        exclusive = False
        if self.at_kw("exclusively"):
            self.take()
            exclusive = True
            self.expect("keyword", "occurs")
            verb = "occurs"
        elif self.at_kw("occurs"):
            self.take()
            verb = "occurs"
        elif self.at_kw("holds"):
            self.take()
            verb = "holds"
        else:
            self.fail("expected 'occurs', 'holds' or 'exclusively'")
            raise AssertionError
        self.expect("keyword", "during")
        iv = self._parse_interval()
        try:
            if verb == "occurs":
                return pt.WheneverEventEvent(cause, second, iv, exclusive)
            if exclusive:
                self.fail("'exclusively' applies to event patterns only")
            return pt.WheneverEventCondition(cause, second, iv)
        except PatternError as exc:
            raise self._pattern_error(exc) from exc

    def _parse_when(self) -> Pattern:
        self.expect("keyword", "when")
        cond = self.parse_expr()
        self.expect("keyword", "holds")
        self.expect("keyword", "during")
        hold = self._parse_interval()
        event = self.parse_expr()
        self.expect("keyword", "occurs")
        self.expect("keyword", "during")
        iv = self._parse_interval()
        try:
            return pt.WhenConditionEvent(cond, hold, event, iv)
        except PatternError as exc:
            raise self._pattern_error(exc) from exc

    def _parse_timing(self, event: Expr) -> Pattern:
        self.expect("keyword", "occurs")
        if self.at_kw("each"):
            self.take()
            period = self._parse_rational()
            jitter = Fraction(0)
            if self.at_kw("with"):
                self.take()
                self.expect("keyword", "jitter")
                jitter = self._parse_rational()
            try:
                return pt.Periodic(event, period, jitter)
            except PatternError as exc:
                raise self._pattern_error(exc) from exc
        if self.at_kw("sporadic"):
            self.take()
            self.expect("keyword", "with")
            self.expect("keyword", "IAT")
            iat = self._parse_rational()
            jitter = Fraction(0)
            if self.at_kw("and"):
                self.take()
                self.expect("keyword", "jitter")
                jitter = self._parse_rational()
            try:
                return pt.Sporadic(event, iat, jitter)
            except PatternError as exc:
                raise self._pattern_error(exc) from exc
        self.fail("expected 'each' or 'sporadic' after 'occurs'")
        raise AssertionError

    # ----- statements -----------------------------------------------------

    def _parse_type(self) -> TypeTag:
        tok = self.peek()
        if tok.kind == "keyword" and tok.text in ("bool", "int", "real"):
            self.take()
            return TypeTag(tok.text)
        self.fail("expected a type: bool, int or real")
        raise AssertionError

    def _parse_label(self) -> Optional[str]:
        if self.at("string"):
            raw = self.take().text
            label = raw[1:-1].replace('\\"', '"').replace("\\\\", "\\")
            self.expect("op", ":")
            return label
        return None


@dataclass
class _ProgramBuilder:
    vars: dict[str, TypeTag]
    timeouts: list[str]
    items: list[tuple[str, Optional[str], object]]  # (kind, label, expr|pattern)

    def declare(self, name: str, ty: TypeTag, tok: Token) -> None:
        if name in self.vars:
            raise ParseError(f"duplicate variable declaration '{name}'", tok.line, tok.col)
        if name == TIME_VAR:
            raise ParseError("'t' is the implicit time variable", tok.line, tok.col)
        self.vars[name] = ty


def _parse_program_statement(p: _Parser, b: _ProgramBuilder) -> None:
    tok = p.peek()
    if p.at_kw("var"):
        p.take()
        name_tok = p.expect("ident")
        p.expect("op", ":")
        ty = p._parse_type()
        p.expect("op", ";")
        b.declare(name_tok.text, ty, name_tok)
        return
    if p.at_kw("timeout"):
        p.take()
        name_tok = p.expect("ident")
        p.expect("op", ";")
        b.declare(name_tok.text, TypeTag.REAL, name_tok)
        b.timeouts.append(name_tok.text)
        return
    if p.at_kw("eq"):
        p.take()
        name_tok = p.expect("ident")
        p.expect("op", ":")
        ty = p._parse_type()
        p.expect("op", "=")
        e = p.parse_expr()
        p.expect("op", ";")
        b.declare(name_tok.text, ty, name_tok)
        b.items.append(
            ("assert", f"def {name_tok.text}", sx.eq(Var(name_tok.text), e))
        )
        return
    if p.at_kw("assert", "property"):
        kind = p.take().text
        label = p._parse_label()
        body = p.parse_pattern_or_expr()
        p.expect("op", ";")
        b.items.append((kind, label, body))
        return
    if p.at_kw("assume", "guarantee"):
        raise ParseError(
            f"'{tok.text}' is only allowed inside a system block", tok.line, tok.col
        )
    # bare declaration `x : int;` or an anonymous constraint expression
    if tok.kind == "ident" and p.at("op", ":", ahead=1):
        name_tok = p.expect("ident")
        p.expect("op", ":")
        ty = p._parse_type()
        p.expect("op", ";")
        b.declare(name_tok.text, ty, name_tok)
        return
    body = p.parse_pattern_or_expr()
    p.expect("op", ";")
    b.items.append(("assert", None, body))


def _build_program(b: _ProgramBuilder, pattern_style: str) -> SpecProgram:
    from .typecheck import type_check

    program = SpecProgram(vars=dict(b.vars), timeouts=list(b.timeouts))
    for kind, label, body in b.items:
        if isinstance(body, sx.Expr):
            _resolve_names(body, program, label or kind)
            if kind == "assert":
                program.transition.append(NamedExpr(label, body))
            else:
                program.properties.append(NamedExpr(label, body))
        else:
            try:
                if kind == "assert":
                    bundle = pt.compile_constraint(body, program, style=pattern_style)
                else:
                    bundle = pt.compile_observer(body, program)
                    if label is not None and bundle.prop is not None:
                        bundle.prop = NamedExpr(label, bundle.prop.expr)
            except PatternError as exc:
                raise ParseError(f"in {label or kind}: {exc}") from exc
            if label is not None:
                bundle.constraints = [
                    NamedExpr(
                        f"{label}: {ne.label}" if ne.label else label, ne.expr
                    )
                    for ne in bundle.constraints
                ]
            program = pt.apply_bundle(program, bundle)
    type_check(program)
    return program


def _resolve_names(e: Expr, program: SpecProgram, where: str) -> None:
    for name in sorted(sx.free_vars(e)):
        if not program.declares(name):
            raise ParseError(f"unknown identifier '{name}' in {where}")


def _parse_system_block(p: _Parser) -> ComponentDef:
    p.expect("keyword", "system")
    name = p.expect("ident").text
    p.expect("op", "{")
    sysdef = ComponentDef(name=name)
    declared: set[str] = set()

    def declare(tok: Token, ty: TypeTag, direction: str) -> None:
        if tok.text in declared:
            raise ParseError(
                f"duplicate variable declaration '{tok.text}'", tok.line, tok.col
            )
        declared.add(tok.text)
        sysdef.ports.append(PortDecl(tok.text, ty, direction))

    while not p.at("op", "}"):
        tok = p.peek()
        if p.at_kw("input", "output", "var"):
            direction = p.take().text
            if direction == "var":
                direction = "var"
            name_tok = p.expect("ident")
            p.expect("op", ":")
            ty = p._parse_type()
            p.expect("op", ";")
            declare(name_tok, ty, direction)
        elif p.at_kw("timeout"):
            p.take()
            name_tok = p.expect("ident")
            p.expect("op", ";")
            declare(name_tok, TypeTag.REAL, "var")
            sysdef.timeouts.append(name_tok.text)
        elif p.at_kw("eq"):
            p.take()
            name_tok = p.expect("ident")
            p.expect("op", ":")
            ty = p._parse_type()
            p.expect("op", "=")
            e = p.parse_expr()
            p.expect("op", ";")
            if any(d.name == name_tok.text for d in sysdef.eqs):
                raise ParseError(
                    f"'{name_tok.text}' is defined twice",
                    name_tok.line,
                    name_tok.col,
                )
            # an eq may define an already-declared port of the same type
            port = next((q for q in sysdef.ports if q.name == name_tok.text), None)
            if port is not None and port.ty is not ty:
                raise ParseError(
                    f"definition of '{name_tok.text}' disagrees with its "
                    f"declared type",
                    name_tok.line,
                    name_tok.col,
                )
            declared.add(name_tok.text)
            sysdef.eqs.append(EqDef(name_tok.text, ty, e))
        elif p.at_kw("assume", "guarantee", "assert"):
            kind = p.take().text
            label = p._parse_label()
            body = p.parse_pattern_or_expr()
            p.expect("op", ";")
            item = ContractItem(label, body)
            if kind == "assume":
                sysdef.assumptions.append(item)
            elif kind == "guarantee":
                sysdef.guarantees.append(item)
            else:
                sysdef.assertions.append(item)
        elif p.at_kw("property"):
            raise ParseError(
                "'property' is not allowed inside a system block; use "
                "'guarantee'",
                tok.line,
                tok.col,
            )
        elif p.at_kw("component"):
            p.take()
            inst = p.expect("ident").text
            p.expect("op", ":")
            defname = p.expect("ident").text
            p.expect("op", ";")
            sysdef.instances.append((inst, defname))
        elif p.at_kw("connect"):
            p.take()
            src = p.expect("ident").text
            p.expect("op", "->")
            dst = p.expect("ident").text
            p.expect("op", ";")
            sysdef.connections.append((src, dst))
        else:
            p.fail("expected a system item")
    p.expect("op", "}")
    return sysdef


def parse_source(
    text: str, pattern_style: str = "filter"
) -> Union[SpecProgram, SystemModel]:
    """Parse `.rtc` source. Returns a SpecProgram for standalone transition
    systems (pattern statements are lowered with the given constraint
    style), or a SystemModel when the file declares `system` blocks."""
    p = _Parser(text)
    systems: list[ComponentDef] = []
    b = _ProgramBuilder(vars={}, timeouts=[], items=[])
    while not p.at("eof"):
        if p.at_kw("system"):
            systems.append(_parse_system_block(p))
        else:
            if systems:
                p.fail("statements outside system blocks are not allowed here")
            _parse_program_statement(p, b)
    if systems:
        if b.vars or b.items or b.timeouts:
            raise ParseError("statements outside system blocks are not allowed")
        by_name: dict[str, ComponentDef] = {}
        for s in systems:
            if s.name in by_name:
                raise ParseError(f"duplicate system '{s.name}'")
            by_name[s.name] = s
        instantiated = {d for s in systems for _, d in s.instances}
        roots = [s.name for s in systems if s.name not in instantiated]
        if not roots:
            raise ParseError("no root system: every system is instantiated")
        model = SystemModel(systems=by_name, root=roots[-1])
        validate_model(model)
        return model
    return _build_program(b, pattern_style)


def parse_program(text: str, pattern_style: str = "filter") -> SpecProgram:
    out = parse_source(text, pattern_style)
    if not isinstance(out, SpecProgram):
        raise ParseError("expected a standalone program, found system blocks")
    return out


def parse_model(text: str) -> SystemModel:
    out = parse_source(text)
    if not isinstance(out, SystemModel):
        raise ParseError("expected system blocks")
    return out


def parse_expr_text(text: str) -> Expr:
    p = _Parser(text)
    e = p.parse_expr()
    if not p.at("eof"):
        p.fail("trailing input after expression")
    return e


def parse_pattern_text(text: str) -> Pattern:
    p = _Parser(text)
    out = p.parse_pattern_or_expr()
    if not p.at("eof"):
        p.fail("trailing input after pattern")
    if isinstance(out, sx.Expr):
        raise ParseError("not a pattern phrase")
    return out
