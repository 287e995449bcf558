"""Abstract syntax for the specification language.

A program is a finite set of typed variables, a list of boolean transition
constraints (conjoined), and a list of named boolean properties. Expressions
carry two temporal operators: `arrow` (initial-state selection) and `pre`
(previous-state value), plus the derived history operators `hist` and
`initz`, which stay as first-class nodes so the contract engine can emit
them symbolically.

Nodes are frozen dataclasses compared structurally; source locations are not
part of the tree (parse errors carry line/column, later passes report
expression paths).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Union

from .values import INF, Value

TIME_VAR = "t"


class TypeTag(str, Enum):
    BOOL = "bool"
    INT = "int"
    REAL = "real"


@dataclass(frozen=True)
class Expr:
    """Base class for expression nodes."""


@dataclass(frozen=True, eq=False)
class Const(Expr):
    value: Value

    def __post_init__(self) -> None:
        if isinstance(self.value, float):
            raise TypeError("floating point constants are not allowed; use Fraction")

    # Python's numeric tower makes False == 0 == Fraction(0); constants of
    # different types must stay distinct for structural equality and caching
    def _key(self) -> tuple:
        v = self.value
        if isinstance(v, bool):
            return ("bool", v)
        if v is INF:
            return ("inf",)
        if isinstance(v, Fraction):
            return ("real", v.numerator, v.denominator)
        return ("int", v)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Const) and self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "-" | "not"
    sub: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # + - * / and or => = < <= > >=
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Ite(Expr):
    cond: Expr
    then: Expr
    orelse: Expr


@dataclass(frozen=True)
class Arrow(Expr):
    init: Expr
    rest: Expr


@dataclass(frozen=True)
class Pre(Expr):
    sub: Expr


@dataclass(frozen=True)
class Hist(Expr):
    """True iff the operand has been true at every step up to and including now."""

    sub: Expr


@dataclass(frozen=True)
class Initz(Expr):
    """True at the first step, thereafter the previous step's operand value."""

    sub: Expr


@dataclass(frozen=True)
class MinPos(Expr):
    """Least strictly-positive finite argument. Internal node used by the
    calendar constraint; not part of the surface grammar."""

    args: tuple[Expr, ...]


TRUE = Const(True)
FALSE = Const(False)


def num(n: int) -> Const:
    return Const(n)


def real(x: "int | str | Fraction") -> Const:
    return Const(Fraction(x))


def inf() -> Const:
    return Const(INF)


def var(name: str) -> Var:
    return Var(name)


def neg(e: Expr) -> Expr:
    return Unary("-", e)


def lnot(e: Expr) -> Expr:
    return Unary("not", e)


def land(*es: Expr) -> Expr:
    parts = [e for e in es if e != TRUE]
    if not parts:
        return TRUE
    out = parts[0]
    for e in parts[1:]:
        out = Binary("and", out, e)
    return out


def lor(*es: Expr) -> Expr:
    if not es:
        return FALSE
    out = es[0]
    for e in es[1:]:
        out = Binary("or", out, e)
    return out


def implies(a: Expr, b: Expr) -> Expr:
    return Binary("=>", a, b)


def eq(a: Expr, b: Expr) -> Expr:
    return Binary("=", a, b)


def lt(a: Expr, b: Expr) -> Expr:
    return Binary("<", a, b)


def le(a: Expr, b: Expr) -> Expr:
    return Binary("<=", a, b)


def gt(a: Expr, b: Expr) -> Expr:
    return Binary(">", a, b)


def ge(a: Expr, b: Expr) -> Expr:
    return Binary(">=", a, b)


def add(a: Expr, b: Expr) -> Expr:
    return Binary("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    return Binary("-", a, b)


def ite(c: Expr, a: Expr, b: Expr) -> Ite:
    return Ite(c, a, b)


def arrow(a: Expr, b: Expr) -> Arrow:
    return Arrow(a, b)


def pre(e: Expr) -> Pre:
    return Pre(e)


def hist(e: Expr) -> Hist:
    return Hist(e)


def initz(e: Expr) -> Initz:
    return Initz(e)


def free_vars(e: Expr) -> set[str]:
    """Names of all variables referenced anywhere in the expression."""
    out: set[str] = set()
    _collect_vars(e, out)
    return out


def _collect_vars(e: Expr, out: set[str]) -> None:
    if isinstance(e, Var):
        out.add(e.name)
    elif isinstance(e, Const):
        pass
    elif isinstance(e, Unary):
        _collect_vars(e.sub, out)
    elif isinstance(e, Binary):
        _collect_vars(e.lhs, out)
        _collect_vars(e.rhs, out)
    elif isinstance(e, Ite):
        _collect_vars(e.cond, out)
        _collect_vars(e.then, out)
        _collect_vars(e.orelse, out)
    elif isinstance(e, Arrow):
        _collect_vars(e.init, out)
        _collect_vars(e.rest, out)
    elif isinstance(e, (Pre, Hist, Initz)):
        _collect_vars(e.sub, out)
    elif isinstance(e, MinPos):
        for a in e.args:
            _collect_vars(a, out)
    else:
        raise TypeError(f"unknown expression node {e!r}")


def current_step_vars(e: Expr) -> set[str]:
    """Variables whose current-step value the expression may read.

    References under `pre` (and the previous-step side of `initz`) only
    touch earlier states. Both sides of an `arrow` count, conservatively.
    """
    out: set[str] = set()
    _collect_current(e, out)
    return out


def _collect_current(e: Expr, out: set[str]) -> None:
    if isinstance(e, Var):
        out.add(e.name)
    elif isinstance(e, Const):
        pass
    elif isinstance(e, Unary):
        _collect_current(e.sub, out)
    elif isinstance(e, Binary):
        _collect_current(e.lhs, out)
        _collect_current(e.rhs, out)
    elif isinstance(e, Ite):
        _collect_current(e.cond, out)
        _collect_current(e.then, out)
        _collect_current(e.orelse, out)
    elif isinstance(e, Arrow):
        _collect_current(e.init, out)
        _collect_current(e.rest, out)
    elif isinstance(e, Pre):
        pass
    elif isinstance(e, Initz):
        pass
    elif isinstance(e, Hist):
        # hist(e) at step i reads e at step i (and earlier).
        _collect_current(e.sub, out)
    elif isinstance(e, MinPos):
        for a in e.args:
            _collect_current(a, out)
    else:
        raise TypeError(f"unknown expression node {e!r}")


@dataclass(frozen=True)
class NamedExpr:
    """A constraint or property with an optional user-facing label."""

    label: Optional[str]
    expr: Expr

    def display(self, fallback: str) -> str:
        return self.label if self.label is not None else fallback


@dataclass
class SpecProgram:
    """A transition system: variables, conjoined transition constraints,
    named properties, and the subset of real variables that participate in
    the event calendar.

    The time variable `t` is implicit: it is available to every expression
    and, when `timeouts` is nonempty, constrained by the calendar rule.
    Programs with an empty timeout list are free-timed: `t` only has to
    increase strictly.
    """

    vars: dict[str, TypeTag] = field(default_factory=dict)
    transition: list[NamedExpr] = field(default_factory=list)
    properties: list[NamedExpr] = field(default_factory=list)
    timeouts: list[str] = field(default_factory=list)

    def var_type(self, name: str) -> TypeTag:
        if name == TIME_VAR:
            return TypeTag.REAL
        return self.vars[name]

    def declares(self, name: str) -> bool:
        return name == TIME_VAR or name in self.vars

    def uses_time(self) -> bool:
        if self.timeouts:
            return True
        for ne in self.transition + self.properties:
            if TIME_VAR in free_vars(ne.expr):
                return True
        return False

    def copy(self) -> "SpecProgram":
        return SpecProgram(
            vars=dict(self.vars),
            transition=list(self.transition),
            properties=list(self.properties),
            timeouts=list(self.timeouts),
        )


Node = Union[Expr, NamedExpr, SpecProgram]
