"""Well-formedness and type checking.

Well-formedness is the temporal-operator discipline: every `pre` needs an
enclosing arrow whose right-hand side it sits in, and nested `pre`s need an
arrow between them. The check tracks a budget: each arrow right-hand side
crossed grants one `pre`, each `pre` crossed consumes one.

Typing is conventional and strict: no implicit conversion between int and
real, `ite` and `arrow` branches must agree, `hist`/`initz` take booleans.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

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
    TypeTag,
    Unary,
    Var,
    TIME_VAR,
)
from .values import INF


class WellFormednessError(Exception):
    def __init__(self, path: str, message: str):
        super().__init__(f"{message} (at {path})")
        self.path = path
        self.message = message


class TypeError_(Exception):
    def __init__(self, path: str, message: str):
        super().__init__(f"{message} (at {path})")
        self.path = path
        self.message = message


def check_well_formed(e: Expr, path: str = "expr") -> None:
    """Raise WellFormednessError at the innermost offending subexpression."""
    _wf(e, 0, path)


def is_well_formed(e: Expr) -> bool:
    try:
        check_well_formed(e)
        return True
    except WellFormednessError:
        return False


def _wf(e: Expr, budget: int, path: str) -> None:
    if isinstance(e, (Const, Var)):
        return
    if isinstance(e, Unary):
        _wf(e.sub, budget, path + ".sub")
        return
    if isinstance(e, Binary):
        _wf(e.lhs, budget, path + ".lhs")
        _wf(e.rhs, budget, path + ".rhs")
        return
    if isinstance(e, Ite):
        _wf(e.cond, budget, path + ".cond")
        _wf(e.then, budget, path + ".then")
        _wf(e.orelse, budget, path + ".else")
        return
    if isinstance(e, Arrow):
        _wf(e.init, budget, path + ".init")
        _wf(e.rest, budget + 1, path + ".rest")
        return
    if isinstance(e, Pre):
        if budget < 1:
            raise WellFormednessError(
                path, "pre without an enclosing arrow right-hand side"
            )
        _wf(e.sub, budget - 1, path + ".pre")
        return
    if isinstance(e, (Hist, Initz)):
        # these lower to self-guarded definitions, so they neither grant nor
        # consume arrow budget
        _wf(e.sub, budget, path + ".sub")
        return
    if isinstance(e, MinPos):
        for k, a in enumerate(e.args):
            _wf(a, budget, f"{path}.arg[{k}]")
        return
    raise TypeError(f"unknown expression node {e!r}")


_NUMERIC = (TypeTag.INT, TypeTag.REAL)


def infer_type(
    e: Expr,
    program: Optional[SpecProgram] = None,
    env: Optional[dict[str, TypeTag]] = None,
    path: str = "expr",
    memo: Optional[dict[Expr, TypeTag]] = None,
) -> TypeTag:
    """Infer the type of an expression against a program's declarations (or
    an explicit environment). Raises TypeError_ with the offending path."""
    if env is None:
        env = dict(program.vars) if program is not None else {}
    if memo is None:
        memo = {}
    return _infer(e, env, path, memo)


def _infer(e: Expr, env: dict[str, TypeTag], path: str, memo: dict[Expr, TypeTag]) -> TypeTag:
    hit = memo.get(e)
    if hit is not None:
        return hit
    ty = _infer_raw(e, env, path, memo)
    memo[e] = ty
    return ty


def _infer_raw(
    e: Expr, env: dict[str, TypeTag], path: str, memo: dict[Expr, TypeTag]
) -> TypeTag:
    if isinstance(e, Const):
        v = e.value
        if isinstance(v, bool):
            return TypeTag.BOOL
        if v is INF:
            return TypeTag.REAL
        if isinstance(v, int):
            return TypeTag.INT
        if isinstance(v, Fraction):
            return TypeTag.REAL
        raise TypeError_(path, f"constant of unsupported kind: {v!r}")
    if isinstance(e, Var):
        if e.name == TIME_VAR:
            return TypeTag.REAL
        ty = env.get(e.name)
        if ty is None:
            raise TypeError_(path, f"unknown identifier '{e.name}'")
        return ty
    if isinstance(e, Unary):
        sub = _infer(e.sub, env, path + ".sub", memo)
        if e.op == "not":
            if sub is not TypeTag.BOOL:
                raise TypeError_(path, f"'not' needs a boolean, got {sub.value}")
            return TypeTag.BOOL
        if sub not in _NUMERIC:
            raise TypeError_(path, f"negation needs a numeric operand, got {sub.value}")
        return sub
    if isinstance(e, Binary):
        lt = _infer(e.lhs, env, path + ".lhs", memo)
        rt = _infer(e.rhs, env, path + ".rhs", memo)
        op = e.op
        if op in ("and", "or", "=>"):
            if lt is not TypeTag.BOOL or rt is not TypeTag.BOOL:
                raise TypeError_(path, f"'{op}' needs boolean operands")
            return TypeTag.BOOL
        if op == "=":
            if lt is not rt:
                raise TypeError_(
                    path, f"'=' operands disagree: {lt.value} vs {rt.value}"
                )
            return TypeTag.BOOL
        if op in ("<", "<=", ">", ">="):
            if lt not in _NUMERIC or rt not in _NUMERIC or lt is not rt:
                raise TypeError_(
                    path,
                    f"comparison needs matching numeric operands, got "
                    f"{lt.value} and {rt.value}",
                )
            return TypeTag.BOOL
        if op in ("+", "-", "*"):
            if lt not in _NUMERIC or rt not in _NUMERIC or lt is not rt:
                raise TypeError_(
                    path,
                    f"'{op}' needs matching numeric operands, got "
                    f"{lt.value} and {rt.value}",
                )
            return lt
        if op == "/":
            if lt is not TypeTag.REAL or rt is not TypeTag.REAL:
                raise TypeError_(path, "'/' needs real operands")
            return TypeTag.REAL
        raise TypeError_(path, f"unknown operator '{op}'")
    if isinstance(e, Ite):
        ct = _infer(e.cond, env, path + ".cond", memo)
        if ct is not TypeTag.BOOL:
            raise TypeError_(path + ".cond", "ite condition must be boolean")
        tt = _infer(e.then, env, path + ".then", memo)
        et = _infer(e.orelse, env, path + ".else", memo)
        if tt is not et:
            raise TypeError_(
                path, f"ite branches disagree: {tt.value} vs {et.value}"
            )
        return tt
    if isinstance(e, Arrow):
        it = _infer(e.init, env, path + ".init", memo)
        rt = _infer(e.rest, env, path + ".rest", memo)
        if it is not rt:
            raise TypeError_(
                path, f"arrow sides disagree: {it.value} vs {rt.value}"
            )
        return it
    if isinstance(e, Pre):
        return _infer(e.sub, env, path + ".pre", memo)
    if isinstance(e, (Hist, Initz)):
        sub = _infer(e.sub, env, path + ".sub", memo)
        if sub is not TypeTag.BOOL:
            raise TypeError_(path, "boolean operand required")
        return TypeTag.BOOL
    if isinstance(e, MinPos):
        for k, a in enumerate(e.args):
            at = _infer(a, env, f"{path}.arg[{k}]", memo)
            if at is not TypeTag.REAL:
                raise TypeError_(f"{path}.arg[{k}]", "min_pos arguments must be real")
        return TypeTag.REAL
    raise TypeError_(path, f"unknown expression node {e!r}")


def type_check(program: SpecProgram) -> dict[Expr, TypeTag]:
    """Check a whole program; returns the memoized node typing. Transition
    constraints and properties must be boolean, timeout variables real."""
    memo: dict[Expr, TypeTag] = {}
    env = dict(program.vars)
    for name in program.timeouts:
        ty = env.get(name)
        if ty is None:
            raise TypeError_(f"timeout '{name}'", "timeout names an undeclared variable")
        if ty is not TypeTag.REAL:
            raise TypeError_(f"timeout '{name}'", "timeout variables must be real")
    for kind, items in (("assert", program.transition), ("property", program.properties)):
        for k, ne in enumerate(items):
            label = ne.display(f"{kind}[{k}]")
            check_well_formed(ne.expr, label)
            ty = _infer(ne.expr, env, label, memo)
            if ty is not TypeTag.BOOL:
                raise TypeError_(label, f"{kind} must be boolean, got {ty.value}")
    return memo
