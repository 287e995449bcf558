"""Pretty printer: source text that re-parses to the same tree, plus a
canonical s-expression form for golden tests."""

from __future__ import annotations

from fractions import Fraction

from . import patterns as pt
from .syntax import (
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
    Unary,
    Var,
)
from .values import INF

# binding strength: higher binds tighter; arrow is loosest
_PREC = {
    "->": 1,
    "=>": 2,
    "or": 3,
    "and": 4,
    "=": 6, "<": 6, "<=": 6, ">": 6, ">=": 6,
    "+": 7, "-": 7,
    "*": 8, "/": 8,
}
_RIGHT_ASSOC = {"->", "=>"}
_NON_ASSOC = {"=", "<", "<=", ">", ">="}


def render_const(v: object) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is INF:
        return "inf"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        s = pt._render_rat(v)
        if "/" in s:
            # denominator is not a power of 2 and 5: print as an exact real
            # division expression instead of a lossy decimal
            return f"({v.numerator}.0 / {v.denominator}.0)"
        return s
    raise TypeError(f"cannot render constant {v!r}")


def render_expr(e: Expr, min_prec: int = 0) -> str:
    s, prec = _render(e)
    return f"({s})" if prec < min_prec else s


def _render(e: Expr) -> tuple[str, int]:
    """Render and report the node's own binding strength (atoms are 100)."""
    if isinstance(e, Const):
        v = e.value
        if isinstance(v, bool) or v is INF:
            return render_const(v), 100
        if v < 0:
            return f"-{render_const(-v)}", 9
        return render_const(v), 100
    if isinstance(e, Var):
        return e.name, 100
    if isinstance(e, Unary):
        if e.op == "not":
            return f"not {render_expr(e.sub, 6)}", 5
        return f"-{render_expr(e.sub, 10)}", 9
    if isinstance(e, Arrow):
        return (
            f"{render_expr(e.init, 2)} -> {render_expr(e.rest, 1)}",
            1,
        )
    if isinstance(e, Binary):
        prec = _PREC[e.op]
        if e.op in _RIGHT_ASSOC:
            lhs, rhs = render_expr(e.lhs, prec + 1), render_expr(e.rhs, prec)
        elif e.op in _NON_ASSOC:
            lhs, rhs = render_expr(e.lhs, prec + 1), render_expr(e.rhs, prec + 1)
        else:
            lhs, rhs = render_expr(e.lhs, prec), render_expr(e.rhs, prec + 1)
        return f"{lhs} {e.op} {rhs}", prec
    if isinstance(e, Ite):
        return (
            f"ite({render_expr(e.cond)}, {render_expr(e.then)}, "
            f"{render_expr(e.orelse)})",
            100,
        )
    if isinstance(e, Pre):
        return f"pre({render_expr(e.sub)})", 100
    if isinstance(e, Hist):
        return f"hist({render_expr(e.sub)})", 100
    if isinstance(e, Initz):
        return f"initz({render_expr(e.sub)})", 100
    if isinstance(e, MinPos):
        return f"min_pos({', '.join(render_expr(a) for a in e.args)})", 100
    raise TypeError(f"cannot render {e!r}")


def render_pattern(pat: pt.Pattern) -> str:
    if isinstance(pat, pt.WheneverEventEvent):
        tag = " exclusively" if pat.exclusive else ""
        return (
            f"whenever {render_expr(pat.cause)} occurs "
            f"{render_expr(pat.effect)}{tag} occurs during {pat.window.render()}"
        )
    if isinstance(pat, pt.WheneverEventCondition):
        return (
            f"whenever {render_expr(pat.cause)} occurs "
            f"{render_expr(pat.condition)} holds during {pat.window.render()}"
        )
    if isinstance(pat, pt.WhenConditionEvent):
        return (
            f"when {render_expr(pat.condition)} holds during {pat.hold.render()} "
            f"{render_expr(pat.event)} occurs during {pat.window.render()}"
        )
    if isinstance(pat, pt.Always):
        return f"always {render_expr(pat.condition)}"
    if isinstance(pat, pt.Periodic):
        s = f"{render_expr(pat.event)} occurs each {pt._render_rat(pat.period)}"
        if pat.jitter:
            s += f" with jitter {pt._render_rat(pat.jitter)}"
        return s
    if isinstance(pat, pt.Sporadic):
        s = f"{render_expr(pat.event)} occurs sporadic with IAT {pt._render_rat(pat.iat)}"
        if pat.jitter:
            s += f" and jitter {pt._render_rat(pat.jitter)}"
        return s
    raise TypeError(f"cannot render pattern {pat!r}")


def _render_item(keyword: str, ne: NamedExpr) -> str:
    label = f' "{ne.label}" :' if ne.label is not None else ""
    return f"{keyword}{label} {render_expr(ne.expr)};"


def render_program(program: SpecProgram) -> str:
    lines: list[str] = []
    timeouts = set(program.timeouts)
    for name, ty in program.vars.items():
        if name in timeouts:
            lines.append(f"timeout {name};")
        else:
            lines.append(f"var {name} : {ty.value};")
    for ne in program.transition:
        lines.append(_render_item("assert", ne))
    for ne in program.properties:
        lines.append(_render_item("property", ne))
    return "\n".join(lines) + ("\n" if lines else "")


def _sexpr_const(v: object) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is INF:
        return "inf"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    raise TypeError(f"cannot render constant {v!r}")


def expr_sexpr(e: Expr) -> str:
    if isinstance(e, Const):
        return _sexpr_const(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        op = "not" if e.op == "not" else "neg"
        return f"({op} {expr_sexpr(e.sub)})"
    if isinstance(e, Binary):
        return f"({e.op} {expr_sexpr(e.lhs)} {expr_sexpr(e.rhs)})"
    if isinstance(e, Ite):
        return f"(ite {expr_sexpr(e.cond)} {expr_sexpr(e.then)} {expr_sexpr(e.orelse)})"
    if isinstance(e, Arrow):
        return f"(arrow {expr_sexpr(e.init)} {expr_sexpr(e.rest)})"
    if isinstance(e, Pre):
        return f"(pre {expr_sexpr(e.sub)})"
    if isinstance(e, Hist):
        return f"(hist {expr_sexpr(e.sub)})"
    if isinstance(e, Initz):
        return f"(initz {expr_sexpr(e.sub)})"
    if isinstance(e, MinPos):
        inner = " ".join(expr_sexpr(a) for a in e.args)
        return f"(min_pos {inner})"
    raise TypeError(f"cannot render {e!r}")


def program_sexpr(program: SpecProgram) -> str:
    parts = ["(program"]
    timeouts = set(program.timeouts)
    for name, ty in program.vars.items():
        if name in timeouts:
            parts.append(f"  (timeout {name})")
        else:
            parts.append(f"  (var {name} {ty.value})")
    for k, ne in enumerate(program.transition):
        label = ne.display(f"assert[{k}]")
        parts.append(f'  (assert "{label}" {expr_sexpr(ne.expr)})')
    for k, ne in enumerate(program.properties):
        label = ne.display(f"property[{k}]")
        parts.append(f'  (property "{label}" {expr_sexpr(ne.expr)})')
    parts.append(")")
    return "\n".join(parts) + "\n"
