"""Program transformations shared by the checking engines: lowering the
history operators to explicit streams, and variable prefixing for
hierarchical composition."""

from __future__ import annotations

from typing import Callable, Optional

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
    TIME_VAR,
    TypeTag,
    Unary,
    Var,
)
from . import syntax as sx


def map_vars(e: Expr, rename: Callable[[str], str]) -> Expr:
    if isinstance(e, Var):
        new = rename(e.name)
        return e if new == e.name else Var(new)
    if isinstance(e, Const):
        return e
    if isinstance(e, Unary):
        return Unary(e.op, map_vars(e.sub, rename))
    if isinstance(e, Binary):
        return Binary(e.op, map_vars(e.lhs, rename), map_vars(e.rhs, rename))
    if isinstance(e, Ite):
        return Ite(
            map_vars(e.cond, rename),
            map_vars(e.then, rename),
            map_vars(e.orelse, rename),
        )
    if isinstance(e, Arrow):
        return Arrow(map_vars(e.init, rename), map_vars(e.rest, rename))
    if isinstance(e, Pre):
        return Pre(map_vars(e.sub, rename))
    if isinstance(e, Hist):
        return Hist(map_vars(e.sub, rename))
    if isinstance(e, Initz):
        return Initz(map_vars(e.sub, rename))
    if isinstance(e, MinPos):
        return MinPos(tuple(map_vars(a, rename) for a in e.args))
    raise TypeError(f"unknown expression node {e!r}")


def prefix_expr(e: Expr, prefix: str) -> Expr:
    """Prefix every variable except the shared clock `t`."""
    return map_vars(e, lambda n: n if n == TIME_VAR else f"{prefix}{n}")


def fresh_name(taken: set[str], base: str) -> str:
    name = base
    k = 1
    while name in taken or name == TIME_VAR:
        k += 1
        name = f"{base}_{k}"
    taken.add(name)
    return name


class TemporalLowering:
    """Rewrites `hist` and `initz` nodes into fresh defined streams:

        hist(e)   ~>  h  with  h = e and (true -> pre(h))
        initz(e)  ~>  z  with  z = (true -> pre(e))

    Identical operands share one stream. The extra definitions join the
    program's transition constraints.
    """

    def __init__(self, program: SpecProgram):
        self.program = program.copy()
        self.new_vars: dict[str, TypeTag] = {}
        self.new_defs: list[NamedExpr] = []
        self._taken = set(self.program.vars)
        self._hist_cache: dict[Expr, str] = {}
        self._initz_cache: dict[Expr, str] = {}

    def lower(self, e: Expr) -> Expr:
        if isinstance(e, (Const, Var)):
            return e
        if isinstance(e, Unary):
            return Unary(e.op, self.lower(e.sub))
        if isinstance(e, Binary):
            return Binary(e.op, self.lower(e.lhs), self.lower(e.rhs))
        if isinstance(e, Ite):
            return Ite(self.lower(e.cond), self.lower(e.then), self.lower(e.orelse))
        if isinstance(e, Arrow):
            return Arrow(self.lower(e.init), self.lower(e.rest))
        if isinstance(e, Pre):
            return Pre(self.lower(e.sub))
        if isinstance(e, MinPos):
            return MinPos(tuple(self.lower(a) for a in e.args))
        if isinstance(e, Hist):
            sub = self.lower(e.sub)
            name = self._hist_cache.get(sub)
            if name is None:
                name = fresh_name(self._taken, "held_so_far")
                self._hist_cache[sub] = name
                h = Var(name)
                self.new_vars[name] = TypeTag.BOOL
                self.new_defs.append(
                    NamedExpr(
                        f"def {name}",
                        sx.eq(h, sx.land(sub, sx.arrow(sx.TRUE, sx.pre(h)))),
                    )
                )
            return Var(name)
        if isinstance(e, Initz):
            sub = self.lower(e.sub)
            name = self._initz_cache.get(sub)
            if name is None:
                name = fresh_name(self._taken, "prev_step")
                self._initz_cache[sub] = name
                z = Var(name)
                self.new_vars[name] = TypeTag.BOOL
                self.new_defs.append(
                    NamedExpr(
                        f"def {name}",
                        sx.eq(z, sx.arrow(sx.TRUE, sx.pre(sub))),
                    )
                )
            return Var(name)
        raise TypeError(f"unknown expression node {e!r}")


def lower_temporal(
    program: SpecProgram, extras: Optional[list[Expr]] = None
) -> tuple[SpecProgram, list[Expr]]:
    """Lower history operators in the whole program plus any extra
    expressions (properties to check, lemmas). Returns the rewritten program
    and the rewritten extras."""
    lt = TemporalLowering(program)
    transition = [NamedExpr(ne.label, lt.lower(ne.expr)) for ne in program.transition]
    properties = [NamedExpr(ne.label, lt.lower(ne.expr)) for ne in program.properties]
    lowered_extras = [lt.lower(e) for e in (extras or [])]
    lt.program.vars.update(lt.new_vars)
    lt.program.transition = transition + lt.new_defs
    lt.program.properties = properties
    return lt.program, lowered_extras
