"""Compile parsed SMT-LIB assertions into CNF plus simplex-backed
arithmetic atoms.

Arithmetic equalities split into two weak inequalities before clausification
(so negated equalities become a boolean disjunction of strict bounds).
Arithmetic `ite` terms get a fresh theory variable tied to both branches by
guarded equalities. Multi-variable linear forms share one slack variable per
canonically scaled form; single-variable atoms become direct bounds.
Integer-sorted bounds are tightened to integral non-strict bounds when
asserted.
"""

from __future__ import annotations

from fractions import Fraction
from math import ceil, floor, gcd
from typing import Optional, Union

from .sat import Solver
from .simplex import Delta, Simplex

Term = Union[str, tuple]


class CompileError(Exception):
    pass


def freeze(node: Union[str, list]) -> Term:
    if isinstance(node, str):
        return node
    return tuple(freeze(x) for x in node)


def _strip(sym: str) -> str:
    if len(sym) >= 2 and sym.startswith("|") and sym.endswith("|"):
        return sym[1:-1]
    return sym


class LinExpr:
    __slots__ = ("terms", "const", "is_int")

    def __init__(self, terms: dict[int, Fraction], const: Fraction, is_int: bool):
        self.terms = terms
        self.const = const
        self.is_int = is_int

    @classmethod
    def constant(cls, c: Fraction, is_int: bool) -> "LinExpr":
        return cls({}, c, is_int)

    @classmethod
    def variable(cls, v: int, is_int: bool) -> "LinExpr":
        return cls({v: Fraction(1)}, Fraction(0), is_int)

    def add(self, other: "LinExpr") -> "LinExpr":
        terms = dict(self.terms)
        for v, c in other.terms.items():
            nc = terms.get(v, Fraction(0)) + c
            if nc == 0:
                terms.pop(v, None)
            else:
                terms[v] = nc
        return LinExpr(terms, self.const + other.const, self.is_int and other.is_int)

    def sub(self, other: "LinExpr") -> "LinExpr":
        return self.add(other.scale(Fraction(-1)))

    def scale(self, c: Fraction) -> "LinExpr":
        if c == 0:
            return LinExpr({}, Fraction(0), self.is_int)
        return LinExpr(
            {v: k * c for v, k in self.terms.items()}, self.const * c, self.is_int
        )


class ArithAdapter:
    """Theory hook bridging the SAT trail and the simplex."""

    def __init__(self, simplex: Simplex):
        self.simplex = simplex
        # sat var -> (theory var, kind, rational bound, int-sorted)
        self.atom_info: dict[int, tuple[int, str, Fraction, bool]] = {}

    _COMPLEMENT = {"le": "gt", "lt": "ge", "ge": "lt", "gt": "le"}

    def relevant(self, var: int) -> bool:
        return var in self.atom_info

    def on_assign(self, lit: int) -> Optional[list[int]]:
        var = abs(lit)
        x, kind, q, is_int = self.atom_info[var]
        if lit < 0:
            kind = self._COMPLEMENT[kind]
        if is_int:
            if kind == "le":
                q = Fraction(floor(q))
            elif kind == "lt":
                q = Fraction(ceil(q) - 1)
                kind = "le"
            elif kind == "ge":
                q = Fraction(ceil(q))
            elif kind == "gt":
                q = Fraction(floor(q) + 1)
                kind = "ge"
        if kind == "le":
            return self.simplex.assert_upper(x, Delta(q, Fraction(0)), lit)
        if kind == "lt":
            return self.simplex.assert_upper(x, Delta(q, Fraction(-1)), lit)
        if kind == "ge":
            return self.simplex.assert_lower(x, Delta(q, Fraction(0)), lit)
        return self.simplex.assert_lower(x, Delta(q, Fraction(1)), lit)

    def check(self) -> Optional[list[int]]:
        return self.simplex.check()

    def mark(self) -> int:
        return self.simplex.mark()

    def pop_to(self, mark: int) -> None:
        self.simplex.pop_to(mark)


class Compiler:
    def __init__(self) -> None:
        self.simplex = Simplex()
        self.adapter = ArithAdapter(self.simplex)
        self.sat = Solver(theory=self.adapter)
        self.sorts: dict[str, str] = {}
        self.bool_consts: dict[str, int] = {}
        self.theory_consts: dict[str, int] = {}
        self.var_is_int: dict[int, bool] = {}
        self._form_slack: dict[tuple, int] = {}
        self._atom_cache: dict[tuple[int, str, Fraction], int] = {}
        self._gate_cache: dict[tuple, int] = {}
        self._ite_cache: dict[Term, LinExpr] = {}
        self._true_lit: Optional[int] = None

    # ----- declarations ---------------------------------------------------

    def declare(self, name: str, sort: str) -> None:
        name = _strip(name)
        if name in self.sorts:
            raise CompileError(f"'{name}' declared twice")
        if sort not in ("Bool", "Int", "Real"):
            raise CompileError(f"unsupported sort {sort}")
        self.sorts[name] = sort
        if sort == "Bool":
            self.bool_consts[name] = self.sat.new_var()
        else:
            v = self.simplex.new_var()
            self.theory_consts[name] = v
            self.var_is_int[v] = sort == "Int"

    # ----- literals and gates ----------------------------------------------

    def true_lit(self) -> int:
        if self._true_lit is None:
            self._true_lit = self.sat.new_var()
            self.sat.add_clause([self._true_lit])
        return self._true_lit

    def _gate(self, key: tuple, make) -> int:
        lit = self._gate_cache.get(key)
        if lit is None:
            lit = make()
            self._gate_cache[key] = lit
        return lit

    def _and_gate(self, lits: list[int]) -> int:
        true = self.true_lit()
        if -true in lits:
            return -true
        lits = sorted({l for l in lits if l != true})
        if not lits:
            return true
        if len(lits) == 1:
            return lits[0]
        key = ("and",) + tuple(lits)

        def make() -> int:
            g = self.sat.new_var()
            for l in lits:
                self.sat.add_clause([-g, l])
            self.sat.add_clause([g] + [-l for l in lits])
            return g

        return self._gate(key, make)

    def _or_gate(self, lits: list[int]) -> int:
        return -self._and_gate([-l for l in lits])

    def _iff_gate(self, a: int, b: int) -> int:
        key = ("iff",) + tuple(sorted((a, b)))

        def make() -> int:
            g = self.sat.new_var()
            self.sat.add_clause([-g, -a, b])
            self.sat.add_clause([-g, a, -b])
            self.sat.add_clause([g, a, b])
            self.sat.add_clause([g, -a, -b])
            return g

        return self._gate(key, make)

    def _ite_gate(self, c: int, a: int, b: int) -> int:
        key = ("ite", c, a, b)

        def make() -> int:
            g = self.sat.new_var()
            self.sat.add_clause([-g, -c, a])
            self.sat.add_clause([-g, c, b])
            self.sat.add_clause([g, -c, -a])
            self.sat.add_clause([g, c, -b])
            return g

        return self._gate(key, make)

    # ----- arithmetic atoms ---------------------------------------------------

    def _slack_for(self, le: LinExpr) -> tuple[int, Fraction]:
        """Map a multi-variable form to its shared slack variable. Returns
        (var, scale) where the atom bound must be multiplied by scale."""
        items = sorted(le.terms.items())
        denom_lcm = 1
        for _, c in items:
            denom_lcm = denom_lcm * c.denominator // gcd(denom_lcm, c.denominator)
        nums = [c.numerator * (denom_lcm // c.denominator) for _, c in items]
        g = 0
        for n in nums:
            g = gcd(g, abs(n))
        g = g or 1
        scale = Fraction(denom_lcm, g)
        key = tuple((v, n // g) for (v, _), n in zip(items, nums))
        slack = self._form_slack.get(key)
        if slack is None:
            slack = self.simplex.add_row(
                {v: Fraction(n) for v, n in key}
            )
            self._form_slack[key] = slack
            self.var_is_int[slack] = le.is_int
        return slack, scale

    def atom(self, le: LinExpr, kind: str) -> int:
        """Literal for `le {<=,<} 0`."""
        if not le.terms:
            truth = le.const <= 0 if kind == "le" else le.const < 0
            return self.true_lit() if truth else -self.true_lit()
        if len(le.terms) == 1:
            (v, c), = le.terms.items()
            bound = -le.const / c
            if c < 0:
                kind = {"le": "ge", "lt": "gt"}[kind]
            return self._atom_lit(v, kind, bound, le.is_int)
        slack, scale = self._slack_for(le)
        bound = -le.const * scale
        if scale < 0:
            raise AssertionError("scale is positive by construction")
        return self._atom_lit(slack, kind, bound, le.is_int)

    def _atom_lit(self, x: int, kind: str, q: Fraction, is_int: bool) -> int:
        key = (x, kind, q)
        lit = self._atom_cache.get(key)
        if lit is None:
            lit = self.sat.new_var()
            self._atom_cache[key] = lit
            self.adapter.atom_info[lit] = (x, kind, q, is_int and self.var_is_int.get(x, False))
        return lit

    def le_atom(self, a: LinExpr, b: LinExpr, strict: bool) -> int:
        return self.atom(a.sub(b), "lt" if strict else "le")

    def eq_conj(self, a: LinExpr, b: LinExpr) -> int:
        return self._and_gate([self.le_atom(a, b, False), self.le_atom(b, a, False)])

    # ----- sorts ------------------------------------------------------------

    def sort_of(self, t: Term, env: dict[str, tuple[str, object]]) -> str:
        if isinstance(t, str):
            if t in ("true", "false"):
                return "bool"
            name = _strip(t)
            if name in env:
                return env[name][0]
            if name in self.bool_consts:
                return "bool"
            if name in self.theory_consts:
                return "arith"
            return "arith"  # numerals
        head = t[0]
        if head in ("and", "or", "not", "=>", "<", "<=", ">", ">=", "distinct"):
            return "bool"
        if head == "=":
            return "bool"
        if head == "ite":
            return self.sort_of(t[2], env)
        if head == "let":
            env2 = self._let_env(t, env)
            return self.sort_of(t[2], env2)
        return "arith"

    def _let_env(
        self, t: Term, env: dict[str, tuple[str, object]]
    ) -> dict[str, tuple[str, object]]:
        env2 = dict(env)
        for binding in t[1]:
            name = _strip(binding[0])
            val = binding[1]
            if self.sort_of(val, env) == "bool":
                env2[name] = ("bool", self.bool_node(val, env))
            else:
                env2[name] = ("arith", self.arith_node(val, env))
        return env2

    # ----- compilation ----------------------------------------------------------

    def bool_node(self, t: Term, env: dict[str, tuple[str, object]]) -> int:
        if isinstance(t, str):
            if t == "true":
                return self.true_lit()
            if t == "false":
                return -self.true_lit()
            name = _strip(t)
            if name in env:
                sort, val = env[name]
                if sort != "bool":
                    raise CompileError(f"'{name}' is not boolean")
                return val  # type: ignore[return-value]
            lit = self.bool_consts.get(name)
            if lit is None:
                raise CompileError(f"unknown boolean symbol '{name}'")
            return lit
        head = t[0]
        if head == "not":
            return -self.bool_node(t[1], env)
        if head == "and":
            return self._and_gate([self.bool_node(x, env) for x in t[1:]])
        if head == "or":
            return self._or_gate([self.bool_node(x, env) for x in t[1:]])
        if head == "=>":
            lits = [self.bool_node(x, env) for x in t[1:]]
            out = lits[-1]
            for l in reversed(lits[:-1]):
                out = self._or_gate([-l, out])
            return out
        if head == "=":
            if self.sort_of(t[1], env) == "bool":
                lits = [self.bool_node(x, env) for x in t[1:]]
                out = self.true_lit()
                for a, b in zip(lits, lits[1:]):
                    out = self._and_gate([out, self._iff_gate(a, b)])
                return out
            exprs = [self.arith_node(x, env) for x in t[1:]]
            parts = [self.eq_conj(a, b) for a, b in zip(exprs, exprs[1:])]
            return self._and_gate(parts)
        if head in ("<", "<=", ">", ">="):
            a = self.arith_node(t[1], env)
            b = self.arith_node(t[2], env)
            if head == "<":
                return self.le_atom(a, b, True)
            if head == "<=":
                return self.le_atom(a, b, False)
            if head == ">":
                return self.le_atom(b, a, True)
            return self.le_atom(b, a, False)
        if head == "ite":
            c = self.bool_node(t[1], env)
            a = self.bool_node(t[2], env)
            b = self.bool_node(t[3], env)
            return self._ite_gate(c, a, b)
        if head == "let":
            env2 = self._let_env(t, env)
            return self.bool_node(t[2], env2)
        raise CompileError(f"unsupported boolean term {t!r}")

    def arith_node(self, t: Term, env: dict[str, tuple[str, object]]) -> LinExpr:
        if isinstance(t, str):
            name = _strip(t)
            if name in env:
                sort, val = env[name]
                if sort != "arith":
                    raise CompileError(f"'{name}' is not arithmetic")
                return val  # type: ignore[return-value]
            if name in self.theory_consts:
                v = self.theory_consts[name]
                return LinExpr.variable(v, self.var_is_int[v])
            try:
                if "." in name:
                    return LinExpr.constant(Fraction(name), False)
                return LinExpr.constant(Fraction(int(name)), True)
            except ValueError as exc:
                raise CompileError(f"unknown symbol '{name}'") from exc
        head = t[0]
        if head == "+":
            out = self.arith_node(t[1], env)
            for x in t[2:]:
                out = out.add(self.arith_node(x, env))
            return out
        if head == "-":
            if len(t) == 2:
                return self.arith_node(t[1], env).scale(Fraction(-1))
            out = self.arith_node(t[1], env)
            for x in t[2:]:
                out = out.sub(self.arith_node(x, env))
            return out
        if head == "*":
            parts = [self.arith_node(x, env) for x in t[1:]]
            consts = [p for p in parts if not p.terms]
            real = [p for p in parts if p.terms]
            if len(real) > 1:
                raise CompileError("nonlinear product")
            factor = Fraction(1)
            for p in consts:
                factor *= p.const
            if not real:
                return LinExpr.constant(factor, all(p.is_int for p in parts))
            return real[0].scale(factor)
        if head == "/":
            a = self.arith_node(t[1], env)
            b = self.arith_node(t[2], env)
            if b.terms or b.const == 0:
                raise CompileError("non-constant or zero divisor")
            out = a.scale(Fraction(1) / b.const)
            out.is_int = False
            return out
        if head == "ite":
            cached = self._ite_cache.get(t)
            if cached is not None:
                return cached
            c = self.bool_node(t[1], env)
            a = self.arith_node(t[2], env)
            b = self.arith_node(t[3], env)
            is_int = a.is_int and b.is_int
            v = self.simplex.new_var()
            self.var_is_int[v] = is_int
            ve = LinExpr.variable(v, is_int)
            self.sat.add_clause([-c, self.le_atom(ve, a, False)])
            self.sat.add_clause([-c, self.le_atom(a, ve, False)])
            self.sat.add_clause([c, self.le_atom(ve, b, False)])
            self.sat.add_clause([c, self.le_atom(b, ve, False)])
            # lets introduce fresh bindings per occurrence, so only cache
            # closed terms
            if not _has_free_symbols(t, env):
                self._ite_cache[t] = ve
            return ve
        if head == "let":
            env2 = self._let_env(t, env)
            return self.arith_node(t[2], env2)
        raise CompileError(f"unsupported arithmetic term {t!r}")

    def assert_term(self, t: Term) -> None:
        lit = self.bool_node(t, {})
        self.sat.add_clause([lit])


def _has_free_symbols(t: Term, env: dict[str, tuple[str, object]]) -> bool:
    if not env:
        return False
    if isinstance(t, str):
        return _strip(t) in env
    return any(_has_free_symbols(x, env) for x in t)
