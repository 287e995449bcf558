"""Exhaustive bounded trace enumeration: the ground-truth engine.

Variables defined by an equational constraint (`x = rhs` with no
current-step self-reference) are computed; remaining booleans are
enumerated over {false, true}; remaining numeric variables need a finite
grid. Time either follows the event calendar (when the program declares
timeouts), a finite delta grid, or a unit tick when the program never
reads the clock.

The search is depth-first with constraint pruning, in a deterministic
order: free variables in declaration order, grid values in the order
given, smaller deltas first as supplied.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

from .result import CheckResult
from .semantics import (
    Calendar,
    CalendarExhausted,
    State,
    TimedTrace,
    advance_time,
    compile_expr,
)
from .syntax import (
    Binary,
    Expr,
    NamedExpr,
    SpecProgram,
    TIME_VAR,
    TypeTag,
    Var,
    current_step_vars,
)
from .values import Value


class EnumerationError(Exception):
    pass


class DomainExplosion(EnumerationError):
    def __init__(self, estimate: int, ceiling: int):
        super().__init__(
            f"estimated {estimate} traces exceeds the enumeration ceiling "
            f"of {ceiling}"
        )
        self.estimate = estimate
        self.ceiling = ceiling


@dataclass
class EnumerationDomain:
    """Finite domains for the free inputs of a program."""

    horizon: int
    time_deltas: list[Fraction] = field(default_factory=list)
    grids: dict[str, list[Value]] = field(default_factory=dict)
    ceiling: int = 10**6

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise EnumerationError("horizon must be at least 1")
        self.time_deltas = [Fraction(d) for d in self.time_deltas]
        if any(d <= 0 for d in self.time_deltas):
            raise EnumerationError("time deltas must be strictly positive")
        for name, grid in self.grids.items():
            if not grid:
                raise EnumerationError(f"empty grid for '{name}'")


def _definition_target(
    e: Expr, defs: dict[str, Expr]
) -> Optional[tuple[str, Expr]]:
    if not isinstance(e, Binary) or e.op != "=":
        return None
    for lhs, rhs in ((e.lhs, e.rhs), (e.rhs, e.lhs)):
        if (
            isinstance(lhs, Var)
            and lhs.name != TIME_VAR
            and lhs.name not in defs
            and lhs.name not in current_step_vars(rhs)
        ):
            return lhs.name, rhs
    return None


def _topo(defs: dict[str, Expr]) -> tuple[list[str], set[str]]:
    deps = {
        n: {d for d in current_step_vars(rhs) if d in defs}
        for n, rhs in defs.items()
    }
    order: list[str] = []
    ready = [n for n, ds in deps.items() if not ds]
    remaining = {n: set(ds) for n, ds in deps.items() if ds}
    while ready:
        n = ready.pop(0)
        order.append(n)
        for m in list(remaining):
            remaining[m].discard(n)
            if not remaining[m]:
                del remaining[m]
                ready.append(m)
        ready.sort()
    return order, set(remaining)


def classify_program(program: SpecProgram):
    """Split a program's variables into equationally defined streams (with a
    per-step evaluation order) and free inputs, and its constraints into
    definitions and filters. Definition cycles fall back to filters."""
    defs: dict[str, Expr] = {}
    filters: list[NamedExpr] = []
    for ne in program.transition:
        target = _definition_target(ne.expr, defs)
        if target is not None:
            name, rhs = target
            defs[name] = rhs
        else:
            filters.append(ne)
    order, cyclic = _topo(defs)
    for name in sorted(cyclic):
        filters.append(NamedExpr(f"def {name}", Binary("=", Var(name), defs.pop(name))))
    order = [n for n in order if n in defs]
    defined = [(n, compile_expr(defs[n])) for n in order]
    compiled_filters = [
        (ne.display(f"constraint[{k}]"), compile_expr(ne.expr))
        for k, ne in enumerate(filters)
    ]
    free = [name for name in program.vars if name not in defs and name != TIME_VAR]
    return defined, compiled_filters, free


class _Plan:
    """Per-step execution plan: free assignments, defined computations in
    dependency order, and filter constraints."""

    def __init__(self, program: SpecProgram, dom: EnumerationDomain):
        self.program = program
        self.dom = dom
        self.defined, self.filters, free = classify_program(program)
        self.free_bools: list[str] = []
        self.free_grid: list[tuple[str, list[Value]]] = []
        for name in free:
            ty = program.vars[name]
            if ty is TypeTag.BOOL:
                self.free_bools.append(name)
            else:
                grid = dom.grids.get(name)
                if grid is None:
                    raise EnumerationError(
                        f"free {ty.value} variable '{name}' needs a grid"
                    )
                self.free_grid.append((name, list(grid)))
        self.calendar_names = list(program.timeouts)
        self.uses_time = program.uses_time()
        if self.calendar_names:
            self.time_mode = "calendar"
        elif dom.time_deltas:
            self.time_mode = "grid"
        elif self.uses_time:
            raise EnumerationError("program reads the clock: supply time deltas")
        else:
            self.time_mode = "unit"

    def branch_factor(self) -> int:
        factor = 2 ** len(self.free_bools)
        for _, grid in self.free_grid:
            factor *= len(grid)
        if self.time_mode == "grid":
            factor *= len(self.dom.time_deltas)
        return max(factor, 1)

    def estimate(self) -> int:
        return self.branch_factor() ** self.dom.horizon


def _assignments(plan: _Plan) -> Iterator[dict[str, Value]]:
    names = plan.free_bools + [n for n, _ in plan.free_grid]
    domains: list[list[Value]] = [[False, True] for _ in plan.free_bools]
    domains += [grid for _, grid in plan.free_grid]
    if not names:
        yield {}
        return
    idx = [0] * len(names)
    while True:
        yield {n: domains[k][idx[k]] for k, n in enumerate(names)}
        k = len(names) - 1
        while k >= 0:
            idx[k] += 1
            if idx[k] < len(domains[k]):
                break
            idx[k] = 0
            k -= 1
        if k < 0:
            return


class _Search:
    def __init__(
        self,
        program: SpecProgram,
        dom: EnumerationDomain,
        prop_fn=None,
        prop_depth: Optional[int] = None,
        horizon: Optional[int] = None,
    ):
        self.plan = _Plan(program, dom)
        est = self.plan.estimate()
        if est > dom.ceiling:
            raise DomainExplosion(est, dom.ceiling)
        self.dom = dom
        self.horizon = horizon if horizon is not None else dom.horizon
        self.prop_fn = prop_fn
        self.prop_depth = prop_depth
        self.states: list[State] = []
        self.violation: Optional[tuple[int, list[State]]] = None

    def _times_for_step(self, i: int) -> list[Fraction]:
        if i == 1:
            return [Fraction(0)]
        prev_t = Fraction(self.states[-1][TIME_VAR])
        if self.plan.time_mode == "calendar":
            cal = Calendar([self.states[-1][n] for n in self.plan.calendar_names])
            try:
                return [advance_time(prev_t, cal)]
            except CalendarExhausted:
                return []
        if self.plan.time_mode == "grid":
            return [prev_t + d for d in self.dom.time_deltas]
        return [prev_t + 1]

    def run(self) -> Iterator[TimedTrace]:
        yield from self._descend(1)

    def _descend(self, i: int) -> Iterator[TimedTrace]:
        plan = self.plan
        for tv in self._times_for_step(i):
            for free in _assignments(plan):
                state: State = dict(free)
                state[TIME_VAR] = tv
                self.states.append(state)
                try:
                    ok = True
                    for name, fn in plan.defined:
                        state[name] = fn(self.states, i)
                    for _, fn in plan.filters:
                        if not fn(self.states, i):
                            ok = False
                            break
                    if ok and self.prop_fn is not None:
                        if self.prop_depth is None or i == self.prop_depth:
                            if not self.prop_fn(self.states, i):
                                self.violation = (i, [dict(s) for s in self.states])
                                return
                    if ok:
                        if i == self.horizon:
                            yield TimedTrace(
                                [dict(s) for s in self.states],
                                [Fraction(s[TIME_VAR]) for s in self.states],
                            )
                        else:
                            yield from self._descend(i + 1)
                            if self.violation is not None:
                                return
                except CalendarExhausted:
                    pass
                finally:
                    self.states.pop()


def enumerate_traces(
    program: SpecProgram, dom: EnumerationDomain
) -> Iterator[TimedTrace]:
    """All admissible traces of exactly `dom.horizon` steps over the finite
    domain, in a deterministic order."""
    search = _Search(program, dom)
    yield from search.run()


def check_invariant_explicit(
    program: SpecProgram, prop: Expr, dom: EnumerationDomain
) -> CheckResult:
    """Search every admissible trace prefix up to the horizon for a property
    violation, shallowest step first, so a reported counterexample fails at
    the earliest possible step. `proved` means: no counterexample within
    the domain."""
    start = _time.monotonic()
    prop_fn = compile_expr(prop)
    for depth in range(1, dom.horizon + 1):
        search = _Search(
            program, dom, prop_fn=prop_fn, prop_depth=depth, horizon=depth
        )
        for _ in search.run():
            pass
        if search.violation is not None:
            step, states = search.violation
            trace = TimedTrace(states, [Fraction(s[TIME_VAR]) for s in states])
            return CheckResult(
                "falsified",
                engine="explicit",
                bound=dom.horizon,
                counterexample=trace,
                failed_step=step,
                wall_time=_time.monotonic() - start,
            )
    return CheckResult(
        "proved",
        engine="explicit",
        bound=dom.horizon,
        wall_time=_time.monotonic() - start,
    )
