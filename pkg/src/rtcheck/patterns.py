"""Requirement patterns: phrase-level data types, direct trace-set membership
oracles, and lowering to observer properties or transition constraints.

Membership functions evaluate the quantifier definition of each pattern's
trace set directly on a finite trace; they are the ground truth the compiled
observers and constraints are tested against.

Finite traces cannot always decide an obligation: a cause whose deadline has
not strictly passed at the end of the trace is reported `IN_PENDING` and
treated as accepted, mirroring the fact that the invariant monitor cannot
have failed yet on that prefix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Union

from . import syntax as sx
from .semantics import TimedTrace, compile_expr
from .syntax import (
    Expr,
    NamedExpr,
    SpecProgram,
    TIME_VAR,
    TypeTag,
    Var,
)
class PatternError(Exception):
    """Malformed pattern or unsupported lowering request."""


@dataclass(frozen=True)
class Interval:
    """Time window with open/closed ends. Bounds are nonnegative finite
    rationals with low <= high."""

    low: Fraction
    high: Fraction
    low_closed: bool = True
    high_closed: bool = True

    def __post_init__(self) -> None:
        if self.low < 0 or self.high < 0:
            raise PatternError("interval bounds must be nonnegative")
        if self.low > self.high:
            raise PatternError(
                f"interval upper bound {self.high} is below lower bound {self.low}"
            )

    def contains(self, delta: Fraction) -> bool:
        lo_ok = delta >= self.low if self.low_closed else delta > self.low
        hi_ok = delta <= self.high if self.high_closed else delta < self.high
        return lo_ok and hi_ok

    def below_high(self, delta: Fraction) -> bool:
        """delta has not passed the upper end."""
        return delta <= self.high if self.high_closed else delta < self.high

    def past_high(self, delta: Fraction) -> bool:
        return not self.below_high(delta)

    def at_least_low(self, delta: Fraction) -> bool:
        return delta >= self.low if self.low_closed else delta > self.low

    def render(self) -> str:
        lo = "[" if self.low_closed else "("
        hi = "]" if self.high_closed else ")"
        return f"{lo}{_render_rat(self.low)}, {_render_rat(self.high)}{hi}"


def _render_rat(x: Fraction) -> str:
    if x.denominator == 1:
        return f"{x.numerator}.0"
    # exact decimal if the denominator is a power of 2*5, else num/den
    num, den = x.numerator, x.denominator
    d = den
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d == 1:
        scale = 10 ** max(twos, fives)
        digits = num * scale // den
        s = str(abs(digits)).rjust(max(twos, fives) + 1, "0")
        point = len(s) - max(twos, fives)
        sign = "-" if num < 0 else ""
        return f"{sign}{s[:point]}.{s[point:]}"
    return f"{num}/{den}"


@dataclass(frozen=True)
class WheneverEventEvent:
    """whenever <cause> occurs <effect> [exclusively] occurs during <window>"""

    cause: Expr
    effect: Expr
    window: Interval
    exclusive: bool = False


@dataclass(frozen=True)
class WheneverEventCondition:
    """whenever <cause> occurs <condition> holds during <window>

    The window is anchored at each cause; the condition must be true at
    every state whose time falls in the window, including the cause state
    itself when the lower bound admits elapsed time zero.
    """

    cause: Expr
    condition: Expr
    window: Interval


@dataclass(frozen=True)
class WhenConditionEvent:
    """when <condition> holds during <hold> <event> occurs during <window>

    A trigger is a state where the condition starts to hold and then holds at
    every state until `hold.low` time has elapsed; the event must then occur
    in `window`, both windows measured from the trigger state. The upper hold
    bound is validated but carries no further meaning here.
    """

    condition: Expr
    hold: Interval
    event: Expr
    window: Interval


@dataclass(frozen=True)
class Always:
    """always <condition>"""

    condition: Expr


@dataclass(frozen=True)
class Periodic:
    """<event> occurs each <period> [with jitter <jitter>]

    Occurrences track nominal instants a, a + period, a + 2*period, ... for a
    nondeterministic phase a in [0, period]; each occurrence lies within
    +-jitter of its nominal instant and no nominal instant is skipped.
    jitter < period/2 keeps consecutive occurrence windows disjoint.
    """

    event: Expr
    period: Fraction
    jitter: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if self.period <= 0:
            raise PatternError("period must be positive")
        if self.jitter < 0:
            raise PatternError("jitter must be nonnegative")
        if self.jitter >= self.period / 2:
            raise PatternError("jitter must be below half the period")


@dataclass(frozen=True)
class Sporadic:
    """<event> occurs sporadic with IAT <iat> [and jitter <jitter>]

    Occurrences follow nominal instants spaced at least `iat` apart, each
    within +-jitter of its nominal instant. With jitter zero this is exactly
    a minimum separation between consecutive occurrences.
    """

    event: Expr
    iat: Fraction
    jitter: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if self.iat <= 0:
            raise PatternError("inter-arrival time must be positive")
        if self.jitter < 0:
            raise PatternError("jitter must be nonnegative")


Pattern = Union[
    WheneverEventEvent,
    WheneverEventCondition,
    WhenConditionEvent,
    Always,
    Periodic,
    Sporadic,
]


def parse_pattern(text: str) -> Pattern:
    """Parse a pattern phrase such as
    `whenever a occurs b occurs during [10.0, 20.0]`."""
    from .parser import parse_pattern_text

    return parse_pattern_text(text)


class Membership(Enum):
    IN = "in"
    IN_PENDING = "in-pending"
    OUT = "out"


@dataclass(frozen=True)
class MembershipResult:
    status: Membership
    witness: Optional[int] = None  # 1-based step of the violated obligation

    @property
    def accepted(self) -> bool:
        return self.status is not Membership.OUT


def _truths(e: Expr, trace: TimedTrace) -> list[bool]:
    fn = compile_expr(e)
    return [bool(fn(trace.states, i)) for i in range(1, len(trace) + 1)]


def membership(pat: Pattern, trace: TimedTrace) -> MembershipResult:
    """Direct evaluation of the pattern's trace-set definition."""
    if isinstance(pat, WheneverEventEvent):
        return _membership_event_event(pat, trace)
    if isinstance(pat, WheneverEventCondition):
        return _membership_event_condition(pat, trace)
    if isinstance(pat, WhenConditionEvent):
        return _membership_condition_event(pat, trace)
    if isinstance(pat, Always):
        truths = _truths(pat.condition, trace)
        for i, v in enumerate(truths, start=1):
            if not v:
                return MembershipResult(Membership.OUT, i)
        return MembershipResult(Membership.IN)
    if isinstance(pat, Sporadic):
        return _membership_sporadic(pat, trace)
    if isinstance(pat, Periodic):
        return _membership_periodic(pat, trace)
    raise PatternError(f"unknown pattern {pat!r}")


def _membership_event_event(
    pat: WheneverEventEvent, trace: TimedTrace
) -> MembershipResult:
    causes = _truths(pat.cause, trace)
    effects = _truths(pat.effect, trace)
    times = trace.times
    n = len(trace)
    pending = False
    for i in range(1, n + 1):
        if not causes[i - 1]:
            continue
        discharged = any(
            effects[j - 1] and pat.window.contains(times[j - 1] - times[i - 1])
            for j in range(i + 1, n + 1)
        )
        if discharged:
            continue
        if pat.window.past_high(times[-1] - times[i - 1]):
            return MembershipResult(Membership.OUT, i)
        pending = True
    if pat.exclusive:
        for j in range(1, n + 1):
            if not effects[j - 1]:
                continue
            justified = any(
                causes[i - 1] and pat.window.contains(times[j - 1] - times[i - 1])
                for i in range(1, j)
            )
            if not justified:
                return MembershipResult(Membership.OUT, j)
    return MembershipResult(
        Membership.IN_PENDING if pending else Membership.IN
    )


def relaxed_membership(pat: WheneverEventEvent, trace: TimedTrace) -> bool:
    """Constraint-side trace set: each cause is discharged by an effect in
    its window or by another cause before the window's upper end. Pending
    obligations at the end of the trace are accepted."""
    causes = _truths(pat.cause, trace)
    effects = _truths(pat.effect, trace)
    times = trace.times
    n = len(trace)
    for i in range(1, n + 1):
        if not causes[i - 1]:
            continue
        discharged = False
        for j in range(i + 1, n + 1):
            delta = times[j - 1] - times[i - 1]
            if effects[j - 1] and pat.window.contains(delta):
                discharged = True
                break
            if causes[j - 1] and pat.window.below_high(delta):
                discharged = True
                break
        if discharged:
            continue
        if pat.window.past_high(times[-1] - times[i - 1]):
            return False
    return True


def side_condition_membership(pat: WheneverEventEvent, trace: TimedTrace) -> bool:
    """Non-overlap side condition: between a cause and any following cause
    that arrives before the window's upper end, an effect with elapsed time
    at least the lower bound must occur (possibly at the second cause)."""
    causes = _truths(pat.cause, trace)
    effects = _truths(pat.effect, trace)
    times = trace.times
    n = len(trace)
    for i in range(1, n + 1):
        if not causes[i - 1]:
            continue
        for j in range(i + 1, n + 1):
            if not causes[j - 1]:
                continue
            if not pat.window.below_high(times[j - 1] - times[i - 1]):
                continue
            saved = any(
                effects[k - 1]
                and pat.window.at_least_low(times[k - 1] - times[i - 1])
                for k in range(i + 1, j + 1)
            )
            if not saved:
                return False
    return True


@dataclass(frozen=True)
class DecomposedMembership:
    side_condition: bool
    relaxed: bool


def decomposed_membership(
    pat: WheneverEventEvent, trace: TimedTrace
) -> DecomposedMembership:
    """Evaluate the side-condition and constraint trace sets together."""
    return DecomposedMembership(
        side_condition=side_condition_membership(pat, trace),
        relaxed=relaxed_membership(pat, trace),
    )


def _membership_event_condition(
    pat: WheneverEventCondition, trace: TimedTrace
) -> MembershipResult:
    causes = _truths(pat.cause, trace)
    conds = _truths(pat.condition, trace)
    times = trace.times
    n = len(trace)
    for i in range(1, n + 1):
        if not causes[i - 1]:
            continue
        for j in range(i, n + 1):
            if pat.window.contains(times[j - 1] - times[i - 1]) and not conds[j - 1]:
                return MembershipResult(Membership.OUT, i)
    return MembershipResult(Membership.IN)


def _membership_condition_event(
    pat: WhenConditionEvent, trace: TimedTrace
) -> MembershipResult:
    conds = _truths(pat.condition, trace)
    events = _truths(pat.event, trace)
    times = trace.times
    n = len(trace)
    pending = False
    for i in range(1, n + 1):
        starts = conds[i - 1] and (i == 1 or not conds[i - 2])
        if not starts:
            continue
        # the hold matures when cond covers every observed state up to
        # hold.low elapsed time and the trace has reached that point
        span_ok = all(
            conds[j - 1]
            for j in range(i, n + 1)
            if times[j - 1] - times[i - 1] <= pat.hold.low
        )
        reached = times[-1] - times[i - 1] >= pat.hold.low
        if not span_ok:
            continue
        if not reached:
            pending = True
            continue
        discharged = any(
            events[k - 1] and pat.window.contains(times[k - 1] - times[i - 1])
            for k in range(i + 1, n + 1)
        )
        if discharged:
            continue
        if pat.window.past_high(times[-1] - times[i - 1]):
            return MembershipResult(Membership.OUT, i)
        pending = True
    return MembershipResult(Membership.IN_PENDING if pending else Membership.IN)


def _membership_sporadic(pat: Sporadic, trace: TimedTrace) -> MembershipResult:
    occs = [
        i for i, v in enumerate(_truths(pat.event, trace), start=1) if v
    ]
    times = trace.times
    if pat.jitter == 0:
        for a, b in zip(occs, occs[1:]):
            if times[b - 1] - times[a - 1] < pat.iat:
                return MembershipResult(Membership.OUT, a)
        return MembershipResult(Membership.IN)
    # greedy earliest nominal schedule: feasible iff each occurrence can sit
    # within +-jitter of a nominal at least iat after the previous nominal
    nominal: Optional[Fraction] = None
    for idx in occs:
        o = times[idx - 1]
        lo = o - pat.jitter
        if nominal is not None:
            lo = max(lo, nominal + pat.iat)
        if lo > o + pat.jitter:
            return MembershipResult(Membership.OUT, idx)
        nominal = lo
    return MembershipResult(Membership.IN)


def _membership_periodic(pat: Periodic, trace: TimedTrace) -> MembershipResult:
    occs = [i for i, v in enumerate(_truths(pat.event, trace), start=1) if v]
    times = trace.times
    lo, hi = Fraction(0), pat.period
    for k, idx in enumerate(occs):
        o = times[idx - 1]
        lo = max(lo, o - k * pat.period - pat.jitter)
        hi = min(hi, o - k * pat.period + pat.jitter)
        if lo > hi:
            return MembershipResult(Membership.OUT, idx)
    # a missed nominal instant is observable once the trace end is past the
    # next occurrence window for every feasible phase
    m = len(occs)
    if times and hi + m * pat.period + pat.jitter < times[-1]:
        return MembershipResult(Membership.OUT, len(trace))
    return MembershipResult(Membership.IN)


class BundleMode(Enum):
    PROPERTY = "property-observer"
    CONSTRAINT = "constraint"
    SIDE_CONDITION = "prop-side-condition"


@dataclass
class ObserverBundle:
    """Fresh variables and constraints produced by lowering a pattern.

    In PROPERTY and SIDE_CONDITION modes the constraints only restrict the
    fresh variables, so they never exclude host traces; `prop` is the
    invariant to check. In CONSTRAINT mode the constraints restrict the host
    and `prop` is None. `timeouts` lists fresh variables to register in the
    event calendar (calendar-style constraint lowering only).
    """

    mode: BundleMode
    fresh_vars: dict[str, TypeTag] = field(default_factory=dict)
    constraints: list[NamedExpr] = field(default_factory=list)
    prop: Optional[NamedExpr] = None
    timeouts: list[str] = field(default_factory=list)
    roles: dict[str, str] = field(default_factory=dict)


def _namer(taken: set[str]):
    def fresh(base: str) -> str:
        name = base
        k = 1
        while name in taken or name == TIME_VAR:
            k += 1
            name = f"{base}_{k}"
        taken.add(name)
        return name

    return fresh


def _wlow(iv: Interval, anchor_plus_l: Expr, t: Expr) -> Expr:
    return sx.le(anchor_plus_l, t) if iv.low_closed else sx.lt(anchor_plus_l, t)


def _whigh(iv: Interval, t: Expr, anchor_plus_h: Expr) -> Expr:
    return sx.le(t, anchor_plus_h) if iv.high_closed else sx.lt(t, anchor_plus_h)


def _window_test(iv: Interval, anchor: Expr, t: Expr) -> Expr:
    return sx.land(
        _wlow(iv, sx.add(anchor, sx.real(iv.low)), t),
        _whigh(iv, t, sx.add(anchor, sx.real(iv.high))),
    )


def _check_boolean(host: SpecProgram, e: Expr, what: str) -> None:
    from .typecheck import infer_type, TypeError_

    try:
        ty = infer_type(e, host)
    except TypeError_ as exc:
        raise PatternError(f"{what} does not type-check in the host: {exc}") from exc
    if ty is not TypeTag.BOOL:
        raise PatternError(f"{what} must be boolean, got {ty.value}")


def compile_observer(pat: Pattern, host: SpecProgram) -> ObserverBundle:
    """Lower a pattern to an invariant-checking observer over fresh
    variables. The bundle's constraints restrict the fresh variables only;
    `prop` holds on every admissible trace of host+observer iff the host
    admits only traces of the pattern's set."""
    if isinstance(pat, Always):
        _check_boolean(host, pat.condition, "condition")
        return ObserverBundle(
            BundleMode.PROPERTY, prop=NamedExpr("always-holds", pat.condition)
        )
    if isinstance(pat, WheneverEventEvent):
        return _observer_event_event(pat, host)
    if isinstance(pat, WheneverEventCondition):
        return _observer_event_condition(pat, host)
    if isinstance(pat, WhenConditionEvent):
        return _observer_condition_event(pat, host)
    if isinstance(pat, Sporadic):
        if pat.jitter != 0:
            raise PatternError(
                "sporadic with jitter is not supported in property position"
            )
        return _observer_sporadic(pat, host)
    if isinstance(pat, Periodic):
        raise PatternError(
            "periodic is not supported in property position: its phase is an "
            "existential choice, which an invariant over free variables "
            "cannot quantify correctly; use it as an assumption or assertion"
        )
    raise PatternError(f"unknown pattern {pat!r}")


def _observer_event_event(
    pat: WheneverEventEvent, host: SpecProgram
) -> ObserverBundle:
    _check_boolean(host, pat.cause, "cause")
    _check_boolean(host, pat.effect, "effect")
    taken = set(host.vars)
    fresh = _namer(taken)
    run = Var(fresh("run"))
    timer = Var(fresh("timer"))
    rec = Var(fresh("rec_c"))
    passed = Var(fresh("pass"))
    t = Var(TIME_VAR)
    iv = pat.window
    discharge = sx.land(
        sx.pre(run),
        pat.effect,
        _wlow(iv, sx.real(iv.low), timer),
        _whigh(iv, timer, sx.real(iv.high)),
    )
    c1 = sx.eq(
        run,
        sx.arrow(rec, sx.ite(discharge, sx.FALSE, sx.ite(rec, sx.TRUE, sx.pre(run)))),
    )
    c2 = sx.eq(
        timer,
        sx.arrow(
            sx.real(0),
            sx.ite(
                sx.pre(run),
                sx.add(sx.pre(timer), sx.sub(t, sx.pre(t))),
                sx.real(0),
            ),
        ),
    )
    c3 = sx.implies(rec, pat.cause)
    c4 = sx.eq(passed, _whigh(iv, timer, sx.real(iv.high)))
    bundle = ObserverBundle(
        BundleMode.PROPERTY,
        fresh_vars={
            run.name: TypeTag.BOOL,
            timer.name: TypeTag.REAL,
            rec.name: TypeTag.BOOL,
            passed.name: TypeTag.BOOL,
        },
        constraints=[
            NamedExpr("observer-run", c1),
            NamedExpr("observer-timer", c2),
            NamedExpr("observer-rec", c3),
            NamedExpr("observer-pass", c4),
        ],
        prop=NamedExpr("pattern-holds", Var(passed.name)),
        roles={
            "run": run.name,
            "timer": timer.name,
            "rec": rec.name,
            "pass": passed.name,
        },
    )
    if pat.exclusive:
        seen = Var(fresh("seen_c"))
        last = Var(fresh("last_c"))
        prev_seen = sx.arrow(sx.FALSE, sx.pre(seen))
        prev_last = sx.arrow(sx.real(0), sx.pre(last))
        bundle.fresh_vars[seen.name] = TypeTag.BOOL
        bundle.fresh_vars[last.name] = TypeTag.REAL
        bundle.constraints.append(
            NamedExpr("observer-seen", sx.eq(seen, sx.lor(pat.cause, prev_seen)))
        )
        bundle.constraints.append(
            NamedExpr(
                "observer-last", sx.eq(last, sx.ite(pat.cause, t, prev_last))
            )
        )
        only_in_window = sx.implies(
            pat.effect, sx.land(prev_seen, _window_test(iv, prev_last, t))
        )
        bundle.prop = NamedExpr(
            "pattern-holds", sx.land(Var(passed.name), only_in_window)
        )
        bundle.roles["seen"] = seen.name
        bundle.roles["last"] = last.name
    return bundle


def _observer_event_condition(
    pat: WheneverEventCondition, host: SpecProgram
) -> ObserverBundle:
    _check_boolean(host, pat.cause, "cause")
    _check_boolean(host, pat.condition, "condition")
    taken = set(host.vars)
    fresh = _namer(taken)
    rec = Var(fresh("rec_c"))
    run = Var(fresh("run"))
    timer = Var(fresh("timer"))
    t = Var(TIME_VAR)
    c1 = sx.implies(rec, pat.cause)
    c2 = sx.eq(run, sx.arrow(rec, sx.lor(rec, sx.pre(run))))
    c3 = sx.eq(
        timer,
        sx.arrow(
            sx.real(0),
            sx.ite(
                sx.pre(run),
                sx.add(sx.pre(timer), sx.sub(t, sx.pre(t))),
                sx.real(0),
            ),
        ),
    )
    iv = pat.window
    in_window = sx.land(
        _wlow(iv, sx.real(iv.low), timer), _whigh(iv, timer, sx.real(iv.high))
    )
    prop = sx.implies(sx.land(run, in_window), pat.condition)
    return ObserverBundle(
        BundleMode.PROPERTY,
        fresh_vars={
            rec.name: TypeTag.BOOL,
            run.name: TypeTag.BOOL,
            timer.name: TypeTag.REAL,
        },
        constraints=[
            NamedExpr("observer-rec", c1),
            NamedExpr("observer-run", c2),
            NamedExpr("observer-timer", c3),
        ],
        prop=NamedExpr("pattern-holds", prop),
        roles={"rec": rec.name, "run": run.name, "timer": timer.name},
    )


def _observer_condition_event(
    pat: WhenConditionEvent, host: SpecProgram
) -> ObserverBundle:
    _check_boolean(host, pat.condition, "condition")
    _check_boolean(host, pat.event, "event")
    taken = set(host.vars)
    fresh = _namer(taken)
    rec = Var(fresh("rec_c"))
    armed = Var(fresh("run"))
    timer = Var(fresh("timer"))
    held = Var(fresh("held"))
    got = Var(fresh("got_event"))
    t = Var(TIME_VAR)
    prev_armed = sx.arrow(sx.FALSE, sx.pre(armed))
    # record only a fresh start of the condition, at most one per trace
    c1 = sx.implies(
        rec,
        sx.land(
            pat.condition,
            sx.arrow(sx.TRUE, sx.lnot(sx.pre(pat.condition))),
            sx.lnot(prev_armed),
        ),
    )
    c2 = sx.eq(armed, sx.arrow(rec, sx.lor(rec, sx.pre(armed))))
    c3 = sx.eq(
        timer,
        sx.arrow(
            sx.real(0),
            sx.ite(
                sx.pre(armed),
                sx.add(sx.pre(timer), sx.sub(t, sx.pre(t))),
                sx.real(0),
            ),
        ),
    )
    in_hold = sx.le(timer, sx.real(pat.hold.low))
    c4 = sx.eq(
        held,
        sx.arrow(
            rec,
            sx.ite(
                rec, sx.TRUE, sx.land(sx.pre(held), sx.implies(in_hold, pat.condition))
            ),
        ),
    )
    iv = pat.window
    ev_ok = sx.land(
        armed,
        pat.event,
        sx.gt(timer, sx.real(0)),
        _wlow(iv, sx.real(iv.low), timer),
        _whigh(iv, timer, sx.real(iv.high)),
    )
    c5 = sx.eq(got, sx.arrow(sx.FALSE, sx.lor(ev_ok, sx.pre(got))))
    past_end = sx.lnot(_whigh(iv, timer, sx.real(iv.high)))
    matured = sx.ge(timer, sx.real(pat.hold.low))
    prop = sx.implies(sx.land(armed, held, matured, past_end), got)
    return ObserverBundle(
        BundleMode.PROPERTY,
        fresh_vars={
            rec.name: TypeTag.BOOL,
            armed.name: TypeTag.BOOL,
            timer.name: TypeTag.REAL,
            held.name: TypeTag.BOOL,
            got.name: TypeTag.BOOL,
        },
        constraints=[
            NamedExpr("observer-rec", c1),
            NamedExpr("observer-armed", c2),
            NamedExpr("observer-timer", c3),
            NamedExpr("observer-held", c4),
            NamedExpr("observer-got", c5),
        ],
        prop=NamedExpr("pattern-holds", prop),
        roles={
            "rec": rec.name,
            "run": armed.name,
            "timer": timer.name,
            "held": held.name,
            "got": got.name,
        },
    )


def _observer_sporadic(pat: Sporadic, host: SpecProgram) -> ObserverBundle:
    _check_boolean(host, pat.event, "event")
    taken = set(host.vars)
    fresh = _namer(taken)
    seen = Var(fresh("seen_occ"))
    last = Var(fresh("last_occ"))
    t = Var(TIME_VAR)
    prev_seen = sx.arrow(sx.FALSE, sx.pre(seen))
    prev_last = sx.arrow(sx.real(0), sx.pre(last))
    c1 = sx.eq(seen, sx.lor(pat.event, prev_seen))
    c2 = sx.eq(last, sx.ite(pat.event, t, prev_last))
    prop = sx.implies(
        sx.land(pat.event, prev_seen),
        sx.ge(t, sx.add(prev_last, sx.real(pat.iat))),
    )
    return ObserverBundle(
        BundleMode.PROPERTY,
        fresh_vars={seen.name: TypeTag.BOOL, last.name: TypeTag.REAL},
        constraints=[
            NamedExpr("observer-seen", c1),
            NamedExpr("observer-last", c2),
        ],
        prop=NamedExpr("pattern-holds", prop),
        roles={"seen": seen.name, "last": last.name},
    )


def compile_constraint(
    pat: Pattern, host: SpecProgram, style: str = "filter"
) -> ObserverBundle:
    """Lower a pattern to transition constraints restricting the host.

    style="filter" rejects inadmissible extensions using tracked state and
    works under any time model (this is what the enumerator checks exactly
    against the membership oracles). style="calendar" schedules fresh
    timeout variables in the event calendar, the timeout-automaton modeling
    style; it requires the resulting program to run under the calendar rule.
    """
    if style not in ("filter", "calendar"):
        raise PatternError(f"unknown constraint style {style!r}")
    if isinstance(pat, Always):
        _check_boolean(host, pat.condition, "condition")
        return ObserverBundle(
            BundleMode.CONSTRAINT,
            constraints=[NamedExpr("always", pat.condition)],
        )
    if isinstance(pat, WheneverEventEvent):
        return _constraint_event_event(pat, host, style)
    if isinstance(pat, WheneverEventCondition):
        return _constraint_event_condition(pat, host)
    if isinstance(pat, Sporadic):
        return _constraint_sporadic(pat, host, style)
    if isinstance(pat, Periodic):
        return _constraint_periodic(pat, host, style)
    if isinstance(pat, WhenConditionEvent):
        raise PatternError(
            "'when <condition> holds' patterns are not supported in constraint "
            "position: enforcing them exactly needs unbounded lookahead state; "
            "use them as properties"
        )
    raise PatternError(f"unknown pattern {pat!r}")


def _constraint_event_event(
    pat: WheneverEventEvent, host: SpecProgram, style: str
) -> ObserverBundle:
    _check_boolean(host, pat.cause, "cause")
    _check_boolean(host, pat.effect, "effect")
    taken = set(host.vars)
    fresh = _namer(taken)
    t = Var(TIME_VAR)
    iv = pat.window
    if style == "filter":
        pend = Var(fresh("pending"))
        anch = Var(fresh("anchor"))
        prev_pend = sx.arrow(sx.FALSE, sx.pre(pend))
        prev_anch = sx.arrow(sx.real(0), sx.pre(anch))
        discharge = sx.land(
            pat.effect, _window_test(iv, prev_anch, t)
        )
        c1 = sx.eq(
            pend,
            sx.ite(pat.cause, sx.TRUE, sx.land(prev_pend, sx.lnot(discharge))),
        )
        c2 = sx.eq(anch, sx.ite(pat.cause, t, prev_anch))
        c3 = sx.implies(
            prev_pend, _whigh(iv, t, sx.add(prev_anch, sx.real(iv.high)))
        )
        bundle = ObserverBundle(
            BundleMode.CONSTRAINT,
            fresh_vars={pend.name: TypeTag.BOOL, anch.name: TypeTag.REAL},
            constraints=[
                NamedExpr("window-pending", c1),
                NamedExpr("window-anchor", c2),
                NamedExpr("window-deadline", c3),
            ],
            roles={"pending": pend.name, "anchor": anch.name},
        )
        seen_name = None
        if pat.exclusive:
            seen = Var(fresh("seen_cause"))
            prev_seen = sx.arrow(sx.FALSE, sx.pre(seen))
            bundle.fresh_vars[seen.name] = TypeTag.BOOL
            bundle.constraints.append(
                NamedExpr(
                    "window-seen", sx.eq(seen, sx.lor(pat.cause, prev_seen))
                )
            )
            bundle.constraints.append(
                NamedExpr(
                    "effect-only-in-window",
                    sx.implies(
                        pat.effect,
                        sx.land(prev_seen, _window_test(iv, prev_anch, t)),
                    ),
                )
            )
            bundle.roles["seen"] = seen.name
        return bundle
    # calendar style: a deadline timeout forces a state inside each window
    aim = Var(fresh("aim"))
    deadline = Var(fresh("deadline"))
    c1 = sx.land(
        sx.lt(t, aim),
        _wlow(iv, sx.add(t, sx.real(iv.low)), aim),
        _whigh(iv, aim, sx.add(t, sx.real(iv.high))),
    )
    c2 = sx.eq(
        deadline, sx.ite(pat.cause, aim, sx.arrow(sx.inf(), sx.pre(deadline)))
    )
    c3 = sx.implies(sx.eq(deadline, t), pat.effect)
    bundle = ObserverBundle(
        BundleMode.CONSTRAINT,
        fresh_vars={aim.name: TypeTag.REAL, deadline.name: TypeTag.REAL},
        constraints=[
            NamedExpr("window-aim", c1),
            NamedExpr("window-deadline", c2),
            NamedExpr("window-effect", c3),
        ],
        timeouts=[deadline.name],
        roles={"aim": aim.name, "deadline": deadline.name},
    )
    if pat.exclusive:
        seen = Var(fresh("seen_cause"))
        anch = Var(fresh("anchor"))
        prev_seen = sx.arrow(sx.FALSE, sx.pre(seen))
        prev_anch = sx.arrow(sx.real(0), sx.pre(anch))
        bundle.fresh_vars[seen.name] = TypeTag.BOOL
        bundle.fresh_vars[anch.name] = TypeTag.REAL
        bundle.constraints.extend(
            [
                NamedExpr("window-seen", sx.eq(seen, sx.lor(pat.cause, prev_seen))),
                NamedExpr(
                    "window-anchor", sx.eq(anch, sx.ite(pat.cause, t, prev_anch))
                ),
                NamedExpr(
                    "effect-only-in-window",
                    sx.implies(
                        pat.effect,
                        sx.land(prev_seen, _window_test(iv, prev_anch, t)),
                    ),
                ),
            ]
        )
        bundle.roles["seen"] = seen.name
        bundle.roles["anchor"] = anch.name
    return bundle


def _constraint_event_condition(
    pat: WheneverEventCondition, host: SpecProgram
) -> ObserverBundle:
    """Most-recent-cause tracking. Exact for hosts whose causes are spaced
    beyond the window's upper bound; an earlier window truncated by a newer
    cause is not enforced past the newer cause."""
    _check_boolean(host, pat.cause, "cause")
    _check_boolean(host, pat.condition, "condition")
    taken = set(host.vars)
    fresh = _namer(taken)
    seen = Var(fresh("seen_cause"))
    anch = Var(fresh("anchor"))
    t = Var(TIME_VAR)
    prev_seen = sx.arrow(sx.FALSE, sx.pre(seen))
    prev_anch = sx.arrow(sx.real(0), sx.pre(anch))
    c1 = sx.eq(seen, sx.lor(pat.cause, prev_seen))
    c2 = sx.eq(anch, sx.ite(pat.cause, t, prev_anch))
    c3 = sx.implies(
        sx.land(seen, _window_test(pat.window, anch, t)), pat.condition
    )
    return ObserverBundle(
        BundleMode.CONSTRAINT,
        fresh_vars={seen.name: TypeTag.BOOL, anch.name: TypeTag.REAL},
        constraints=[
            NamedExpr("hold-seen", c1),
            NamedExpr("hold-anchor", c2),
            NamedExpr("hold-condition", c3),
        ],
        roles={"seen": seen.name, "anchor": anch.name},
    )


def _constraint_sporadic(
    pat: Sporadic, host: SpecProgram, style: str
) -> ObserverBundle:
    _check_boolean(host, pat.event, "event")
    taken = set(host.vars)
    fresh = _namer(taken)
    t = Var(TIME_VAR)
    if style == "filter":
        seen = Var(fresh("seen_occ"))
        last = Var(fresh("last_occ"))
        prev_seen = sx.arrow(sx.FALSE, sx.pre(seen))
        prev_last = sx.arrow(sx.real(0), sx.pre(last))
        cs = [
            NamedExpr("arrival-seen", sx.eq(seen, sx.lor(pat.event, prev_seen))),
            NamedExpr(
                "arrival-last", sx.eq(last, sx.ite(pat.event, t, prev_last))
            ),
        ]
        fresh_vars = {seen.name: TypeTag.BOOL, last.name: TypeTag.REAL}
        roles = {"seen": seen.name, "last": last.name}
        if pat.jitter == 0:
            cs.append(
                NamedExpr(
                    "arrival-spacing",
                    sx.implies(
                        sx.land(pat.event, prev_seen),
                        sx.ge(t, sx.add(prev_last, sx.real(pat.iat))),
                    ),
                )
            )
        else:
            nom = Var(fresh("nominal"))
            pick = Var(fresh("nominal_pick"))
            prev_nom = sx.arrow(sx.real(0), sx.pre(nom))
            fresh_vars[nom.name] = TypeTag.REAL
            fresh_vars[pick.name] = TypeTag.REAL
            roles["nominal"] = nom.name
            roles["pick"] = pick.name
            cs.extend(
                [
                    NamedExpr(
                        "arrival-nominal",
                        sx.eq(nom, sx.ite(pat.event, pick, prev_nom)),
                    ),
                    NamedExpr(
                        "arrival-jitter",
                        sx.implies(
                            pat.event,
                            sx.land(
                                sx.ge(t, sx.sub(pick, sx.real(pat.jitter))),
                                sx.le(t, sx.add(pick, sx.real(pat.jitter))),
                            ),
                        ),
                    ),
                    NamedExpr(
                        "arrival-spacing",
                        sx.implies(
                            sx.land(pat.event, prev_seen),
                            sx.ge(pick, sx.add(prev_nom, sx.real(pat.iat))),
                        ),
                    ),
                ]
            )
        return ObserverBundle(
            BundleMode.CONSTRAINT,
            fresh_vars=fresh_vars,
            constraints=cs,
            roles=roles,
        )
    if pat.jitter != 0:
        raise PatternError(
            "calendar-style sporadic lowering supports jitter 0 only"
        )
    arr = Var(fresh("next_arrival"))
    occ = sx.arrow(sx.eq(t, arr), sx.eq(t, sx.pre(arr)))
    c1 = sx.eq(pat.event, occ)
    c2 = sx.arrow(
        sx.TRUE,
        sx.ge(
            arr,
            sx.ite(
                pat.event,
                sx.add(sx.pre(arr), sx.real(pat.iat)),
                sx.pre(arr),
            ),
        ),
    )
    return ObserverBundle(
        BundleMode.CONSTRAINT,
        fresh_vars={arr.name: TypeTag.REAL},
        constraints=[
            NamedExpr("arrival-occurs", c1),
            NamedExpr("arrival-schedule", c2),
        ],
        timeouts=[arr.name],
        roles={"arrival": arr.name},
    )


def _constraint_periodic(
    pat: Periodic, host: SpecProgram, style: str
) -> ObserverBundle:
    _check_boolean(host, pat.event, "event")
    taken = set(host.vars)
    fresh = _namer(taken)
    t = Var(TIME_VAR)
    phase = Var(fresh("phase"))
    nom = Var(fresh("nominal"))
    prev_nom = sx.arrow(phase, sx.pre(nom))
    cs = [
        # the phase is a free constant in [0, period]
        NamedExpr("period-phase-held", sx.eq(phase, sx.arrow(phase, sx.pre(phase)))),
        NamedExpr(
            "period-phase-range",
            sx.land(
                sx.ge(phase, sx.real(0)), sx.le(phase, sx.real(pat.period))
            ),
        ),
        NamedExpr(
            "period-nominal",
            sx.eq(
                nom,
                sx.ite(
                    pat.event,
                    sx.add(prev_nom, sx.real(pat.period)),
                    prev_nom,
                ),
            ),
        ),
        NamedExpr(
            "period-window",
            sx.implies(
                pat.event,
                sx.land(
                    sx.ge(t, sx.sub(prev_nom, sx.real(pat.jitter))),
                    sx.le(t, sx.add(prev_nom, sx.real(pat.jitter))),
                ),
            ),
        ),
        NamedExpr(
            "period-no-miss",
            sx.implies(
                sx.lnot(pat.event),
                sx.le(t, sx.add(nom, sx.real(pat.jitter))),
            ),
        ),
    ]
    fresh_vars = {phase.name: TypeTag.REAL, nom.name: TypeTag.REAL}
    roles = {"phase": phase.name, "nominal": nom.name}
    timeouts: list[str] = []
    if style == "calendar":
        arr = Var(fresh("next_arrival"))
        occ = sx.arrow(sx.eq(t, arr), sx.eq(t, sx.pre(arr)))
        cs.insert(2, NamedExpr("period-occurs", sx.eq(pat.event, occ)))
        cs.append(
            NamedExpr(
                "period-aim",
                sx.land(
                    sx.ge(arr, sx.sub(nom, sx.real(pat.jitter))),
                    sx.le(arr, sx.add(nom, sx.real(pat.jitter))),
                ),
            )
        )
        fresh_vars[arr.name] = TypeTag.REAL
        roles["arrival"] = arr.name
        timeouts.append(arr.name)
    return ObserverBundle(
        BundleMode.CONSTRAINT,
        fresh_vars=fresh_vars,
        constraints=cs,
        timeouts=timeouts,
        roles=roles,
    )


def compile_side_condition(
    pat: WheneverEventEvent, host: SpecProgram
) -> ObserverBundle:
    """Deterministic monitor for the non-overlap side condition: checking it
    only needs the most recent cause, so no nondeterministic recorder is
    involved. Consecutive-cause checking suffices: if every adjacent cause
    pair within the window span is separated by a qualifying effect, so is
    every pair."""
    if not isinstance(pat, WheneverEventEvent):
        raise PatternError("side conditions apply to event-event patterns")
    _check_boolean(host, pat.cause, "cause")
    _check_boolean(host, pat.effect, "effect")
    taken = set(host.vars)
    fresh = _namer(taken)
    seen = Var(fresh("seen_cause"))
    anch = Var(fresh("anchor"))
    okst = Var(fresh("effect_seen"))
    t = Var(TIME_VAR)
    iv = pat.window
    prev_seen = sx.arrow(sx.FALSE, sx.pre(seen))
    prev_anch = sx.arrow(sx.real(0), sx.pre(anch))
    prev_ok = sx.arrow(sx.FALSE, sx.pre(okst))
    low_ok = _wlow(iv, sx.add(prev_anch, sx.real(iv.low)), t)
    c1 = sx.eq(seen, sx.lor(pat.cause, prev_seen))
    c2 = sx.eq(anch, sx.ite(pat.cause, t, prev_anch))
    c3 = sx.eq(
        okst,
        sx.ite(
            pat.cause,
            sx.FALSE,
            sx.lor(prev_ok, sx.land(prev_seen, pat.effect, low_ok)),
        ),
    )
    prop = sx.implies(
        sx.land(
            pat.cause,
            prev_seen,
            _whigh(iv, t, sx.add(prev_anch, sx.real(iv.high))),
        ),
        sx.lor(prev_ok, sx.land(pat.effect, low_ok)),
    )
    return ObserverBundle(
        BundleMode.SIDE_CONDITION,
        fresh_vars={
            seen.name: TypeTag.BOOL,
            anch.name: TypeTag.REAL,
            okst.name: TypeTag.BOOL,
        },
        constraints=[
            NamedExpr("overlap-seen", c1),
            NamedExpr("overlap-anchor", c2),
            NamedExpr("overlap-effect", c3),
        ],
        prop=NamedExpr("no-overlapping-causes", prop),
        roles={"seen": seen.name, "anchor": anch.name, "effect_seen": okst.name},
    )


def apply_bundle(
    host: SpecProgram,
    bundle: ObserverBundle,
    include_property: bool = True,
) -> SpecProgram:
    """Merge a bundle into a host program. Fresh variable names were chosen
    against the host, so collisions cannot occur; applying bundles
    sequentially keeps later bundles collision-free as well."""
    out = host.copy()
    for name, ty in bundle.fresh_vars.items():
        if name in out.vars:
            raise PatternError(f"bundle variable '{name}' collides with the host")
        out.vars[name] = ty
    out.transition.extend(bundle.constraints)
    if bundle.prop is not None and include_property:
        out.properties.append(bundle.prop)
    for name in bundle.timeouts:
        out.timeouts.append(name)
    return out
