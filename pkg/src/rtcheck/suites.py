"""Deterministic verification suites: observer/membership equivalence,
constraint-set equivalence, randomized inclusion checks and cross-engine
agreement. These are the desk-scale counterparts of the correctness
arguments behind the pattern compiler and the engines; the acceptance tests
and the `oracle` CLI subcommand both drive them.
"""

from __future__ import annotations

import random
import time as _time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from . import syntax as sx
from .engine import EngineConfig, run_engine
from .enumeration import EnumerationDomain, enumerate_traces
from .parser import parse_program
from .patterns import (
    Interval,
    WheneverEventEvent,
    apply_bundle,
    compile_constraint,
    compile_observer,
    membership,
    relaxed_membership,
    side_condition_membership,
)
from .semantics import State, TimedTrace, compile_expr
from .syntax import Binary, SpecProgram, Var


@dataclass
class SuiteReport:
    name: str
    checked: int
    discrepancies: list[str] = field(default_factory=list)
    elapsed: float = 0.0
    seed: Optional[int] = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.discrepancies

    def summary(self) -> str:
        status = "ok" if self.passed else f"{len(self.discrepancies)} discrepancies"
        seed = f", seed {self.seed}" if self.seed is not None else ""
        return f"{self.name}: {self.checked} checks, {status} ({self.elapsed:.1f}s{seed})"


DEFAULT_WINDOW = Interval(Fraction(10), Fraction(20))
DEFAULT_DELTAS = [Fraction(5), Fraction(10)]

FREE_HOST = "var c : bool; var e : bool;"

# hosts whose every trace satisfies the non-overlap side condition for the
# default window: causes are at least 25 time units apart (or unique)
SPACED_HOSTS = [
    # at most one cause ever
    """
    var c : bool; var e : bool;
    eq seen : bool = c or (false -> pre(seen));
    assert "single cause" : c => not (false -> pre(seen));
    """,
    # causes at least 25 apart
    """
    var c : bool; var e : bool;
    eq seen : bool = c or (false -> pre(seen));
    eq last : real = ite(c, t, 0.0 -> pre(last));
    assert "spaced causes" : c and (false -> pre(seen)) => t >= (0.0 -> pre(last)) + 25.0;
    """,
    # causes at least 30 apart and effects only after a cause
    """
    var c : bool; var e : bool;
    eq seen : bool = c or (false -> pre(seen));
    eq last : real = ite(c, t, 0.0 -> pre(last));
    assert "spaced causes" : c and (false -> pre(seen)) => t >= (0.0 -> pre(last)) + 30.0;
    assert "effects follow causes" : e => seen;
    """,
]

# hosts for the observer equivalence family (free plus a few restrictions)
OBSERVER_HOSTS = [
    FREE_HOST,
    "var c : bool; var e : bool; assert \"no effects\" : not e;",
    "var c : bool; var e : bool; assert \"tied\" : e => c;",
    SPACED_HOSTS[0],
]


def _observer_stream_fns(bundle):
    """Closures computing the forced observer streams from the bundle's own
    defining constraints, in dependency order (timer before run before
    pass)."""
    defs = {}
    for ne in bundle.constraints:
        e = ne.expr
        if isinstance(e, Binary) and e.op == "=" and isinstance(e.lhs, Var):
            defs[e.lhs.name] = compile_expr(e.rhs)
    order = [bundle.roles["timer"], bundle.roles["run"], bundle.roles["pass"]]
    return [(name, defs[name]) for name in order]


def observer_pass_invariant_all_choices(
    bundle, trace: TimedTrace
) -> bool:
    """Whether `pass` stays true under every nondeterministic recording
    choice for this host trace.

    Single recordings suffice: if some choice drives `pass` false, consider
    the step where `run` last rose before the failure; recording only that
    step reproduces the same timer trajectory and the same failure. So the
    check walks one simulation per cause position.
    """
    rec_name = bundle.roles["rec"]
    cause_fn = None
    for ne in bundle.constraints:
        e = ne.expr
        if isinstance(e, Binary) and e.op == "=>" and isinstance(e.lhs, Var) and e.lhs.name == rec_name:
            cause_fn = compile_expr(e.rhs)
    assert cause_fn is not None
    streams = _observer_stream_fns(bundle)
    pass_name = bundle.roles["pass"]
    n = len(trace)
    cause_steps = [
        i for i in range(1, n + 1) if cause_fn(trace.states, i)
    ]
    for rec_step in cause_steps:
        states: list[State] = []
        for i in range(1, n + 1):
            st = dict(trace.state(i))
            st[rec_name] = i == rec_step
            states.append(st)
            for name, fn in streams:
                st[name] = fn(states, i)
            if not st[pass_name]:
                return False
    return True


def observer_equivalence_suite(
    horizons: Iterable[int] = range(1, 6),
    deltas: Optional[list[Fraction]] = None,
    window: Interval = DEFAULT_WINDOW,
    hosts: Optional[list[str]] = None,
) -> SuiteReport:
    """For every admissible host trace in the family: invariance of the
    observer's `pass` under all recording choices coincides with direct
    membership in the pattern's trace set. Pending end-of-trace obligations
    count as members, exactly as the monitor cannot have failed yet."""
    start = _time.monotonic()
    deltas = deltas or list(DEFAULT_DELTAS)
    hosts = hosts if hosts is not None else OBSERVER_HOSTS
    report = SuiteReport("observer-equivalence", 0)
    for host_src in hosts:
        host = parse_program(host_src)
        pat = WheneverEventEvent(Var("c"), Var("e"), window)
        bundle = compile_observer(pat, host)
        for horizon in horizons:
            dom = EnumerationDomain(horizon=horizon, time_deltas=deltas)
            for trace in enumerate_traces(host, dom):
                report.checked += 1
                member = membership(pat, trace).accepted
                invariant = observer_pass_invariant_all_choices(bundle, trace)
                if member != invariant:
                    report.discrepancies.append(
                        f"h={horizon} trace={trace.to_json()!r} member={member} "
                        f"pass-invariant={invariant}"
                    )
    report.elapsed = _time.monotonic() - start
    return report


def constraint_equivalence_suite(
    horizons: Iterable[int] = range(1, 6),
    deltas: Optional[list[Fraction]] = None,
    window: Interval = DEFAULT_WINDOW,
    hosts: Optional[list[str]] = None,
) -> SuiteReport:
    """Over hosts whose every trace satisfies the non-overlap side
    condition: the traces admitted under the constraint lowering equal the
    admissible traces that are members of the exact pattern set."""
    start = _time.monotonic()
    deltas = deltas or list(DEFAULT_DELTAS)
    hosts = hosts if hosts is not None else SPACED_HOSTS
    report = SuiteReport("constraint-equivalence", 0)
    for host_src in hosts:
        host = parse_program(host_src)
        pat = WheneverEventEvent(Var("c"), Var("e"), window)
        constrained = apply_bundle(host, compile_constraint(pat, host))
        host_vars = list(host.vars)
        for horizon in horizons:
            dom = EnumerationDomain(horizon=horizon, time_deltas=deltas)

            def key(tr: TimedTrace) -> tuple:
                return tuple(
                    (tr.time(i),) + tuple(tr.state(i)[v] for v in host_vars)
                    for i in range(1, len(tr) + 1)
                )

            members = {}
            for tr in enumerate_traces(host, dom):
                report.checked += 1
                if not side_condition_membership(pat, tr):
                    report.discrepancies.append(
                        f"host violates the side condition: {tr.to_json()!r}"
                    )
                    continue
                if membership(pat, tr).accepted:
                    members[key(tr)] = tr
            admitted = {}
            for tr in enumerate_traces(constrained, dom):
                admitted[key(tr)] = tr
            for k in members.keys() - admitted.keys():
                report.discrepancies.append(
                    f"member not admitted under constraints: {members[k].to_json()!r}"
                )
            for k in admitted.keys() - members.keys():
                report.discrepancies.append(
                    f"admitted under constraints but not a member: "
                    f"{admitted[k].to_json()!r}"
                )
    report.elapsed = _time.monotonic() - start
    return report


def random_timed_trace(rng: random.Random, max_len: int = 8) -> TimedTrace:
    n = rng.randint(1, max_len)
    t = Fraction(0)
    states = []
    for i in range(n):
        if i > 0:
            t += Fraction(rng.randint(1, 12))
        states.append(
            {"t": t, "c": rng.random() < 0.4, "e": rng.random() < 0.4}
        )
    return TimedTrace.build(states)


def relaxed_inclusion_suite(
    count: int = 10_000, seed: int = 0, window: Interval = DEFAULT_WINDOW
) -> SuiteReport:
    """Randomized inclusion: membership in the exact pattern set implies
    membership in the relaxed (constraint-side) set."""
    start = _time.monotonic()
    rng = random.Random(seed)
    pat = WheneverEventEvent(Var("c"), Var("e"), window)
    report = SuiteReport("relaxed-inclusion", 0, seed=seed)
    for _ in range(count):
        tr = random_timed_trace(rng)
        report.checked += 1
        if membership(pat, tr).accepted and not relaxed_membership(pat, tr):
            report.discrepancies.append(f"exact member outside relaxed set: {tr.to_json()!r}")
    report.elapsed = _time.monotonic() - start
    return report


# ----- cross-engine agreement ------------------------------------------------


_PROGRAM_TEMPLATES = [
    # (source, timed)
    ("var a : bool; var b : bool; x : int; x = (0 -> pre(x) + ite(a, 1, 0));", False),
    ("var a : bool; x : int; x = (0 -> pre(x) + 1);", False),
    (
        "var a : bool; var b : bool; eq both : bool = a and b;",
        False,
    ),
    (
        "var a : bool; eq held : bool = a and (true -> pre(held));",
        False,
    ),
    (
        "var a : bool; var b : bool;\n"
        "eq seen : bool = a or (false -> pre(seen));\n"
        "eq last : real = ite(a, t, 0.0 -> pre(last));\n"
        "assert \"spacing\" : a and (false -> pre(seen)) => t >= (0.0 -> pre(last)) + 10.0;",
        True,
    ),
    (
        "var a : bool; eq timer : real = (0.0 -> ite(pre(a), pre(timer) + (t - pre(t)), 0.0));",
        True,
    ),
]

_PROPERTY_TEMPLATES = [
    "x <= {n}",
    "x >= 0",
    "a => a",
    "not a or a",
    "a => b",
    "hist(a) => (true -> pre(a))",
    "initz(a) or not a",
    "(false -> pre(a)) => hist(a) or true",
]

_TIMED_PROPERTY_TEMPLATES = [
    "t <= {m}.0",
    "true -> t > pre(t)",
    "timer <= {m}.0",
    "last <= t",
    "seen => t >= 0.0",
]


def _generate_pair(rng: random.Random) -> tuple[SpecProgram, sx.Expr, bool]:
    from .parser import parse_expr_text

    while True:
        src, timed = _PROGRAM_TEMPLATES[rng.randrange(len(_PROGRAM_TEMPLATES))]
        program = parse_program(src)
        pool = list(_PROPERTY_TEMPLATES)
        if timed:
            pool += _TIMED_PROPERTY_TEMPLATES
        text = pool[rng.randrange(len(pool))]
        text = text.replace("{n}", str(rng.randint(0, 5)))
        text = text.replace("{m}", str(rng.choice([5, 15, 40])))
        try:
            prop = parse_expr_text(text)
            from .typecheck import infer_type

            infer_type(prop, program)
        except Exception:
            continue
        return program, prop, timed


def engine_agreement_suite(
    pairs: int = 200,
    seed: int = 0,
    bound: int = 4,
    solver: Optional[str] = None,
) -> SuiteReport:
    """Seeded (program, property) pairs checked by both engines at the same
    bound over the same finite input domains. Verdicts must coincide:
    either both report a violation at the same step, or neither finds one.
    Counterexample re-validation through the exact evaluator happens inside
    the engine on every decode."""
    from .semantics import check_invariant_on_trace, trace_admissible

    start = _time.monotonic()
    rng = random.Random(seed)
    report = SuiteReport("engine-agreement", 0, seed=seed)
    falsified = 0
    revalidated = 0
    for idx in range(pairs):
        program, prop, timed = _generate_pair(rng)
        grid = list(DEFAULT_DELTAS) if timed else []
        explicit = run_engine(
            program,
            prop,
            EngineConfig(engine="explicit", horizon=bound, time_grid=grid),
        )
        bmc = run_engine(
            program,
            prop,
            EngineConfig(engine="bmc", k=bound, solver=solver, time_grid=grid),
        )
        report.checked += 1
        exp_found = explicit.falsified
        bmc_found = bmc.falsified
        agree = exp_found == bmc_found and (
            not exp_found or explicit.failed_step == bmc.failed_step
        )
        if not agree:
            report.discrepancies.append(
                f"pair {idx}: explicit={explicit.summary()} bmc={bmc.summary()}"
            )
        for res in (explicit, bmc):
            if not res.falsified:
                continue
            falsified += 1
            ok = trace_admissible(program, res.counterexample).ok
            inv = check_invariant_on_trace(program, prop, res.counterexample)
            if ok and not inv.holds and inv.step == res.failed_step:
                revalidated += 1
            else:
                report.discrepancies.append(
                    f"pair {idx}: {res.engine} counterexample failed re-validation"
                )
    report.details = {"counterexamples": falsified, "revalidated": revalidated}
    report.elapsed = _time.monotonic() - start
    return report


SUITES = {
    "observer-equivalence": observer_equivalence_suite,
    "constraint-equivalence": constraint_equivalence_suite,
    "relaxed-inclusion": relaxed_inclusion_suite,
    "engine-agreement": engine_agreement_suite,
}


def run_suite(name: str, **kwargs) -> SuiteReport:
    fn = SUITES.get(name)
    if fn is None:
        raise ValueError(
            f"unknown suite '{name}'; available: {', '.join(sorted(SUITES))}"
        )
    return fn(**kwargs)
