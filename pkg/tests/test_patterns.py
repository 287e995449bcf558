from fractions import Fraction

import pytest

from rtcheck.enumeration import EnumerationDomain, enumerate_traces
from rtcheck.parser import parse_pattern_text, parse_program
from rtcheck.patterns import (
    Always,
    BundleMode,
    Interval,
    Membership,
    PatternError,
    Periodic,
    Sporadic,
    WheneverEventCondition,
    WheneverEventEvent,
    WhenConditionEvent,
    apply_bundle,
    compile_constraint,
    compile_observer,
    decomposed_membership,
    membership,
    relaxed_membership,
    side_condition_membership,
)
from rtcheck.printer import render_expr, render_pattern
from rtcheck.semantics import compile_expr, trace_admissible
from rtcheck.syntax import Var
from tests.conftest import ce_trace

WIN = Interval(Fraction(10), Fraction(20))
PAT = WheneverEventEvent(Var("c"), Var("e"), WIN)
HOST = parse_program("var c : bool; var e : bool;")


class TestMembership:
    def test_effect_inside_window(self):
        tr = ce_trace([(0, True, False), (15, False, True)])
        assert membership(PAT, tr).status is Membership.IN

    def test_effect_after_window_with_expired_deadline(self):
        tr = ce_trace([(0, True, False), (25, False, True), (30, False, False)])
        res = membership(PAT, tr)
        assert res.status is Membership.OUT and res.witness == 1

    def test_vacuous_when_cause_never_occurs(self):
        tr = ce_trace([(0, False, False), (5, False, True)])
        assert membership(PAT, tr).status is Membership.IN

    def test_unexpired_window_is_pending_and_accepted(self):
        tr = ce_trace([(0, True, False), (15, False, False)])
        res = membership(PAT, tr)
        assert res.status is Membership.IN_PENDING and res.accepted

    def test_trace_end_exactly_at_window_close_still_pending(self):
        """The invariant monitor cannot have failed on a prefix whose last
        time equals the deadline, so the membership verdict matches it."""
        tr = ce_trace([(0, True, False), (20, False, False)])
        assert membership(PAT, tr).status is Membership.IN_PENDING

    def test_same_instant_effect_does_not_discharge(self):
        tr = ce_trace([(0, True, True), (25, False, False)])
        assert membership(PAT, tr).status is Membership.OUT

    def test_sporadic_spacing(self):
        pat = Sporadic(Var("c"), Fraction(50))
        ok = ce_trace([(0, True, False), (50, True, False), (120, True, False)])
        assert membership(pat, ok).status is Membership.IN
        bad = ce_trace([(0, True, False), (40, True, False)])
        res = membership(pat, bad)
        assert res.status is Membership.OUT and res.witness == 1

    def test_sporadic_with_jitter_uses_nominal_schedule(self):
        pat = Sporadic(Var("c"), Fraction(50), Fraction(5))
        # spacing 45 works with nominals 5 and 55 (+-5 of 0 and 60? no: of
        # the occurrences at 0 and 45); greedy nominal feasibility
        tr = ce_trace([(0, True, False), (45, True, False)])
        assert membership(pat, tr).status is Membership.IN
        tr2 = ce_trace([(0, True, False), (39, True, False)])
        assert membership(pat, tr2).status is Membership.OUT

    def test_periodic_membership(self):
        pat = Periodic(Var("c"), Fraction(50), Fraction(5))
        tr = ce_trace([(10, True, False), (62, True, False), (108, True, False)])
        assert membership(pat, tr).status is Membership.IN
        # a missed nominal instant becomes observable past its window
        miss = ce_trace([(10, True, False), (130, False, False)])
        assert membership(pat, miss).status is Membership.OUT

    def test_always(self):
        pat = Always(Var("c"))
        assert membership(pat, ce_trace([(0, True, True)])).status is Membership.IN
        res = membership(pat, ce_trace([(0, True, False), (5, False, False)]))
        assert res.status is Membership.OUT and res.witness == 2

    def test_condition_window_includes_cause_instant_when_low_is_zero(self):
        pat = WheneverEventCondition(Var("c"), Var("e"), Interval(Fraction(0), Fraction(20)))
        tr = ce_trace([(0, True, False)])
        assert membership(pat, tr).status is Membership.OUT

    def test_condition_window(self):
        pat = WheneverEventCondition(Var("c"), Var("e"), WIN)
        tr = ce_trace([(0, True, False), (15, False, True), (20, False, True)])
        assert membership(pat, tr).status is Membership.IN
        bad = ce_trace([(0, True, False), (15, False, False)])
        assert membership(pat, bad).status is Membership.OUT

    def test_hold_then_event(self):
        pat = WhenConditionEvent(
            Var("c"), Interval(Fraction(5), Fraction(5)), Var("e"),
            Interval(Fraction(0), Fraction(10)),
        )
        tr = ce_trace([(0, True, False), (5, True, False), (8, True, True)])
        assert membership(pat, tr).status is Membership.IN
        # hold broken before maturity: no obligation
        broken = ce_trace([(0, True, False), (3, False, False), (30, False, False)])
        assert membership(pat, broken).status is Membership.IN
        # matured hold with no event in the window
        late = ce_trace([(0, True, False), (5, True, False), (30, False, False)])
        assert membership(pat, late).status is Membership.OUT

    def test_exclusive_effect_outside_any_window(self):
        pat = WheneverEventEvent(Var("c"), Var("e"), WIN, exclusive=True)
        stray = ce_trace([(0, False, True), (5, False, False)])
        res = membership(pat, stray)
        assert res.status is Membership.OUT and res.witness == 1
        fine = ce_trace([(0, True, False), (15, False, True)])
        assert membership(pat, fine).status is Membership.IN


class TestRelaxedAndSideCondition:
    def test_second_cause_inside_window_discharges_relaxed_but_not_exact(self):
        tr = ce_trace([(0, True, False), (15, True, False), (30, False, False)])
        got = decomposed_membership(PAT, tr)
        assert got.relaxed
        assert membership(PAT, tr).status is Membership.OUT
        # and that trace has two causes within the bound with no effect
        assert not got.side_condition

    def test_side_condition_violation_requires_two_causes(self):
        tr = ce_trace([(0, True, False), (15, True, False), (30, False, False)])
        assert not side_condition_membership(PAT, tr)
        single = ce_trace([(0, True, False), (40, False, False)])
        assert side_condition_membership(PAT, single)

    def test_side_condition_satisfied_by_intervening_effect(self):
        tr = ce_trace([(0, True, False), (12, False, True), (15, True, False), (40, False, False)])
        assert side_condition_membership(PAT, tr)

    def test_exact_members_are_relaxed_members(self):
        tr = ce_trace([(0, True, False), (15, False, True)])
        assert membership(PAT, tr).accepted and relaxed_membership(PAT, tr)


class TestObserverBundle:
    def test_emits_exactly_the_four_constraints(self):
        bundle = compile_observer(PAT, HOST)
        labels = [ne.label for ne in bundle.constraints]
        assert labels == [
            "observer-run",
            "observer-timer",
            "observer-rec",
            "observer-pass",
        ]
        assert bundle.mode is BundleMode.PROPERTY
        assert render_expr(bundle.constraints[3].expr) == "pass = (timer <= 20.0)"

    def test_fresh_names_avoid_collisions(self):
        host = parse_program("var c : bool; var e : bool; var run : bool; var pass : bool;")
        bundle = compile_observer(WheneverEventEvent(Var("c"), Var("e"), WIN), host)
        assert bundle.roles["run"] == "run_2"
        assert bundle.roles["pass"] == "pass_2"

    def test_rec_false_extension_keeps_pass_and_is_admissible(self):
        """With nothing recorded the timer stays at zero, the obligation
        variable stays true, and the extension of any admissible host trace
        is admissible in host+observer: the constraints restrict only the
        fresh variables."""
        bundle = compile_observer(PAT, HOST)
        merged = apply_bundle(HOST, bundle, include_property=False)
        dom = EnumerationDomain(horizon=3, time_deltas=[Fraction(5), Fraction(10)])
        fns = {
            ne.expr.lhs.name: compile_expr(ne.expr.rhs)
            for ne in bundle.constraints
            if ne.label != "observer-rec"
        }
        order = [bundle.roles["timer"], bundle.roles["run"], bundle.roles["pass"]]
        count = 0
        for tr in enumerate_traces(HOST, dom):
            states = []
            for i in range(1, len(tr) + 1):
                st = dict(tr.state(i))
                st[bundle.roles["rec"]] = False
                states.append(st)
                for name in order:
                    st[name] = fns[name](states, i)
                assert st[bundle.roles["pass"]] is True
                assert st[bundle.roles["timer"]] == 0
            from rtcheck.semantics import TimedTrace

            ext = TimedTrace(states, list(tr.times))
            assert trace_admissible(merged, ext).ok
            count += 1
        assert count == 256

    def test_recorded_cause_without_effect_fails_pass_after_deadline(self):
        """Simulating the four constraints: a cause recorded at time 0 with
        no effect makes pass false at the first step past the window."""
        bundle = compile_observer(PAT, HOST)
        tr = ce_trace([(0, True, False), (15, False, False), (25, False, False)])
        fns = {
            ne.expr.lhs.name: compile_expr(ne.expr.rhs)
            for ne in bundle.constraints
            if ne.label != "observer-rec"
        }
        order = [bundle.roles["timer"], bundle.roles["run"], bundle.roles["pass"]]
        states = []
        passes = []
        for i in range(1, len(tr) + 1):
            st = dict(tr.state(i))
            st[bundle.roles["rec"]] = i == 1
            states.append(st)
            for name in order:
                st[name] = fns[name](states, i)
            passes.append(st[bundle.roles["pass"]])
        assert passes == [True, True, False]

    def test_violation_latches_with_single_recording(self):
        """Once pass goes false it stays false when the recorder fires at
        most once: the timer keeps growing because a late effect cannot
        satisfy the in-window discharge."""
        bundle = compile_observer(PAT, HOST)
        fns = {
            ne.expr.lhs.name: compile_expr(ne.expr.rhs)
            for ne in bundle.constraints
            if ne.label != "observer-rec"
        }
        order = [bundle.roles["timer"], bundle.roles["run"], bundle.roles["pass"]]
        dom = EnumerationDomain(horizon=4, time_deltas=[Fraction(5), Fraction(10)])
        for tr in enumerate_traces(HOST, dom):
            cause_steps = [
                i for i in range(1, len(tr) + 1) if tr.state(i)["c"]
            ]
            for rec_at in cause_steps:
                states = []
                passes = []
                for i in range(1, len(tr) + 1):
                    st = dict(tr.state(i))
                    st[bundle.roles["rec"]] = i == rec_at
                    states.append(st)
                    for name in order:
                        st[name] = fns[name](states, i)
                    passes.append(st[bundle.roles["pass"]])
                if False in passes:
                    first = passes.index(False)
                    assert all(not p for p in passes[first:])

    def test_unsupported_property_positions(self):
        with pytest.raises(PatternError, match="phase"):
            compile_observer(Periodic(Var("c"), Fraction(10)), HOST)
        with pytest.raises(PatternError, match="jitter"):
            compile_observer(Sporadic(Var("c"), Fraction(10), Fraction(1)), HOST)

    def test_cause_must_be_boolean(self):
        host = parse_program("var c : bool; x : int;")
        with pytest.raises(PatternError, match="boolean"):
            compile_observer(WheneverEventEvent(Var("x"), Var("c"), WIN), host)


class TestConstraintBundle:
    def test_filter_style_admits_relaxed_set_members(self):
        """Cross-check with the membership split: the trace with a repeat
        cause and no effect is admitted by the constraints even though the
        exact set rejects it."""
        bundle = compile_constraint(PAT, HOST)
        merged = apply_bundle(HOST, bundle)
        tr = ce_trace([(0, True, False), (15, True, False), (30, False, False)])
        states = [dict(s) for s in tr.states]
        fns = {
            ne.expr.lhs.name: compile_expr(ne.expr.rhs)
            for ne in bundle.constraints
            if ne.label in ("window-pending", "window-anchor")
        }
        for i, st in enumerate(states, start=1):
            for name in (bundle.roles["anchor"], bundle.roles["pending"]):
                st[name] = fns[name](states, i)
        from rtcheck.semantics import TimedTrace

        ext = TimedTrace(states, list(tr.times))
        assert trace_admissible(merged, ext).ok
        assert relaxed_membership(PAT, tr)

    def test_always_constraint_is_the_condition_itself(self):
        bundle = compile_constraint(Always(Var("c")), HOST)
        assert bundle.constraints[0].expr == Var("c")
        assert not bundle.fresh_vars

    def test_when_condition_event_constraint_rejected(self):
        pat = WhenConditionEvent(
            Var("c"), Interval(Fraction(5), Fraction(5)), Var("e"),
            Interval(Fraction(0), Fraction(10)),
        )
        with pytest.raises(PatternError, match="not supported in constraint"):
            compile_constraint(pat, HOST)

    def test_sporadic_calendar_style_registers_timeout(self):
        bundle = compile_constraint(Sporadic(Var("c"), Fraction(50)), HOST, style="calendar")
        assert bundle.timeouts == [bundle.roles["arrival"]]

    def test_sporadic_filter_admits_exactly_spaced_arrivals(self):
        bundle = compile_constraint(Sporadic(Var("c"), Fraction(50)), HOST)
        merged = apply_bundle(HOST, bundle)
        dom = EnumerationDomain(horizon=3, time_deltas=[Fraction(50), Fraction(40)])
        pat = Sporadic(Var("c"), Fraction(50))
        for tr in enumerate_traces(merged, dom):
            assert membership(pat, tr).accepted
        # and some admitted trace has two arrivals 50 apart
        assert any(
            tr.state(1)["c"] and tr.state(2)["c"] and tr.time(2) == 50
            for tr in enumerate_traces(merged, dom)
        )


def test_pattern_rendering_roundtrip():
    texts = [
        "whenever a occurs b occurs during [10.0, 20.0]",
        "whenever a occurs b exclusively occurs during (10.0, 50.0]",
        "whenever a occurs b holds during [0.0, 20.0]",
        "when a holds during [5.0, 5.0] b occurs during [0.0, 10.0]",
        "always a = b",
        "a occurs each 10000.0 with jitter 50.0",
        "a occurs sporadic with IAT 50.0",
        "a occurs sporadic with IAT 50.0 and jitter 5.0",
    ]
    for text in texts:
        pat = parse_pattern_text(text)
        assert parse_pattern_text(render_pattern(pat)) == pat
