from fractions import Fraction

import pytest

from rtcheck.enumeration import (
    DomainExplosion,
    EnumerationDomain,
    EnumerationError,
    check_invariant_explicit,
    enumerate_traces,
)
from rtcheck.parser import parse_expr_text, parse_program
from rtcheck.semantics import trace_admissible


COUNTER = parse_program("x : int; x = (0 -> pre(x) + 1);")


def test_deterministic_program_single_trace():
    traces = list(enumerate_traces(COUNTER, EnumerationDomain(horizon=3)))
    assert len(traces) == 1
    assert [s["x"] for s in traces[0].states] == [0, 1, 2]


def test_free_boolean_input_counts():
    p = parse_program("var a : bool;")
    traces = list(enumerate_traces(p, EnumerationDomain(horizon=2)))
    assert len(traces) == 4


def test_false_constraint_empty_stream():
    p = parse_program("var a : bool; assert false;")
    assert list(enumerate_traces(p, EnumerationDomain(horizon=2))) == []


def test_every_enumerated_trace_is_admissible():
    p = parse_program(
        "var a : bool; eq held : bool = a and (true -> pre(held));"
    )
    dom = EnumerationDomain(horizon=3, time_deltas=[Fraction(5)])
    for tr in enumerate_traces(p, dom):
        assert trace_admissible(p, tr).ok


def test_ceiling_aborts_with_estimate():
    p = parse_program("var a : bool; var b : bool;")
    dom = EnumerationDomain(horizon=10, ceiling=100)
    with pytest.raises(DomainExplosion) as exc:
        list(enumerate_traces(p, dom))
    assert exc.value.estimate == 4**10


def test_free_numeric_needs_grid():
    p = parse_program("var x : int; assert x >= 0;")
    with pytest.raises(EnumerationError, match="grid"):
        list(enumerate_traces(p, EnumerationDomain(horizon=2)))
    dom = EnumerationDomain(horizon=1, grids={"x": [0, 1]})
    assert len(list(enumerate_traces(p, dom))) == 2


def test_check_examples():
    res = check_invariant_explicit(
        COUNTER, parse_expr_text("x < 3"), EnumerationDomain(horizon=4)
    )
    assert res.falsified and res.failed_step == 4
    assert [s["x"] for s in res.counterexample.states] == [0, 1, 2, 3]

    res2 = check_invariant_explicit(
        COUNTER, parse_expr_text("x >= 0"), EnumerationDomain(horizon=6)
    )
    assert res2.proved and res2.bound == 6


def test_counterexamples_fail_at_the_earliest_step():
    p = parse_program("var a : bool; var b : bool;")
    res = check_invariant_explicit(
        p, parse_expr_text("a => b"), EnumerationDomain(horizon=4)
    )
    assert res.falsified and res.failed_step == 1


def test_time_grid_drives_the_clock():
    p = parse_program("var a : bool; assert a = (t >= 10.0);")
    dom = EnumerationDomain(horizon=3, time_deltas=[Fraction(5), Fraction(10)])
    times = {tuple(tr.times) for tr in enumerate_traces(p, dom)}
    assert (Fraction(0), Fraction(5), Fraction(10)) in times
    assert all(ts[0] == 0 for ts in times)


def test_reading_the_clock_without_grid_is_an_error():
    p = parse_program("var a : bool; assert a = (t >= 10.0);")
    with pytest.raises(EnumerationError, match="time deltas"):
        list(enumerate_traces(p, EnumerationDomain(horizon=2)))


def test_dead_end_paths_are_not_yielded():
    # the filter forbids extending past step 2
    p = parse_program("var a : bool; assert (true -> not pre(true)) or t <= 0.0;")
    dom = EnumerationDomain(horizon=3, time_deltas=[Fraction(5)])
    assert list(enumerate_traces(p, dom)) == []
