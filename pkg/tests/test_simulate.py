from fractions import Fraction
from pathlib import Path

import pytest

from rtcheck.parser import parse_program
from rtcheck.simulate import SimulationError, simulate, validate_trace
from tests.conftest import trace_of

MODELS = Path(__file__).resolve().parent.parent / "models"


def test_counter_steps():
    p = parse_program("x : int; x = (0 -> pre(x) + 1);")
    out = simulate(p, 4)
    assert out.ok
    assert [s["x"] for s in out.trace.states] == [0, 1, 2, 3]


def test_calendar_demo_is_deterministic():
    p = parse_program((MODELS / "calendar_demo.rtc").read_text())
    out = simulate(p, 4)
    assert out.ok
    assert out.trace.times == [Fraction(0), Fraction(50), Fraction(100), Fraction(150)]
    assert [s["arrivals"] for s in out.trace.states] == [0, 1, 2, 3]
    assert all(ps.holds for ps in out.properties)


def test_free_inputs_must_be_supplied():
    p = parse_program("var a : bool; eq b : bool = not a;")
    with pytest.raises(SimulationError, match="free variables need"):
        simulate(p, 2)
    out = simulate(p, 2, {"a": [True, False]})
    assert [s["b"] for s in out.trace.states] == [False, True]


def test_calendar_exhaustion_reports_step():
    # the only timeout goes infinite after the first arrival
    p = parse_program(
        "var fired : bool; timeout once;"
        'assert "arrival" : fired = (false -> (t = pre(once)));'
        'assert "schedule" : once = (5.0 -> ite(fired, inf, pre(once)));'
    )
    out = simulate(p, 5)
    assert not out.ok
    assert "calendar exhausted" in out.constraint
    assert out.step == 3
    assert out.trace.times == [Fraction(0), Fraction(5)]


def test_violating_supplied_trace_reports_step_and_constraint():
    p = parse_program('x : int; assert "step" : x = (0 -> pre(x) + 1);')
    tr = trace_of([(0, {"x": 0}), (1, {"x": 5})])
    out = validate_trace(p, tr)
    assert not out.ok and out.step == 2 and out.constraint == "step"


def test_supplied_trace_property_report():
    p = parse_program(
        "x : int; x = (0 -> pre(x) + 1);"
        'property "small" : x < 2;'
    )
    tr = trace_of([(0, {"x": 0}), (1, {"x": 1}), (2, {"x": 2})])
    out = validate_trace(p, tr)
    assert out.ok
    assert not out.properties[0].holds and out.properties[0].failed_step == 3
