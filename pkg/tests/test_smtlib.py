from fractions import Fraction

import pytest

from rtcheck.parser import parse_expr_text, parse_program
from rtcheck.smtlib import (
    DecodeError,
    EmissionError,
    Emitter,
    parse_model_values,
    tainted_vars,
)
from rtcheck.values import INF

COUNTER = parse_program("x : int; x = (0 -> pre(x) + 1);")

CALENDAR = parse_program(
    "var msg : bool; timeout nxt;"
    'assert "arrival" : msg = (false -> (t = pre(nxt)));'
    'assert "schedule" : nxt = (50.0 -> ite(msg, pre(nxt) + 50.0, pre(nxt)));'
)


def test_trivial_property_proved_by_one_step_induction():
    from rtcheck.engine import EngineConfig, run_engine

    res = run_engine(COUNTER, parse_expr_text("true"), EngineConfig(engine="kind", k=1))
    assert res.proved and res.bound == 1


def test_bmc_script_shape():
    em = Emitter(COUNTER, parse_expr_text("x < 3"))
    script = em.script_bmc(3)
    assert "(set-logic QF_LIA)" in script
    assert "(declare-const |x@3| Int)" in script
    assert "(assert (not (< |x@3| 3)))" in script
    assert script.rstrip().endswith("(exit)")


def test_scripts_are_byte_stable():
    em1 = Emitter(COUNTER, parse_expr_text("x < 3"))
    em2 = Emitter(COUNTER, parse_expr_text("x < 3"))
    assert em1.script_bmc(4) == em2.script_bmc(4)
    assert em1.script_step(3) == em2.script_step(3)


def test_calendar_constraint_expands_minimum_as_ite_chain():
    two = parse_program(
        "var a : bool; timeout nxt; timeout dl;"
        'assert "s1" : nxt = (50.0 -> ite(a, pre(nxt) + 50.0, pre(nxt)));'
        'assert "s2" : dl = (20.0 -> pre(dl));'
    )
    em = Emitter(two, parse_expr_text("true -> t > pre(t)"))
    script = em.script_bmc(3)
    assert "min_pos" not in script
    assert "(let ((mp" in script
    # the fold over the second delta is an ite selecting the least positive
    assert "(let ((mp1m1 (ite (and (> mp" in script
    # the exhaustion side condition appears from step 2 on
    assert "(assert (or (> " in script


def test_rationals_emit_exactly():
    p = parse_program("r : real; assert r = (3.0 -> pre(r) + 0.5);")
    em = Emitter(p, parse_expr_text("r >= 0.0"))
    script = em.script_bmc(2)
    assert "(/ 1.0 2.0)" in script and "3.0" in script


def test_infinity_uses_negative_sentinel_with_guarded_compares():
    p = parse_program(
        "var go : bool; timeout dl;"
        'assert "aim" : dl = ite(go, t + 5.0, (inf -> pre(dl)));'
    )
    em = Emitter(p, parse_expr_text("t <= dl"))
    assert "dl" in tainted_vars(p)
    script = em.script_bmc(2)
    assert "(- 1)" in script          # sentinel for the infinity literal
    assert "(or (>= |dl@1| 0.0) (= |dl@1| (- 1)))" in script
    assert "(or (< |dl@2| 0.0)" in script  # guarded t <= dl


def test_nonlinear_rejected_eagerly():
    p = parse_program("x : real; y : real; assert x * y >= 0.0;")
    with pytest.raises(EmissionError, match="nonlinear"):
        Emitter(p, parse_expr_text("true"))


def test_subtracting_possible_infinity_rejected():
    p = parse_program("timeout dl; assert dl = (inf -> pre(dl));")
    em = Emitter(p, parse_expr_text("t - dl >= 0.0"))
    with pytest.raises(EmissionError, match="subtract"):
        em.script_bmc(1)


def test_history_operators_lower_to_streams():
    p = parse_program("var a : bool;")
    em = Emitter(p, parse_expr_text("hist(a) => initz(a)"))
    script = em.script_base(2)
    assert "held_so_far" in script and "prev_step" in script


def test_model_value_forms():
    vals = parse_model_values(
        """
        (
          (define-fun |x@1| () Int (- 3))
          (define-fun |r@1| () Real (/ 15.0 2.0))
          (define-fun |b@1| () Bool true)
          (define-fun |d@1| () Real 1.5)
        )
        """
    )
    assert vals["x@1"] == -3
    assert vals["r@1"] == Fraction(15, 2)
    assert vals["b@1"] is True
    assert vals["d@1"] == Fraction(3, 2)


def test_decode_counter_model():
    em = Emitter(COUNTER, parse_expr_text("x < 3"))
    model = """
    ( (define-fun |x@1| () Int 0)
      (define-fun |x@2| () Int 1)
      (define-fun |x@3| () Int 2)
      (define-fun |x@4| () Int 3) )
    """
    trace = em.decode_model(model, 4)
    assert [s["x"] for s in trace.states] == [0, 1, 2, 3]
    # untimed programs get unit-tick times
    assert trace.times == [Fraction(i) for i in range(4)]


def test_decode_rational_times_and_sentinel():
    em = Emitter(CALENDAR, parse_expr_text("true"))
    model = """
    ( (define-fun |msg@1| () Bool false)
      (define-fun |nxt@1| () Real (- 1))
      (define-fun |t@1| () Real (/ 15.0 2.0)) )
    """
    # sentinel decodes back to infinity; exact rationals reconstructed
    trace = em.decode_model(model, 1)
    assert trace.states[0]["nxt"] is INF
    assert trace.times[0] == Fraction(15, 2)


def test_decode_rejects_negative_non_sentinel_timeout():
    em = Emitter(CALENDAR, parse_expr_text("true"))
    model = "( (define-fun |nxt@1| () Real (- 7)) )"
    with pytest.raises(DecodeError, match="non-sentinel"):
        em.decode_model(model, 1)


def test_step_window_has_context_states_for_pre_chains():
    p = parse_program(
        "x : int; x = (0 -> pre(x) + 1);"
    )
    em = Emitter(p, parse_expr_text("true -> pre(x -> pre(x)) >= 0"))
    script = em.script_step(2)
    # property depth 2 needs two context states below the window
    assert "|x@-1|" in script and "|x@0|" in script
