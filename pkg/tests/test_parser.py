from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtcheck import syntax as sx
from rtcheck.parser import (
    ParseError,
    parse_expr_text,
    parse_pattern_text,
    parse_program,
    parse_source,
)
from rtcheck.patterns import Sporadic, WheneverEventEvent
from rtcheck.printer import render_expr, render_program
from rtcheck.contracts import SystemModel
from rtcheck.syntax import Arrow, Binary, Const, Pre, SpecProgram, Var


def test_counter_program():
    p = parse_program("x : int; x = (0 -> pre(x) + 1);")
    assert list(p.vars) == ["x"]
    assert len(p.transition) == 1
    expected = Binary(
        "=", Var("x"), Arrow(Const(0), Binary("+", Pre(Var("x")), Const(1)))
    )
    assert p.transition[0].expr == expected


def test_empty_file_is_a_valid_empty_program():
    p = parse_program("")
    assert isinstance(p, SpecProgram)
    assert not p.vars and not p.transition and not p.properties


def test_pre_outside_arrow_rejected():
    with pytest.raises(Exception) as exc:
        parse_program("x : int; x = pre(x);")
    assert "pre" in str(exc.value)


def test_duplicate_declaration():
    with pytest.raises(ParseError, match="duplicate"):
        parse_program("x : int; var x : bool;")


def test_unknown_identifier():
    with pytest.raises(ParseError, match="unknown identifier 'y'"):
        parse_program("x : int; assert x = y;")


def test_syntax_error_carries_position():
    with pytest.raises(ParseError) as exc:
        parse_program("var x : int\nassert x;")
    assert exc.value.line == 2


def test_labels_and_properties():
    p = parse_program('x : int; assert "step" : x = (0 -> pre(x) + 1); property "pos" : x >= 0;')
    assert p.transition[0].label == "step"
    assert p.properties[0].label == "pos"


def test_eq_declares_and_defines():
    p = parse_program("var a : bool; eq b : bool = not a;")
    assert p.vars["b"] is sx.TypeTag.BOOL
    assert p.transition[0].expr == sx.eq(Var("b"), sx.lnot(Var("a")))


def test_timeout_declares_real_and_registers():
    p = parse_program("timeout nxt;")
    assert p.vars["nxt"] is sx.TypeTag.REAL
    assert p.timeouts == ["nxt"]


def test_decimal_literals_are_exact():
    e = parse_expr_text("0.1")
    assert e == Const(Fraction(1, 10))


def test_arrow_is_right_associative_and_loosest():
    e = parse_expr_text("true -> false -> true")
    assert isinstance(e, Arrow) and isinstance(e.rest, Arrow)
    e2 = parse_expr_text("a = b -> c = d")
    assert isinstance(e2, Arrow)


def test_comparisons_do_not_chain():
    with pytest.raises(ParseError):
        parse_expr_text("a = b = c")


def test_pattern_phrases():
    pat = parse_pattern_text(
        "whenever thread_start occurs thread_stop occurs during [10.0, 20.0]"
    )
    assert isinstance(pat, WheneverEventEvent)
    assert pat.window.low == 10 and pat.window.high == 20
    assert pat.window.low_closed and pat.window.high_closed
    assert not pat.exclusive

    spor = parse_pattern_text("new_message occurs sporadic with IAT 50.0")
    assert isinstance(spor, Sporadic)
    assert spor.iat == 50 and spor.jitter == 0


def test_exclusive_tag():
    pat = parse_pattern_text(
        "whenever a occurs b exclusively occurs during [10.0, 50.0]"
    )
    assert pat.exclusive


def test_open_interval_brackets():
    pat = parse_pattern_text("whenever a occurs b occurs during (10.0, 20.0]")
    assert not pat.window.low_closed and pat.window.high_closed


def test_interval_bound_order_rejected():
    with pytest.raises(ParseError, match="below lower bound"):
        parse_pattern_text("whenever a occurs b occurs during [20.0, 10.0]")


def test_negative_interval_bound_rejected():
    with pytest.raises(ParseError, match="nonnegative"):
        parse_pattern_text("whenever a occurs b occurs during [-1.0, 10.0]")


def test_system_model_roundtrip_fields(models_dir):
    model = parse_source((models_dir / "cyclic.rtc").read_text())
    assert isinstance(model, SystemModel)
    assert model.root == "pair"
    pair = model.systems["pair"]
    assert [inst for inst, _ in pair.instances] == ["w", "v"]
    assert len(pair.connections) == 3


def test_program_statements_not_allowed_with_systems():
    with pytest.raises(ParseError):
        parse_source("var x : int; system s { input a : bool; }")


# ----- printer round trip ------------------------------------------------

_names = st.sampled_from(["a", "b", "x"])


def _exprs():
    base = st.one_of(
        st.booleans().map(sx.Const),
        st.integers(-20, 20).map(sx.Const),
        # decimal-representable rationals only, so printing stays exact
        st.tuples(st.integers(-400, 400), st.sampled_from([1, 2, 4, 5, 10])).map(
            lambda nd: sx.Const(Fraction(nd[0], nd[1]))
        ),
        _names.map(sx.Var),
    )

    def extend(children):
        return st.one_of(
            st.tuples(st.sampled_from(["+", "-", "*"]), children, children).map(
                lambda t: sx.Binary(*t)
            ),
            st.tuples(st.sampled_from(["and", "or", "=>", "=", "<", "<=", ">", ">="]),
                      children, children).map(lambda t: sx.Binary(*t)),
            st.tuples(children, children).map(lambda t: sx.Arrow(*t)),
            children.map(sx.Pre),
            children.map(sx.Hist),
            children.map(sx.Initz),
            st.tuples(children, children, children).map(lambda t: sx.Ite(*t)),
            children.map(lambda e: sx.Unary("not", e)),
        )

    return st.recursive(base, extend, max_leaves=20)


@given(_exprs())
@settings(max_examples=400, deadline=None)
def test_print_parse_roundtrip(expr):
    """Printing then parsing reproduces the tree. The generator avoids
    shapes the parser folds at read time (literal negation and constant
    division), which is exactly the parser's documented normalization."""
    text = render_expr(expr)
    assert parse_expr_text(text) == expr


def test_program_print_parse_roundtrip(models_dir):
    src = (models_dir / "calendar_demo.rtc").read_text()
    p = parse_program(src)
    p2 = parse_program(render_program(p))
    assert p2.vars == p.vars
    assert [ne.expr for ne in p2.transition] == [ne.expr for ne in p.transition]
    assert [ne.expr for ne in p2.properties] == [ne.expr for ne in p.properties]
    assert p2.timeouts == p.timeouts
