import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtcheck import syntax as sx
from rtcheck.parser import parse_expr_text, parse_program
from rtcheck.syntax import Arrow, Binary, Const, Expr, Hist, Initz, Ite, Pre, Unary, Var
from rtcheck.typecheck import (
    TypeError_,
    WellFormednessError,
    check_well_formed,
    infer_type,
    is_well_formed,
    type_check,
)


def test_nested_pre_with_arrow_between_is_well_formed():
    assert is_well_formed(parse_expr_text("true -> pre(x -> pre(x))"))


def test_double_pre_is_not_well_formed():
    assert not is_well_formed(parse_expr_text("true -> pre(pre(x))"))


def test_no_temporal_operators_is_well_formed():
    assert is_well_formed(parse_expr_text("x + 1"))


def test_violation_reports_innermost_path():
    with pytest.raises(WellFormednessError) as exc:
        check_well_formed(parse_expr_text("true -> pre(pre(x))"))
    assert exc.value.path.endswith(".rest.pre")


def test_pre_in_arrow_left_side_rejected():
    assert not is_well_formed(parse_expr_text("(pre(x) -> y) -> z"))
    assert is_well_formed(parse_expr_text("z -> (pre(x) -> y)"))


# ----- the naive oracle: count arrow crossings along each root-to-pre path


def _oracle_ok(e: Expr, crossings: int, pres_above: int) -> bool:
    if isinstance(e, (Const, Var)):
        return True
    if isinstance(e, Unary):
        return _oracle_ok(e.sub, crossings, pres_above)
    if isinstance(e, Binary):
        return _oracle_ok(e.lhs, crossings, pres_above) and _oracle_ok(
            e.rhs, crossings, pres_above
        )
    if isinstance(e, Ite):
        return all(
            _oracle_ok(x, crossings, pres_above) for x in (e.cond, e.then, e.orelse)
        )
    if isinstance(e, Arrow):
        return _oracle_ok(e.init, crossings, pres_above) and _oracle_ok(
            e.rest, crossings + 1, pres_above
        )
    if isinstance(e, Pre):
        if crossings < pres_above + 1:
            return False
        return _oracle_ok(e.sub, crossings, pres_above + 1)
    if isinstance(e, (Hist, Initz)):
        return _oracle_ok(e.sub, crossings, pres_above)
    raise TypeError(e)


def _expr_trees():
    base = st.one_of(
        st.booleans().map(sx.Const), st.sampled_from(["x", "y"]).map(sx.Var)
    )

    def extend(children):
        return st.one_of(
            st.tuples(children, children).map(lambda t: sx.Arrow(*t)),
            children.map(sx.Pre),
            children.map(lambda e: sx.Unary("not", e)),
            st.tuples(children, children).map(lambda t: sx.Binary("and", *t)),
            st.tuples(children, children, children).map(lambda t: sx.Ite(*t)),
            children.map(sx.Hist),
        )

    return st.recursive(base, extend, max_leaves=25)


@given(_expr_trees())
@settings(max_examples=1000, deadline=None)
def test_well_formedness_agrees_with_naive_oracle(expr):
    assert is_well_formed(expr) == _oracle_ok(expr, 0, 0)


# ----- typing ---------------------------------------------------------------


def _env_program(**vars_):
    p = parse_program("")
    for name, ty in vars_.items():
        p.vars[name] = ty
    return p


def test_ite_branches_agree():
    p = _env_program(b=sx.TypeTag.BOOL)
    assert (
        infer_type(parse_expr_text("ite(b, 1, 2)"), p) is sx.TypeTag.INT
    )


def test_ite_branch_mismatch_no_coercion():
    p = _env_program(b=sx.TypeTag.BOOL)
    with pytest.raises(TypeError_, match="branches disagree"):
        infer_type(parse_expr_text("ite(b, 1, 2.0)"), p)


def test_hist_requires_boolean():
    p = _env_program(x=sx.TypeTag.REAL)
    with pytest.raises(TypeError_, match="boolean"):
        infer_type(parse_expr_text("hist(x)"), p)


def test_no_int_real_mixing():
    p = _env_program(x=sx.TypeTag.INT)
    with pytest.raises(TypeError_):
        infer_type(parse_expr_text("x + 1.0"), p)


def test_division_requires_reals():
    p = _env_program(x=sx.TypeTag.INT)
    with pytest.raises(TypeError_):
        infer_type(parse_expr_text("x / 2"), p)


def test_infinity_is_real():
    p = _env_program(to=sx.TypeTag.REAL)
    assert infer_type(parse_expr_text("ite(to = inf, 1.0, to)"), p) is sx.TypeTag.REAL


def test_type_check_is_deterministic_and_total():
    src = """
    var a : bool; x : int; r : real;
    assert a => (x >= 0);
    assert r >= 0.0;
    property "p" : hist(a) => initz(a);
    """
    p = parse_program(src)
    first = type_check(p)
    second = type_check(p)
    assert first == second


def test_timeouts_must_be_real():
    p = parse_program("var a : bool;")
    p.timeouts.append("a")
    with pytest.raises(TypeError_, match="real"):
        type_check(p)


def test_transition_constraints_must_be_boolean():
    p = parse_program("x : int;")
    p.transition.append(sx.NamedExpr(None, parse_expr_text("x + 1")))
    with pytest.raises(TypeError_, match="boolean"):
        type_check(p)
