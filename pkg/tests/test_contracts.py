from pathlib import Path

import pytest

from rtcheck.contracts import (
    ComponentDef,
    ContractError,
    Obligation,
    gen_all_obligations,
    gen_assumption_obligations,
    gen_guarantee_obligation,
    gen_leaf_obligation,
    compose_monolithic,
    order_components,
)
from rtcheck.engine import EngineConfig, run_engine
from rtcheck.parser import parse_model, parse_source
from rtcheck.printer import program_sexpr, render_expr

MODELS = Path(__file__).resolve().parent.parent / "models"

CYCLIC = (MODELS / "cyclic.rtc").read_text()
PIPELINE = (MODELS / "pipeline.rtc").read_text()


def _prove(ob: Obligation, k: int = 4):
    return run_engine(ob.program, ob.prop.expr, EngineConfig(engine="kind", k=k))


class TestOrdering:
    def test_declaration_order(self):
        model = parse_model(CYCLIC)
        pair = model.systems["pair"]
        assert [i for i, _ in order_components(pair)] == ["w", "v"]

    def test_user_override_must_be_a_permutation(self):
        model = parse_model(CYCLIC)
        pair = model.systems["pair"]
        assert [i for i, _ in order_components(pair, ["v", "w"])] == ["v", "w"]
        with pytest.raises(ContractError, match="permutation"):
            order_components(pair, ["v"])

    def test_empty_and_singleton(self):
        assert order_components(ComponentDef(name="leaf")) == []


class TestAssumptionObligations:
    def test_downstream_assumption_discharged_by_upstream_guarantee(self):
        model = parse_model(PIPELINE)
        obs = gen_assumption_obligations(model.systems["pipeline"], model)
        ob = next(o for o in obs if o.name.startswith("second"))
        assert "hist" in render_expr(ob.prop.expr)
        assert _prove(ob).proved

    def test_cycle_is_rejected_at_step_one_under_the_ordered_rule(self):
        model = parse_model(CYCLIC)
        obs = gen_assumption_obligations(model.systems["pair"], model, rule="ordered")
        first = next(o for o in obs if o.name.startswith("w"))
        res = _prove(first)
        assert res.falsified and res.failed_step == 1
        second = next(o for o in obs if o.name.startswith("v"))
        assert _prove(second).proved

    def test_cycle_discharges_under_the_unordered_rule(self):
        model = parse_model(CYCLIC)
        obs = gen_assumption_obligations(model.systems["pair"], model, rule="unordered")
        assert all(_prove(o).proved for o in obs)

    def test_no_subcomponents_no_obligations(self):
        model = parse_model(CYCLIC)
        assert gen_assumption_obligations(model.systems["stage"], model) == []

    def test_unconnected_assumption_variable(self):
        src = """
        system top {
          input x : int;
          component a : stage;
        }
        system stage {
          input in : int;
          output out : int;
          assume "positive input" : in > 0;
          guarantee "positive output" : out > 0;
          eq out : int = 1;
        }
        """
        model = parse_source(src)
        with pytest.raises(ContractError, match="no connection drives"):
            gen_assumption_obligations(model.systems["top"], model)


class TestGuaranteeAndLeaf:
    def test_leaf_guarantee_degenerates_to_plain_contract(self):
        src = """
        system solo {
          input in : int;
          output out : int;
          assume "nonneg" : in >= 0;
          guarantee "positive" : out >= 1;
          eq out : int = in + 1;
        }
        """
        model = parse_source(src)
        ob = gen_guarantee_obligation(model.systems["solo"], model)
        assert ob.rule == "contract-invariant"
        leaf = gen_leaf_obligation(model.systems["solo"], model)
        assert _prove(leaf).proved

    def test_leaf_contract_counterexample(self):
        src = """
        system solo {
          input in : int;
          output out : int;
          assume "nonneg" : in >= 0;
          guarantee "at least two" : out >= 2;
          eq out : int = in + 1;
        }
        """
        model = parse_source(src)
        ob = gen_leaf_obligation(model.systems["solo"], model)
        res = _prove(ob)
        assert res.falsified
        assert res.counterexample.state(res.failed_step)["in"] == 0

    def test_empty_contract_is_vacuous(self):
        src = "system solo { input in : int; output out : int; eq out : int = in; }"
        model = parse_source(src)
        ob = gen_leaf_obligation(model.systems["solo"], model)
        assert _prove(ob).proved

    def test_missing_body_is_an_error(self):
        src = "system solo { input in : int; }"
        model = parse_source(src)
        with pytest.raises(ContractError, match="body"):
            gen_leaf_obligation(model.systems["solo"], model)

    def test_guarantee_true_is_trivially_valid(self):
        src = """
        system top {
          input x : int;
          guarantee "trivial" : true;
          component a : sub;
          connect x -> a.in;
        }
        system sub {
          input in : int;
          output out : int;
          guarantee "copy" : out = in;
          eq out : int = in;
        }
        """
        model = parse_source(src)
        ob = gen_guarantee_obligation(model.systems["top"], model)
        assert _prove(ob).proved


class TestStrengthOrdering:
    SHARED = """
    system top {
      input feed : int;
      assume "big feed" : feed >= 5;
      guarantee "ok" : true;
      component a : consumer;
      component b : consumer;
      connect feed -> a.in;
      connect feed -> b.in;
    }
    system consumer {
      input in : int;
      output out : int;
      assume "nonneg" : in >= 0;
      guarantee "nonneg out" : out >= 0;
      eq out : int = in;
    }
    """

    def test_strong_rule_dischargeable_implies_ordered_dischargeable(self):
        """The ordered rule's hypotheses include everything the
        system-assumptions-only rule offers, so whatever the latter proves
        the former proves as well."""
        model = parse_source(self.SHARED)
        top = model.systems["top"]
        strong = gen_assumption_obligations(top, model, rule="strong")
        assert all(_prove(o).proved for o in strong)
        ordered = gen_assumption_obligations(top, model, rule="ordered")
        assert all(_prove(o).proved for o in ordered)


class TestDeterminism:
    def test_obligation_generation_is_byte_identical(self):
        model = parse_model(PIPELINE)
        def snapshot():
            parts = []
            for ob in gen_all_obligations(model):
                parts.append(ob.name)
                parts.append(ob.rule)
                parts.append(program_sexpr(ob.program))
                parts.append(render_expr(ob.prop.expr))
            return "\n".join(parts)
        assert snapshot() == snapshot()


class TestMonolithic:
    def test_prefixed_variables(self):
        model = parse_model(PIPELINE)
        prog, prop = compose_monolithic(model)
        assert "first.out" in prog.vars and "third.in" in prog.vars

    def test_empty_system_composes_to_empty_program(self):
        model = parse_source("system top { input x : int; output y : int; eq y : int = x; }")
        prog, prop = compose_monolithic(model)
        assert set(prog.vars) == {"x", "y"}
        assert render_expr(prop.expr) == "true"

    def test_pattern_guarantee_as_hypothesis_rejected(self):
        src = """
        system top {
          input x : bool;
          guarantee "g" : true;
          component a : sub;
          connect x -> a.c;
        }
        system sub {
          input c : bool;
          output e : bool;
          guarantee "window" : whenever c occurs e occurs during [10.0, 20.0];
        }
        """
        model = parse_source(src)
        with pytest.raises(ContractError, match="pattern guarantee"):
            gen_guarantee_obligation(model.systems["top"], model)
