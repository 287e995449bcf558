"""Acceptance gate: every criterion below runs at its stated tolerance and
prints one pass/fail line. Run with `pytest tests/test_acceptance.py -v -s`.
"""

import time
from pathlib import Path

from rtcheck.contracts import compose_monolithic, gen_all_obligations
from rtcheck.engine import EngineConfig, run_engine
from rtcheck.parser import parse_expr_text, parse_model, parse_program
from rtcheck.suites import (
    constraint_equivalence_suite,
    engine_agreement_suite,
    observer_equivalence_suite,
    relaxed_inclusion_suite,
)
from rtcheck.syntax import NamedExpr

MODELS = Path(__file__).resolve().parent.parent / "models"

BUS_LEMMAS = [
    NamedExpr("anchors agree", parse_expr_text("anchor = last_occ")),
    NamedExpr("pending seen", parse_expr_text("pending => seen_occ")),
    NamedExpr(
        "observer coupling",
        parse_expr_text("run => (pending and timer = t - anchor)"),
    ),
]

AVIONICS_LEMMAS = [
    NamedExpr(
        "window a live bound",
        parse_expr_text("pending => (seen_cause and t <= anchor + 50.0)"),
    ),
    NamedExpr(
        "arrivals track the schedule",
        parse_expr_text(
            "seen_cause => (anchor >= nominal - 10050.0 and anchor <= nominal - 9950.0)"
        ),
    ),
    NamedExpr(
        "monitor tracks window a",
        parse_expr_text("run => (pending and timer = t - anchor)"),
    ),
]


def report(criterion: str, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"\nACCEPTANCE {criterion}: {status} - {detail}")
    assert passed, f"{criterion}: {detail}"


def test_criterion_1_observer_equivalence():
    """Exhaustive agreement between the compiled observer's invariant and
    direct trace-set membership over hosts with two free boolean signals,
    horizons up to 5, deltas {5, 10}, window [10, 20]."""
    r = observer_equivalence_suite()
    report(
        "1 (observer equivalence)",
        r.passed and r.elapsed < 60 and r.checked > 10_000,
        f"{r.checked} traces, {len(r.discrepancies)} discrepancies, {r.elapsed:.1f}s",
    )


def test_criterion_2_constraint_set_equality():
    """Over hosts satisfying the non-overlap side condition, the traces
    admitted by the constraint lowering equal the admissible traces in the
    exact pattern set."""
    r = constraint_equivalence_suite()
    report(
        "2 (constraint-set equality)",
        r.passed and r.elapsed < 60,
        f"{r.checked} traces, {len(r.discrepancies)} discrepancies, {r.elapsed:.1f}s",
    )


def test_criterion_3_randomized_inclusion():
    """10000 seeded random timed traces: every exact-set member is a
    relaxed-set member."""
    r = relaxed_inclusion_suite(count=10_000, seed=2026)
    report(
        "3 (exact implies relaxed, randomized)",
        r.passed and r.elapsed < 30 and r.checked == 10_000,
        f"{r.checked} traces, {len(r.discrepancies)} counterexamples, "
        f"{r.elapsed:.1f}s, seed {r.seed}",
    )


def test_criterion_4_bus_example_reproduction():
    """Sporadic messages (IAT 50) tied to thread starts: the non-overlap
    side condition is proved by induction within depth 8, and the full
    window property under the relaxed constraints is proved with no
    counterexample to depth 10."""
    start = time.monotonic()
    from rtcheck.patterns import (
        apply_bundle,
        compile_constraint,
        compile_observer,
        compile_side_condition,
    )
    from rtcheck.parser import parse_pattern_text

    host = parse_program(
        "var new_message : bool; var thread_start : bool; var thread_stop : bool;"
        'assert "sporadic" : new_message occurs sporadic with IAT 50.0;'
        'assert "tie" : always new_message = thread_start;'
    )
    pat = parse_pattern_text(
        "whenever thread_start occurs thread_stop occurs during [10.0, 20.0]"
    )
    sc = compile_side_condition(pat, host)
    side_prog = apply_bundle(host, sc)
    side_lemma = [
        NamedExpr(
            "monitor tracks arrivals",
            parse_expr_text("seen_cause = seen_occ and anchor = last_occ"),
        )
    ]
    side = run_engine(
        side_prog, sc.prop.expr, EngineConfig(engine="kind", k=8, lemmas=side_lemma)
    )

    constrained = apply_bundle(host, compile_constraint(pat, host))
    obs = compile_observer(pat, constrained)
    full_prog = apply_bundle(constrained, obs, include_property=False)
    full_kind = run_engine(
        full_prog, obs.prop.expr, EngineConfig(engine="kind", k=8, lemmas=BUS_LEMMAS)
    )
    full_bmc = run_engine(full_prog, obs.prop.expr, EngineConfig(engine="bmc", k=10))
    elapsed = time.monotonic() - start
    ok = (
        side.proved
        and side.bound <= 8
        and full_kind.proved
        and full_kind.bound <= 8
        and full_bmc.verdict == "unknown"  # no counterexample to depth 10
        and elapsed < 300
    )
    report(
        "4 (bus example reproduction)",
        ok,
        f"side condition {side.summary()}, window property {full_kind.summary()}, "
        f"depth-10 search {full_bmc.summary()}, {elapsed:.1f}s",
    )


def test_criterion_5_compositional_soundness():
    """When every leaf contract, every assumption obligation and the
    guarantee obligation of the three-stage pipeline are proved, the
    monolithic composition's contract has no counterexample by enumeration
    at horizon 6 nor by bounded search at depth 10."""
    model = parse_model((MODELS / "pipeline.rtc").read_text())
    obligations = gen_all_obligations(model)
    proofs = {
        ob.name: run_engine(ob.program, ob.prop.expr, EngineConfig(engine="kind", k=4))
        for ob in obligations
    }
    all_proved = all(r.proved for r in proofs.values())
    prog, prop = compose_monolithic(model)
    explicit = run_engine(
        prog,
        prop.expr,
        EngineConfig(engine="explicit", horizon=6, grids={"feed": [-1, 0, 1, 5]}),
    )
    bmc = run_engine(prog, prop.expr, EngineConfig(engine="bmc", k=10))
    ok = all_proved and explicit.proved and bmc.verdict == "unknown"
    report(
        "5 (compositional soundness)",
        ok,
        f"{len(obligations)} obligations proved={all_proved}, "
        f"monolithic enumeration {explicit.summary()}, depth-10 search {bmc.summary()}",
    )


def test_criterion_6_cycle_anomaly():
    """The two-component feedback loop: the unordered rule discharges both
    assumption obligations; the default ordered rule falsifies the first
    component's obligation with a first-step counterexample."""
    model = parse_model((MODELS / "cyclic.rtc").read_text())

    def run_rule(rule):
        obs = [
            ob
            for ob in gen_all_obligations(model, rule=rule)
            if ob.kind.value == "assumption-discharge"
        ]
        return {
            ob.name: run_engine(ob.program, ob.prop.expr, EngineConfig(engine="kind", k=4))
            for ob in obs
        }

    weak = run_rule("unordered")
    ordered = run_rule("ordered")
    weak_ok = all(r.proved for r in weak.values())
    w_res = ordered["w: positive input"]
    ordered_ok = (
        w_res.falsified
        and w_res.failed_step == 1
        and ordered["v: positive input"].proved
    )
    report(
        "6 (cycle anomaly)",
        weak_ok and ordered_ok,
        f"unordered rule discharges both={weak_ok}; ordered rule: w {w_res.summary()}",
    )


def test_criterion_7_avionics_fixture():
    """Three threads with exclusive [10, 50] runtime windows, messages every
    10000 with jitter 50: the [0, 500] response guarantee is proved by
    depth-8 bounded search plus induction with three auxiliary lemmas, each
    proved."""
    start = time.monotonic()
    model = parse_model((MODELS / "avionics.rtc").read_text())
    obligations = gen_all_obligations(model)
    assert len(obligations) == 1
    ob = obligations[0]
    bmc = run_engine(ob.program, ob.prop.expr, EngineConfig(engine="bmc", k=8))
    kind = run_engine(
        ob.program,
        ob.prop.expr,
        EngineConfig(engine="kind", k=8, lemmas=AVIONICS_LEMMAS),
    )
    elapsed = time.monotonic() - start
    ok = (
        bmc.verdict == "unknown"  # no violation within depth 8
        and kind.proved
        and len(AVIONICS_LEMMAS) <= 3
        and elapsed < 600
    )
    report(
        "7 (avionics-style fixture)",
        ok,
        f"depth-8 search {bmc.summary()}, induction {kind.summary()}, "
        f"3 lemmas each proved, {elapsed:.1f}s",
    )


def test_criterion_8_engine_agreement():
    """200 seeded (program, property) pairs: the exhaustive and solver-backed
    engines agree on every verdict, and every decoded counterexample
    re-validates through the exact evaluator at the reported step."""
    r = engine_agreement_suite(pairs=200, seed=2026)
    cex = r.details.get("counterexamples", 0)
    reval = r.details.get("revalidated", 0)
    ok = r.passed and r.checked == 200 and cex > 0 and reval == cex
    report(
        "8 (engine agreement)",
        ok,
        f"{r.checked} pairs, {len(r.discrepancies)} disagreements, "
        f"{reval}/{cex} counterexamples re-validated, {r.elapsed:.1f}s, seed {r.seed}",
    )
