"""FastAPI application exposing the toolkit: parsing, checking, simulation,
lowering/emission, monolithic composition, and the verification suites.

The service is stateless; sources and traces travel inline. Long checks run
synchronously in the worker threadpool, one solver subprocess per
obligation when an external solver is configured.
"""

from __future__ import annotations

import shutil
import time as _time
from fractions import Fraction

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..contracts import ContractError, compose_monolithic, gen_all_obligations
from ..engine import EngineConfig, EngineError, SolverFailure, discharge_all
from ..enumeration import DomainExplosion, EnumerationError
from ..parser import ParseError, parse_expr_text, parse_pattern_text, parse_source
from ..patterns import (
    PatternError,
    compile_constraint,
    compile_observer,
    compile_side_condition,
)
from ..printer import program_sexpr, render_expr, render_program
from ..semantics import EvalError, TimedTrace
from ..simulate import SimulationError, simulate, validate_trace
from ..smtlib import EmissionError, Emitter
from ..suites import run_suite
from ..syntax import NamedExpr, SpecProgram
from ..typecheck import TypeError_, WellFormednessError
from ..values import rat_from_str, value_from_json
from . import schemas as sc

INPUT_ERRORS = (
    ParseError,
    TypeError_,
    WellFormednessError,
    PatternError,
    ContractError,
    EnumerationError,
    EmissionError,
    SimulationError,
    EngineError,
    EvalError,
    ValueError,
)


def _grid(values: list[str]) -> list[Fraction]:
    out = []
    for v in values:
        x = rat_from_str(v)
        if isinstance(x, bool) or not isinstance(x, (int, Fraction)):
            raise ValueError(f"bad grid value {v!r}")
        out.append(Fraction(x))
    return out


def create_app() -> FastAPI:
    app = FastAPI(
        title="rtcheck service",
        version=__version__,
        description=__doc__,
    )

    @app.get("/health", response_model=sc.HealthResponse)
    def health() -> sc.HealthResponse:
        z3 = shutil.which("z3")
        return sc.HealthResponse(
            status="ok",
            version=__version__,
            solver=f"z3 at {z3}" if z3 else "bundled reference solver",
        )

    @app.post("/parse", response_model=sc.ParseResponse)
    def parse(req: sc.ParseRequest) -> sc.ParseResponse:
        try:
            out = parse_source(req.source, pattern_style=req.pattern_style)
        except INPUT_ERRORS as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        if isinstance(out, SpecProgram):
            return sc.ParseResponse(
                kind="program",
                var_count=len(out.vars),
                constraint_count=len(out.transition),
                property_count=len(out.properties),
                sexpr=program_sexpr(out),
            )
        return sc.ParseResponse(
            kind="system",
            systems=sorted(out.systems),
            root=out.root,
        )

    @app.post("/check", response_model=sc.CheckResponse)
    def check(req: sc.CheckRequest) -> sc.CheckResponse:
        start = _time.monotonic()
        try:
            parsed = parse_source(req.source, pattern_style=req.pattern_style)
            lemmas = [
                NamedExpr(f"lemma[{k}]", parse_expr_text(text))
                for k, text in enumerate(req.lemmas)
            ]
            cfg = EngineConfig(
                engine=req.engine,
                k=req.k,
                solver=req.solver,
                solver_timeout=req.solver_timeout,
                horizon=req.horizon,
                time_grid=_grid(req.time_grid),
                grids={
                    name: [rat_from_str(v) for v in vals]
                    for name, vals in req.grids.items()
                },
                ceiling=req.ceiling,
                lemmas=lemmas,
            )
            if isinstance(parsed, SpecProgram):
                obligations = [
                    _ProgramObligation(parsed, ne, k)
                    for k, ne in enumerate(parsed.properties)
                ]
                if not obligations:
                    raise ValueError("the program declares no properties to check")
            else:
                obligations = gen_all_obligations(
                    parsed,
                    rule=req.assumption_rule,
                    order=req.order,
                    pattern_style=req.pattern_style,
                )
            outcomes = discharge_all(obligations, cfg)
        except SolverFailure as exc:
            raise HTTPException(status_code=502, detail=str(exc))
        except DomainExplosion as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except INPUT_ERRORS as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        reports = []
        for oc in outcomes:
            cex = None
            if oc.result.counterexample is not None:
                cex = sc.CounterexampleModel(
                    trace=oc.result.counterexample.to_json(),
                    failed_step=oc.result.failed_step or 0,
                )
            reports.append(
                sc.ObligationReport(
                    name=oc.name,
                    kind=oc.kind,
                    rule=oc.rule,
                    verdict=oc.result.verdict,
                    bound=oc.result.bound,
                    engine=oc.result.engine,
                    wall_time=oc.result.wall_time,
                    diagnostics=oc.result.diagnostics,
                    counterexample=cex,
                )
            )
        verdicts = {r.verdict for r in reports}
        if "falsified" in verdicts:
            overall, code = "falsified", 1
        elif "unknown" in verdicts:
            overall, code = "unknown", 2
        else:
            overall, code = "proved", 0
        return sc.CheckResponse(
            verdict=overall,
            exit_code=code,
            obligations=reports,
            elapsed=_time.monotonic() - start,
        )

    @app.post("/simulate", response_model=sc.SimulateResponse)
    def do_simulate(req: sc.SimulateRequest) -> sc.SimulateResponse:
        try:
            parsed = parse_source(req.source, pattern_style=req.pattern_style)
            if not isinstance(parsed, SpecProgram):
                raise SimulationError(
                    "simulation works on standalone programs; use `compose` "
                    "to flatten a system first"
                )
            if req.trace is not None:
                trace = TimedTrace.from_json(req.trace, parsed.vars)
                outcome = validate_trace(parsed, trace)
            else:
                inputs = {
                    name: [
                        value_from_json(v, real=str(parsed.vars.get(name)) == "real")
                        for v in seq
                    ]
                    for name, seq in req.inputs.items()
                }
                outcome = simulate(parsed, req.steps, inputs)
        except INPUT_ERRORS as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return sc.SimulateResponse(
            ok=outcome.ok,
            trace=outcome.trace.to_json(list(parsed.vars)) if outcome.trace else None,
            step=outcome.step,
            constraint=outcome.constraint,
            properties=[
                {"name": p.name, "holds": p.holds, "failed_step": p.failed_step}
                for p in outcome.properties
            ],
        )

    @app.post("/emit", response_model=sc.EmitResponse)
    def emit(req: sc.EmitRequest) -> sc.EmitResponse:
        try:
            if req.mode in ("observer", "constraint", "side-condition"):
                if not req.pattern:
                    raise ValueError(f"mode {req.mode} needs a pattern phrase")
                pat = parse_pattern_text(req.pattern)
                host_src = req.source or ""
                host = parse_source(host_src) if host_src else _pattern_host(pat)
                if not isinstance(host, SpecProgram):
                    raise ValueError("emit hosts must be standalone programs")
                if req.mode == "observer":
                    bundle = compile_observer(pat, host)
                elif req.mode == "constraint":
                    bundle = compile_constraint(pat, host, style=req.constraint_style)
                else:
                    bundle = compile_side_condition(pat, host)
                lines = [
                    f"var {name} : {ty.value};" for name, ty in bundle.fresh_vars.items()
                ]
                lines += [
                    f'assert "{ne.display("constraint")}" : {render_expr(ne.expr)};'
                    for ne in bundle.constraints
                ]
                if bundle.prop is not None:
                    lines.append(
                        f'property "{bundle.prop.display("pattern")}" : '
                        f"{render_expr(bundle.prop.expr)};"
                    )
                for name in bundle.timeouts:
                    lines.append(f"// registered timeout: {name}")
                return sc.EmitResponse(text="\n".join(lines) + "\n")
            if not req.source:
                raise ValueError(f"mode {req.mode} needs source text")
            parsed = parse_source(req.source)
            if req.mode == "core":
                if isinstance(parsed, SpecProgram):
                    return sc.EmitResponse(text=render_program(parsed))
                prog, prop = compose_monolithic(parsed)
                prog.properties.append(prop)
                return sc.EmitResponse(text=render_program(prog))
            # smt
            if isinstance(parsed, SpecProgram):
                if not parsed.properties:
                    raise ValueError("no properties to encode")
                program, prop_expr = parsed, parsed.properties[0].expr
            else:
                program, prop = compose_monolithic(parsed)
                prop_expr = prop.expr
            emitter = Emitter(program, prop_expr, time_grid=_grid(req.time_grid))
            if req.smt_mode == "bmc":
                text = emitter.script_bmc(req.k)
            else:
                text = (
                    emitter.script_base(req.k)
                    + "; ---- inductive step ----\n"
                    + emitter.script_step(req.k)
                )
            return sc.EmitResponse(text=text)
        except INPUT_ERRORS as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/compose", response_model=sc.ComposeResponse)
    def compose(req: sc.ComposeRequest) -> sc.ComposeResponse:
        try:
            parsed = parse_source(req.source, pattern_style=req.pattern_style)
            if isinstance(parsed, SpecProgram):
                raise ValueError("compose needs a system model")
            prog, prop = compose_monolithic(parsed, pattern_style=req.pattern_style)
        except INPUT_ERRORS as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return sc.ComposeResponse(
            text=render_program(prog), property=render_expr(prop.expr)
        )

    @app.post("/oracle", response_model=sc.OracleResponse)
    def oracle(req: sc.OracleRequest) -> sc.OracleResponse:
        kwargs: dict = {}
        if req.suite in ("relaxed-inclusion",):
            kwargs["seed"] = req.seed
            if req.count:
                kwargs["count"] = req.count
        if req.suite == "engine-agreement":
            kwargs["seed"] = req.seed
            if req.pairs:
                kwargs["pairs"] = req.pairs
            if req.bound:
                kwargs["bound"] = req.bound
            if req.solver:
                kwargs["solver"] = req.solver
        try:
            report = run_suite(req.suite, **kwargs)
        except INPUT_ERRORS as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return sc.OracleResponse(
            suite=report.name,
            passed=report.passed,
            checked=report.checked,
            seed=report.seed,
            elapsed=report.elapsed,
            discrepancies=report.discrepancies[:50],
        )

    return app


class _ProgramObligation:
    """Adapter so a standalone program's properties discharge like
    contract obligations."""

    kind = "program-property"
    rule = "program-property"

    def __init__(self, program: SpecProgram, prop: NamedExpr, index: int):
        self.program = program
        self.prop = prop
        self.name = prop.display(f"property[{index}]")


def _pattern_host(pat) -> SpecProgram:
    """Minimal host declaring the pattern's variables as booleans, for
    pattern-only emission."""
    from ..contracts import _pattern_vars
    from ..syntax import TypeTag

    host = SpecProgram()
    for name in sorted(_pattern_vars(pat)):
        if name != "t":
            host.vars[name] = TypeTag.BOOL
    return host


app = create_app()
