"""Verification engines over (program, property) obligations.

Three engines:
  * explicit: exhaustive bounded enumeration (the ground-truth oracle);
  * bmc: bounded violation search through an external SMT solver;
  * kind: bounded search interleaved with k-induction.

Solver protocol: SMT-LIB 2.6 text on stdin of a subprocess, verdict plus
optional `(get-model)` output on stdout. Any compliant solver works; the
default command runs the bundled reference solver in-process-adjacent
(`python -m rtcheck.minisolver`). Decoded counterexamples are always
re-validated against the exact evaluator before being reported.
"""

from __future__ import annotations

import shlex
import shutil
import subprocess
import sys
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .enumeration import EnumerationDomain, check_invariant_explicit
from .result import CheckResult
from .semantics import TimedTrace, check_invariant_on_trace, trace_admissible
from .smtlib import DecodeError, Emitter
from .syntax import Expr, NamedExpr, SpecProgram
from .values import Value


class EngineError(Exception):
    pass


class SolverFailure(EngineError):
    """The solver subprocess crashed, timed out, or answered nonsense."""


DEFAULT_K = 8


@dataclass
class EngineConfig:
    engine: str = "kind"  # "explicit" | "bmc" | "kind"
    k: int = DEFAULT_K
    solver: Optional[str] = None  # shell-style command; None = bundled solver
    solver_timeout: float = 600.0
    horizon: Optional[int] = None  # explicit engine bound (defaults to k)
    time_grid: list[Fraction] = field(default_factory=list)
    grids: dict[str, list[Value]] = field(default_factory=dict)
    ceiling: int = 10**6
    lemmas: list[NamedExpr] = field(default_factory=list)

    def solver_command(self) -> Optional[list[str]]:
        """Subprocess command line, or None for the bundled solver run
        in-process (same code the `rtc-solve` executable wraps)."""
        if self.solver is None:
            return None
        if self.solver == "builtin":
            return [sys.executable, "-m", "rtcheck.minisolver"]
        if self.solver == "auto":
            z3 = shutil.which("z3")
            if z3:
                return [z3, "-in"]
            return None
        return shlex.split(self.solver)


@dataclass
class SolverReply:
    status: str  # sat | unsat | unknown
    model_text: str


def run_solver(
    cmd: Optional[Sequence[str]], script: str, timeout: float
) -> SolverReply:
    if cmd is None:
        from io import StringIO

        from .minisolver.frontend import run_text

        buf = StringIO()
        run_text(script, buf)
        text = buf.getvalue()
    else:
        try:
            proc = subprocess.run(
                list(cmd),
                input=script.encode(),
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                timeout=timeout,
            )
        except FileNotFoundError as exc:
            raise SolverFailure(f"solver executable not found: {cmd[0]}") from exc
        except subprocess.TimeoutExpired as exc:
            raise SolverFailure(f"solver timed out after {timeout}s") from exc
        text = proc.stdout.decode(errors="replace")
    status = None
    rest_lines: list[str] = []
    for line in text.splitlines():
        stripped = line.strip()
        if status is None and stripped in ("sat", "unsat", "unknown"):
            status = stripped
            continue
        rest_lines.append(line)
    if status is None:
        raise SolverFailure(
            f"no verdict in solver output: {text[:500]!r}"
        )
    model_text = "\n".join(
        l for l in rest_lines if not l.strip().startswith("(error")
    )
    return SolverReply(status, model_text)


def _decode_and_validate(
    emitter: Emitter, reply: SolverReply, depth: int
) -> tuple[TimedTrace, int]:
    """Decode a model into a trace, then re-check it against the exact
    evaluator: it must be admissible and falsify the property. A failure
    here is an encoder or solver bug, never a user error."""
    trace = emitter.decode_model(reply.model_text, depth)
    report = trace_admissible(emitter.program, trace)
    if not report.ok:
        raise DecodeError(
            f"decoded counterexample violates '{report.constraint}' at step "
            f"{report.step}"
        )
    inv = check_invariant_on_trace(emitter.program, emitter.prop, trace)
    if inv.holds:
        raise DecodeError("decoded counterexample does not falsify the property")
    return trace, inv.step  # type: ignore[return-value]


def _project_host_trace(program: SpecProgram, trace: TimedTrace) -> TimedTrace:
    """Restrict a trace over the lowered program back to the obligation's
    own variables (dropping internal history streams)."""
    keep = set(program.vars) | {"t"}
    states = [
        {k: v for k, v in s.items() if k in keep} for s in trace.states
    ]
    return TimedTrace(states, list(trace.times))


def run_engine(program: SpecProgram, prop: Expr, cfg: EngineConfig) -> CheckResult:
    """Check that `prop` is invariant for `program` with the configured
    engine."""
    if cfg.k < 1:
        raise EngineError("bound must be at least 1")
    if cfg.engine == "explicit":
        dom = EnumerationDomain(
            horizon=cfg.horizon or cfg.k,
            time_deltas=list(cfg.time_grid),
            grids=dict(cfg.grids),
            ceiling=cfg.ceiling,
        )
        return check_invariant_explicit(program, prop, dom)
    if cfg.engine == "bmc":
        return _run_bmc(program, prop, cfg)
    if cfg.engine == "kind":
        return _run_kind(program, prop, cfg)
    raise EngineError(f"unknown engine '{cfg.engine}'")


def _run_bmc(program: SpecProgram, prop: Expr, cfg: EngineConfig) -> CheckResult:
    start = _time.monotonic()
    emitter = Emitter(
        program,
        prop,
        lemmas=[ne.expr for ne in cfg.lemmas],
        time_grid=cfg.time_grid,
    )
    cmd = cfg.solver_command()
    for depth in range(1, cfg.k + 1):
        reply = run_solver(cmd, emitter.script_bmc(depth), cfg.solver_timeout)
        if reply.status == "unknown":
            return CheckResult(
                "unknown",
                engine="bmc",
                bound=depth,
                wall_time=_time.monotonic() - start,
                diagnostics="solver answered unknown",
            )
        if reply.status == "sat":
            trace, step = _decode_and_validate(emitter, reply, depth)
            return CheckResult(
                "falsified",
                engine="bmc",
                bound=depth,
                counterexample=_project_host_trace(program, trace),
                failed_step=step,
                wall_time=_time.monotonic() - start,
            )
    return CheckResult(
        "unknown",
        engine="bmc",
        bound=cfg.k,
        wall_time=_time.monotonic() - start,
        diagnostics=f"no counterexample within depth {cfg.k}",
    )


def _run_kind(program: SpecProgram, prop: Expr, cfg: EngineConfig) -> CheckResult:
    """Interleaved base case and inductive step, with optional auxiliary
    lemmas. Lemmas are proved first (each may use the ones before it), then
    assumed at every unrolled state while proving the main property."""
    start = _time.monotonic()
    proved_lemmas: list[NamedExpr] = []
    for lemma in cfg.lemmas:
        sub = EngineConfig(
            engine="kind",
            k=cfg.k,
            solver=cfg.solver,
            solver_timeout=cfg.solver_timeout,
            time_grid=list(cfg.time_grid),
            lemmas=list(proved_lemmas),
        )
        res = _run_kind_one(program, lemma.expr, sub, start)
        if not res.proved:
            # a bad lemma never falsifies the main property; report unknown
            return CheckResult(
                "unknown",
                engine="kind",
                bound=res.bound,
                wall_time=res.wall_time,
                diagnostics=(
                    f"auxiliary lemma '{lemma.display('lemma')}' not proved: "
                    f"{res.summary()}"
                ),
            )
        proved_lemmas.append(lemma)
    cfg2 = EngineConfig(
        engine="kind",
        k=cfg.k,
        solver=cfg.solver,
        solver_timeout=cfg.solver_timeout,
        time_grid=list(cfg.time_grid),
        lemmas=proved_lemmas,
    )
    return _run_kind_one(program, prop, cfg2, start)


def _run_kind_one(
    program: SpecProgram, prop: Expr, cfg: EngineConfig, start: float
) -> CheckResult:
    emitter = Emitter(
        program,
        prop,
        lemmas=[ne.expr for ne in cfg.lemmas],
        time_grid=cfg.time_grid,
    )
    cmd = cfg.solver_command()
    for k in range(1, cfg.k + 1):
        reply = run_solver(cmd, emitter.script_base(k), cfg.solver_timeout)
        if reply.status == "unknown":
            return CheckResult(
                "unknown",
                engine="kind",
                bound=k,
                wall_time=_time.monotonic() - start,
                diagnostics="solver answered unknown on the base case",
            )
        if reply.status == "sat":
            trace, step = _decode_and_validate(emitter, reply, k)
            return CheckResult(
                "falsified",
                engine="kind",
                bound=k,
                counterexample=_project_host_trace(program, trace),
                failed_step=step,
                wall_time=_time.monotonic() - start,
            )
        reply = run_solver(cmd, emitter.script_step(k), cfg.solver_timeout)
        if reply.status == "unsat":
            return CheckResult(
                "proved",
                engine="kind",
                bound=k,
                wall_time=_time.monotonic() - start,
            )
        # sat or unknown: the property is not k-inductive yet; deepen
    return CheckResult(
        "unknown",
        engine="kind",
        bound=cfg.k,
        wall_time=_time.monotonic() - start,
        diagnostics=f"not provable by induction within depth {cfg.k}",
    )


@dataclass
class ObligationOutcome:
    name: str
    kind: str
    rule: str
    result: CheckResult


def discharge_all(
    obligations,
    cfg: EngineConfig,
    max_workers: int = 4,
) -> list[ObligationOutcome]:
    """Discharge obligations concurrently (one solver subprocess each);
    results come back in input order."""

    def work(ob) -> ObligationOutcome:
        res = run_engine(ob.program, ob.prop.expr, cfg)
        kind = ob.kind.value if hasattr(ob.kind, "value") else str(ob.kind)
        return ObligationOutcome(ob.name, kind, ob.rule, res)

    obligations = list(obligations)
    if len(obligations) <= 1 or max_workers <= 1:
        return [work(ob) for ob in obligations]
    with ThreadPoolExecutor(max_workers=min(max_workers, len(obligations))) as pool:
        return list(pool.map(work, obligations))
