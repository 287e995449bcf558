"""Deterministic model stepping and supplied-trace validation.

A simulation run computes defined streams step by step; free inputs must be
supplied per step. Time follows the event calendar when the program has
timeouts, a supplied `t` input stream, or unit ticks for untimed models.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .enumeration import classify_program
from .semantics import (
    Calendar,
    CalendarExhausted,
    State,
    TimedTrace,
    advance_time,
    check_invariant_on_trace,
    trace_admissible,
)
from .syntax import SpecProgram, TIME_VAR
from .values import Value


class SimulationError(Exception):
    pass


@dataclass
class PropertyStatus:
    name: str
    holds: bool
    failed_step: Optional[int] = None


@dataclass
class SimulationOutcome:
    ok: bool
    trace: Optional[TimedTrace] = None
    step: Optional[int] = None
    constraint: Optional[str] = None
    properties: list[PropertyStatus] = field(default_factory=list)


def simulate(
    program: SpecProgram, steps: int, inputs: Optional[dict[str, list[Value]]] = None
) -> SimulationOutcome:
    """Step the model `steps` times. Free variables take their values from
    `inputs` (a per-step list each); a calendar-exhausted condition or a
    violated constraint stops the run with the offending step."""
    inputs = inputs or {}
    defined, filters, free = classify_program(program)
    missing = [
        name
        for name in free
        if name not in inputs
    ]
    if missing:
        raise SimulationError(
            "free variables need per-step inputs: " + ", ".join(sorted(missing))
        )
    for name, seq in inputs.items():
        if name != TIME_VAR and name not in program.vars:
            raise SimulationError(f"input '{name}' is not a program variable")
        if len(seq) < steps:
            raise SimulationError(
                f"input '{name}' supplies {len(seq)} values for {steps} steps"
            )
    states: list[State] = []
    for i in range(1, steps + 1):
        if program.timeouts:
            if i == 1:
                tv = Fraction(0)
            else:
                cal = Calendar([states[-1][n] for n in program.timeouts])
                try:
                    tv = advance_time(Fraction(states[-1][TIME_VAR]), cal)
                except CalendarExhausted as exc:
                    return SimulationOutcome(
                        False,
                        trace=TimedTrace(states, [Fraction(s[TIME_VAR]) for s in states]),
                        step=i,
                        constraint=f"calendar exhausted: {exc}",
                    )
        elif TIME_VAR in inputs:
            tv = Fraction(inputs[TIME_VAR][i - 1])  # type: ignore[arg-type]
        else:
            tv = Fraction(i - 1)
        state: State = {TIME_VAR: tv}
        for name in free:
            state[name] = inputs[name][i - 1]
        states.append(state)
        for name, fn in defined:
            state[name] = fn(states, i)
        for label, fn in filters:
            if not fn(states, i):
                return SimulationOutcome(
                    False,
                    trace=TimedTrace(states, [Fraction(s[TIME_VAR]) for s in states]),
                    step=i,
                    constraint=label,
                )
    trace = TimedTrace(states, [Fraction(s[TIME_VAR]) for s in states])
    return SimulationOutcome(True, trace=trace, properties=_property_report(program, trace))


def _property_report(program: SpecProgram, trace: TimedTrace) -> list[PropertyStatus]:
    out = []
    for k, ne in enumerate(program.properties):
        rep = check_invariant_on_trace(program, ne.expr, trace)
        out.append(
            PropertyStatus(ne.display(f"property[{k}]"), rep.holds, rep.step)
        )
    return out


def validate_trace(program: SpecProgram, trace: TimedTrace) -> SimulationOutcome:
    """Admissibility check for a supplied trace, plus per-property status."""
    rep = trace_admissible(program, trace)
    if not rep.ok:
        return SimulationOutcome(
            False, trace=trace, step=rep.step, constraint=rep.constraint
        )
    return SimulationOutcome(
        True, trace=trace, properties=_property_report(program, trace)
    )
