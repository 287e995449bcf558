"""SMT-LIB 2 command loop for the bundled solver.

Reads a whole script from stdin (or a file argument), executes the
commands, prints `sat`/`unsat`/`unknown` for each `check-sat` and a
z3-style model for `get-model`.

Integer feasibility: after a rational-feasible assignment, any
integer-sorted variable stuck at a fractional value triggers a valid split
clause (x <= floor or x >= floor+1) and the search resumes; a budget on
splits keeps termination, answering `unknown` when exhausted.
"""

from __future__ import annotations

import sys
from fractions import Fraction
from math import floor
from typing import Optional

from .. import sexpr
from .compile import Compiler, CompileError, LinExpr, freeze
from .sat import SAT, UNKNOWN, UNSAT

MAX_SPLITS = 200


def _format_int(v: Fraction) -> str:
    n = v.numerator
    return str(n) if n >= 0 else f"(- {-n})"


def _format_real(v: Fraction) -> str:
    if v.denominator == 1:
        return f"{v.numerator}.0" if v >= 0 else f"(- {-v.numerator}.0)"
    n, d = abs(v.numerator), v.denominator
    body = f"(/ {n}.0 {d}.0)"
    return body if v >= 0 else f"(- {body})"


class Session:
    def __init__(self) -> None:
        self.compiler = Compiler()
        self.model_lines: Optional[list[str]] = None
        self.last_verdict: Optional[str] = None

    def run_command(self, cmd: sexpr.SExpr, out) -> bool:
        """Execute one command; returns False on (exit)."""
        if isinstance(cmd, str):
            raise CompileError(f"unexpected token {cmd!r}")
        if not cmd:
            return True
        head = cmd[0]
        if head in ("set-logic", "set-option", "set-info", "push", "pop"):
            if head in ("push", "pop"):
                raise CompileError("incremental mode is not supported")
            return True
        if head in ("declare-const", "declare-fun"):
            if head == "declare-fun" and cmd[2] != []:
                raise CompileError("only nullary declarations are supported")
            sort = cmd[-1]
            if not isinstance(sort, str):
                raise CompileError(f"unsupported sort {sort!r}")
            self.compiler.declare(cmd[1], sort)
            return True
        if head == "assert":
            self.compiler.assert_term(freeze(cmd[1]))
            return True
        if head == "check-sat":
            self._check(out)
            return True
        if head == "get-model":
            if self.model_lines is None:
                out.write('(error "model is not available")\n')
            else:
                out.write("(\n")
                for line in self.model_lines:
                    out.write(f"  {line}\n")
                out.write(")\n")
            return True
        if head == "exit":
            return False
        raise CompileError(f"unsupported command {head!r}")

    def _check(self, out) -> None:
        comp = self.compiler
        verdict = comp.sat.solve()
        splits = 0
        while verdict == SAT:
            frac = self._fractional_int_var()
            if frac is None:
                break
            if splits >= MAX_SPLITS:
                verdict = UNKNOWN
                break
            splits += 1
            x, val = frac
            fl = Fraction(floor(val))
            lo = comp.atom(
                LinExpr({x: Fraction(1)}, -fl, True), "le"
            )
            hi = comp.atom(
                LinExpr({x: Fraction(-1)}, fl + 1, True), "le"
            )
            comp.sat.add_clause([lo, hi])
            verdict = comp.sat.solve()
        self.last_verdict = verdict
        if verdict == SAT:
            self.model_lines = self._build_model()
            out.write("sat\n")
        elif verdict == UNSAT:
            self.model_lines = None
            out.write("unsat\n")
        else:
            self.model_lines = None
            out.write("unknown\n")

    def _fractional_int_var(self) -> Optional[tuple[int, Fraction]]:
        comp = self.compiler
        delta = comp.simplex.resolve_delta()
        for name in comp.theory_consts:
            v = comp.theory_consts[name]
            if not comp.var_is_int.get(v, False):
                continue
            val = comp.simplex.value(v, delta)
            if val.denominator != 1:
                return v, val
        # slack variables of all-integer forms must be integral too
        for key, v in comp._form_slack.items():
            if not comp.var_is_int.get(v, False):
                continue
            val = comp.simplex.value(v, delta)
            if val.denominator != 1:
                return v, val
        return None

    def _build_model(self) -> list[str]:
        comp = self.compiler
        delta = comp.simplex.resolve_delta()
        lines = []
        for name, sort in comp.sorts.items():
            sym = f"|{name}|"
            if sort == "Bool":
                val = comp.sat.model_value(comp.bool_consts[name])
                lines.append(
                    f"(define-fun {sym} () Bool {'true' if val else 'false'})"
                )
            elif sort == "Int":
                v = comp.simplex.value(comp.theory_consts[name], delta)
                lines.append(f"(define-fun {sym} () Int {_format_int(v)})")
            else:
                v = comp.simplex.value(comp.theory_consts[name], delta)
                lines.append(f"(define-fun {sym} () Real {_format_real(v)})")
        return lines


def run_text(text: str, out) -> None:
    session = Session()
    for cmd in sexpr.parse_all(text):
        try:
            if not session.run_command(cmd, out):
                break
        except CompileError as exc:
            out.write(f'(error "{exc}")\n')
            return


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] in ("-h", "--help"):
        print(__doc__)
        return 0
    if argv:
        with open(argv[0], "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = sys.stdin.read()
    run_text(text, sys.stdout)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
