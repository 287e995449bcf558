"""Conflict-driven clause learning SAT core with a lazy theory hook.

Literals are nonzero ints (+v / -v, variables numbered from 1). The theory
adapter is told about every assignment of a theory-mapped literal and asked
for a full consistency check at each propagation fixpoint; it answers with
a conflicting set of true literals when unhappy. Decisions use
activity-bumped scoring with deterministic tie-breaks, so runs are
reproducible.
"""

from __future__ import annotations

from typing import Optional, Protocol


class TheoryAdapter(Protocol):
    def on_assign(self, lit: int) -> Optional[list[int]]: ...
    def check(self) -> Optional[list[int]]: ...
    def mark(self) -> int: ...
    def pop_to(self, mark: int) -> None: ...
    def relevant(self, var: int) -> bool: ...


class _NoTheory:
    def on_assign(self, lit: int) -> Optional[list[int]]:
        return None

    def check(self) -> Optional[list[int]]:
        return None

    def mark(self) -> int:
        return 0

    def pop_to(self, mark: int) -> None:
        pass

    def relevant(self, var: int) -> bool:
        return False


SAT = "sat"
UNSAT = "unsat"
UNKNOWN = "unknown"


class Solver:
    def __init__(self, theory: Optional[TheoryAdapter] = None):
        self.theory: TheoryAdapter = theory or _NoTheory()
        self.nvars = 0
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[int]] = {}
        self.assign: dict[int, bool] = {}
        self.level: dict[int, int] = {}
        self.reason: dict[int, Optional[int]] = {}
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.theory_marks: list[int] = []
        self.activity: dict[int, float] = {}
        self.var_inc = 1.0
        self.phase: dict[int, bool] = {}
        self.prop_head = 0
        self.ok = True

    # ----- setup -----------------------------------------------------------

    def new_var(self) -> int:
        self.nvars += 1
        v = self.nvars
        self.activity[v] = 0.0
        self.phase[v] = False
        return v

    def ensure_var(self, v: int) -> None:
        while self.nvars < v:
            self.new_var()

    def add_clause(self, lits: list[int]) -> None:
        """Clauses may be added between `solve` calls; the solver returns to
        the root level first."""
        if not self.ok:
            return
        if self.trail_lim:
            self._backtrack(0)
        out: list[int] = []
        for l in lits:
            self.ensure_var(abs(l))
            if -l in out:
                return  # tautology
            if l not in out:
                out.append(l)
        # drop root-falsified literals and root-satisfied clauses
        out2 = []
        for l in out:
            val = self._value(l)
            if val is True:
                return
            if val is None:
                out2.append(l)
        out = out2
        if not out:
            self.ok = False
            return
        if len(out) == 1:
            if not self._enqueue(out[0], None):
                self.ok = False
            return
        cid = len(self.clauses)
        self.clauses.append(out)
        self.watches.setdefault(out[0], []).append(cid)
        self.watches.setdefault(out[1], []).append(cid)

    # ----- assignment ------------------------------------------------------

    def _value(self, lit: int) -> Optional[bool]:
        v = self.assign.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def _enqueue(self, lit: int, reason: Optional[int]) -> bool:
        val = self._value(lit)
        if val is not None:
            return val
        v = abs(lit)
        self.assign[v] = lit > 0
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)
        self.phase[v] = lit > 0
        return True

    def _current_level(self) -> int:
        return len(self.trail_lim)

    # ----- propagation -------------------------------------------------------

    def _propagate(self) -> Optional[list[int]]:
        """Boolean propagation plus theory bound assertion. Returns a
        conflict clause (as a literal list) or None."""
        while self.prop_head < len(self.trail):
            lit = self.trail[self.prop_head]
            self.prop_head += 1
            if self.theory.relevant(abs(lit)):
                expl = self.theory.on_assign(lit)
                if expl is not None:
                    return [-l for l in expl]
            conflict = self._propagate_lit(-lit)
            if conflict is not None:
                return conflict
        return None

    def _propagate_lit(self, false_lit: int) -> Optional[list[int]]:
        watchlist = self.watches.get(false_lit)
        if not watchlist:
            return None
        i = 0
        while i < len(watchlist):
            cid = watchlist[i]
            clause = self.clauses[cid]
            # normalize: false literal at position 1
            if clause[0] == false_lit:
                clause[0], clause[1] = clause[1], clause[0]
            if self._value(clause[0]) is True:
                i += 1
                continue
            moved = False
            for j in range(2, len(clause)):
                if self._value(clause[j]) is not False:
                    clause[1], clause[j] = clause[j], clause[1]
                    self.watches.setdefault(clause[1], []).append(cid)
                    watchlist[i] = watchlist[-1]
                    watchlist.pop()
                    moved = True
                    break
            if moved:
                continue
            if self._value(clause[0]) is False:
                return list(clause)
            self._enqueue(clause[0], cid)
            i += 1
        return None

    # ----- conflict analysis ---------------------------------------------------

    def _bump(self, v: int) -> None:
        self.activity[v] = self.activity.get(v, 0.0) + self.var_inc
        if self.activity[v] > 1e100:
            for k in self.activity:
                self.activity[k] *= 1e-100
            self.var_inc *= 1e-100

    def _analyze(self, conflict: list[int]) -> tuple[list[int], int]:
        """First-UIP learning. `conflict` is a clause whose literals are all
        false. Returns (learned clause, backjump level)."""
        cur_level = self._current_level()
        seen: set[int] = set()
        learned: list[int] = []
        counter = 0
        lits = list(conflict)
        trail_idx = len(self.trail) - 1
        uip: Optional[int] = None
        while True:
            for l in lits:
                v = abs(l)
                if v in seen:
                    continue
                seen.add(v)
                self._bump(v)
                lv = self.level.get(v, 0)
                if lv == cur_level:
                    counter += 1
                elif lv > 0:
                    learned.append(l)
            while trail_idx >= 0:
                lit = self.trail[trail_idx]
                trail_idx -= 1
                if abs(lit) in seen and self.level[abs(lit)] == cur_level:
                    break
            else:
                break
            counter -= 1
            if counter == 0:
                uip = lit
                break
            rid = self.reason[abs(lit)]
            if rid is None:
                # decision reached without closing the cut; shouldn't happen
                uip = lit
                break
            lits = [l for l in self.clauses[rid] if l != lit]
        if uip is None:
            return [], 0
        learned = [-uip] + learned
        if len(learned) == 1:
            return learned, 0
        back = max(self.level[abs(l)] for l in learned[1:])
        return learned, back

    def _backtrack(self, level: int) -> None:
        while self._current_level() > level:
            mark = self.trail_lim.pop()
            tmark = self.theory_marks.pop()
            for lit in reversed(self.trail[mark:]):
                v = abs(lit)
                del self.assign[v]
                del self.level[v]
                self.reason.pop(v, None)
            del self.trail[mark:]
            self.theory.pop_to(tmark)
        self.prop_head = min(self.prop_head, len(self.trail))

    # ----- main loop ---------------------------------------------------------

    def _decide(self) -> Optional[int]:
        best = None
        best_act = -1.0
        for v in range(1, self.nvars + 1):
            if v not in self.assign:
                act = self.activity.get(v, 0.0)
                if act > best_act:
                    best, best_act = v, act
        if best is None:
            return None
        return best if self.phase.get(best, False) else -best

    def _handle_conflict(self, conflict: list[int]) -> bool:
        """Returns False when the instance is unsat."""
        levels = [self.level.get(abs(l), 0) for l in conflict]
        top = max(levels) if levels else 0
        if top == 0:
            return False
        if top < self._current_level():
            self._backtrack(top)
        learned, back = self._analyze(conflict)
        if not learned:
            return False
        self._backtrack(back)
        self.var_inc /= 0.95
        if len(learned) == 1:
            if not self._enqueue(learned[0], None):
                return False
            return True
        cid = len(self.clauses)
        self.clauses.append(learned)
        self.watches.setdefault(learned[0], []).append(cid)
        self.watches.setdefault(learned[1], []).append(cid)
        if not self._enqueue(learned[0], cid):
            return False
        return True

    def solve(self, max_conflicts: int = 4_000_000) -> str:
        if not self.ok:
            return UNSAT
        conflicts = 0
        restart_limit = 256
        restart_ctr = 0
        while True:
            conflict = self._propagate()
            if conflict is None:
                expl = self.theory.check()
                if expl is not None:
                    conflict = [-l for l in expl]
            if conflict is not None:
                conflicts += 1
                restart_ctr += 1
                if conflicts > max_conflicts:
                    return UNKNOWN
                if not self._handle_conflict(conflict):
                    return UNSAT
                if restart_ctr >= restart_limit:
                    restart_ctr = 0
                    restart_limit = int(restart_limit * 1.5)
                    self._backtrack(0)
                continue
            lit = self._decide()
            if lit is None:
                return SAT
            self.trail_lim.append(len(self.trail))
            self.theory_marks.append(self.theory.mark())
            self._enqueue(lit, None)

    def model_value(self, v: int) -> bool:
        return self.assign.get(v, False)
