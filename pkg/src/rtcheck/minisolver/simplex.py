"""Incremental simplex over exact rationals with infinitesimals.

Values are pairs (q, k) standing for q + k*delta with delta an arbitrarily
small positive rational; strict bounds become weak bounds on the delta
component. Bound assertions are trailed so the SAT layer can backtrack
cheaply; `check` pivots with Bland's rule, so it terminates, and reports an
infeasibility explanation as the set of asserted bounds involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

ZERO = Fraction(0)


@dataclass(frozen=True)
class Delta:
    q: Fraction
    k: Fraction

    def __add__(self, other: "Delta") -> "Delta":
        return Delta(self.q + other.q, self.k + other.k)

    def __sub__(self, other: "Delta") -> "Delta":
        return Delta(self.q - other.q, self.k - other.k)

    def scale(self, c: Fraction) -> "Delta":
        return Delta(self.q * c, self.k * c)

    def __lt__(self, other: "Delta") -> bool:
        return (self.q, self.k) < (other.q, other.k)

    def __le__(self, other: "Delta") -> bool:
        return (self.q, self.k) <= (other.q, other.k)

    def concrete(self, delta: Fraction) -> Fraction:
        return self.q + self.k * delta


DZERO = Delta(ZERO, ZERO)


class Simplex:
    def __init__(self) -> None:
        self.nvars = 0
        self.rows: dict[int, dict[int, Fraction]] = {}
        self.is_basic: dict[int, bool] = {}
        self.values: dict[int, Delta] = {}
        self.lower: dict[int, tuple[Delta, int]] = {}
        self.upper: dict[int, tuple[Delta, int]] = {}
        # nonbasic column -> basic rows mentioning it
        self.cols: dict[int, set[int]] = {}
        self._trail: list[tuple[int, str, Optional[tuple[Delta, int]]]] = []

    def new_var(self) -> int:
        v = self.nvars
        self.nvars += 1
        self.is_basic[v] = False
        self.values[v] = DZERO
        self.cols[v] = set()
        return v

    def add_row(self, coeffs: dict[int, Fraction]) -> int:
        """Introduce a slack variable s = sum(coeffs); returns s. Rows are
        permanent; call before solving starts."""
        s = self.new_var()
        row = {x: c for x, c in coeffs.items() if c != 0}
        # substitute any basic variables appearing in the new row
        for x in list(row):
            if self.is_basic[x]:
                c = row.pop(x)
                for y, cy in self.rows[x].items():
                    row[y] = row.get(y, ZERO) + c * cy
                    if row[y] == 0:
                        del row[y]
        self.rows[s] = row
        self.is_basic[s] = True
        val = DZERO
        for x, c in row.items():
            self.cols[x].add(s)
            val = val + self.values[x].scale(c)
        self.values[s] = val
        return s

    # ----- trail ------------------------------------------------------------

    def mark(self) -> int:
        return len(self._trail)

    def pop_to(self, mark: int) -> None:
        while len(self._trail) > mark:
            var, which, old = self._trail.pop()
            if which == "lo":
                if old is None:
                    self.lower.pop(var, None)
                else:
                    self.lower[var] = old
            else:
                if old is None:
                    self.upper.pop(var, None)
                else:
                    self.upper[var] = old

    # ----- bounds -----------------------------------------------------------

    def assert_upper(self, x: int, bound: Delta, reason: int) -> Optional[list[int]]:
        cur = self.upper.get(x)
        if cur is not None and cur[0] <= bound:
            return None
        lo = self.lower.get(x)
        if lo is not None and bound < lo[0]:
            return [lo[1], reason]
        self._trail.append((x, "hi", cur))
        self.upper[x] = (bound, reason)
        if not self.is_basic[x] and bound < self.values[x]:
            self._update(x, bound)
        return None

    def assert_lower(self, x: int, bound: Delta, reason: int) -> Optional[list[int]]:
        cur = self.lower.get(x)
        if cur is not None and bound <= cur[0]:
            return None
        hi = self.upper.get(x)
        if hi is not None and hi[0] < bound:
            return [hi[1], reason]
        self._trail.append((x, "lo", cur))
        self.lower[x] = (bound, reason)
        if not self.is_basic[x] and self.values[x] < bound:
            self._update(x, bound)
        return None

    def _update(self, x: int, v: Delta) -> None:
        d = v - self.values[x]
        for b in self.cols[x]:
            c = self.rows[b][x]
            self.values[b] = self.values[b] + d.scale(c)
        self.values[x] = v

    # ----- feasibility ------------------------------------------------------

    def check(self) -> Optional[list[int]]:
        """Pivot until every basic variable sits within its bounds. Returns
        None on success, otherwise the asserted bounds' reasons forming an
        infeasible set."""
        while True:
            victim = None
            need_low = False
            for b in sorted(self.rows):
                lo = self.lower.get(b)
                if lo is not None and self.values[b] < lo[0]:
                    victim, need_low = b, True
                    break
                hi = self.upper.get(b)
                if hi is not None and hi[0] < self.values[b]:
                    victim, need_low = b, False
                    break
            if victim is None:
                return None
            b = victim
            row = self.rows[b]
            pivot = None
            for x in sorted(row):
                c = row[x]
                if need_low:
                    can = (c > 0 and self._can_increase(x)) or (
                        c < 0 and self._can_decrease(x)
                    )
                else:
                    can = (c > 0 and self._can_decrease(x)) or (
                        c < 0 and self._can_increase(x)
                    )
                if can:
                    pivot = x
                    break
            if pivot is None:
                reasons = []
                if need_low:
                    reasons.append(self.lower[b][1])
                    for x in sorted(row):
                        if row[x] > 0:
                            reasons.append(self.upper[x][1])
                        else:
                            reasons.append(self.lower[x][1])
                else:
                    reasons.append(self.upper[b][1])
                    for x in sorted(row):
                        if row[x] > 0:
                            reasons.append(self.lower[x][1])
                        else:
                            reasons.append(self.upper[x][1])
                return reasons
            target = self.lower[b][0] if need_low else self.upper[b][0]
            self._pivot_and_update(b, pivot, target)

    def _can_increase(self, x: int) -> bool:
        hi = self.upper.get(x)
        return hi is None or self.values[x] < hi[0]

    def _can_decrease(self, x: int) -> bool:
        lo = self.lower.get(x)
        return lo is None or lo[0] < self.values[x]

    def _pivot_and_update(self, b: int, x: int, v: Delta) -> None:
        a = self.rows[b][x]
        theta = (v - self.values[b]).scale(Fraction(1) / a)
        self.values[b] = v
        self.values[x] = self.values[x] + theta
        for other in self.cols[x]:
            if other != b:
                c = self.rows[other][x]
                self.values[other] = self.values[other] + theta.scale(c)
        self._pivot(b, x)

    def _pivot(self, b: int, x: int) -> None:
        """Swap basic b and nonbasic x."""
        row = self.rows.pop(b)
        a = row.pop(x)
        for y in row:
            self.cols[y].discard(b)
        self.cols[x].discard(b)
        # x = (b - sum other terms) / a
        new_row = {b: Fraction(1) / a}
        for y, c in row.items():
            new_row[y] = -c / a
        self.is_basic[b] = False
        self.is_basic[x] = True
        self.cols[b] = set()
        # substitute x in all other rows
        for other in list(self.cols[x]):
            orow = self.rows[other]
            c = orow.pop(x)
            self.cols[x].discard(other)
            for y, cy in new_row.items():
                nv = orow.get(y, ZERO) + c * cy
                if nv == 0:
                    if y in orow:
                        del orow[y]
                        self.cols[y].discard(other)
                else:
                    if y not in orow:
                        self.cols[y].add(other)
                    orow[y] = nv
        self.rows[x] = new_row
        for y in new_row:
            self.cols[y].add(x)

    # ----- models -------------------------------------------------------------

    def resolve_delta(self) -> Fraction:
        """A concrete positive value for the infinitesimal that keeps every
        asserted bound true."""
        limit: Optional[Fraction] = None
        for x in range(self.nvars):
            v = self.values[x]
            lo = self.lower.get(x)
            if lo is not None:
                limit = self._delta_limit(limit, lo[0], v)
            hi = self.upper.get(x)
            if hi is not None:
                limit = self._delta_limit(limit, v, hi[0])
        if limit is None:
            return Fraction(1)
        return limit / 2

    @staticmethod
    def _delta_limit(
        limit: Optional[Fraction], small: Delta, big: Delta
    ) -> Optional[Fraction]:
        # need small.q + small.k*d <= big.q + big.k*d for the chosen d
        dk = small.k - big.k
        if dk <= 0:
            return limit
        gap = (big.q - small.q) / dk
        if limit is None or gap < limit:
            return gap

    def value(self, x: int, delta: Fraction) -> Fraction:
        return self.values[x].concrete(delta)
