"""Verdict record shared by the checking engines."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .semantics import TimedTrace


@dataclass
class CheckResult:
    verdict: str  # "proved" | "falsified" | "unknown"
    engine: str
    bound: Optional[int] = None  # depth proved at, or bound exhausted
    counterexample: Optional[TimedTrace] = None
    failed_step: Optional[int] = None
    wall_time: float = 0.0
    diagnostics: Optional[str] = None

    @property
    def proved(self) -> bool:
        return self.verdict == "proved"

    @property
    def falsified(self) -> bool:
        return self.verdict == "falsified"

    def summary(self) -> str:
        if self.verdict == "proved":
            return f"proved({self.bound})"
        if self.verdict == "falsified":
            return f"falsified(step {self.failed_step})"
        extra = f": {self.diagnostics}" if self.diagnostics else ""
        return f"unknown({self.bound}){extra}"
