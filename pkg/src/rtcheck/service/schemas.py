"""Request and response models for the verification service.

Sources travel inline as text; traces use the exact JSON form (rationals as
"num/den" strings, infinity as "inf") so nothing is lost over the wire.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class ParseRequest(BaseModel):
    source: str
    pattern_style: Literal["filter", "calendar"] = "filter"


class ParseResponse(BaseModel):
    kind: Literal["program", "system"]
    var_count: int = 0
    constraint_count: int = 0
    property_count: int = 0
    systems: list[str] = Field(default_factory=list)
    root: Optional[str] = None
    sexpr: Optional[str] = None


class CheckRequest(BaseModel):
    source: str
    engine: Literal["explicit", "bmc", "kind"] = "kind"
    k: int = 8
    horizon: Optional[int] = None
    solver: Optional[str] = None
    solver_timeout: float = 600.0
    time_grid: list[str] = Field(default_factory=list)  # rationals as "num/den"
    grids: dict[str, list[str]] = Field(default_factory=dict)
    ceiling: int = 10**6
    lemmas: list[str] = Field(default_factory=list)
    assumption_rule: Literal["ordered", "unordered", "strong"] = "ordered"
    order: Optional[list[str]] = None
    pattern_style: Literal["filter", "calendar"] = "filter"


class CounterexampleModel(BaseModel):
    trace: dict
    failed_step: int


class ObligationReport(BaseModel):
    name: str
    kind: str
    rule: str
    verdict: Literal["proved", "falsified", "unknown"]
    bound: Optional[int] = None
    engine: str
    wall_time: float
    diagnostics: Optional[str] = None
    counterexample: Optional[CounterexampleModel] = None


class CheckResponse(BaseModel):
    verdict: Literal["proved", "falsified", "unknown"]
    exit_code: int
    obligations: list[ObligationReport]
    elapsed: float


class SimulateRequest(BaseModel):
    source: str
    steps: int = 10
    inputs: dict[str, list] = Field(default_factory=dict)
    trace: Optional[dict] = None  # validate a supplied trace instead
    pattern_style: Literal["filter", "calendar"] = "calendar"


class SimulateResponse(BaseModel):
    ok: bool
    trace: Optional[dict] = None
    step: Optional[int] = None
    constraint: Optional[str] = None
    properties: list[dict] = Field(default_factory=list)


class EmitRequest(BaseModel):
    source: Optional[str] = None
    pattern: Optional[str] = None
    mode: Literal["observer", "constraint", "side-condition", "core", "smt"] = "core"
    constraint_style: Literal["filter", "calendar"] = "filter"
    smt_mode: Literal["bmc", "kinduction"] = "bmc"
    k: int = 3
    time_grid: list[str] = Field(default_factory=list)


class EmitResponse(BaseModel):
    text: str


class ComposeRequest(BaseModel):
    source: str
    pattern_style: Literal["filter", "calendar"] = "filter"


class ComposeResponse(BaseModel):
    text: str
    property: str


class OracleRequest(BaseModel):
    suite: str
    seed: int = 0
    count: Optional[int] = None
    pairs: Optional[int] = None
    bound: Optional[int] = None
    solver: Optional[str] = None


class OracleResponse(BaseModel):
    suite: str
    passed: bool
    checked: int
    seed: Optional[int] = None
    elapsed: float
    discrepancies: list[str] = Field(default_factory=list)


class HealthResponse(BaseModel):
    status: str
    version: str
    solver: str
