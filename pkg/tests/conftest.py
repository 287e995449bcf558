from fractions import Fraction
from pathlib import Path

import pytest

from rtcheck.semantics import TimedTrace

REPO = Path(__file__).resolve().parent.parent
MODELS = REPO / "models"


@pytest.fixture
def models_dir() -> Path:
    return MODELS


def trace_of(rows):
    """Build a timed trace from (t, {var: value}) rows."""
    states = []
    for t, vals in rows:
        s = {"t": Fraction(t)}
        s.update(vals)
        states.append(s)
    return TimedTrace.build(states)


def ce_trace(rows):
    """Trace over boolean signals c, e from (t, c, e) triples."""
    return trace_of([(t, {"c": c, "e": e}) for t, c, e in rows])


@pytest.fixture
def make_trace():
    return trace_of


@pytest.fixture
def make_ce_trace():
    return ce_trace
