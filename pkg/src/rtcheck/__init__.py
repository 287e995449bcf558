"""Verification toolkit for timed synchronous transition systems.

Core layers: a small specification language with calendar-based real time,
requirement-pattern compilation to observers and constraints, contract-based
obligation generation, and two checking engines (exhaustive enumeration and
SMT-based bounded/inductive proving). A FastAPI service wraps the core; the
`rtc` command line is a thin client of that service.
"""

__version__ = "0.1.0"
