"""Exact value domain shared by the evaluator, the enumerator and the solver
layer: booleans, arbitrary-precision integers, exact rationals, and a
distinguished positive infinity for timeout slots.

No floating point is used anywhere; decimal literals in source text are
converted to `fractions.Fraction` exactly.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union


class Infinity:
    """Positive infinity. Singleton, real-typed, meant for timeout slots.

    Compares strictly above every finite rational and equal only to itself.
    Addition and subtraction of a finite value are absorbing; operations
    whose result would be negative infinity raise, since the model has no
    such value.
    """

    _instance: "Infinity | None" = None

    def __new__(cls) -> "Infinity":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "inf"

    # Comparisons against finite rationals arrive here via reflection.
    def __lt__(self, other: object) -> bool:
        return False

    def __le__(self, other: object) -> bool:
        return other is self

    def __gt__(self, other: object) -> bool:
        return other is not self

    def __ge__(self, other: object) -> bool:
        return True

    def __add__(self, other: object) -> "Infinity":
        return self

    __radd__ = __add__

    def __sub__(self, other: object) -> "Infinity":
        if other is self:
            raise ArithmeticError("inf - inf is undefined")
        return self

    def __rsub__(self, other: object) -> "Infinity":
        raise ArithmeticError("negative infinity is not a value of the model")

    def __neg__(self) -> "Infinity":
        raise ArithmeticError("negative infinity is not a value of the model")


INF = Infinity()

Value = Union[bool, int, Fraction, Infinity]


def is_numeric(v: Value) -> bool:
    return not isinstance(v, bool) and isinstance(v, (int, Fraction)) or v is INF


def rat_to_str(v: Value) -> str:
    """Bit-exact wire form: "num/den" for rationals, "inf" for infinity."""
    if v is INF:
        return "inf"
    if isinstance(v, bool) or not isinstance(v, (int, Fraction)):
        raise TypeError(f"not a rational value: {v!r}")
    f = Fraction(v)
    return f"{f.numerator}/{f.denominator}"


def rat_from_str(s: str) -> Value:
    if s == "inf":
        return INF
    num, _, den = s.partition("/")
    if not den:
        den = "1"
    return Fraction(int(num), int(den))


def value_to_json(v: Value) -> object:
    """JSON form used by the trace format: bool and int stay native, reals
    become exact "num/den" strings, infinity becomes "inf"."""
    if isinstance(v, bool):
        return v
    if isinstance(v, int):
        return v
    return rat_to_str(v)


def value_from_json(obj: object, real: bool) -> Value:
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, int):
        return Fraction(obj) if real else obj
    if isinstance(obj, str):
        return rat_from_str(obj)
    raise TypeError(f"cannot decode trace value {obj!r}")
