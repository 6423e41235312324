"""Exact angular-momentum algebra for half-integer quantum numbers.

Wigner 3-j symbols are evaluated with the Racah single-sum formula in exact
integer/rational arithmetic; only the final square root is taken in floating
point. Every public function accepts plain numbers (``1``, ``0.5``,
``Fraction(3, 2)``, ``"7/2"``) or :class:`HalfInt` values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union


class AngularMomentumError(ValueError):
    """Quantum numbers that do not form a valid (j, m) ladder."""


@dataclass(frozen=True, order=True)
class HalfInt:
    """Integer or half-integer stored as twice its value."""

    twice_value: int

    @classmethod
    def of(cls, x: "Number") -> "HalfInt":
        if isinstance(x, HalfInt):
            return x
        if isinstance(x, str):
            x = Fraction(x)
        doubled = Fraction(x) * 2
        if doubled.denominator != 1:
            raise AngularMomentumError(f"{x!r} is not a multiple of 1/2")
        return cls(int(doubled))

    @property
    def value(self) -> Fraction:
        return Fraction(self.twice_value, 2)

    @property
    def is_integer(self) -> bool:
        return self.twice_value % 2 == 0

    def __float__(self) -> float:
        return self.twice_value / 2

    def __neg__(self) -> "HalfInt":
        return HalfInt(-self.twice_value)

    def __add__(self, other: "Number") -> "HalfInt":
        return HalfInt(self.twice_value + HalfInt.of(other).twice_value)

    __radd__ = __add__

    def __sub__(self, other: "Number") -> "HalfInt":
        return HalfInt(self.twice_value - HalfInt.of(other).twice_value)

    def __str__(self) -> str:
        if self.is_integer:
            return str(self.twice_value // 2)
        return f"{self.twice_value}/2"


Number = Union[int, float, Fraction, str, HalfInt]


def twice(x: Number) -> int:
    """Return ``2*x`` as an exact integer."""
    return HalfInt.of(x).twice_value


def _check_ladder(tj: int, tm: int) -> None:
    if tj < 0:
        raise AngularMomentumError(f"negative angular momentum j={tj}/2")
    if (tj - tm) % 2:
        raise AngularMomentumError(f"m={tm}/2 is not in the ladder of j={tj}/2")
    if abs(tm) > tj:
        raise AngularMomentumError(f"|m|={abs(tm)}/2 exceeds j={tj}/2")


def _fact(n: int) -> int:
    return math.factorial(n)


@lru_cache(maxsize=None)
def _wigner3j_twice(tj1: int, tj2: int, tj3: int, tm1: int, tm2: int, tm3: int) -> float:
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        _check_ladder(tj, tm)
    if tm1 + tm2 + tm3 != 0:
        return 0.0
    if tj3 > tj1 + tj2 or tj3 < abs(tj1 - tj2) or (tj1 + tj2 + tj3) % 2:
        return 0.0

    # All quantities below are integers once the factor 2 is divided out.
    a = (tj1 + tj2 - tj3) // 2
    b = (tj1 - tj2 + tj3) // 2
    c = (-tj1 + tj2 + tj3) // 2
    big = (tj1 + tj2 + tj3) // 2 + 1
    delta = Fraction(_fact(a) * _fact(b) * _fact(c), _fact(big))
    prod_m = (
        _fact((tj1 + tm1) // 2) * _fact((tj1 - tm1) // 2)
        * _fact((tj2 + tm2) // 2) * _fact((tj2 - tm2) // 2)
        * _fact((tj3 + tm3) // 2) * _fact((tj3 - tm3) // 2)
    )

    t1 = (tj3 - tj2 + tm1) // 2
    t2 = (tj3 - tj1 - tm2) // 2
    t3 = a
    t4 = (tj1 - tm1) // 2
    t5 = (tj2 + tm2) // 2
    kmin = max(0, -t1, -t2)
    kmax = min(t3, t4, t5)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (
            _fact(k) * _fact(t1 + k) * _fact(t2 + k)
            * _fact(t3 - k) * _fact(t4 - k) * _fact(t5 - k)
        )
        total += Fraction((-1) ** k, den)
    if total == 0:
        return 0.0

    phase_twice = tj1 - tj2 - tm3
    sign = -1 if (phase_twice // 2) % 2 else 1
    if total < 0:
        sign = -sign
    squared = total * total * delta * prod_m
    return sign * math.sqrt(squared)


def wigner3j(j1: Number, j2: Number, j3: Number, m1: Number, m2: Number, m3: Number) -> float:
    """Wigner 3-j symbol ``(j1 j2 j3; m1 m2 m3)``."""
    return _wigner3j_twice(twice(j1), twice(j2), twice(j3), twice(m1), twice(m2), twice(m3))


def clebsch_gordan(j1: Number, j2: Number, j3: Number, m1: Number, m2: Number, m3: Number) -> float:
    """Clebsch-Gordan coefficient ``<j1 m1 j2 m2 | j3 m3>``."""
    tj1, tj2, tj3 = twice(j1), twice(j2), twice(j3)
    tm1, tm2, tm3 = twice(m1), twice(m2), twice(m3)
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        _check_ladder(tj, tm)
    if tm1 + tm2 != tm3:
        return 0.0
    three_j = _wigner3j_twice(tj1, tj2, tj3, tm1, tm2, -tm3)
    if three_j == 0.0:
        return 0.0
    phase_twice = tj1 - tj2 + tm3
    sign = -1 if (phase_twice // 2) % 2 else 1
    return sign * math.sqrt(tj3 + 1) * three_j


def d_matrix_element(
    Jp: Number, Mp: Number, Kp: Number,
    l: Number, m: Number, k: Number,
    J: Number, M: Number, K: Number,
) -> float:
    """Matrix element of a rank-``l`` Wigner function between normalized rotor states.

    With rotor wavefunctions ``sqrt((2J+1)/8pi^2) D^J_{MK}``,

        <J' M' K'| D^l_{mk} |J M K> = sqrt((2J+1)/(2J'+1)) C(J l J'; M m M') C(J l J'; K k K').

    The same number is the element of ``D^{l*}_{mk}`` between conjugated
    rotor functions, which is the convention used by the Hamiltonian builders.
    """
    if twice(l) % 2:
        raise AngularMomentumError("rank l must be an integer")
    tJp, tMp, tKp = twice(Jp), twice(Mp), twice(Kp)
    tJ, tM, tK = twice(J), twice(M), twice(K)
    tl, tm, tk = twice(l), twice(m), twice(k)
    if tMp != tM + tm or tKp != tK + tk:
        return 0.0
    c1 = clebsch_gordan(J, l, Jp, M, m, Mp)
    if c1 == 0.0:
        return 0.0
    c2 = clebsch_gordan(J, l, Jp, K, k, Kp)
    return math.sqrt((tJ + 1) / (tJp + 1)) * c1 * c2
