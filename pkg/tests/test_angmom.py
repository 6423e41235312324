import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sympy import Rational
from sympy.physics.wigner import wigner_3j as sympy_3j

from sigmadimer.angmom import AngularMomentumError, HalfInt, clebsch_gordan, d_matrix_element, twice, wigner3j


def ladder(tj):
    return range(-tj, tj + 1, 2)


def small_d(tj, tm, tk, beta):
    """Wigner d^j_{mk}(beta) from the explicit factorial sum (j, m, k doubled)."""
    j, m, k = tj / 2, tm / 2, tk / 2
    pre = math.sqrt(math.factorial(int(j + m)) * math.factorial(int(j - m))
                    * math.factorial(int(j + k)) * math.factorial(int(j - k)))
    c, s = math.cos(beta / 2), math.sin(beta / 2)
    total = 0.0
    for n in range(0, int(2 * j) + 1):
        a, b, cc, dd = int(j + k - n), n, int(m - k + n), int(j - m - n)
        if min(a, cc, dd) < 0:
            continue
        total += ((-1) ** (m - k + n) * c ** (2 * j + k - m - 2 * n) * s ** (m - k + 2 * n)
                  / (math.factorial(a) * math.factorial(b) * math.factorial(cc) * math.factorial(dd)))
    return pre * total


def test_halfint_parsing():
    assert HalfInt.of("7/2") == HalfInt.of(3.5) == HalfInt.of(Fraction(7, 2))
    assert twice("5/2") == 5
    with pytest.raises(AngularMomentumError):
        HalfInt.of(0.3)


def test_wigner3j_against_sympy():
    for tj1, tj2 in itertools.product(range(0, 6), range(0, 4)):
        for tj3 in range(abs(tj1 - tj2), tj1 + tj2 + 1, 2):
            for tm1, tm2 in itertools.product(ladder(tj1), ladder(tj2)):
                tm3 = -tm1 - tm2
                if abs(tm3) > tj3:
                    continue
                ref = float(sympy_3j(*(Rational(x, 2) for x in (tj1, tj2, tj3, tm1, tm2, tm3))))
                got = wigner3j(*(Fraction(x, 2) for x in (tj1, tj2, tj3, tm1, tm2, tm3)))
                assert got == pytest.approx(ref, abs=1e-14)


def test_selection_rules_give_zero():
    assert wigner3j(1, 1, 3, 0, 0, 0) == 0.0  # triangle
    assert wigner3j(1, 1, 1, 0, 0, 0) == 0.0  # odd sum with zero projections
    assert wigner3j(1, 1, 1, 1, 1, -1) == 0.0  # projections do not sum to zero


@pytest.mark.parametrize("tj1,tj2", [(1, 2), (3, 2), (7, 2), (5, 7)])
def test_orthogonality(tj1, tj2):
    for tj3, tj3p in itertools.product(range(abs(tj1 - tj2), tj1 + tj2 + 1, 2), repeat=2):
        for tm3 in ladder(min(tj3, tj3p)):
            s = sum(
                wigner3j(*(Fraction(x, 2) for x in (tj1, tj2, tj3, tm1, tm2, tm3)))
                * wigner3j(*(Fraction(x, 2) for x in (tj1, tj2, tj3p, tm1, tm2, tm3)))
                for tm1 in ladder(tj1) for tm2 in ladder(tj2)
            )
            expected = (1 / (tj3 + 1)) if tj3 == tj3p else 0.0
            assert s == pytest.approx(expected, abs=1e-12)


@st.composite
def symbols(draw):
    tj1 = draw(st.integers(0, 9))
    tj2 = draw(st.integers(0, 9))
    tj3 = draw(st.sampled_from(range(abs(tj1 - tj2), tj1 + tj2 + 1, 2)))
    tm1 = draw(st.sampled_from(list(ladder(tj1))))
    tm2 = draw(st.sampled_from(list(ladder(tj2))))
    return tj1, tj2, tj3, tm1, tm2, -tm1 - tm2


@settings(max_examples=300, deadline=None)
@given(symbols())
def test_3j_symmetries(s):
    tj1, tj2, tj3, tm1, tm2, tm3 = s
    if abs(tm3) > tj3:
        return
    f = lambda *x: wigner3j(*(Fraction(v, 2) for v in x))
    w = f(tj1, tj2, tj3, tm1, tm2, tm3)
    sign = (-1) ** ((tj1 + tj2 + tj3) // 2)
    assert f(tj2, tj3, tj1, tm2, tm3, tm1) == pytest.approx(w, abs=1e-12)  # cyclic
    assert f(tj2, tj1, tj3, tm2, tm1, tm3) == pytest.approx(sign * w, abs=1e-12)  # odd permutation
    assert f(tj1, tj2, tj3, -tm1, -tm2, -tm3) == pytest.approx(sign * w, abs=1e-12)  # time reversal


def test_clebsch_gordan_relation_and_values():
    assert clebsch_gordan(0.5, 0.5, 1, 0.5, -0.5, 0) == pytest.approx(math.sqrt(0.5))
    assert clebsch_gordan(0.5, 0.5, 0, 0.5, -0.5, 0) == pytest.approx(math.sqrt(0.5))
    assert clebsch_gordan(1, 1, 2, 1, 1, 2) == pytest.approx(1.0)
    for tj1, tj2 in [(1, 2), (3, 2), (5, 2)]:
        for tj3 in range(abs(tj1 - tj2), tj1 + tj2 + 1, 2):
            for tm1, tm2 in itertools.product(ladder(tj1), ladder(tj2)):
                tm3 = tm1 + tm2
                if abs(tm3) > tj3:
                    continue
                args = [Fraction(x, 2) for x in (tj1, tj2, tj3, tm1, tm2, tm3)]
                w = wigner3j(args[0], args[1], args[2], args[3], args[4], -args[5])
                ref = (-1) ** ((tj1 - tj2 + tm3) // 2) * math.sqrt(tj3 + 1) * w
                assert clebsch_gordan(*args) == pytest.approx(ref, abs=1e-14)


def rotor_element_quadrature(tJp, tMp, tKp, l, m, k, tJ, tM, tK, n=48):
    """<J'M'K'| D^l_{mk} |J M K> with normalized rotor functions, by beta quadrature.

    The alpha and gamma integrals enforce M' = M + m and K' = K + k and
    contribute 4 pi^2; the remaining beta integral is done by Gauss-Legendre.
    """
    if tMp != tM + 2 * m or tKp != tK + 2 * k:
        return 0.0
    x, w = np.polynomial.legendre.leggauss(n)
    beta = 0.5 * math.pi * (x + 1)
    vals = [small_d(tJp, tMp, tKp, b) * small_d(2 * l, 2 * m, 2 * k, b) * small_d(tJ, tM, tK, b) * math.sin(b)
            for b in beta]
    integral = 0.5 * math.pi * float(np.dot(w, vals))
    return math.sqrt((tJp + 1) * (tJ + 1)) / 2 * integral


def test_d_matrix_element_against_quadrature():
    rng = np.random.default_rng(3)
    checked = 0
    for tJ, tJp in itertools.product(range(1, 9, 2), repeat=2):
        for l in (1, 2):
            for _ in range(6):
                tM = int(rng.choice(list(ladder(tJ))))
                tK = int(rng.choice([-1, 1]))
                m, k = int(rng.integers(-l, l + 1)), int(rng.integers(-l, l + 1))
                tMp, tKp = tM + 2 * m, tK + 2 * k
                if abs(tMp) > tJp or abs(tKp) > tJp:
                    continue
                got = d_matrix_element(Fraction(tJp, 2), Fraction(tMp, 2), Fraction(tKp, 2), l, m, k,
                                       Fraction(tJ, 2), Fraction(tM, 2), Fraction(tK, 2))
                ref = rotor_element_quadrature(tJp, tMp, tKp, l, m, k, tJ, tM, tK)
                assert got == pytest.approx(ref, abs=1e-12)
                checked += 1
    assert checked > 50


def test_d_matrix_element_rejects_half_integer_rank():
    with pytest.raises(AngularMomentumError):
        d_matrix_element(0.5, 0.5, 0.5, 0.5, 0, 0, 0.5, 0.5, 0.5)
