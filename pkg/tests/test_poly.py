from fractions import Fraction as F

import pytest

from pwmap.numeric import ZeroPolynomial
from pwmap.poly import AffineFunc, UniPoly


def P(*c):
    return UniPoly(list(c), "x")


def test_eval():
    assert P(-1, 0, 1).eval(2) == 3
    assert UniPoly([], "x").eval(F(5, 7)) == 0
    sq = P(F(-9, 10), 1) ** 2 * F(1, 5)
    assert sq.eval(F(9, 10)) == 0


def test_compose_affine():
    y = AffineFunc(F(2), F(1), "y")
    assert P(0, 0, 1).compose_affine(y).coeffs == (1, 4, 4)
    p = P(3, -2, 5)
    assert p.compose_affine(AffineFunc(F(1), F(0), "x")) == p
    assert P(0, -1, 0, 1).compose_affine(AffineFunc(F(-1), F(0), "y")).coeffs == (0, 1, 0, -1)
    assert P(0, 0, 1).compose_affine(AffineFunc(F(0), F(3), "y")).degree == 0


def test_arithmetic():
    assert P(0, 0, 0, 1).derivative().coeffs == (0, 0, 3)
    assert (P(-1, 1) * P(1, 1)).coeffs == (-1, 0, 1)
    p = P(1, 2, 3)
    assert (p + (-p)).is_zero()
    assert (p - p).is_zero()


def test_roots_in():
    assert P(-1, 0, 1).roots_in(-2, 2) == [-1, 1]
    assert P(-1, 0, 1).roots_in(0, 2) == [1]
    q = P(F(-1, 4), 1) * P(F(-1, 2), 1) * P(F(-3, 4), 1)
    assert q.roots_in(0, 1) == [F(1, 4), F(1, 2), F(3, 4)]
    with pytest.raises(ZeroPolynomial):
        UniPoly([], "x").roots_in(0, 1)


def test_json_round_trip():
    p = P(F(1, 2), -3, F(7, 9))
    assert UniPoly.from_json(p.to_json(), "x") == p
    assert p.to_json() == ["1/2^1", "-3/1", "7/9"] or p.to_json()[2] == "7/9"


def test_affine_preimage():
    f = AffineFunc(F(2), F(1), "y")
    assert f.preimage(F(5)) == 2
