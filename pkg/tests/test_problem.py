import random
from fractions import Fraction as F

import numpy as np
import pytest

from instances import lit, notched_square_problem, star3
from pwmap.logic import CnfFormula, Variable
from pwmap.mpmap import validate_and_admit
from pwmap.piecewise import EXP
from pwmap.poly import UniPoly
from pwmap.problem import EdgeFactor, EdgePiece, NodePiece, NonSeparableFactor, Problem, split_bivariate


def box2(lo=-1, hi=1):
    return CnfFormula([Variable("x1", lo, hi), Variable("x2", lo, hi)])


def single_piece(problem):
    [(_, piece)] = problem.density_pieces()
    return piece


def test_upper_bound_examples():
    sq = Problem(box2(), "Poly", {}, [EdgeFactor("x1", "x2", [
        EdgePiece((), UniPoly([0, 0, 1], "x1"), UniPoly([0, 0, 1], "x2"))])])
    box = {"x1": (F(-1), F(1)), "x2": (F(-1), F(1))}
    assert single_piece(sq).upper_bound(box) == 1
    const = Problem(box2(), "Poly", {"x1": [NodePiece((), UniPoly([F(7, 3)], "x1"))]})
    assert single_piece(const).upper_bound(box) == F(7, 3)
    f = CnfFormula([Variable("x1", -1, 1), Variable("x3", -1, 1)])
    lin = Problem(f, "Poly", {}, [EdgeFactor("x1", "x3", [
        EdgePiece((), UniPoly([1, -1], "x1"), UniPoly([3, -1], "x3"))])])
    assert single_piece(lin).upper_bound({"x1": (F(-1), F(1)), "x3": (F(-1), F(1))}) == 8


def test_exp_upper_bound():
    p = Problem(box2(), EXP, {"x1": [NodePiece((), UniPoly([0, 0, -1], "x1"))],
                              "x2": [NodePiece((), UniPoly([0, 1], "x2"))]})
    ub = single_piece(p).upper_bound({"x1": (F(-1), F(1)), "x2": (F(-1), F(1))})
    assert ub >= np.e and ub <= np.e * (1 + 1e-9)


def test_upper_bound_is_sound_on_random_pieces():
    rng = np.random.default_rng(0)
    r = random.Random(0)
    for _ in range(30):
        left = UniPoly([F(r.randint(-5, 5), 2) for _ in range(r.randint(1, 4))], "x1")
        right = UniPoly([F(r.randint(-5, 5), 2) for _ in range(r.randint(1, 4))], "x2")
        terms = {(r.randint(0, 2), r.randint(0, 2)): F(r.randint(-3, 3)) for _ in range(3)}
        for piece in (EdgePiece((), left, right), EdgePiece((), terms=terms)):
            p = Problem(box2(), "Poly", {}, [EdgeFactor("x1", "x2", [piece])])
            dp = single_piece(p)
            lo = sorted(F(r.randint(-4, 4), 4) for _ in range(2))
            box = {"x1": (lo[0], lo[1]), "x2": (lo[0], lo[1])}
            ub = float(dp.upper_bound(box))
            X = rng.uniform(float(lo[0]), float(lo[1]), size=(2000, 2))
            assert np.all(np.abs(dp.value_np(X)) <= ub + 1e-9)


def test_density_exact_and_vectorized():
    p = star3()
    pt = {"x1": F(-1), "x2": F(1), "x3": F(0)}
    assert p.satisfies(pt)
    assert p.density(pt) == F(390963, 250000)
    rng = np.random.default_rng(1)
    X = rng.uniform(-1, 1, size=(200, 3))
    vals = p.density_np(X)
    for row, v in zip(X, vals):
        exact = p.density({n: F(float(x)) for n, x in zip(p.names, row)})
        assert abs(float(exact) - v) <= 1e-12 * (1 + abs(v))


def test_gradient_matches_finite_differences():
    p = notched_square_problem()
    X = np.array([[0.3, 0.4], [1.7, 1.9], [0.5, 1.5]])
    v, g = p.density_and_grad_np(X)
    h = 1e-6
    for k in range(2):
        E = np.zeros_like(X)
        E[:, k] = h
        fd = (p.density_np(X + E) - p.density_np(X - E)) / (2 * h)
        assert np.allclose(g[:, k], fd, atol=1e-5)


def test_uncovered_points_have_zero_density():
    guard = (lit({"x1": 1}, "<=", 0),)
    p = Problem(box2(), "Poly", {}, [EdgeFactor("x1", "x2", [
        EdgePiece(guard, UniPoly([2], "x1"), UniPoly([1], "x2"))])])
    assert p.density({"x1": F(-1, 2), "x2": 0}) == 2
    assert p.density({"x1": F(1, 2), "x2": 0}) == 0


def test_json_round_trip():
    for p in (star3(), notched_square_problem()):
        q = Problem.from_json(p.to_json())
        assert q.dumps() == p.dumps()


def test_split_bivariate():
    # (1 + x1)(2 - x2) expanded is rank one
    terms = {(0, 0): F(2), (1, 0): F(2), (0, 1): F(-1), (1, 1): F(-1)}
    left, right = split_bivariate(terms, "Poly")
    left, right = UniPoly(left, "x1"), UniPoly(right, "x2")
    for a, b in [(F(1, 3), F(-2)), (F(0), F(5))]:
        assert left.eval(a) * right.eval(b) == (1 + a) * (2 - b)
    with pytest.raises(NonSeparableFactor):
        split_bivariate({(1, 0): 1, (0, 1): 1, (1, 1): 5}, "Poly")


def test_cubic_cross_term_rejected_at_admission():
    # (x1 + x2)^3 mixes monomials of every degree split: not a product of univariate parts
    terms = {(3, 0): F(1), (2, 1): F(3), (1, 2): F(3), (0, 3): F(1)}
    p = Problem(box2(), "Poly", {}, [EdgeFactor("x1", "x2", [EdgePiece((), terms=terms)])])
    with pytest.raises(NonSeparableFactor):
        validate_and_admit(p)
