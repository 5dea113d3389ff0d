"""Hand-built problem instances shared by the tests."""
from __future__ import annotations

from fractions import Fraction as F

from pwmap.logic import CnfFormula, Literal, LinearAtom, Variable
from pwmap.poly import UniPoly
from pwmap.problem import EdgeFactor, EdgePiece, NodePiece, Problem


def lit(coeffs, op, const=0, negated=False):
    return Literal(LinearAtom.make(coeffs, op, const), negated)


def abs_diff_between(a, b, lo, hi):
    """Clauses for lo <= |a - b| <= hi."""
    d = {a: 1, b: -1}
    return [[lit(d, ">=", lo), lit(d, "<=", -lo)], [lit(d, "<=", hi)], [lit(d, ">=", -hi)]]


def star3() -> Problem:
    """Three variables on [-1, 1], x1 at the center, two ring constraints."""
    vs = [Variable(f"x{k}", -1, 1) for k in (1, 2, 3)]
    clauses = abs_diff_between("x1", "x2", 1, 2) + abs_diff_between("x1", "x3", 1, 2)
    formula = CnfFormula(vs, clauses)
    nodes = {
        "x1": [NodePiece((), UniPoly([F(1, 20)], "x1"))],
        "x2": [NodePiece((), UniPoly([1, 1], "x2"))],
        "x3": [NodePiece((), UniPoly([1, -1], "x3"))],
    }
    below = (lit({"x1": 1, "x2": -1}, "<", 0),)
    above = (lit({"x1": 1, "x2": -1}, ">=", 0), lit({"x1": 1}, "<=", F(1, 2)))
    sq1 = UniPoly([F(-9, 10), 1], "x1") ** 2 * F(1, 5)
    sq2 = UniPoly([F(9, 10), 1], "x2") ** 2
    edges = [
        EdgeFactor("x1", "x2", [EdgePiece(below, sq1, sq2),
                                EdgePiece(above, UniPoly([1, 1], "x1"), UniPoly([1], "x2"))]),
        EdgeFactor("x1", "x3", [EdgePiece((), UniPoly([1, -1], "x1"), UniPoly([3, -1], "x3"))]),
    ]
    return Problem(formula, "Poly", nodes, edges)


def two_var(clause, left, right) -> Problem:
    vs = [Variable("x1", -1, 1), Variable("x2", -1, 1)]
    formula = CnfFormula(vs, [clause])
    edge = EdgeFactor("x1", "x2", [EdgePiece((), UniPoly(left, "x1"), UniPoly(right, "x2"))])
    return Problem(formula, "Poly", {}, [edge])


def notched_square_formula() -> CnfFormula:
    """Square [0, 2]^2 minus an open inner triangle."""
    vs = [Variable("x1", 0, 2), Variable("x2", 0, 2)]
    clause = [lit({"x2": 1}, "<=", 1), lit({"x2": 1, "x1": -2}, ">", 0),
              lit({"x2": 1, "x1": 2}, ">", F(19, 4))]
    return CnfFormula(vs, [clause])


def notched_square_problem(peak=(F(11, 10), F(3, 2))) -> Problem:
    """A concave bump peaking inside the excluded triangle.

    4 - (x1 - a)^2 - (x2 - b)^2 is a sum, not a product, of univariate
    parts, so it is given as a general bivariate body.
    """
    a, b = peak
    terms = {(0, 0): 4 - a * a - b * b, (1, 0): 2 * a, (2, 0): F(-1), (0, 1): 2 * b, (0, 2): F(-1)}
    edge = EdgeFactor("x1", "x2", [EdgePiece((), terms=terms)])
    return Problem(notched_square_formula(), "Poly", {}, [edge])
