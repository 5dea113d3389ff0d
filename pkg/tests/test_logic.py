import itertools
import random
from fractions import Fraction as F

import numpy as np
import pytest

from instances import abs_diff_between, lit, star3
from pwmap.logic import (
    CnfFormula,
    LinearAtom,
    NotAForest,
    Polytope,
    Variable,
    bounding_box,
    build_primal_graph,
    critical_points,
    feasible,
    find_symbolic_bounds_in,
    smtlib_to_formula,
)
from pwmap.poly import AffineFunc


def conj_classifier(literals):
    def classify(truth):
        ok = all(truth[l.atom] != l.negated for l in literals)
        return "in" if ok else None
    return classify


def cnf_classifier(clauses):
    def classify(truth):
        ok = all(any(truth[l.atom] != l.negated for l in c) for c in clauses)
        return "in" if ok else None
    return classify


def test_primal_graph_star():
    p = star3()
    g = build_primal_graph(p.formula)
    assert sorted(g.edges()) == [("x1", "x2"), ("x1", "x3")]
    assert g.diameter == 2
    assert g.center() == "x1"


def test_primal_graph_trivial_and_chain():
    g = build_primal_graph(CnfFormula([Variable("x", 0, 1)]))
    assert g.edges() == [] and g.diameter == 0
    vs = [Variable(n, -1, 1) for n in ("x1", "x2", "x3")]
    chain = CnfFormula(vs, [[lit({"x1": 1, "x2": -1}, "<=", 0)], [lit({"x2": 1, "x3": 1}, ">=", 0)]])
    g = build_primal_graph(chain)
    assert g.diameter == 2 and len(g.edges()) == 2


def test_primal_graph_cycle():
    vs = [Variable(n, -1, 1) for n in ("x1", "x2", "x3")]
    clauses = [[lit({a: 1, b: -1}, "<=", 0)] for a, b in (("x1", "x2"), ("x2", "x3"), ("x1", "x3"))]
    with pytest.raises(NotAForest):
        build_primal_graph(CnfFormula(vs, clauses))


def brute_critical(atoms, box_i, box_j):
    # every pairwise line intersection, projected on x_j, by direct 2x2 solves
    lines = [(F(1), F(0), box_i[0]), (F(1), F(0), box_i[1])]  # a_i x_i + a_j x_j = c
    pts = {F(box_j[0]), F(box_j[1])}
    for a in atoms:
        lines.append((a.coeff("xi"), a.coeff("xj"), a.constant))
    for (a1, b1, c1), (a2, b2, c2) in itertools.combinations(lines, 2):
        det = a1 * b2 - a2 * b1
        if det != 0:
            pts.add((a1 * c2 - a2 * c1) / det)
    for a, b, c in lines:
        if a == 0 and b != 0:
            pts.add(c / b)
    return sorted(p for p in pts if box_j[0] <= p <= box_j[1])


def test_critical_points_examples():
    atoms = [LinearAtom.make({"xi": 1, "xj": -1}, "<=", 0), LinearAtom.make({"xi": 1, "xj": 1}, ">=", 0)]
    box = (F(-1), F(1))
    assert critical_points(atoms, "xi", "xj", box, box) == [-1, 0, 1]
    assert critical_points(atoms, "xi", "xj", box, box) == brute_critical(atoms, box, box)
    unit = (F(0), F(1))
    half = [LinearAtom.make({"xj": 1}, "<=", F(1, 2))]
    assert critical_points(half, "xi", "xj", unit, unit) == [0, F(1, 2), 1]
    assert critical_points([], "xi", "xj", unit, unit) == [0, 1]


def test_symbolic_bounds_wedge():
    lits = [lit({"xi": 1, "xj": -1}, "<=", 0), lit({"xi": 1, "xj": 1}, ">=", 0)]
    atoms = [l.atom for l in lits]
    [cell] = find_symbolic_bounds_in(F(0), F(1), atoms, conj_classifier(lits), "xi", "xj", (F(-1), F(1)))
    assert cell.lower == AffineFunc(F(-1), F(0), "xj")
    assert cell.upper == AffineFunc(F(1), F(0), "xj")
    assert cell.lower_closed and cell.upper_closed


def test_symbolic_bounds_unsat():
    lits = [lit({"xi": 1}, "<=", -2)]
    assert find_symbolic_bounds_in(F(0), F(1), [lits[0].atom], conj_classifier(lits),
                                   "xi", "xj", (F(-1), F(1))) == []


def test_symbolic_bounds_two_bands():
    clauses = abs_diff_between("xj", "xi", 1, 2)
    atoms = list({l.atom: None for c in clauses for l in c})
    cells = find_symbolic_bounds_in(F(0), F(1), atoms, cnf_classifier(clauses), "xi", "xj", (F(-3), F(3)))
    assert len(cells) == 2
    lo_band, hi_band = cells
    y = F(1, 2)
    assert (lo_band.lower(y), lo_band.upper(y)) == (y - 2, y - 1)
    assert (hi_band.lower(y), hi_band.upper(y)) == (y + 1, y + 2)
    # the cells partition the satisfying x_i set at random y in the interval
    rng = random.Random(0)
    xs = [F(-3) + F(6 * k, 10_000) for k in range(10_001)]
    for _ in range(10):
        y = F(rng.randint(1, 999), 1000)
        sat = [1 <= abs(y - x) <= 2 for x in xs]
        covered = [any(c.lower(y) <= x <= c.upper(y) for c in cells) for x in xs]
        assert sat == covered


def test_feasible_examples():
    x = Variable("x", -5, 5)
    assert feasible(Polytope([lit({"x": 1}, "<=", 0), lit({"x": 1}, ">=", 1)], [x]))[0] is False
    vs = [Variable("x", -5, 5), Variable("y", -5, 5)]
    box = [lit({"x": 1}, ">=", 0), lit({"x": 1}, "<=", 1), lit({"y": 1}, ">=", 0), lit({"y": 1}, "<=", 1)]
    ok, w = feasible(Polytope(box, vs))
    assert ok and 0 <= w["x"] <= 1 and 0 <= w["y"] <= 1


def notch_upper(box_hi_x2):
    vs = [Variable("x1", 0, 2), Variable("x2", 0, box_hi_x2)]
    lits = [lit({"x2": 1}, "<=", 1, negated=True), lit({"x2": 1, "x1": -2}, ">", 0),
            lit({"x2": 1, "x1": 2}, ">", F(19, 4))]
    return Polytope(lits, vs)


def test_notch_upper_triangle():
    P = notch_upper(3)
    ok, w = feasible(P)
    assert ok and P.contains(w)
    assert P.contains({"x1": F(6, 5), "x2": F(5, 2)})
    # hand-solved vertices: x2 = 2 x1 and x2 = 19/4 - 2 x1 meet at (19/16, 19/8);
    # the top edge x2 = 3 cuts them at x1 = 3/2 and x1 = 7/8
    assert bounding_box(P) == {"x1": (F(7, 8), F(3, 2)), "x2": (F(19, 8), F(3))}
    assert feasible(notch_upper(2))[0] is False


def test_bounding_box_examples():
    vs = [Variable("x", -5, 5), Variable("y", -5, 5)]
    unit = [lit({"x": 1}, ">=", 0), lit({"x": 1}, "<=", 1), lit({"y": 1}, ">=", 0), lit({"y": 1}, "<=", 1)]
    assert bounding_box(Polytope(unit, vs)) == {"x": (0, 1), "y": (0, 1)}
    tri = [lit({"x": 1, "y": 1}, "<=", 1), lit({"x": 1}, ">=", 0), lit({"y": 1}, ">=", 0)]
    assert bounding_box(Polytope(tri, vs)) == {"x": (0, 1), "y": (0, 1)}


def test_feasible_matches_grid_sampling():
    rng = random.Random(5)
    grid = np.stack(np.meshgrid(*[np.linspace(-1, 1, 21)] * 3, indexing="ij"), -1).reshape(-1, 3)
    names = ["a", "b", "c"]
    vs = [Variable(n, -1, 1) for n in names]
    for _ in range(150):
        lits = []
        for _ in range(rng.randint(1, 5)):
            k = rng.randint(1, 3)
            coeffs = {n: F(rng.randint(-3, 3)) for n in rng.sample(names, k)}
            if all(v == 0 for v in coeffs.values()):
                continue
            lits.append(lit(coeffs, rng.choice(["<=", "<", ">=", ">"]), F(rng.randint(-4, 4), 2)))
        P = Polytope(lits, vs)
        ok, w = feasible(P)
        if ok:
            assert P.contains(w)
        if P.contains_np(grid).any() and any(P.contains(dict(zip(names, map(F, g))))
                                            for g in grid[P.contains_np(grid)][:5]):
            assert ok


def test_formula_json_round_trip():
    f = star3().formula
    g = CnfFormula.from_json(f.to_json())
    assert g.to_json() == f.to_json()


def test_equality_atoms_are_split():
    f = CnfFormula([Variable("x", -1, 1), Variable("y", -1, 1)], [[lit({"x": 1, "y": -1}, "=", 0)]])
    assert len(f.clauses) == 2
    assert f.holds({"x": F(1, 3), "y": F(1, 3)})
    assert not f.holds({"x": F(1, 3), "y": 0})


def test_smtlib_conversion():
    text = """
    (declare-fun x () Real)
    (declare-fun y () Real)
    (assert (and (<= 0 x) (<= x 2) (<= 0 y) (<= y 2)))
    (assert (or (<= y 1) (> (- y (* 2 x)) 0) (> (+ y (* 2 x)) 4.75)))
    (assert (not (< x (/ 1 4))))
    """
    f = smtlib_to_formula(text)
    assert f.box("x") == (0, 2) and f.box("y") == (0, 2)
    assert len(f.clauses) == 2
    assert f.holds({"x": F(1, 2), "y": F(1, 2)})
    assert not f.holds({"x": F(1, 5), "y": F(1, 2)})
    assert not f.holds({"x": F(1), "y": F(3, 2)})
    with pytest.raises(ValueError):
        smtlib_to_formula("(declare-fun z () Real)(assert (<= z 1))")


def test_vectorized_literals_agree_with_exact():
    rng = random.Random(9)
    X = np.array([[rng.randint(-8, 8) / 4, rng.randint(-8, 8) / 4] for _ in range(200)])
    index = {"x": 0, "y": 1}
    for op in ("<=", "<", ">=", ">", "="):
        for negated in (False, True):
            l = lit({"x": 1, "y": -2}, op, F(1, 2), negated=negated)
            want = [l.holds({"x": F(a), "y": F(b)}) for a, b in X]
            assert list(l.holds_np(X, index)) == want
