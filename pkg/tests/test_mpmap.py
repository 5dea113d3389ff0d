from fractions import Fraction as F

import numpy as np
import pytest

from instances import lit, star3, two_var
from oracles import grid_map
from pwmap.bench import GenConfig, gen_problem
from pwmap.logic import CnfFormula, NotAForest, Variable
from pwmap.mpmap import (
    Timeout,
    Unsatisfiable,
    compute_msgs,
    gather_msgs,
    solve,
    validate_and_admit,
)
from pwmap.numeric import ScalarBackend
from pwmap.piecewise import EXP
from pwmap.poly import UniPoly
from pwmap.problem import EdgeFactor, EdgePiece, NodePiece, Problem

STAR3_VALUE = F(390963, 250000)


def test_two_var_corner():
    r = solve(two_var([lit({"x2": 1, "x1": -1}, ">=", 0)], [1, -1], [1, 1]))
    assert r.value == 4
    assert r.assignment == {"x1": -1, "x2": 1}
    assert r.attained


def test_two_var_active_boundary():
    r = solve(two_var([lit({"x2": 1, "x1": 1}, "<=", 0)], [1, 1], [1, 1]))
    assert r.value == 1
    assert r.assignment == {"x1": 0, "x2": 0}


def test_star3_every_root():
    p = star3()
    for root in p.names:
        r = solve(p, root=root)
        assert r.value == STAR3_VALUE
        assert r.attained and p.satisfies(r.assignment)
        assert p.density(r.assignment) == r.value
    assert solve(p).assignment == {"x1": -1, "x2": 1, "x3": 0}


def test_star3_against_grid():
    v, x = grid_map(star3())
    r = solve(star3())
    assert abs(float(r.value) - v) <= 1e-4 * max(1.0, v)
    assert np.allclose(x, [float(r.assignment[n]) for n in ("x1", "x2", "x3")], atol=1e-3)


def test_admission_order():
    fg = validate_and_admit(star3())
    assert fg.roots == ["x1"]
    assert fg.order[-1] == "x1" and set(fg.order[:2]) == {"x2", "x3"}
    assert fg.parent == {"x2": "x1", "x3": "x1"}


def test_admission_trivial_and_cycle():
    fg = validate_and_admit(Problem(CnfFormula([Variable("x", 0, 1)])))
    assert fg.roots == ["x"] and fg.order == ["x"]
    vs = [Variable(n, -1, 1) for n in ("x1", "x2", "x3")]
    clauses = [[lit({a: 1, b: -1}, "<=", 0)] for a, b in (("x1", "x2"), ("x2", "x3"), ("x1", "x3"))]
    with pytest.raises(NotAForest):
        validate_and_admit(Problem(CnfFormula(vs, clauses)))


def test_gather_leaf_is_node_factor():
    fg = validate_and_admit(star3())
    g = gather_msgs(fg, "x2", {})
    [p] = g.pieces
    assert (p.lo, p.lo_closed, p.hi, p.hi_closed) == (-1, True, 1, True)
    assert p.body.coeffs == (1, 1)
    lone = validate_and_admit(Problem(CnfFormula([Variable("x", 0, 3)])))
    [q] = gather_msgs(lone, "x", {}).pieces
    assert (q.lo, q.hi, q.body.coeffs) == (0, 3, (1,))


def test_unconstrained_elimination_is_constant():
    vs = [Variable("x1", -1, 1), Variable("x2", 0, 2)]
    p = Problem(CnfFormula(vs), "Poly", {"x2": [NodePiece((), UniPoly([1, 0, -1], "x2"))]},
                [EdgeFactor("x1", "x2", [EdgePiece((), UniPoly([1], "x1"), UniPoly([1], "x2"))])])
    fg = validate_and_admit(p, root="x1")
    msg = compute_msgs(fg, "x2", gather_msgs(fg, "x2", {}))
    [piece] = msg.value.pieces
    assert (piece.lo, piece.hi, piece.body.coeffs) == (-1, 1, (1,))


def test_message_value_matches_grid_over_child():
    p = star3()
    fg = validate_and_admit(p)
    msg = compute_msgs(fg, "x2", gather_msgs(fg, "x2", {}))
    xs2 = np.linspace(-1, 1, 100_001)
    for x1 in (F(-1), F(-1, 2), F(0), F(1, 3), F(1)):
        X = np.column_stack([np.full_like(xs2, float(x1)), xs2, np.zeros_like(xs2)])
        ok = p.formula.clauses_over(["x1", "x2"])
        mask = np.all([np.any([l.holds_np(X, p.index) for l in c], axis=0) for c in ok], axis=0)
        ef = p.edge_factors[0]
        cand = xs2[mask]
        cand = cand[np.unique(np.r_[np.arange(0, len(cand), 50), len(cand) - 1])] if len(cand) else cand
        vals = np.array([float((p._edge_value(ef, {"x1": x1, "x2": F(float(x))}) or 0) * (1 + F(float(x))))
                         for x in cand])
        v = msg.value(x1)
        if not mask.any():
            assert v is None
            continue
        assert float(v) >= vals.max() - 1e-12
        assert float(v) <= vals.max() + 1e-3


def test_infeasible_edge_is_unsat():
    p = two_var([lit({"x1": 1, "x2": 1}, ">=", 3)], [1], [1])
    fg = validate_and_admit(p)
    child = fg.order[0]
    assert compute_msgs(fg, child, gather_msgs(fg, child, {})).value.is_empty()
    with pytest.raises(Unsatisfiable):
        solve(p)


def test_float_backend_close_to_exact():
    p = gen_problem(GenConfig("snow", 4, degree=4, seed=3))
    exact = solve(p)
    approx = solve(p, backend=ScalarBackend("float"))
    assert abs(float(exact.value) - float(approx.value)) <= 1e-9 * max(1.0, float(exact.value))


def test_emit_messages_and_stats():
    seen = []
    r = solve(star3(), emit_messages=seen.append)
    assert sorted((m.source, m.target) for m in seen) == [("x2", "x1"), ("x3", "x1")]
    assert len(r.stats["messages"]) == 2 and r.stats["diameter"] == 2
    d = r.to_json()
    assert d["value"] == "390963/250000" and d["attained"] is True


def test_deadline():
    p = gen_problem(GenConfig("path", 6, degree=6, seed=0))
    with pytest.raises(Timeout):
        solve(p, deadline=0.0)


def test_forest_multiplies_trees():
    vs = [Variable(n, 0, 1) for n in ("a", "b", "c")]
    p = Problem(CnfFormula(vs, [[lit({"a": 1, "b": 1}, "<=", 1)]]), "Poly",
                {"c": [NodePiece((), UniPoly([2, 1], "c"))]},
                [EdgeFactor("a", "b", [EdgePiece((), UniPoly([0, 1], "a"), UniPoly([0, 1], "b"))])])
    r = solve(p)
    assert r.value == F(3, 4)
    assert r.assignment == {"a": F(1, 2), "b": F(1, 2), "c": 1}


def test_exp_kind():
    vs = [Variable("x1", -1, 1), Variable("x2", -1, 1)]
    p = Problem(CnfFormula(vs, [[lit({"x1": 1, "x2": 1}, ">=", 1)]]), EXP, {},
                [EdgeFactor("x1", "x2", [EdgePiece((), UniPoly([0, 0, -1], "x1"),
                                                   UniPoly([0, 0, -1], "x2"))])])
    r = solve(p)
    assert r.log_value == F(-1, 2)
    assert r.assignment == {"x1": F(1, 2), "x2": F(1, 2)}
    assert abs(r.value - np.exp(-0.5)) <= 1e-12


@pytest.mark.parametrize("shape", ["star", "snow", "path"])
def test_random_against_grid(shape):
    for n in (2, 3, 4):
        p = gen_problem(GenConfig(shape, n, degree=2, seed=n))
        r = solve(p)
        v, _ = grid_map(p)
        assert float(r.value) >= v - 1e-4 * max(1.0, v)
        assert r.attained and p.satisfies(r.assignment)
        assert abs(float(p.density(r.assignment)) - float(r.value)) <= 1e-9 * max(1.0, float(r.value))
