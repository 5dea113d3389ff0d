from fractions import Fraction as F

import numpy as np

import maxout_check
from pwmap.maxout import dominating_poly, inner_max, max_out, max_out_pp, prepare_breaks
from pwmap.numeric import INF
from pwmap.piecewise import EXP, POLY, Affine, Constant, Piece, PieceFunc, PiecewiseFunc
from pwmap.poly import AffineFunc, UniPoly


def A(slope, icpt):
    return AffineFunc(F(slope), F(icpt), "y")


def fn(lo, lc, hi, hc, coeffs, kind=POLY):
    return PiecewiseFunc([Piece(lo, lc, hi, hc, PieceFunc(kind, UniPoly(coeffs, "x")))], "x")


def shape(f):
    return [(p.lo, p.lo_closed, p.hi, p.hi_closed, p.body.coeffs, p.tag) for p in f.pieces]


def test_prepare_breaks_pinched_window():
    bs = prepare_breaks(fn(F(-1), True, F(1), True, [0, 0, 1]), A(1, 0), A(1, 0))
    # one-sided limits and value at every extreme point and breakpoint
    best = {b: max(v for v in entry if v is not None) for b, entry in bs.values.items()}
    assert best == {-1: 1, 0: 0, 1: 1}
    assert bs.bound_set == {-INF, INF}


def test_prepare_breaks_parallel_infeasible():
    bs = prepare_breaks(fn(-INF, False, INF, False, [0, 1]), A(0, 0), A(0, -1))
    assert bs.bound_set == set()


def test_prepare_breaks_sliding_window():
    bs = prepare_breaks(fn(F(-2), True, F(2), True, [0, 0, 1]), A(1, -1), A(1, 1))
    assert bs.extremes == [-3, -1, 1, 3]
    assert bs.crossings == [0]
    # the crossing point is where (y+1)^2 and (y-1)^2 agree
    y = bs.crossings[0]
    assert (y + 1) ** 2 == (y - 1) ** 2


def test_dominating_poly():
    y = UniPoly([0, 1], "y")
    assert dominating_poly(y, UniPoly([0, 2], "y"), F(1), F(2)) == 1
    assert dominating_poly(None, y, F(0), F(1)) == 1
    sq = UniPoly([0, 0, 1], "y")
    assert dominating_poly(sq, sq, F(0), F(1)) == 0


def test_inner_max():
    l, u = A(1, -1), A(1, 1)
    half = F(1, 2)
    assert inner_max(l, u, -half, half, {F(0): [5, 5, 5]})[0] == 5
    assert inner_max(l, u, -half, half, {F(3): [7, 7, 7]}) is None
    assert inner_max(l, u, -half, half, {}) is None


def test_constant_body():
    m = max_out_pp(fn(-INF, False, INF, False, [7]), A(1, 0), A(1, 1))
    [p] = m.pieces
    assert p.body.coeffs == (7,)
    assert (p.lo, p.hi) == (-INF, INF)
    x = p.tag(F(3))
    assert 3 <= x <= 4


def test_concave_bump_sliding_window():
    m = max_out_pp(fn(-INF, False, INF, False, [1, 0, -1]), A(1, -1), A(1, 1))
    assert shape(m) == [
        (-INF, False, -1, False, (0, -2, -1), Affine(A(1, 1))),
        (-1, True, 1, True, (1,), Constant(F(0))),
        (1, False, INF, False, (0, 2, -1), Affine(A(1, -1))),
    ]
    # frozen grid oracle: 1 - (y+1)^2, 1, 1 - (y-1)^2
    ys = np.linspace(-3, 3, 61)
    for y in ys:
        window = np.linspace(y - 1, y + 1, 100_001)
        assert abs(float(m(F(y))) - np.max(1 - window ** 2)) <= 1e-6


def test_window_missing_domain():
    assert max_out_pp(fn(F(0), True, F(1), True, [0, 1]), A(0, 2), A(0, 3)).is_empty()


def test_exp_pinched():
    m = max_out(fn(-INF, False, INF, False, [0, 0, -1], EXP), A(1, 0), A(1, 0))
    [p] = m.pieces
    assert p.kind == EXP and p.body.coeffs == (0, 0, -1)
    assert p.tag == Affine(A(1, 0))


def test_exp_matches_log_space():
    q = fn(-INF, False, INF, False, [0, 0, -1], EXP)
    m = max_out(q, A(1, -1), A(1, 1))
    lg = max_out_pp(fn(-INF, False, INF, False, [0, 0, -1]), A(1, -1), A(1, 1))
    assert [(p.lo, p.hi, p.body, p.tag) for p in m.pieces] == [(p.lo, p.hi, p.body, p.tag) for p in lg.pieces]
    assert all(p.kind == EXP for p in m.pieces)


def test_poly_dispatch():
    q = fn(F(-1), True, F(2), False, [1, -3, 0, 1])
    assert shape(max_out(q, A(1, 0), A(2, 1))) == shape(max_out_pp(q, A(1, 0), A(2, 1)))


def test_random_instances_against_grid_oracle():
    rep = maxout_check.run(n_instances=60, n_y=60, seed=11, grid=20_000)
    assert rep.value_failures == 0 and rep.domain_failures == 0
    assert rep.bound_violations == 0
    assert rep.argmax_outside == 0 and rep.argmax_mismatch == 0
    assert rep.bounds_cases == {"start-bounded", "end-bounded", "parallel-infeasible", "always-feasible"}
