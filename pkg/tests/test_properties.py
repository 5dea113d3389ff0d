"""Property-based checks of algebraic and solver invariants."""
from fractions import Fraction as F

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from oracles import eval_pieces, float_pieces
from pwmap.bench import GenConfig, gen_problem
from pwmap.logic import CnfFormula, LinearAtom
from pwmap.mpmap import solve
from pwmap.numeric import INF, rational_to_str, to_rational
from pwmap.pamap import pcadam
from pwmap.piecewise import POLY, Piece, PieceFunc, PiecewiseFunc, pw_max, pw_product, pw_simplify
from pwmap.poly import AffineFunc, UniPoly

rats = st.fractions(min_value=-4, max_value=4, max_denominator=12)
polys = st.lists(rats, min_size=0, max_size=6).map(lambda c: UniPoly(c, "x"))
points = st.fractions(min_value=-3, max_value=3, max_denominator=50)
SLOW = settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def piecewise(draw, var="x"):
    cuts = sorted(set(draw(st.lists(st.fractions(-3, 3, max_denominator=8), min_size=2, max_size=7))))
    if len(cuts) < 2:
        cuts = [F(-1), F(1)]
    pieces = []
    for lo, hi in zip(cuts, cuts[1:]):
        if draw(st.booleans()) and pieces:
            continue  # gap
        lo_closed = not (pieces and pieces[-1].hi == lo and pieces[-1].hi_closed)
        body = UniPoly(draw(st.lists(rats, min_size=1, max_size=4)), var)
        pieces.append(Piece(lo, lo_closed and draw(st.booleans()), hi, draw(st.booleans()),
                            PieceFunc(POLY, body)))
    return PiecewiseFunc(pieces, var)


@given(polys, rats, rats, points)
def test_compose_affine_evaluates_pointwise(p, a, b, y):
    f = AffineFunc(a, b, "y")
    assert p.compose_affine(f).eval(y) == p.eval(f(y))


@given(polys, polys)
def test_product_rule(p, q):
    assert (p * q).derivative() == p.derivative() * q + p * q.derivative()


@given(polys, polys, polys)
def test_multiplication_ring_laws(p, q, r):
    assert p * q == q * p
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r


@given(polys)
def test_antiderivative_inverts_derivative(p):
    assert p.antiderivative().derivative() == p


@given(piecewise(), piecewise(), points)
def test_pw_product_pointwise(f, g, x):
    h = pw_product(f, g)
    fx, gx = f(x), g(x)
    assert h(x) == (None if fx is None or gx is None else fx * gx)


@given(piecewise(), piecewise())
@settings(max_examples=60, deadline=None)
def test_pw_max_dominates(f, g):
    m, sel = pw_max([f, g])
    assert len(sel) == len(m.pieces)
    xs = np.linspace(-3, 3, 601)
    vf, vg, vm = (eval_pieces(float_pieces(h), xs) for h in (f, g, m))
    assert np.all(vm >= np.maximum(vf, vg) - 1e-9)
    both = np.isfinite(vf) | np.isfinite(vg)
    assert np.allclose(vm[both], np.maximum(vf, vg)[both], atol=1e-7)


@given(piecewise(), points)
def test_simplify_preserves_values(f, x):
    assert pw_simplify(f)(x) == f(x)


@given(st.dictionaries(st.sampled_from(["a", "b", "c"]), rats.filter(bool), min_size=1),
       st.sampled_from(["<=", "<", ">=", ">", "="]), rats, st.fractions(1, 7, max_denominator=3))
def test_atom_canonical_form(coeffs, op, const, scale):
    atom = LinearAtom.make(coeffs, op, const)
    again = LinearAtom.make(dict(atom.terms), atom.op, atom.constant)
    assert again == atom
    scaled = LinearAtom.make({v: a * scale for v, a in coeffs.items()}, op, const * scale)
    assert scaled == atom


@given(st.fractions(max_denominator=10**6) | st.integers(-10**9, 10**9).map(lambda k: F(k, 2 ** 20)))
def test_rational_string_round_trip(q):
    assert to_rational(rational_to_str(q)) == q


@given(piecewise())
def test_piecewise_json_round_trip(f):
    g = PiecewiseFunc.from_json(f.to_json(), "x")
    assert [(p.lo, p.lo_closed, p.hi, p.hi_closed, p.body) for p in g.pieces] == \
           [(p.lo, p.lo_closed, p.hi, p.hi_closed, p.body) for p in f.pieces]


@given(st.sampled_from(["star", "snow", "path"]), st.integers(2, 4), st.integers(0, 10**6))
@SLOW
def test_problem_json_round_trip(shape, n, seed):
    p = gen_problem(GenConfig(shape, n, seed=seed))
    assert type(p).from_json(p.to_json()).dumps() == p.dumps()
    assert CnfFormula.from_json(p.formula.to_json()).to_json() == p.formula.to_json()


@given(st.sampled_from(["star", "snow", "path"]), st.integers(2, 4), st.integers(0, 10**6))
@SLOW
def test_mpmap_root_invariance(shape, n, seed):
    p = gen_problem(GenConfig(shape, n, seed=seed))
    values = {r: solve(p, root=r).value for r in p.names}
    ref = values[p.names[0]]
    for v in values.values():
        assert abs(float(v) - float(ref)) <= 1e-9 * max(1.0, abs(float(ref)))


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=10, deadline=None)
def test_pcadam_trajectories_are_reproducible(seed):
    p = gen_problem(GenConfig("path", 3, seed=1))
    runs = []
    for _ in range(2):
        traj = []
        v, pt = pcadam(p.formula, p, particles=6, iterations=40, step=0.01, seed=seed, trajectory=traj)
        runs.append((v, pt, np.stack(traj).tobytes()))
    assert runs[0] == runs[1]


def test_unbounded_piece_evaluation():
    f = PiecewiseFunc([Piece(-INF, False, F(0), True, PieceFunc(POLY, UniPoly([1], "x")))], "x")
    assert f(F(-10 ** 9)) == 1
