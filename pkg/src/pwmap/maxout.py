"""Symbolic maximization of a piecewise function over a sliding window.

Given a piecewise polynomial q(x) and affine bounds l(y), u(y), the
max-out operation builds

    m(y) = sup { q(x) : x in [l(y), u(y)], q defined at x }

as a piecewise polynomial in y, undefined where that set is empty.  Each
result piece carries an argmax record telling where x sits: on one of the
bounds (``Affine``) or at a fixed interior point (``Constant``).
"""
from __future__ import annotations

import logging
from functools import lru_cache
from bisect import bisect_left, bisect_right
from dataclasses import dataclass

from .numeric import INF
from .piecewise import (
    EXP,
    POLY,
    Affine,
    Constant,
    KindMismatch,
    Piece,
    PieceFunc,
    PiecewiseFunc,
    _elementary_cells,
    _is_inf,
    interval_intersect,
    interval_sample,
    pw_exp,
    pw_log,
    pw_simplify,
)
from .poly import AffineFunc, UniPoly

__all__ = [
    "BreakSets",
    "prepare_breaks",
    "dominating_poly",
    "inner_max",
    "sup_on_window",
    "max_out_pp",
    "max_out",
    "piece_bound",
]

log = logging.getLogger(__name__)


@dataclass
class BreakSets:
    """Breakpoint sets driving the max-out construction.

    ``values`` maps every extreme point and piece boundary of q to its
    left limit, right limit and value (see `_extreme_values`).
    ``bounds`` is the feasible region {y : l(y) <= u(y)} as a pair of
    extended reals, or None when it is empty.
    """

    values: dict
    extremes: list
    crossings: list
    bounds: tuple | None

    @property
    def bound_set(self):
        """Bounds in the four-way form: {ys,+inf}, {-inf,ys}, {} or {-inf,+inf}."""
        return set() if self.bounds is None else set(self.bounds)


def piece_bound(m: int, qdeg: int) -> int:
    """Worst-case piece count of a max-out result."""
    return 8 * m * qdeg + 4 * m + 4


def _window_region(l: AffineFunc, u: AffineFunc):
    ds = u.slope - l.slope
    dt = u.intercept - l.intercept
    if ds == 0:
        return (-INF, INF) if dt >= 0 else None
    ys = -dt / ds
    return (ys, INF) if ds > 0 else (-INF, ys)


def _in_region(y, region) -> bool:
    return region is not None and region[0] <= y <= region[1]


def _extreme_values(q: PiecewiseFunc, tol=None) -> dict:
    """Map each extreme point / piece boundary b to [left, right, at].

    ``left`` and ``right`` are the one-sided limits of q at b and ``at`` is
    q(b); each is None when q is undefined on that side or at b.
    """
    vals: dict = {}

    def slot(x):
        if x not in vals:
            vals[x] = [None, None, None]
        return vals[x]

    for p in q.pieces:
        body = p.body
        if not _is_inf(p.lo):
            s = slot(p.lo)
            v = body.eval(p.lo)
            if not p.is_point:
                s[1] = v
            if p.lo_closed:
                s[2] = v
        if not _is_inf(p.hi) and not p.is_point:
            s = slot(p.hi)
            v = body.eval(p.hi)
            s[0] = v
            if p.hi_closed:
                s[2] = v
        if body.degree >= 2 and not p.is_point:
            for r in critical_points_of(body, tol):
                if p.lo < r < p.hi:
                    v = body.eval(r)
                    vals[r] = [v, v, v]
    return vals


@lru_cache(maxsize=8192)
def critical_points_of(body: UniPoly, tol=None) -> tuple:
    """Real roots of the derivative, cached per body."""
    return tuple(body.derivative()._roots_in(-INF, INF, tol))


def _value_at(entry, left=True, right=True):
    """Best of the selected one-sided limits and the value at the point."""
    best, att = None, False
    for k, use in ((2, True), (0, left), (1, right)):
        v = entry[k]
        if use and v is not None and (best is None or v > best):
            best, att = v, k == 2
    return best, att


def prepare_breaks(q: PiecewiseFunc, l: AffineFunc, u: AffineFunc, tol=None) -> BreakSets:
    """Compute extreme-point values and the y-breakpoints of a max-out."""
    values = _extreme_values(q, tol)
    region = _window_region(l, u)
    if region is None:
        return BreakSets(values, [], [], None)
    extremes = set()
    for f in (l, u):
        if f.slope == 0:
            continue
        for b in values:
            y = f.preimage(b)
            if _in_region(y, region):
                extremes.add(y)
    extremes = sorted(extremes)
    base = sorted(set(extremes) | {e for e in region if not _is_inf(e)})
    crossings = set()
    for lo, lc, hi, _ in _elementary_cells(base):
        if lc:
            continue
        y0 = interval_sample(lo, hi)
        if not _in_region(y0, region):
            continue
        pl, pu = q.piece_at(l(y0)), q.piece_at(u(y0))
        if pl is None or pu is None:
            continue
        d = pu.body.compose_affine(u) - pl.body.compose_affine(l)
        if d.is_zero():
            continue
        for r in d._roots_in(lo, hi, tol):
            if lo < r < hi:
                crossings.add(r)
    return BreakSets(values, extremes, sorted(crossings), region)


def dominating_poly(q1: UniPoly | None, q2: UniPoly | None, i1, i2) -> int:
    """Index (0 or 1) of the polynomial that is larger on (i1, i2).

    The caller guarantees that q1 - q2 keeps one sign on the open interval.
    ``None`` stands for an undefined side, which loses to anything.  The
    comparison is made at an interior point; when the two agree there we
    fall back to endpoint values and then to the lowest non-vanishing
    derivative of the difference at the left finite endpoint.  Remaining
    ties go to q1.
    """
    if q2 is None:
        return 0
    if q1 is None:
        return 1
    d = q1 - q2
    if d.is_zero():
        return 0
    s = d.sign_at(interval_sample(i1, i2))
    if s:
        return 0 if s > 0 else 1
    ends = [e for e in (i1, i2) if not _is_inf(e)]
    if ends:
        e1 = max(q1.eval(e) for e in ends)
        e2 = max(q2.eval(e) for e in ends)
        if e1 != e2:
            return 0 if e1 > e2 else 1
        x = min(ends)
        # direction: +1 looks right of x, -1 looks left of it
        direction = 1 if x == i1 else -1
        k = 0
        dk = d
        while not dk.is_zero():
            v = dk.eval(x)
            if v:
                sign = 1 if v > 0 else -1
                if direction < 0 and k % 2 == 1:
                    sign = -sign
                return 0 if sign > 0 else 1
            dk = dk.derivative()
            k += 1
    return 0


def inner_max(l: AffineFunc, u: AffineFunc, i1, i2, values: dict, keys=None):
    """Best extreme value inside every window [l(y), u(y)] for y in (i1, i2).

    Returns ``(value, point, attained)`` or None when no extreme point lies
    in the common part of the windows.  A point pinned to a constant bound
    only sees the one-sided limit from inside the window.  Ties go to the
    smallest point.
    """
    lo = max(l(i1), l(i2))
    hi = min(u(i1), u(i2))
    if lo > hi:
        return None
    best = None
    keys = sorted(values) if keys is None else keys
    for b in keys[bisect_left(keys, lo):bisect_right(keys, hi)]:
        left = not (l.slope == 0 and b == lo)
        right = not (u.slope == 0 and b == hi)
        v, att = _value_at(values[b], left, right)
        if v is not None and (best is None or v > best[0]):
            best = (v, b, att)
    return best


def sup_on_window(q: PiecewiseFunc, a, b, tol=None, values=None, keys=None):
    """Exact supremum of q over [a, b] as ``(value, point, attained)``.

    The point is a maximizer, or the endpoint of the one-sided limit that
    gives the supremum.  Returns None when [a, b] misses the domain.
    Passing the table of `_extreme_values` (and its sorted keys) avoids
    recomputing critical points.
    """
    if a > b:
        return None
    if values is not None:
        return _sup_from_table(q, a, b, values, keys if keys is not None else sorted(values))
    box = (a, True, b, True)
    best = None

    def consider(v, x, att):
        nonlocal best
        if best is None or v > best[0] or (v == best[0] and att and not best[2]):
            best = (v, x, att)

    for p in q.pieces:
        if p.hi < a:
            continue
        if p.lo > b:
            break
        iv = interval_intersect(p.interval(), box)
        if iv is None:
            continue
        lo, lc, hi, hc = iv
        body = p.body
        consider(body.eval(lo), lo, lc)
        consider(body.eval(hi), hi, hc)
        if body.degree >= 2 and lo < hi:
            for r in body.derivative()._roots_in(lo, hi, tol):
                if lo < r < hi:
                    consider(body.eval(r), r, True)
    return best


def _sup_from_table(q, a, b, values, keys):
    best = None

    def consider(v, x, att):
        nonlocal best
        if v is not None and (best is None or v > best[0] or (v == best[0] and att and not best[2])):
            best = (v, x, att)

    for x, inner in ((a, 1), (b, 0)):
        e = values.get(x)
        if e is None:
            p = q.piece_at(x)
            if p is not None:
                consider(p.body.eval(x), x, True)
            continue
        consider(e[2], x, True)
        if a < b:
            consider(e[inner], x, False)
    for k in keys[bisect_right(keys, a):bisect_left(keys, b)]:
        e = values[k]
        consider(e[2], k, True)
        consider(e[0], k, False)
        consider(e[1], k, False)
    return best


def _const(v, var) -> PieceFunc:
    return PieceFunc(POLY, UniPoly._raw([v.numerator], v.denominator, var))


def max_out_pp(q: PiecewiseFunc, l: AffineFunc, u: AffineFunc, tol=None) -> PiecewiseFunc:
    """Max-out for piecewise polynomials (see module docstring)."""
    if q.kind not in (POLY, None):
        raise KindMismatch("max_out_pp expects polynomial pieces")
    var = l.var if l.var is not None else u.var
    if not q.pieces:
        return PiecewiseFunc([], var)
    bs = prepare_breaks(q, l, u, tol)
    if bs.bounds is None:
        return PiecewiseFunc([], var)
    region = bs.bounds
    keys = sorted(bs.values)
    points = sorted(set(bs.extremes) | set(bs.crossings) | {e for e in region if not _is_inf(e)})
    items = []  # open pieces, or ("pt", y, sup) markers to resolve later
    for lo, lc, hi, _ in _elementary_cells(points):
        if lc:
            if _in_region(lo, region):
                sup = sup_on_window(q, l(lo), u(lo), tol, bs.values, keys)
                if sup is not None:
                    items.append(("pt", lo, sup))
            continue
        y0 = interval_sample(lo, hi)
        if not _in_region(y0, region):
            continue
        items.extend(_open_cell(q, l, u, lo, hi, y0, bs.values, var, tol, keys))
    pieces = _resolve_points(items, q, var)
    out = pw_simplify(PiecewiseFunc(pieces, var, check=False))
    return out


def _open_cell(q, l, u, lo, hi, y0, values, var, tol, keys=None):
    pl, pu = q.piece_at(l(y0)), q.piece_at(u(y0))
    ql = pl.body.compose_affine(l) if pl is not None else None
    qu = pu.body.compose_affine(u) if pu is not None else None
    hat = None
    if ql is not None or qu is not None:
        k = dominating_poly(ql, qu, lo, hi)
        hat = (ql, Affine(l)) if k == 0 else (qu, Affine(u))
    e = inner_max(l, u, lo, hi, values, keys)
    if hat is None and e is None:
        return []
    if hat is None:
        return [Piece(lo, False, hi, False, _const(e[0], var), Constant(e[1]))]
    hbody, hrec = hat
    hfunc = PieceFunc(POLY, hbody.with_var(var))
    if e is None:
        return [Piece(lo, False, hi, False, hfunc, hrec)]
    efunc, erec = _const(e[0], var), Constant(e[1])
    d = hbody - e[0]
    crossings = [] if d.is_zero() else [r for r in d._roots_in(lo, hi, tol) if lo < r < hi]
    if len(crossings) > 1:
        log.debug("max-out: %d crossings of the bound body and interior max", len(crossings))
    edges = [lo] + crossings + [hi]
    out = []
    for s in range(len(edges) - 1):
        a, b = edges[s], edges[s + 1]
        ym = interval_sample(a, b)
        take_hat = hbody.eval(ym) >= e[0]
        out.append(Piece(a, False, b, False, *((hfunc, hrec) if take_hat else (efunc, erec))))
        if s + 1 < len(edges) - 1:
            take_hat = hbody.eval(b) >= e[0]
            out.append(Piece(b, True, b, True, *((hfunc, hrec) if take_hat else (efunc, erec))))
    return out


def _attains(q: PiecewiseFunc, piece: Piece, y, value) -> bool:
    if piece.body.eval(y) != value:
        return False
    rec = piece.tag
    if isinstance(rec, Constant):
        # constant records come from extreme points that lie in every window
        p = q.piece_at(rec.value)
        return p is not None and p.body.eval(rec.value) == value
    x = rec(y)
    p = q.piece_at(x)
    return p is not None and p.body.eval(x) == value


def _resolve_points(items, q, var):
    """Turn point markers into pieces, reusing a neighbour body if possible."""
    out = []
    for idx, it in enumerate(items):
        if isinstance(it, Piece):
            out.append(it)
            continue
        _, y, (v, x, att) = it
        nbrs = []
        if idx > 0 and isinstance(items[idx - 1], Piece) and items[idx - 1].hi == y:
            nbrs.append(items[idx - 1])
        if idx + 1 < len(items) and isinstance(items[idx + 1], Piece) and items[idx + 1].lo == y:
            nbrs.append(items[idx + 1])
        nbrs.sort(key=lambda p: 0 if isinstance(p.tag, Constant) else 1)
        chosen = None
        for p in nbrs:
            if _attains(q, p, y, v):
                chosen = Piece(y, True, y, True, p.func, p.tag)
                break
        if chosen is None:
            chosen = Piece(y, True, y, True, _const(v, var), Constant(x))
        out.append(chosen)
    return out


def max_out(q: PiecewiseFunc, l: AffineFunc, u: AffineFunc, tol=None) -> PiecewiseFunc:
    """Max-out for either kind; exp-polynomials are handled in log space."""
    if q.kind == EXP:
        return pw_exp(max_out_pp(pw_log(q), l, u, tol))
    return max_out_pp(q, l, u, tol)
