"""Univariate piecewise polynomial and exp-polynomial functions.

A `PiecewiseFunc` is a sorted list of pairwise disjoint `Piece` objects,
each carrying a body on an interval whose endpoints may be open, closed or
infinite.  Gaps between pieces are allowed and mean "undefined".  Every
piece can carry an opaque ``tag``; the solvers use it to attach argmax
records to message pieces.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .numeric import INF, rational_to_str, to_rational
from .poly import UniPoly

__all__ = [
    "POLY",
    "EXP",
    "MixedKind",
    "KindMismatch",
    "EmptyFunction",
    "UnboundedAbove",
    "PieceFunc",
    "Piece",
    "PiecewiseFunc",
    "Constant",
    "Affine",
    "pw_product",
    "pw_max",
    "pw_simplify",
    "pw_final_max",
    "pw_log",
    "pw_exp",
    "interval_intersect",
]

POLY = "Poly"
EXP = "ExpPoly"


class MixedKind(ValueError):
    """Polynomial and exp-polynomial pieces were combined."""


class KindMismatch(ValueError):
    """A kind transform was applied to the wrong kind of function."""


class EmptyFunction(ValueError):
    """The function is undefined everywhere."""


class UnboundedAbove(ValueError):
    """The supremum is +infinity."""


@dataclass(frozen=True)
class Constant:
    """Argmax record: the eliminated variable takes a fixed value."""

    value: Fraction

    def __call__(self, y):
        return self.value


@dataclass(frozen=True)
class Affine:
    """Argmax record: the eliminated variable follows an affine map."""

    func: object  # AffineFunc

    def __call__(self, y):
        return self.func(y)


@dataclass(frozen=True)
class PieceFunc:
    """A piece body: a polynomial, or exp of a polynomial exponent."""

    kind: str
    body: UniPoly

    def __post_init__(self):
        if self.kind not in (POLY, EXP):
            raise ValueError(f"unknown piece kind {self.kind!r}")

    def score(self, x) -> Fraction:
        """Comparable exact value: the body itself (log scale for exp)."""
        return self.body.eval(x)

    def value(self, x):
        s = self.body.eval(x)
        return s if self.kind == POLY else math.exp(s)

    def value_float(self, x: float) -> float:
        s = self.body.eval_float(x)
        return s if self.kind == POLY else math.exp(s)


def _is_inf(x) -> bool:
    return isinstance(x, float) and math.isinf(x)


@dataclass(frozen=True)
class Piece:
    lo: object
    lo_closed: bool
    hi: object
    hi_closed: bool
    func: PieceFunc
    tag: object = field(default=None, compare=True)

    def __post_init__(self):
        lo = self.lo if _is_inf(self.lo) else Fraction(self.lo)
        hi = self.hi if _is_inf(self.hi) else Fraction(self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if _is_inf(lo) and self.lo_closed or _is_inf(hi) and self.hi_closed:
            raise ValueError("infinite endpoints must be open")
        if lo > hi or (lo == hi and not (self.lo_closed and self.hi_closed)):
            raise ValueError(f"empty piece interval {lo}..{hi}")

    @property
    def kind(self) -> str:
        return self.func.kind

    @property
    def body(self) -> UniPoly:
        return self.func.body

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, x) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and not self.lo_closed:
            return False
        if x == self.hi and not self.hi_closed:
            return False
        return True

    def interval(self):
        return (self.lo, self.lo_closed, self.hi, self.hi_closed)

    def sample(self) -> Fraction:
        """A rational point inside the piece."""
        return interval_sample(self.lo, self.hi)

    def replace(self, **kw) -> "Piece":
        d = dict(lo=self.lo, lo_closed=self.lo_closed, hi=self.hi,
                 hi_closed=self.hi_closed, func=self.func, tag=self.tag)
        d.update(kw)
        return Piece(**d)

    def to_json(self) -> dict:
        return {
            "lo": rational_to_str(self.lo),
            "lo_closed": self.lo_closed,
            "hi": rational_to_str(self.hi),
            "hi_closed": self.hi_closed,
            "kind": self.kind,
            "coeffs": self.body.to_json(),
        }

    @classmethod
    def from_json(cls, d, var=None) -> "Piece":
        return cls(
            to_rational(d["lo"]), bool(d["lo_closed"]),
            to_rational(d["hi"]), bool(d["hi_closed"]),
            PieceFunc(d.get("kind", POLY), UniPoly.from_json(d["coeffs"], var)),
        )


def interval_sample(lo, hi) -> Fraction:
    if _is_inf(lo) and _is_inf(hi):
        return Fraction(0)
    if _is_inf(lo):
        return Fraction(hi) - 1
    if _is_inf(hi):
        return Fraction(lo) + 1
    return (Fraction(lo) + Fraction(hi)) / 2


def interval_intersect(a, b):
    """Intersect two (lo, lo_closed, hi, hi_closed) intervals; None if empty."""
    alo, alc, ahi, ahc = a
    blo, blc, bhi, bhc = b
    if alo > blo:
        lo, lc = alo, alc
    elif blo > alo:
        lo, lc = blo, blc
    else:
        lo, lc = alo, alc and blc
    if ahi < bhi:
        hi, hc = ahi, ahc
    elif bhi < ahi:
        hi, hc = bhi, bhc
    else:
        hi, hc = ahi, ahc and bhc
    if lo < hi or (lo == hi and lc and hc):
        return (lo, lc, hi, hc)
    return None


def _hi_key(p):
    # closed upper ends extend "further" than open ones at the same value
    return (p[2], 1 if p[3] else 0)


class PiecewiseFunc:
    """Sorted, pairwise disjoint pieces of a single kind in one variable."""

    __slots__ = ("pieces", "var", "_los")

    def __init__(self, pieces=(), var=None, check=True):
        self.pieces = tuple(pieces)
        self.var = var
        self._los = None
        if check:
            self._validate()

    def _validate(self):
        kinds = {p.kind for p in self.pieces}
        if len(kinds) > 1:
            raise MixedKind("pieces of different kinds")
        for a, b in zip(self.pieces, self.pieces[1:]):
            if a.hi > b.lo or (a.hi == b.lo and a.hi_closed and b.lo_closed):
                raise ValueError("pieces overlap or are unsorted")

    @property
    def kind(self):
        return self.pieces[0].kind if self.pieces else None

    def __len__(self):
        return len(self.pieces)

    def __iter__(self):
        return iter(self.pieces)

    def __repr__(self):
        return f"PiecewiseFunc({len(self.pieces)} pieces, var={self.var!r})"

    def is_empty(self) -> bool:
        return not self.pieces

    def locate(self, x):
        """Index of the piece containing x, or None."""
        if self._los is None:
            self._los = [p.lo for p in self.pieces]
        i = bisect.bisect_right(self._los, x) - 1
        for j in (i, i - 1, i + 1):
            if 0 <= j < len(self.pieces) and self.pieces[j].contains(x):
                return j
        return None

    def piece_at(self, x):
        i = self.locate(x)
        return None if i is None else self.pieces[i]

    def __call__(self, x):
        """Value at x, or None where undefined."""
        p = self.piece_at(Fraction(x))
        return None if p is None else p.func.value(Fraction(x))

    def score(self, x):
        p = self.piece_at(Fraction(x))
        return None if p is None else p.func.score(Fraction(x))

    def eval_float(self, xs):
        """Float values on an iterable of points; NaN where undefined."""
        out = []
        for x in xs:
            fx = Fraction(x)
            p = self.piece_at(fx)
            out.append(math.nan if p is None else float(p.func.value_float(float(x))))
        return out

    def restrict(self, lo, lo_closed, hi, hi_closed) -> "PiecewiseFunc":
        box = (lo, lo_closed, hi, hi_closed)
        out = []
        for p in self.pieces:
            iv = interval_intersect(p.interval(), box)
            if iv is not None:
                out.append(p.replace(lo=iv[0], lo_closed=iv[1], hi=iv[2], hi_closed=iv[3]))
        return PiecewiseFunc(out, self.var, check=False)

    def map_pieces(self, fn) -> "PiecewiseFunc":
        return PiecewiseFunc([fn(p) for p in self.pieces], self.var, check=False)

    def with_var(self, var) -> "PiecewiseFunc":
        return PiecewiseFunc(
            [p.replace(func=PieceFunc(p.kind, p.body.with_var(var))) for p in self.pieces],
            var, check=False,
        )

    def max_degree(self) -> int:
        return max((p.body.degree for p in self.pieces), default=0)

    def domain_hull(self):
        if not self.pieces:
            return None
        a, b = self.pieces[0], self.pieces[-1]
        return (a.lo, a.lo_closed, b.hi, b.hi_closed)

    def to_json(self) -> list:
        return [p.to_json() for p in self.pieces]

    @classmethod
    def from_json(cls, data, var=None) -> "PiecewiseFunc":
        return cls([Piece.from_json(d, var) for d in data], var)

    @classmethod
    def single(cls, func: PieceFunc, lo=-INF, lo_closed=False, hi=INF, hi_closed=False,
               var=None, tag=None) -> "PiecewiseFunc":
        return cls([Piece(lo, lo_closed, hi, hi_closed, func, tag)], var)


# ---------------------------------------------------------------------------
# products


def _mul_funcs(a: PieceFunc, b: PieceFunc) -> PieceFunc:
    if a.kind != b.kind:
        raise MixedKind("cannot multiply Poly and ExpPoly pieces")
    if a.kind == POLY:
        return PieceFunc(POLY, a.body * b.body)
    return PieceFunc(EXP, a.body + b.body)


def pw_product(a: PiecewiseFunc, b: PiecewiseFunc, tag="a") -> PiecewiseFunc:
    """Pointwise product, defined exactly where both factors are.

    ``tag`` selects which operand's piece tags survive ("a", "b" or None).
    """
    if a.kind is not None and b.kind is not None and a.kind != b.kind:
        raise MixedKind("cannot multiply Poly and ExpPoly functions")
    out = []
    i = j = 0
    pa, pb = a.pieces, b.pieces
    while i < len(pa) and j < len(pb):
        x, y = pa[i], pb[j]
        iv = interval_intersect(x.interval(), y.interval())
        if iv is not None:
            t = x.tag if tag == "a" else y.tag if tag == "b" else None
            out.append(Piece(iv[0], iv[1], iv[2], iv[3], _mul_funcs(x.func, y.func), t))
        if _hi_key(x.interval()) <= _hi_key(y.interval()):
            i += 1
        else:
            j += 1
    return PiecewiseFunc(out, a.var if a.var is not None else b.var, check=False)


def pw_scale(f: PiecewiseFunc, func: PieceFunc) -> PiecewiseFunc:
    """Multiply every piece by one global body."""
    return f.map_pieces(lambda p: p.replace(func=_mul_funcs(p.func, func)))


# ---------------------------------------------------------------------------
# maximum


def _breakpoints(funcs):
    pts = set()
    for f in funcs:
        for p in f.pieces:
            if not _is_inf(p.lo):
                pts.add(p.lo)
            if not _is_inf(p.hi):
                pts.add(p.hi)
    return sorted(pts)


def _elementary_cells(points):
    """Alternating open intervals and points covering the real line."""
    cells = []
    prev = -INF
    for x in points:
        cells.append((prev, False, x, False))
        cells.append((x, True, x, True))
        prev = x
    cells.append((prev, False, INF, False))
    return cells


def pw_max(funcs, tol=None):
    """Pointwise maximum of several functions of one kind.

    Returns ``(result, selector)`` where ``selector[k]`` is the index of the
    input achieving the maximum on result piece ``k``; ties go to the lowest
    index.  The result is defined wherever any input is.
    """
    funcs = [f for f in funcs]
    kinds = {f.kind for f in funcs if f.kind is not None}
    if len(kinds) > 1:
        raise MixedKind("pw_max over mixed kinds")
    var = next((f.var for f in funcs if f.var is not None), None)
    live = [(k, f) for k, f in enumerate(funcs) if f.pieces]
    if not live:
        return PiecewiseFunc([], var), []
    if len(live) == 1:
        k, f = live[0]
        return f, [k] * len(f.pieces)
    out = []
    for lo, lc, hi, hc in _elementary_cells(_breakpoints([f for _, f in live])):
        x0 = lo if lc else interval_sample(lo, hi)
        active = []
        for k, f in live:
            p = f.piece_at(x0)
            if p is not None:
                active.append((k, p))
        if not active:
            continue
        if lc:  # point cell
            k, p = _winner(active, lo)
            out.append((Piece(lo, True, lo, True, p.func, p.tag), k))
            continue
        if len(active) == 1:
            k, p = active[0]
            out.append((Piece(lo, False, hi, False, p.func, p.tag), k))
            continue
        splits = set()
        for a in range(len(active)):
            for b in range(a + 1, len(active)):
                d = active[a][1].body - active[b][1].body
                if d.is_zero():
                    continue
                for r in d._roots_in(lo, hi, tol):
                    if lo < r < hi:
                        splits.add(r)
        pts = sorted(splits)
        edges = [lo] + pts + [hi]
        for s in range(len(edges) - 1):
            a, b = edges[s], edges[s + 1]
            k, p = _winner(active, interval_sample(a, b))
            out.append((Piece(a, False, b, False, p.func, p.tag), k))
            if s + 1 < len(edges) - 1:
                k, p = _winner(active, b)
                out.append((Piece(b, True, b, True, p.func, p.tag), k))
    merged = _merge_runs(out)
    return PiecewiseFunc([p for p, _ in merged], var, check=False), [k for _, k in merged]


def _winner(active, x):
    best = None
    for k, p in active:
        s = p.func.score(x)
        if best is None or s > best[0]:
            best = (s, k, p)
    return best[1], best[2]


def _adjacent(a: Piece, b: Piece) -> bool:
    return a.hi == b.lo and (a.hi_closed != b.lo_closed)


def _merge_runs(items):
    """Merge touching pieces with equal body, tag and selector."""
    out = []
    for p, k in items:
        if out:
            q, kq = out[-1]
            if kq == k and q.func == p.func and q.tag == p.tag and _adjacent(q, p):
                out[-1] = (q.replace(hi=p.hi, hi_closed=p.hi_closed), k)
                continue
        out.append((p, k))
    return out


def pw_simplify(f: PiecewiseFunc) -> PiecewiseFunc:
    """Merge touching pieces whose bodies and tags are identical."""
    merged = _merge_runs([(p, 0) for p in f.pieces])
    return PiecewiseFunc([p for p, _ in merged], f.var, check=False)


# ---------------------------------------------------------------------------
# global maximum


def pw_final_max(f: PiecewiseFunc, tol=None):
    """Supremum of f over its domain.

    Returns ``(value, arg, attained)``.  ``arg`` is a maximizer, or the
    endpoint whose one-sided limit gives the supremum when it is not
    attained.  Exp-polynomial values are returned as floats.
    """
    score, arg, attained = final_max_score(f, tol)
    if f.kind == EXP:
        return math.exp(score), arg, attained
    return score, arg, attained


def final_max_score(f: PiecewiseFunc, tol=None):
    """Like `pw_final_max` but in score units (exponent for exp pieces)."""
    if not f.pieces:
        raise EmptyFunction("function has an empty domain")
    best = None
    for p in f.pieces:
        body = p.body
        for end, closed, direction in ((p.lo, p.lo_closed, -1), (p.hi, p.hi_closed, 1)):
            if _is_inf(end):
                if body.degree > 0 and body.limit_sign_at_inf(direction) > 0:
                    raise UnboundedAbove("function grows without bound")
                continue
            best = _better(best, (body.eval(end), end, closed))
        if body.degree >= 2 and not p.is_point:
            for r in body.derivative()._roots_in(p.lo, p.hi, tol):
                if p.lo < r < p.hi:
                    best = _better(best, (body.eval(r), r, True))
        if body.degree <= 0 and _is_inf(p.lo) and _is_inf(p.hi):
            best = _better(best, (body.constant_value(), Fraction(0), True))
    return best


def _better(best, cand):
    if best is None:
        return cand
    if cand[0] > best[0] or (cand[0] == best[0] and cand[2] and not best[2]):
        return cand
    return best


# ---------------------------------------------------------------------------
# kind transforms


def pw_log(f: PiecewiseFunc) -> PiecewiseFunc:
    """ExpPoly -> Poly by taking the exponent of every piece."""
    if f.kind not in (EXP, None):
        raise KindMismatch("pw_log expects exp-polynomial pieces")
    return f.map_pieces(lambda p: p.replace(func=PieceFunc(POLY, p.body)))


def pw_exp(f: PiecewiseFunc) -> PiecewiseFunc:
    """Poly -> ExpPoly by exponentiating every piece."""
    if f.kind not in (POLY, None):
        raise KindMismatch("pw_exp expects polynomial pieces")
    return f.map_pieces(lambda p: p.replace(func=PieceFunc(EXP, p.body)))
