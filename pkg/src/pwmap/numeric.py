"""Exact scalars, rational serialization and certified real-root isolation.

Roots are isolated with Descartes' rule of signs on integer polynomials
mapped to the unit interval, then refined by sign bisection on dyadic
points.  Everything here works on plain Python integers internally, which
is considerably faster than `fractions.Fraction` arithmetic.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

Rational = Fraction
INF = math.inf

__all__ = [
    "Rational",
    "INF",
    "ScalarBackend",
    "EXACT",
    "ZeroPolynomial",
    "RootInterval",
    "to_rational",
    "rational_to_str",
    "isolate_real_roots",
    "refine_root",
    "real_roots",
    "simplest_dyadic_between",
]


class ZeroPolynomial(ValueError):
    """Raised when root isolation is requested for the zero polynomial."""


@dataclass(frozen=True)
class ScalarBackend:
    """Numeric policy shared by the solvers.

    ``mode`` is ``"exact"`` (default) or ``"float"``.  In float mode the
    message-passing solver rounds message coefficients to doubles after
    every step, which keeps coefficient bit sizes bounded.
    """

    mode: str = "exact"
    eps_root: Fraction = Fraction(1, 10**10)
    eps_cmp: float = 1e-12

    def __post_init__(self):
        if self.mode not in ("exact", "float"):
            raise ValueError(f"unknown backend mode {self.mode!r}")
        if self.eps_root <= 0:
            raise ValueError("eps_root must be positive")


EXACT = ScalarBackend()


# ---------------------------------------------------------------------------
# serialization

_DYADIC = re.compile(r"^\s*([+-]?\d+)\s*/\s*2\^(\d+)\s*$")


def to_rational(value) -> Fraction | float:
    """Parse a JSON scalar into an exact rational (or +-inf).

    Accepts ints, ``"num/den"``, ``"m/2^k"``, decimal strings, ``"inf"``
    and ``"-inf"``.  Floats are converted through their shortest repr so
    that ``0.9`` becomes ``9/10``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if math.isinf(value):
            return value
        if math.isnan(value):
            raise ValueError("NaN is not a rational")
        return Fraction(repr(value))
    if isinstance(value, str):
        s = value.strip()
        low = s.lower()
        if low in ("inf", "+inf", "infinity", "+infinity"):
            return INF
        if low in ("-inf", "-infinity"):
            return -INF
        m = _DYADIC.match(s)
        if m:
            return Fraction(int(m.group(1)), 1 << int(m.group(2)))
        return Fraction(s)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def rational_to_str(q) -> str:
    """Serialize an extended rational; dyadics use the ``m/2^k`` form."""
    if isinstance(q, float):
        if math.isinf(q):
            return "inf" if q > 0 else "-inf"
        q = Fraction(q)
    q = Fraction(q)
    den = q.denominator
    if den > 1 and den & (den - 1) == 0:
        return f"{q.numerator}/2^{den.bit_length() - 1}"
    return f"{q.numerator}/{den}"


# ---------------------------------------------------------------------------
# integer polynomial kernels (ascending coefficient lists)


def _int_content(p):
    g = 0
    for c in p:
        g = math.gcd(g, c)
    return g


def _primitive_int(coeffs) -> list[int]:
    """Scale rational coefficients to a primitive integer list."""
    coeffs = [Fraction(c) for c in coeffs]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if not coeffs:
        return []
    lcm = 1
    for c in coeffs:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    ints = [c.numerator * (lcm // c.denominator) for c in coeffs]
    g = _int_content(ints)
    if ints[-1] < 0:
        g = -g
    return [c // g for c in ints]


def _strip(p):
    while p and p[-1] == 0:
        p.pop()
    return p


def _sign_variations(p) -> int:
    count = 0
    last = 0
    for c in p:
        if c:
            if last and (c > 0) != (last > 0):
                count += 1
            last = c
    return count


def _taylor_shift1(p):
    """Return the coefficients of p(x + 1)."""
    a = list(p)
    n = len(a) - 1
    for i in range(n):
        for k in range(n - 1, i - 1, -1):
            a[k] += a[k + 1]
    return a


def _descartes01(p) -> int:
    """Upper bound on the number of roots in (0, 1); exact when 0 or 1."""
    return _sign_variations(_taylor_shift1(p[::-1]))


def _halve(p):
    """Coefficients of 2^n p(x / 2)."""
    n = len(p) - 1
    return [c << (n - k) for k, c in enumerate(p)]


def _eval_sign_dyadic(p, m: int, k: int) -> int:
    """Sign of p(m / 2^k) for an integer polynomial p."""
    if not p:
        return 0
    h = p[-1]
    shift = k
    for c in reversed(p[:-1]):
        h = h * m + (c << shift)
        shift += k
    return (h > 0) - (h < 0)


def _eval_sign_rational(p, x: Fraction) -> int:
    if not p:
        return 0
    a, b = x.numerator, x.denominator
    h = p[-1]
    bp = b
    for c in reversed(p[:-1]):
        h = h * a + c * bp
        bp *= b
    return (h > 0) - (h < 0)


def _compose_affine_int(p, lo: Fraction, w: Fraction):
    """Primitive integer coefficients of p(lo + w t)."""
    # Horner over rationals, but carried as integer polynomials with a
    # common denominator: lo + w t = (A + B t) / D.
    d = lo.denominator * w.denominator // math.gcd(lo.denominator, w.denominator)
    a = lo.numerator * (d // lo.denominator)
    b = w.numerator * (d // w.denominator)
    acc = [p[-1]]
    dpow = d
    for c in reversed(p[:-1]):
        # acc * (a + b t) + c * d^(n - i)
        nxt = [0] * (len(acc) + 1)
        for i, v in enumerate(acc):
            nxt[i] += v * a
            nxt[i + 1] += v * b
        nxt[0] += c * dpow
        dpow *= d
        acc = nxt
    _strip(acc)
    if not acc:
        return acc
    g = _int_content(acc)
    if acc[-1] < 0:
        g = -g
    return [c // g for c in acc]


def _int_derivative(p):
    return [k * c for k, c in enumerate(p)][1:]


def _rat_poly_gcd(p, q):
    """Monic gcd of two polynomials over Q (Fraction lists)."""
    a = [Fraction(c) for c in p]
    b = [Fraction(c) for c in q]
    _strip(a)
    _strip(b)
    while b:
        # a mod b
        r = list(a)
        lead = b[-1]
        while len(r) >= len(b) and r:
            f = r[-1] / lead
            shift = len(r) - len(b)
            for i, c in enumerate(b):
                r[i + shift] -= f * c
            r.pop()
            _strip(r)
        a, b = b, r
    if not a:
        return a
    lead = a[-1]
    return [c / lead for c in a]


def _rat_poly_div(p, q):
    p = [Fraction(c) for c in p]
    q = [Fraction(c) for c in q]
    out = [Fraction(0)] * (len(p) - len(q) + 1)
    r = list(p)
    lead = q[-1]
    while len(r) >= len(q) and r:
        f = r[-1] / lead
        shift = len(r) - len(q)
        out[shift] = f
        for i, c in enumerate(q):
            r[i + shift] -= f * c
        r.pop()
    return out


def _square_free_int(p):
    """Primitive integer square-free part of an integer polynomial."""
    g = _rat_poly_gcd(p, _int_derivative(p))
    if len(g) <= 1:
        return list(p)
    return _primitive_int(_rat_poly_div(p, g))


def _cauchy_bound_pow2(p) -> int:
    """Power of two strictly above every root magnitude of p."""
    lead = abs(p[-1])
    m = max((abs(c) for c in p[:-1]), default=0)
    bound = 1 + Fraction(m, lead)
    k = 0
    while (1 << k) <= bound:
        k += 1
    return 1 << k


# ---------------------------------------------------------------------------
# isolation


@dataclass(frozen=True)
class RootInterval:
    """Closed interval containing exactly one real root of a polynomial.

    ``lo == hi`` means the root is known exactly.  ``sign_change`` is
    False for roots of even multiplicity.
    """

    lo: Fraction
    hi: Fraction
    sign_change: bool = True
    _sqf: tuple = field(default=(), repr=False, compare=False)

    @property
    def exact(self) -> bool:
        return self.lo == self.hi


class _NeedSquareFree(Exception):
    pass


def _isolate01(p, max_depth=64):
    """Isolate roots of integer p in (0,1).

    Returns (open_intervals, exact_roots) with intervals as (c, k) meaning
    (c/2^k, (c+1)/2^k) and exact roots as (m, k) meaning m/2^k.
    """
    opens, exacts = [], []
    stack = [(p, 0, 0)]
    while stack:
        q, c, k = stack.pop()
        if len(q) <= 1:
            continue
        v = _descartes01(q)
        if v == 0:
            continue
        if v == 1:
            opens.append((c, k))
            continue
        if k >= max_depth:
            raise _NeedSquareFree
        left = _halve(q)
        right = _taylor_shift1(left)
        if right[0] == 0:
            exacts.append((2 * c + 1, k + 1))
            right = right[1:]
        stack.append((right, 2 * c + 1, k + 1))
        stack.append((left, 2 * c, k + 1))
    return opens, exacts


def _multiplicity_odd(p, x: Fraction) -> bool:
    q = list(p)
    mult = 0
    while q and _eval_sign_rational(q, x) == 0:
        q = _int_derivative(q)
        mult += 1
    return mult % 2 == 1


def _count_open(p, a: Fraction, b: Fraction) -> int:
    q = _compose_affine_int(p, a, b - a)
    if len(q) <= 1:
        return 0
    while q and q[0] == 0:
        q = q[1:]
    return _descartes01(q)


def _window(p, lo, hi):
    if lo == -INF or hi == INF:
        b = _cauchy_bound_pow2(p)
        lo = Fraction(-b) if lo == -INF else lo
        hi = Fraction(b) if hi == INF else hi
    return Fraction(lo), Fraction(hi)


def isolate_real_roots(coeffs, lo=-INF, hi=INF) -> list[RootInterval]:
    """Isolate every real root of ``coeffs`` lying in the closed ``[lo, hi]``.

    ``coeffs`` are ascending rational coefficients.  The result is sorted
    and pairwise disjoint; each interval holds exactly one distinct root.
    """
    p = _primitive_int(coeffs)
    if not p:
        raise ZeroPolynomial("cannot isolate roots of the zero polynomial")
    if len(p) == 1:
        return []
    if lo > hi:
        return []
    return _isolate_int(p, lo, hi)


def _isolate_int(p, lo, hi):
    if len(p) == 2:
        r = Fraction(-p[0], p[1])
        return [RootInterval(r, r, True)] if lo <= r <= hi else []
    a, b = _window(p, lo, hi)
    if a == b:
        return [RootInterval(a, a, _multiplicity_odd(p, a))] if _eval_sign_rational(p, a) == 0 else []
    out = []
    for end in (a, b):
        if _eval_sign_rational(p, end) == 0:
            out.append(RootInterval(end, end, _multiplicity_odd(p, end)))
    work = p
    try:
        opens, exacts = _isolate01(_strip_zero_root(_compose_affine_int(work, a, b - a)))
    except _NeedSquareFree:
        work = _square_free_int(p)
        opens, exacts = _isolate01(
            _strip_zero_root(_compose_affine_int(work, a, b - a)), max_depth=4096
        )
    w = b - a
    for m, k in exacts:
        x = a + w * Fraction(m, 1 << k)
        out.append(RootInterval(x, x, _multiplicity_odd(p, x)))
    sqf = tuple(work) if work is not p else ()
    for c, k in opens:
        x0 = a + w * Fraction(c, 1 << k)
        x1 = a + w * Fraction(c + 1, 1 << k)
        out.append(_tighten(p, work, x0, x1, sqf))
    out.sort(key=lambda r: r.lo)
    # neighbouring bisection cells may share a (non-root) endpoint; bisect
    # the left cell until its upper end moves off that point
    for k in range(len(out) - 1):
        r = out[k]
        lo_, hi_ = r.lo, r.hi
        while lo_ < hi_ and hi_ == out[k + 1].lo:
            m = _snap_mid(lo_, hi_)
            if _eval_sign_rational(work, m) == 0:
                lo_ = hi_ = m
            elif _count_open(work, lo_, m) >= 1:
                hi_ = m
            else:
                lo_ = m
        if (lo_, hi_) != (r.lo, r.hi):
            out[k] = (RootInterval(lo_, lo_, _multiplicity_odd(p, lo_)) if lo_ == hi_
                      else _tighten(p, work, lo_, hi_, sqf))
    return out


def _strip_zero_root(q):
    while q and q[0] == 0:
        q = q[1:]
    return q


def _tighten(p, s, a, b, sqf):
    """Shrink (a, b) so that neither endpoint is a root of s."""
    while _eval_sign_rational(s, a) == 0 or _eval_sign_rational(s, b) == 0:
        m = _snap_mid(a, b)
        if _eval_sign_rational(s, m) == 0:
            return RootInterval(m, m, _multiplicity_odd(p, m))
        if _count_open(s, a, m) >= 1:
            b = m
        else:
            a = m
    sign_change = _eval_sign_rational(p, a) != _eval_sign_rational(p, b)
    return RootInterval(a, b, sign_change, sqf)


def simplest_dyadic_between(a: Fraction, b: Fraction) -> Fraction:
    """Dyadic rational in [a, b] with the smallest denominator."""
    if a > b:
        raise ValueError("empty interval")
    if math.ceil(a) <= b:
        lo_i, hi_i = math.ceil(a), math.floor(b)
        if lo_i <= 0 <= hi_i:
            return Fraction(0)
        return Fraction(lo_i if lo_i > 0 else hi_i)
    # the smallest k with an integer in [a 2^k, b 2^k]; existence is monotone in k
    an, ad, bn, bd = a.numerator, a.denominator, b.numerator, b.denominator

    def first(k):
        m = -((-an << k) // ad)
        return m if m * bd <= bn << k else None

    hi = 1
    while first(hi) is None:
        hi *= 2
    lo = hi // 2 + 1 if hi > 1 else 1
    while lo < hi:
        mid = (lo + hi) // 2
        if first(mid) is None:
            lo = mid + 1
        else:
            hi = mid
    return Fraction(first(hi), 1 << hi)


def _snap_mid(a: Fraction, b: Fraction) -> Fraction:
    q = (b - a) / 4
    return simplest_dyadic_between(a + q, b - q)


def refine_root(coeffs, root: RootInterval, tol=None) -> Fraction:
    """Materialize a root as a rational within ``tol`` of the true root.

    Linear roots and roots hit exactly by bisection are returned exactly;
    a rational root with a small denominator is detected and returned
    exactly as well.  Otherwise the result is a dyadic rational.
    """
    if root.lo == root.hi:
        return root.lo
    if tol is None:
        tol = EXACT.eps_root
    tol = Fraction(tol)
    s = list(root._sqf) if root._sqf else _primitive_int(coeffs)
    if len(s) == 2:
        return Fraction(-s[0], s[1])
    a, b = root.lo, root.hi
    sa = _eval_sign_rational(s, a)
    if sa == 0 or _eval_sign_rational(s, b) == 0 or sa == _eval_sign_rational(s, b):
        # even multiplicity in the given polynomial: refine its square-free part
        s = _square_free_int(s)
        sa = _eval_sign_rational(s, a)
    while b - a > tol:
        m = _snap_mid(a, b)
        if m.denominator & (m.denominator - 1) == 0:
            sm = _eval_sign_dyadic(s, m.numerator, m.denominator.bit_length() - 1)
        else:
            sm = _eval_sign_rational(s, m)
        if sm == 0:
            return m
        if sm == sa:
            a = m
        else:
            b = m
    cand = _simplest_rational(a, b)
    if _eval_sign_rational(s, cand) == 0:
        return cand
    return simplest_dyadic_between(a, b)


def _simplest_rational(a: Fraction, b: Fraction) -> Fraction:
    """Fraction in [a, b] with the smallest denominator (Stern-Brocot)."""
    # continued-fraction walk
    fl = math.floor(a)
    if fl + 1 <= b or a == fl:
        return Fraction(math.ceil(a))
    a0, b0 = a - fl, b - fl  # 0 < a0 <= b0 < 1 after the check above
    inner = _simplest_rational(1 / b0, 1 / a0)
    return fl + 1 / inner


def real_roots(coeffs, lo=-INF, hi=INF, tol=None):
    """Materialized roots in ``[lo, hi]`` as ``(value, exact, sign_change)``.

    The zero polynomial has no isolated roots and yields an empty list.
    """
    p = _primitive_int(coeffs)
    if len(p) <= 1 or lo > hi:
        return []
    out = []
    for r in _isolate_int(p, lo, hi):
        if r.exact:
            out.append((r.lo, True, r.sign_change))
        else:
            x = refine_root(None, r, tol) if r._sqf else _refine_int(p, r, tol)
            out.append((x, _eval_sign_rational(p, x) == 0, r.sign_change))
    return out


def _refine_int(p, r, tol):
    return refine_root(p, RootInterval(r.lo, r.hi, r.sign_change, tuple(p)), tol)
