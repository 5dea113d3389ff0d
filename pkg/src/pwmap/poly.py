"""Exact univariate polynomials and affine maps.

A `UniPoly` stores primitive integer numerators plus one positive common
denominator, so arithmetic runs on machine-friendly Python integers and
only normalizes once per operation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .numeric import INF, ZeroPolynomial, rational_to_str, real_roots, to_rational

__all__ = ["UniPoly", "AffineFunc", "VariableMismatch"]


class VariableMismatch(ValueError):
    """Arithmetic between polynomials in different variables."""


def _normalize(num, den):
    num = list(num)
    while num and num[-1] == 0:
        num.pop()
    if not num:
        return (), 1
    g = den
    for c in num:
        g = math.gcd(g, c)
        if g == 1:
            break
    if den < 0:
        g = -g
    if g != 1:
        num = [c // g for c in num]
        den //= g
    return tuple(num), den


class UniPoly:
    """Polynomial with rational coefficients in a single named variable."""

    __slots__ = ("num", "den", "var", "_hash")

    def __init__(self, coeffs=(), var=None):
        coeffs = [to_rational(c) for c in coeffs]
        lcm = 1
        for c in coeffs:
            lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
        num = [c.numerator * (lcm // c.denominator) for c in coeffs]
        self.num, self.den = _normalize(num, lcm)
        self.var = var
        self._hash = None

    @classmethod
    def _raw(cls, num, den, var):
        p = cls.__new__(cls)
        p.num, p.den = _normalize(num, den)
        p.var = var
        p._hash = None
        return p

    @classmethod
    def const(cls, c, var=None) -> "UniPoly":
        return cls([c], var)

    @classmethod
    def identity(cls, var=None) -> "UniPoly":
        return cls._raw([0, 1], 1, var)

    # -- basic properties -------------------------------------------------

    @property
    def coeffs(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(c, self.den) for c in self.num)

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.num) - 1

    def is_zero(self) -> bool:
        return not self.num

    def is_const(self) -> bool:
        return len(self.num) <= 1

    def constant_value(self) -> Fraction:
        return Fraction(self.num[0], self.den) if self.num else Fraction(0)

    def with_var(self, var) -> "UniPoly":
        return UniPoly._raw(self.num, self.den, var)

    def __repr__(self):
        terms = ", ".join(rational_to_str(c) for c in self.coeffs)
        return f"UniPoly([{terms}], var={self.var!r})"

    def __eq__(self, other):
        if not isinstance(other, UniPoly):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    # -- evaluation -------------------------------------------------------

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x) -> Fraction:
        """Exact value at a rational point."""
        if not self.num:
            return Fraction(0)
        x = Fraction(x)
        a, b = x.numerator, x.denominator
        num = self.num
        h = num[-1]
        bp = b
        for c in reversed(num[:-1]):
            h = h * a + c * bp
            bp *= b
        # bp == b ** (n + 1) now; divide back one factor
        return Fraction(h, self.den * (bp // b))

    def eval_float(self, x: float) -> float:
        h = 0.0
        for c in reversed(self.num):
            h = h * x + c
        return h / self.den

    def float_coeffs(self) -> list[float]:
        return [c / self.den for c in self.num]

    def sign_at(self, x) -> int:
        v = self.eval(x)
        return (v > 0) - (v < 0)

    def limit_sign_at_inf(self, direction: int) -> int:
        """Sign of the polynomial as x tends to +inf (1) or -inf (-1)."""
        if not self.num:
            return 0
        lead = 1 if self.num[-1] > 0 else -1
        if direction < 0 and self.degree % 2 == 1:
            lead = -lead
        return lead

    def eval_ext(self, x):
        """Value at an extended real; +-inf for non-constant at infinity."""
        if isinstance(x, float) and math.isinf(x):
            if self.degree <= 0:
                return self.constant_value()
            return INF * self.limit_sign_at_inf(1 if x > 0 else -1)
        return self.eval(x)

    # -- arithmetic -------------------------------------------------------

    def _var_join(self, other):
        if self.var is None or not self.num or len(self.num) == 1:
            return other.var if other.var is not None else self.var
        if other.var is None or len(other.num) <= 1 or other.var == self.var:
            return self.var
        raise VariableMismatch(f"{self.var!r} vs {other.var!r}")

    def _coerce(self, other):
        if isinstance(other, UniPoly):
            return other
        return UniPoly.const(other, self.var)

    def __add__(self, other):
        other = self._coerce(other)
        var = self._var_join(other)
        a, b = self.num, other.num
        da, db = self.den, other.den
        n = max(len(a), len(b))
        out = [0] * n
        for i, c in enumerate(a):
            out[i] += c * db
        for i, c in enumerate(b):
            out[i] += c * da
        return UniPoly._raw(out, da * db, var)

    __radd__ = __add__

    def __neg__(self):
        return UniPoly._raw([-c for c in self.num], self.den, self.var)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, UniPoly):
            c = to_rational(other)
            return UniPoly._raw([v * c.numerator for v in self.num], self.den * c.denominator, self.var)
        var = self._var_join(other)
        a, b = self.num, other.num
        if not a or not b:
            return UniPoly._raw([], 1, var)
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return UniPoly._raw(out, self.den * other.den, var)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = UniPoly.const(1, self.var)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def derivative(self) -> "UniPoly":
        return UniPoly._raw([k * c for k, c in enumerate(self.num)][1:], self.den, self.var)

    def antiderivative(self) -> "UniPoly":
        """Antiderivative with zero constant term."""
        if not self.num:
            return self
        lcm = 1
        for k in range(1, len(self.num) + 1):
            lcm = lcm * k // math.gcd(lcm, k)
        out = [0] + [c * (lcm // (k + 1)) for k, c in enumerate(self.num)]
        return UniPoly._raw(out, self.den * lcm, self.var)

    def compose_affine(self, f: "AffineFunc") -> "UniPoly":
        """Return p(f(y)) as a polynomial in f's input variable."""
        s, t = f.slope, f.intercept
        var = f.var
        if not self.num:
            return UniPoly._raw([], 1, var)
        d = s.denominator * t.denominator // math.gcd(s.denominator, t.denominator)
        a = t.numerator * (d // t.denominator)  # constant part of (a + b y) / d
        b = s.numerator * (d // s.denominator)
        num = self.num
        acc = [num[-1]]
        dpow = d
        for c in reversed(num[:-1]):
            nxt = [0] * (len(acc) + 1)
            for i, v in enumerate(acc):
                if v:
                    nxt[i] += v * a
                    nxt[i + 1] += v * b
            nxt[0] += c * dpow
            dpow *= d
            acc = nxt
        # acc / d^(n) with n = degree
        return UniPoly._raw(acc, self.den * (dpow // d), var)

    # -- roots ------------------------------------------------------------

    def roots_in(self, lo=-INF, hi=INF, tol=None) -> list[Fraction]:
        """Sorted materialized real roots in the closed interval [lo, hi].

        Raises `ZeroPolynomial` for the zero polynomial.
        """
        if not self.coeffs:
            raise ZeroPolynomial("the zero polynomial has no isolated roots")
        return self._roots_in(lo, hi, tol)

    def _roots_in(self, lo=-INF, hi=INF, tol=None) -> list[Fraction]:
        # internal variant: the zero polynomial simply has no roots to report
        return [r for r, _, _ in real_roots(self.coeffs, lo, hi, tol)]

    def roots_detail(self, lo=-INF, hi=INF, tol=None):
        """Roots as ``(value, exact, sign_change)`` triples."""
        return real_roots(self.coeffs, lo, hi, tol)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> list[str]:
        return [rational_to_str(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, data, var=None) -> "UniPoly":
        return cls([to_rational(c) for c in data], var)


@dataclass(frozen=True)
class AffineFunc:
    """y -> slope * y + intercept, where y is the variable ``var``."""

    slope: Fraction
    intercept: Fraction
    var: object = None

    def __post_init__(self):
        object.__setattr__(self, "slope", Fraction(self.slope))
        object.__setattr__(self, "intercept", Fraction(self.intercept))

    def __call__(self, y):
        if isinstance(y, float) and math.isinf(y):
            if self.slope == 0:
                return self.intercept
            return y if self.slope > 0 else -y
        return self.slope * y + self.intercept

    def is_const(self) -> bool:
        return self.slope == 0

    def preimage(self, x) -> Fraction:
        """The y with f(y) = x; only defined for non-constant maps."""
        if self.slope == 0:
            raise ZeroDivisionError("constant affine map has no preimage")
        return (Fraction(x) - self.intercept) / self.slope

    def as_poly(self) -> UniPoly:
        return UniPoly([self.intercept, self.slope], self.var)

    def __repr__(self):
        return f"AffineFunc({self.slope} * {self.var} + {self.intercept})"
