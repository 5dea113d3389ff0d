"""Constrained MAP problems: a CNF formula plus a factorized density.

The density is a product of node factors f_i(x_i) and edge factors
f_ij(x_i, x_j).  Every factor is piecewise: the first piece whose guard (a
conjunction of literals) holds gives the value, and a point covered by no
piece has density zero.  Edge pieces are separable, left(x_i) * right(x_j)
(or exp(left + right) for the exp-polynomial kind); general bivariate
bodies are accepted for PA-MAP and factorized when possible.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .logic import CnfFormula, Literal, Polytope
from .numeric import rational_to_str, real_roots, to_rational
from .piecewise import EXP, POLY
from .poly import UniPoly

__all__ = [
    "NonSeparableFactor",
    "MultiPoly",
    "NodePiece",
    "EdgePiece",
    "EdgeFactor",
    "Problem",
    "DensityPiece",
]


class NonSeparableFactor(ValueError):
    """An edge factor body does not split into univariate parts."""


# ---------------------------------------------------------------------------
# multivariate polynomials (only what PA-MAP needs)


class MultiPoly:
    """Sparse polynomial: {exponent tuple: coefficient} over named variables."""

    def __init__(self, terms: dict, names):
        self.names = list(names)
        self.terms = {tuple(e): Fraction(c) for e, c in terms.items() if c != 0}

    @classmethod
    def const(cls, c, names):
        return cls({(0,) * len(names): Fraction(c)}, names)

    @classmethod
    def from_uni(cls, p: UniPoly, var, names):
        k = names.index(var)
        terms = {}
        for d, c in enumerate(p.coeffs):
            e = [0] * len(names)
            e[k] = d
            terms[tuple(e)] = c
        return cls(terms, names)

    def __mul__(self, other: "MultiPoly") -> "MultiPoly":
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return MultiPoly(out, self.names)

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return MultiPoly(out, self.names)

    def eval(self, point) -> Fraction:
        xs = [Fraction(point[n]) for n in self.names]
        total = Fraction(0)
        for e, c in self.terms.items():
            t = c
            for x, k in zip(xs, e):
                if k:
                    t *= x ** k
            total += t
        return total

    def eval_np(self, X):
        out = np.zeros(X.shape[0])
        for e, c in self.terms.items():
            t = np.full(X.shape[0], float(c))
            for k, p in enumerate(e):
                if p:
                    t = t * X[:, k] ** p
            out += t
        return out

    def grad_np(self, X):
        g = np.zeros_like(X, dtype=float)
        for e, c in self.terms.items():
            for j, pj in enumerate(e):
                if not pj:
                    continue
                t = np.full(X.shape[0], float(c) * pj)
                for k, p in enumerate(e):
                    q = p - 1 if k == j else p
                    if q:
                        t = t * X[:, k] ** q
                g[:, j] += t
        return g

    def abs_bound(self, box: dict) -> Fraction:
        """Interval-arithmetic bound on |p| over a box."""
        total = Fraction(0)
        mags = [max(abs(Fraction(box[n][0])), abs(Fraction(box[n][1]))) for n in self.names]
        for e, c in self.terms.items():
            t = abs(c)
            for m, k in zip(mags, e):
                if k:
                    t *= m ** k
            total += t
        return total

    def to_json(self):
        return [{"exps": list(e), "coeff": rational_to_str(c)} for e, c in sorted(self.terms.items())]


def split_bivariate(terms: dict, kind: str):
    """Factor {(a, b): c} into univariate (left, right) lists or raise.

    Polynomial bodies need a rank-one coefficient matrix; exp-polynomial
    exponents must be additively separable (no mixed monomials).
    """
    terms = {k: Fraction(v) for k, v in terms.items() if v != 0}
    if not terms:
        return [Fraction(0)], [Fraction(1)]
    da = max(a for a, _ in terms)
    db = max(b for _, b in terms)
    if kind == EXP:
        if any(a and b for a, b in terms):
            raise NonSeparableFactor("exponent has mixed monomials")
        left = [terms.get((a, 0), Fraction(0)) for a in range(da + 1)]
        right = [Fraction(0)] + [terms.get((0, b), Fraction(0)) for b in range(1, db + 1)]
        return left, right
    (a0, b0), piv = next(iter(sorted(terms.items())))
    left = [terms.get((a, b0), Fraction(0)) for a in range(da + 1)]
    right = [terms.get((a0, b), Fraction(0)) / piv for b in range(db + 1)]
    for a in range(da + 1):
        for b in range(db + 1):
            if terms.get((a, b), 0) != left[a] * right[b]:
                raise NonSeparableFactor("bivariate body is not a product of univariate parts")
    return left, right


# ---------------------------------------------------------------------------
# factors


def _guard_holds(guard, point) -> bool:
    return all(l.holds(point) for l in guard)


def _guard_np(guard, X, index):
    ok = np.ones(X.shape[0], dtype=bool)
    for l in guard:
        ok &= l.holds_np(X, index)
    return ok


@dataclass
class NodePiece:
    guard: tuple
    body: UniPoly


@dataclass
class EdgePiece:
    """Either separable (``left``, ``right``) or a general ``terms`` body."""

    guard: tuple
    left: UniPoly | None = None
    right: UniPoly | None = None
    terms: dict | None = None

    @property
    def separable(self) -> bool:
        return self.left is not None


@dataclass
class EdgeFactor:
    u: str
    v: str
    pieces: list = field(default_factory=list)


def _uni_np(p: UniPoly, x):
    return np.polynomial.polynomial.polyval(x, p.float_coeffs() or [0.0])


def _duni_np(p: UniPoly, x):
    return _uni_np(p.derivative(), x)


class Problem:
    """A CNF formula, a density kind and piecewise factors."""

    def __init__(self, formula: CnfFormula, kind=POLY, node_factors=None, edge_factors=()):
        if kind not in (POLY, EXP):
            raise ValueError(f"unknown density kind {kind!r}")
        self.formula = formula
        self.kind = kind
        self.node_factors = dict(node_factors or {})
        self.edge_factors = list(edge_factors)
        self.names = formula.names
        self.index = formula.index
        for name in self.node_factors:
            if name not in self.index:
                raise ValueError(f"node factor on unknown variable {name!r}")
        for ef in self.edge_factors:
            if ef.u not in self.index or ef.v not in self.index:
                raise ValueError("edge factor on unknown variable")

    # -- evaluation -------------------------------------------------------

    def _node_score(self, name, x):
        pieces = self.node_factors.get(name)
        if pieces is None:
            return self._unit()
        for p in pieces:
            if _guard_holds(p.guard, {name: x}):
                return p.body.eval(x)
        return None

    def _unit(self):
        return Fraction(1) if self.kind == POLY else Fraction(0)

    def log_density(self, point):
        """Exact exponent for exp-polynomial problems; None if zero."""
        if self.kind != EXP:
            raise ValueError("log_density is only defined for exp-polynomial densities")
        total = Fraction(0)
        for name in self.node_factors:
            v = self._node_score(name, Fraction(point[name]))
            if v is None:
                return None
            total += v
        for ef in self.edge_factors:
            v = self._edge_value(ef, point)
            if v is None:
                return None
            total += v
        return total

    def density(self, point):
        """Exact density (Fraction) for polynomials, float for exp kind."""
        point = {k: Fraction(v) for k, v in point.items()}
        if self.kind == EXP:
            s = self.log_density(point)
            return 0.0 if s is None else math.exp(s)
        total = Fraction(1)
        for name in self.node_factors:
            v = self._node_score(name, point[name])
            if v is None:
                return Fraction(0)
            total *= v
        for ef in self.edge_factors:
            v = self._edge_value(ef, point)
            if v is None:
                return Fraction(0)
            total *= v
        return total

    def _edge_value(self, ef, point):
        for p in ef.pieces:
            if _guard_holds(p.guard, point):
                xu, xv = Fraction(point[ef.u]), Fraction(point[ef.v])
                if p.separable:
                    a, b = p.left.eval(xu), p.right.eval(xv)
                    return a * b if self.kind == POLY else a + b
                return sum((Fraction(c) * xu ** i * xv ** j for (i, j), c in p.terms.items()),
                           Fraction(0))
        return None

    def satisfies(self, point) -> bool:
        return self.formula.holds(point)

    def density_np(self, X):
        """Vectorized float density at the rows of X (columns = names)."""
        return self.density_and_grad_np(X, grad=False)[0]

    def density_and_grad_np(self, X, grad=True):
        X = np.asarray(X, dtype=float)
        n, d = X.shape
        if self.kind == POLY:
            val = np.ones(n)
            g = np.zeros((n, d)) if grad else None
        else:
            val = np.zeros(n)  # exponent
            g = np.zeros((n, d)) if grad else None
            covered = np.ones(n, dtype=bool)
        for name, pieces in self.node_factors.items():
            k = self.index[name]
            fv = np.zeros(n)
            fg = np.zeros(n)
            done = np.zeros(n, dtype=bool)
            for p in pieces:
                m = _guard_np(p.guard, X, self.index) & ~done
                if m.any():
                    fv[m] = _uni_np(p.body, X[m, k])
                    if grad:
                        fg[m] = _duni_np(p.body, X[m, k])
                done |= m
            val, g = self._combine(val, g, fv, fg, [k], done, grad)
            if self.kind == EXP:
                covered &= done
        for ef in self.edge_factors:
            i, j = self.index[ef.u], self.index[ef.v]
            fv = np.zeros(n)
            fgi = np.zeros(n)
            fgj = np.zeros(n)
            done = np.zeros(n, dtype=bool)
            for p in ef.pieces:
                m = _guard_np(p.guard, X, self.index) & ~done
                if not m.any():
                    done |= m
                    continue
                xi, xj = X[m, i], X[m, j]
                if p.separable:
                    a, b = _uni_np(p.left, xi), _uni_np(p.right, xj)
                    if self.kind == POLY:
                        fv[m] = a * b
                        if grad:
                            fgi[m] = _duni_np(p.left, xi) * b
                            fgj[m] = a * _duni_np(p.right, xj)
                    else:
                        fv[m] = a + b
                        if grad:
                            fgi[m] = _duni_np(p.left, xi)
                            fgj[m] = _duni_np(p.right, xj)
                else:
                    for (ei, ej), c in p.terms.items():
                        c = float(c)
                        fv[m] += c * xi ** ei * xj ** ej
                        if grad:
                            if ei:
                                fgi[m] += c * ei * xi ** (ei - 1) * xj ** ej
                            if ej:
                                fgj[m] += c * ej * xi ** ei * xj ** (ej - 1)
                done |= m
            val, g = self._combine(val, g, fv, (fgi, fgj), [i, j], done, grad)
            if self.kind == EXP:
                covered &= done
        if self.kind == EXP:
            out = np.where(covered, np.exp(val), 0.0)
            if grad:
                g = g * out[:, None]
            return out, g
        return val, g

    def _combine(self, val, g, fv, fg, cols, done, grad):
        fv = np.where(done, fv, 0.0)
        if self.kind == POLY:
            if grad:
                g = g * fv[:, None]
                parts = fg if isinstance(fg, tuple) else (fg,)
                for c, part in zip(cols, parts):
                    g[:, c] += val * np.where(done, part, 0.0)
            return val * fv, g
        if grad:
            parts = fg if isinstance(fg, tuple) else (fg,)
            for c, part in zip(cols, parts):
                g[:, c] += np.where(done, part, 0.0)
        return val + fv, g

    # -- structure --------------------------------------------------------

    def edges(self):
        return [(ef.u, ef.v) for ef in self.edge_factors]

    def guard_atoms(self):
        seen = {}
        for pieces in self.node_factors.values():
            for p in pieces:
                for l in p.guard:
                    seen.setdefault(l.atom, None)
        for ef in self.edge_factors:
            for p in ef.pieces:
                for l in p.guard:
                    seen.setdefault(l.atom, None)
        return list(seen)

    def density_pieces(self):
        """Feasible combinations of factor pieces as (guard, DensityPiece).

        A combination is kept when its joined guard meets the box.  Points
        covered by no combination have zero density.
        """
        factors = []
        for name, pieces in self.node_factors.items():
            factors.append([("node", name, p) for p in pieces])
        for ef in self.edge_factors:
            factors.append([("edge", ef, p) for p in ef.pieces])
        out = []
        variables = self.formula.variables

        def rec(k, guard, chosen):
            if guard:
                ok, _ = Polytope(guard, variables).feasible()
                if not ok:
                    return
            if k == len(factors):
                out.append((tuple(guard), DensityPiece.build(self, chosen)))
                return
            for item in factors[k]:
                rec(k + 1, guard + list(item[2].guard), chosen + [item])

        rec(0, [], [])
        return out

    # -- JSON -------------------------------------------------------------

    def to_json(self) -> dict:
        nodes = []
        for name, pieces in self.node_factors.items():
            nodes.append({"var": name, "pieces": [
                {"guard": [l.to_json() for l in p.guard], "coeffs": p.body.to_json()} for p in pieces]})
        edges = []
        for ef in self.edge_factors:
            ps = []
            for p in ef.pieces:
                d = {"guard": [l.to_json() for l in p.guard]}
                if p.separable:
                    d["left"] = p.left.to_json()
                    d["right"] = p.right.to_json()
                else:
                    d["terms"] = [{"exps": [a, b], "coeff": rational_to_str(c)}
                                  for (a, b), c in sorted(p.terms.items())]
                ps.append(d)
            edges.append({"vars": [ef.u, ef.v], "pieces": ps})
        return {"kind": self.kind, "formula": self.formula.to_json(),
                "node_factors": nodes, "edge_factors": edges}

    @classmethod
    def from_json(cls, d) -> "Problem":
        formula = CnfFormula.from_json(d["formula"])
        kind = d.get("kind", POLY)
        nodes = {}
        for nf in d.get("node_factors", []):
            name = nf["var"]
            nodes[name] = [NodePiece(tuple(Literal.from_json(l) for l in p.get("guard", [])),
                                     UniPoly.from_json(p["coeffs"], name)) for p in nf["pieces"]]
        edges = []
        for ef in d.get("edge_factors", []):
            u, v = ef["vars"]
            pieces = []
            for p in ef["pieces"]:
                guard = tuple(Literal.from_json(l) for l in p.get("guard", []))
                if "terms" in p:
                    terms = {(int(t["exps"][0]), int(t["exps"][1])): to_rational(t["coeff"])
                             for t in p["terms"]}
                    pieces.append(EdgePiece(guard, terms=terms))
                else:
                    pieces.append(EdgePiece(guard, UniPoly.from_json(p["left"], u),
                                            UniPoly.from_json(p["right"], v)))
            edges.append(EdgeFactor(u, v, pieces))
        return cls(formula, kind, nodes, edges)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)

    @classmethod
    def load(cls, path) -> "Problem":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())
            fh.write("\n")


# ---------------------------------------------------------------------------
# density restricted to one combination of factor pieces


class DensityPiece:
    """Density on a region where every factor uses one fixed piece.

    Separable pieces keep one univariate body per variable (a product for
    polynomials, a sum of exponents for the exp kind); a general edge body
    turns the piece into a `MultiPoly`.
    """

    def __init__(self, kind, names, per_var=None, multi=None):
        self.kind = kind
        self.names = list(names)
        self.per_var = per_var
        self.multi = multi

    @classmethod
    def build(cls, problem: Problem, chosen):
        kind = problem.kind
        names = problem.names
        unit = Fraction(1) if kind == POLY else Fraction(0)
        per_var = {n: UniPoly.const(unit, n) for n in names}
        general = []

        def join(n, p):
            per_var[n] = per_var[n] * p if kind == POLY else per_var[n] + p

        for tag, owner, p in chosen:
            if tag == "node":
                join(owner, p.body)
            elif p.separable:
                join(owner.u, p.left)
                join(owner.v, p.right)
            else:
                general.append((owner, p))
        if not general:
            return cls(kind, names, per_var=per_var)
        if kind == EXP:
            raise NonSeparableFactor("general exponents are not supported")
        multi = MultiPoly.const(1, names)
        for n in names:
            multi = multi * MultiPoly.from_uni(per_var[n], n, names)
        for ef, p in general:
            i, j = names.index(ef.u), names.index(ef.v)
            terms = {}
            for (a, b), c in p.terms.items():
                e = [0] * len(names)
                e[i] += a
                e[j] += b
                terms[tuple(e)] = terms.get(tuple(e), 0) + c
            multi = multi * MultiPoly(terms, names)
        return cls(kind, names, multi=multi)

    def value(self, point):
        if self.multi is not None:
            return self.multi.eval(point)
        if self.kind == POLY:
            out = Fraction(1)
            for n, p in self.per_var.items():
                out *= p.eval(Fraction(point[n]))
            return out
        return math.exp(sum((p.eval(Fraction(point[n])) for n, p in self.per_var.items()), Fraction(0)))

    def value_np(self, X):
        if self.multi is not None:
            return self.multi.eval_np(X)
        if self.kind == POLY:
            out = np.ones(X.shape[0])
            for k, n in enumerate(self.names):
                out = out * _uni_np(self.per_var[n], X[:, k])
            return out
        s = np.zeros(X.shape[0])
        for k, n in enumerate(self.names):
            s = s + _uni_np(self.per_var[n], X[:, k])
        return np.exp(s)

    def value_and_grad_np(self, X):
        if self.multi is not None:
            return self.multi.eval_np(X), self.multi.grad_np(X)
        n, d = X.shape
        if self.kind == POLY:
            vals = np.stack([_uni_np(self.per_var[m], X[:, k]) for k, m in enumerate(self.names)], 1)
            ders = np.stack([_duni_np(self.per_var[m], X[:, k]) for k, m in enumerate(self.names)], 1)
            g = np.zeros((n, d))
            for k in range(d):
                others = np.prod(np.delete(vals, k, axis=1), axis=1) if d > 1 else np.ones(n)
                g[:, k] = ders[:, k] * others
            return np.prod(vals, axis=1), g
        s = np.zeros(n)
        g = np.zeros((n, d))
        for k, m in enumerate(self.names):
            s += _uni_np(self.per_var[m], X[:, k])
            g[:, k] = _duni_np(self.per_var[m], X[:, k])
        v = np.exp(s)
        return v, g * v[:, None]

    def upper_bound(self, box: dict):
        """Sound upper bound of the density over a box (dict name -> (lo, hi)).

        Separable polynomial pieces multiply per-variable maxima of |body|,
        found at endpoints and critical points; irrational critical points
        get a tiny relative slack.  General bodies use interval arithmetic.
        """
        if self.multi is not None:
            return self.multi.abs_bound(box)
        if self.kind == POLY:
            out = Fraction(1)
            for n, p in self.per_var.items():
                out *= _abs_max(p, *box[n])
            return out
        total = Fraction(0)
        for n, p in self.per_var.items():
            total += _signed_max(p, *box[n])
        return math.exp(total)


def _extremes(p: UniPoly, lo, hi):
    lo, hi = Fraction(lo), Fraction(hi)
    vals = [(p.eval(lo), True), (p.eval(hi), True)]
    if p.degree >= 2 and lo < hi:
        for r, exact, _ in real_roots(p.derivative().coeffs, lo, hi):
            vals.append((p.eval(r), exact))
    return vals


def _slack(v, exact):
    return v if exact else v + abs(v) * Fraction(1, 10**9) + Fraction(1, 10**12)


def _abs_max(p: UniPoly, lo, hi) -> Fraction:
    return max(_slack(abs(v), ex) for v, ex in _extremes(p, lo, hi))


def _signed_max(p: UniPoly, lo, hi) -> Fraction:
    return max(_slack(v, ex) for v, ex in _extremes(p, lo, hi))
