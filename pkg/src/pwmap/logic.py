"""Linear real arithmetic formulas in CNF, primal graphs and polytopes.

Atoms are linear (in)equalities ``sum_v a_v x_v  op  c`` with exact
rational coefficients.  A `CnfFormula` carries a mandatory box for every
variable.  `Polytope` is a conjunction of literals plus that box and
supports exact feasibility and bounding-box queries through `ExactLP`.
"""
from __future__ import annotations

import json
import math
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .lp import ExactLP, Unbounded
from .numeric import rational_to_str, to_rational
from .poly import AffineFunc

__all__ = [
    "LE", "LT", "GE", "GT", "EQ",
    "LinearAtom",
    "Literal",
    "Variable",
    "CnfFormula",
    "PrimalGraph",
    "NotAForest",
    "Unbounded",
    "Polytope",
    "Cell",
    "build_primal_graph",
    "critical_points",
    "find_symbolic_bounds_in",
    "feasible",
    "bounding_box",
    "smtlib_to_formula",
]

LE, LT, GE, GT, EQ = "<=", "<", ">=", ">", "="
_OPS = (LE, LT, GE, GT, EQ)
_FLIP = {LE: GE, LT: GT, GE: LE, GT: LT, EQ: EQ}
_NEG = {LE: GT, LT: GE, GE: LT, GT: LE}
_OP_ALIASES = {"LE": LE, "LT": LT, "GE": GE, "GT": GT, "EQ": EQ, "==": EQ,
               "<=": LE, "<": LT, ">=": GE, ">": GT, "=": EQ}


class NotAForest(ValueError):
    """The primal graph has a cycle or a clause couples more than two variables."""


def _num(x) -> str:
    return str(x) if isinstance(x, Fraction) else rational_to_str(x)


@dataclass(frozen=True)
class LinearAtom:
    """``sum(coef * var) op constant`` in canonical form.

    Canonical form scales the coefficients to coprime integers with a
    positive leading (first by variable name) coefficient.
    """

    terms: tuple
    constant: Fraction
    op: str

    @classmethod
    def make(cls, coeffs: dict, op: str, constant=0) -> "LinearAtom":
        op = _OP_ALIASES.get(op, op)
        if op not in _OPS:
            raise ValueError(f"unknown comparison {op!r}")
        items = sorted((str(v), Fraction(to_rational(a))) for v, a in coeffs.items())
        items = [(v, a) for v, a in items if a != 0]
        constant = Fraction(to_rational(constant))
        if not items:
            return cls((), constant, op)
        lcm = 1
        for _, a in items:
            lcm = lcm * a.denominator // math.gcd(lcm, a.denominator)
        ints = [int(a * lcm) for _, a in items]
        g = 0
        for c in ints:
            g = math.gcd(g, c)
        scale = Fraction(lcm, g)
        if items[0][1] < 0:
            scale = -scale
            op = _FLIP[op]
        terms = tuple((v, a * scale) for v, a in items)
        return cls(terms, constant * scale, op)

    @property
    def variables(self) -> tuple:
        return tuple(v for v, _ in self.terms)

    def coeff(self, var) -> Fraction:
        for v, a in self.terms:
            if v == var:
                return a
        return Fraction(0)

    def lhs(self, point) -> Fraction:
        return sum((a * Fraction(point[v]) for v, a in self.terms), Fraction(0))

    def holds(self, point) -> bool:
        s = self.lhs(point)
        c = self.constant
        return {LE: s <= c, LT: s < c, GE: s >= c, GT: s > c, EQ: s == c}[self.op]

    def holds_np(self, X: np.ndarray, index: dict, tol: float = 0.0) -> np.ndarray:
        s = np.zeros(X.shape[0])
        for v, a in self.terms:
            s = s + float(a) * X[:, index[v]]
        c = float(self.constant)
        if self.op in (LE, LT):
            return s <= c + tol if self.op == LE else s < c + tol
        if self.op in (GE, GT):
            return s >= c - tol if self.op == GE else s > c - tol
        return np.abs(s - c) <= tol

    def __str__(self):
        lhs = " + ".join(f"{_num(a)}*{v}" for v, a in self.terms) or "0"
        return f"{lhs} {self.op} {_num(self.constant)}"


@dataclass(frozen=True)
class Literal:
    atom: LinearAtom
    negated: bool = False

    def holds(self, point) -> bool:
        return self.atom.holds(point) != self.negated

    def holds_np(self, X, index, tol=0.0):
        if self.negated and self.atom.op == EQ:
            return ~self.atom.holds_np(X, index, -tol)
        return self.effective().holds_np(X, index, tol)

    def negate(self) -> "Literal":
        return Literal(self.atom, not self.negated)

    def effective(self) -> LinearAtom:
        """The atom with negation pushed into the comparison."""
        if not self.negated:
            return self.atom
        if self.atom.op == EQ:
            raise ValueError("a negated equality is not a single halfspace")
        return LinearAtom(self.atom.terms, self.atom.constant, _NEG[self.atom.op])

    def rows(self):
        """Halfspace rows ``(coeffs, rhs, strict)`` meaning coeffs.x (<|<=) rhs."""
        a = self.effective()
        coeffs = dict(a.terms)
        neg = {v: -c for v, c in coeffs.items()}
        if a.op == LE:
            return [(coeffs, a.constant, False)]
        if a.op == LT:
            return [(coeffs, a.constant, True)]
        if a.op == GE:
            return [(neg, -a.constant, False)]
        if a.op == GT:
            return [(neg, -a.constant, True)]
        return [(coeffs, a.constant, False), (neg, -a.constant, False)]

    @property
    def variables(self):
        return self.atom.variables

    def to_json(self) -> dict:
        return {
            "coeffs": {v: rational_to_str(a) for v, a in self.atom.terms},
            "const": rational_to_str(self.atom.constant),
            "op": self.atom.op,
            "negated": self.negated,
        }

    @classmethod
    def from_json(cls, d) -> "Literal":
        atom = LinearAtom.make(d["coeffs"], d["op"], d.get("const", 0))
        return cls(atom, bool(d.get("negated", False)))

    def __str__(self):
        return f"not({self.atom})" if self.negated else str(self.atom)


@dataclass(frozen=True)
class Variable:
    name: str
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", to_rational(self.lo))
        object.__setattr__(self, "hi", to_rational(self.hi))
        if isinstance(self.lo, float) or isinstance(self.hi, float):
            raise ValueError(f"variable {self.name} needs a finite box")
        if self.lo > self.hi:
            raise ValueError(f"variable {self.name} has an empty box")


def _expand_equalities(clause):
    """Rewrite a clause so that it contains no (negated) equality literal."""
    options = []
    for lit in clause:
        if lit.atom.op != EQ:
            options.append([[lit]])
            continue
        le = LinearAtom(lit.atom.terms, lit.atom.constant, LE)
        ge = LinearAtom(lit.atom.terms, lit.atom.constant, GE)
        if lit.negated:
            # x != c  ==  x < c  or  x > c
            options.append([[Literal(le, True), Literal(ge, True)]])
        else:
            # x == c  ==  (x <= c) and (x >= c): distributes over the clause
            options.append([[Literal(le)], [Literal(ge)]])
    out = []
    for combo in product(*options):
        lits = []
        for part in combo:
            lits.extend(part)
        out.append(tuple(dict.fromkeys(lits)))
    return out


class CnfFormula:
    """Conjunction of clauses over boxed real variables."""

    def __init__(self, variables, clauses=()):
        self.variables = [v if isinstance(v, Variable) else Variable(*v) for v in variables]
        self.index = {v.name: k for k, v in enumerate(self.variables)}
        if len(self.index) != len(self.variables):
            raise ValueError("duplicate variable names")
        out = []
        for clause in clauses:
            clause = tuple(clause)
            for lit in clause:
                for v in lit.variables:
                    if v not in self.index:
                        raise ValueError(f"unknown variable {v!r} in clause")
            out.extend(_expand_equalities(clause))
        self.clauses = out

    @property
    def names(self):
        return [v.name for v in self.variables]

    def box(self, name):
        v = self.variables[self.index[name]]
        return v.lo, v.hi

    def atoms(self) -> list:
        seen = {}
        for clause in self.clauses:
            for lit in clause:
                seen.setdefault(lit.atom, None)
        return list(seen)

    def box_literals(self) -> list:
        out = []
        for v in self.variables:
            out.append(Literal(LinearAtom.make({v.name: 1}, GE, v.lo)))
            out.append(Literal(LinearAtom.make({v.name: 1}, LE, v.hi)))
        return out

    def in_box(self, point) -> bool:
        return all(v.lo <= Fraction(point[v.name]) <= v.hi for v in self.variables)

    def holds(self, point) -> bool:
        """Exact satisfaction check, box included."""
        if not self.in_box(point):
            return False
        return all(any(l.holds(point) for l in c) for c in self.clauses)

    def holds_np(self, X: np.ndarray, tol: float = 0.0) -> np.ndarray:
        ok = np.ones(X.shape[0], dtype=bool)
        for k, v in enumerate(self.variables):
            ok &= (X[:, k] >= float(v.lo) - tol) & (X[:, k] <= float(v.hi) + tol)
        for c in self.clauses:
            sat = np.zeros(X.shape[0], dtype=bool)
            for lit in c:
                sat |= lit.holds_np(X, self.index, tol)
            ok &= sat
        return ok

    def clauses_over(self, names) -> list:
        names = set(names)
        return [c for c in self.clauses if {v for l in c for v in l.variables} == names]

    def to_json(self) -> dict:
        return {
            "variables": [{"name": v.name, "lo": rational_to_str(v.lo), "hi": rational_to_str(v.hi)}
                          for v in self.variables],
            "clauses": [[l.to_json() for l in c] for c in self.clauses],
        }

    @classmethod
    def from_json(cls, d) -> "CnfFormula":
        variables = [Variable(v["name"], v["lo"], v["hi"]) for v in d["variables"]]
        clauses = [[Literal.from_json(l) for l in c] for c in d.get("clauses", [])]
        return cls(variables, clauses)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# primal graph


@dataclass
class PrimalGraph:
    nodes: list
    adjacency: dict
    diameter: int = 0
    components: list = field(default_factory=list)

    def edges(self):
        out = []
        for a in self.nodes:
            for b in sorted(self.adjacency[a], key=self.nodes.index):
                if self.nodes.index(a) < self.nodes.index(b):
                    out.append((a, b))
        return out

    def center(self, component=None):
        """A minimum-eccentricity node (ties: first in node order)."""
        comp = component if component is not None else self.nodes
        best, best_ecc = None, None
        for n in comp:
            ecc = max(_bfs(self.adjacency, n).values())
            if best_ecc is None or ecc < best_ecc:
                best, best_ecc = n, ecc
        return best


def _bfs(adj, src):
    dist = {src: 0}
    queue = deque([src])
    while queue:
        a = queue.popleft()
        for b in adj[a]:
            if b not in dist:
                dist[b] = dist[a] + 1
                queue.append(b)
    return dist


def build_primal_graph(formula: CnfFormula, extra_edges=()) -> PrimalGraph:
    """Primal graph of the formula plus extra (density) edges.

    Raises `NotAForest` if a clause mentions more than two variables, an
    atom couples more than two, or the graph contains a cycle.
    """
    nodes = formula.names
    adj = {n: set() for n in nodes}
    pairs = set()
    for c in formula.clauses:
        vs = sorted({v for l in c for v in l.variables})
        if len(vs) > 2:
            raise NotAForest(f"clause couples {len(vs)} variables")
        if len(vs) == 2:
            pairs.add(tuple(vs))
    for a, b in extra_edges:
        if a != b:
            pairs.add(tuple(sorted((a, b))))
    for a, b in pairs:
        adj[a].add(b)
        adj[b].add(a)
    seen = set()
    comps = []
    for n in nodes:
        if n in seen:
            continue
        comp = list(_bfs(adj, n))
        seen.update(comp)
        comps.append([m for m in nodes if m in set(comp)])
        n_edges = sum(len(adj[m]) for m in comp) // 2
        if n_edges != len(comp) - 1:
            raise NotAForest("primal graph contains a cycle")
    diameter = 0
    for comp in comps:
        for n in comp:
            diameter = max(diameter, max(_bfs(adj, n).values()))
    return PrimalGraph(nodes, adj, diameter, comps)


# ---------------------------------------------------------------------------
# bivariate geometry for message passing


@dataclass(frozen=True)
class Cell:
    """A maximal x_i interval [l(x_j), u(x_j)] with a constant label."""

    lower: AffineFunc
    upper: AffineFunc
    lower_closed: bool
    upper_closed: bool
    label: object


def _line_in(atom: LinearAtom, xi, xj):
    """Boundary of an atom as x_i = f(x_j), or ('vertical', y) or None."""
    ai, aj = atom.coeff(xi), atom.coeff(xj)
    if any(v not in (xi, xj) for v in atom.variables):
        return None
    if ai != 0:
        return AffineFunc(-aj / ai, atom.constant / ai, xj)
    if aj != 0:
        return ("vertical", atom.constant / aj)
    return None


def critical_points(atoms, xi, xj, box_i, box_j) -> list:
    """x_j values where the x_i-cell structure of the atoms can change.

    Includes the x_j box ends, vertical boundaries, and every pairwise
    intersection of the boundary lines (box lines of x_i included).
    """
    lo_j, hi_j = box_j
    pts = {Fraction(lo_j), Fraction(hi_j)}
    lines = {AffineFunc(0, box_i[0], xj), AffineFunc(0, box_i[1], xj)}
    for a in atoms:
        ln = _line_in(a, xi, xj)
        if ln is None:
            continue
        if isinstance(ln, tuple):
            pts.add(ln[1])
        else:
            lines.add(ln)
    lines = sorted(lines, key=lambda f: (f.slope, f.intercept))
    for k, f in enumerate(lines):
        for g in lines[k + 1:]:
            if f.slope != g.slope:
                pts.add((g.intercept - f.intercept) / (f.slope - g.slope))
    return sorted(p for p in pts if lo_j <= p <= hi_j)


def find_symbolic_bounds_in(lo, hi, atoms, classify, xi, xj, box_i) -> list:
    """Cells of x_i for x_j ranging over the interval between lo and hi.

    ``lo == hi`` denotes a single point; otherwise the open interval must
    contain no critical point.  ``classify`` maps a dict of atom truth
    values to a label, or None where the point is excluded.  Returns the
    maximal runs of equal non-None label as `Cell` objects, sorted.
    """
    point = lo == hi
    y0 = Fraction(lo) if point else (Fraction(lo) + Fraction(hi)) / 2
    bi_lo, bi_hi = Fraction(box_i[0]), Fraction(box_i[1])
    funcs = {}
    for f in [AffineFunc(0, bi_lo, xj), AffineFunc(0, bi_hi, xj)]:
        funcs.setdefault(f(y0), f)
    for a in atoms:
        ln = _line_in(a, xi, xj)
        if ln is None or isinstance(ln, tuple):
            continue
        v = ln(y0)
        if bi_lo <= v <= bi_hi:
            # inside an open interval, lines meeting at y0 are identical
            funcs.setdefault(v, ln)
    order = sorted(funcs)
    if point:
        lines = [AffineFunc(0, v, xj) for v in order]
    else:
        lines = [funcs[v] for v in order]
    elements = []  # (kind, k): point at order[k] or gap (order[k], order[k+1])
    for k, v in enumerate(order):
        elements.append(("pt", k, v))
        if k + 1 < len(order):
            elements.append(("gap", k, (v + order[k + 1]) / 2))
    testers = [(a, _threshold_test(a, xi, xj, y0)) for a in atoms
               if set(a.variables) <= {xi, xj}]
    cells = []
    run = None
    for kind, k, xv in elements:
        truth = {a: test(xv) for a, test in testers}
        label = classify(truth)
        if run is not None and label == run[3]:
            run[1], run[2] = kind, k
            continue
        if run is not None:
            cells.append(_close_run(run, lines))
            run = None
        if label is not None:
            run = [(kind, k), kind, k, label]
    if run is not None:
        cells.append(_close_run(run, lines))
    return cells


def _threshold_test(atom: LinearAtom, xi, xj, y0):
    """The atom at x_j = y0 as a predicate on x_i."""
    ai = atom.coeff(xi)
    rest = atom.constant - atom.coeff(xj) * y0
    op = atom.op
    if ai == 0:
        truth = LinearAtom((), rest, op).holds({})
        return lambda x: truth
    t = rest / ai
    if ai < 0:
        op = _FLIP[op]
    return {
        LE: lambda x: x <= t,
        LT: lambda x: x < t,
        GE: lambda x: x >= t,
        GT: lambda x: x > t,
        EQ: lambda x: x == t,
    }[op]


def _close_run(run, lines):
    (k0kind, k0), k1kind, k1, label = run
    lower = lines[k0]
    lower_closed = k0kind == "pt"
    if k1kind == "pt":
        upper, upper_closed = lines[k1], True
    else:
        upper, upper_closed = lines[k1 + 1], False
    return Cell(lower, upper, lower_closed, upper_closed, label)


# ---------------------------------------------------------------------------
# polytopes


class Polytope:
    """Conjunction of literals intersected with a variable box."""

    def __init__(self, literals, variables):
        self.literals = tuple(literals)
        self.variables = list(variables)
        self.names = [v.name for v in self.variables]
        self.index = {n: k for k, n in enumerate(self.names)}
        self._box = None
        self._float = None

    def rows(self):
        out = []
        for lit in self.literals:
            for coeffs, rhs, strict in lit.rows():
                out.append(({self.index[v]: a for v, a in coeffs.items()}, rhs, strict))
        return out

    def lp(self) -> ExactLP:
        bounds = [(v.lo, v.hi) for v in self.variables]
        return ExactLP(self.rows(), bounds)

    def contains(self, point) -> bool:
        return all(v.lo <= Fraction(point[v.name]) <= v.hi for v in self.variables) and all(
            l.holds(point) for l in self.literals)

    def float_rows(self):
        """(A, b, strict) float arrays including the box rows."""
        if self._float is None:
            d = len(self.names)
            A, b, s = [], [], []
            for coeffs, rhs, strict in self.rows():
                row = np.zeros(d)
                for k, a in coeffs.items():
                    row[k] = float(a)
                A.append(row)
                b.append(float(rhs))
                s.append(strict)
            for k, v in enumerate(self.variables):
                e = np.zeros(d)
                e[k] = 1.0
                A.append(e.copy())
                b.append(float(v.hi))
                s.append(False)
                A.append(-e)
                b.append(-float(v.lo))
                s.append(False)
            self._float = (np.array(A).reshape(-1, d), np.array(b), np.array(s, dtype=bool))
        return self._float

    def contains_np(self, X, tol=0.0):
        A, b, _ = self.float_rows()
        return np.all(X @ A.T <= b + tol, axis=1)

    def feasible(self):
        ok, w = self.lp().feasible()
        if not ok:
            return False, None
        return True, dict(zip(self.names, w))

    def bounding_box(self) -> dict:
        if self._box is None:
            lp = self.lp()
            box = {}
            for k, n in enumerate(self.names):
                lo = lp.optimize({k: 1}, maximize=False)
                if lo is None:
                    raise ValueError("bounding box of an empty polytope")
                hi = lp.optimize({k: 1}, maximize=True)
                box[n] = (lo[0], hi[0])
            self._box = box
        return self._box

    def __repr__(self):
        return "Polytope(" + " & ".join(str(l) for l in self.literals) + ")"


def feasible(polytope: Polytope):
    """Exact emptiness test; returns ``(True, witness)`` or ``(False, None)``."""
    return polytope.feasible()


def bounding_box(polytope: Polytope) -> dict:
    """Exact per-variable [min, max] of the polytope's closure."""
    return polytope.bounding_box()


# ---------------------------------------------------------------------------
# SMT-LIB2 subset


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def _parse_sexprs(text):
    text = re.sub(r";[^\n]*", "", text)
    stack = [[]]
    for tok in _TOKEN.findall(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ValueError("unbalanced parentheses")
    return stack[0]


def _linear(expr, names):
    """Linear term -> (coeff dict, constant)."""
    if isinstance(expr, str):
        if expr in names:
            return {expr: Fraction(1)}, Fraction(0)
        return {}, Fraction(expr)
    head, *args = expr
    if head == "+":
        coeffs, const = {}, Fraction(0)
        for a in args:
            c, k = _linear(a, names)
            for v, x in c.items():
                coeffs[v] = coeffs.get(v, 0) + x
            const += k
        return coeffs, const
    if head == "-":
        c0, k0 = _linear(args[0], names)
        if len(args) == 1:
            return {v: -x for v, x in c0.items()}, -k0
        for a in args[1:]:
            c, k = _linear(a, names)
            for v, x in c.items():
                c0[v] = c0.get(v, 0) - x
            k0 -= k
        return c0, k0
    if head == "*":
        coeffs, const = {}, Fraction(1)
        for a in args:
            c, k = _linear(a, names)
            if c and coeffs:
                raise ValueError("non-linear product")
            if c:
                coeffs = c
            else:
                const *= k
        if not coeffs:
            return {}, const
        return {v: x * const for v, x in coeffs.items()}, Fraction(0)
    if head == "/":
        c, k = _linear(args[0], names)
        _, d = _linear(args[1], names)
        return {v: x / d for v, x in c.items()}, k / d
    raise ValueError(f"unsupported term {head!r}")


def _to_nnf(expr, names, negate=False):
    if isinstance(expr, str):
        if expr in ("true", "false"):
            val = (expr == "true") != negate
            return ("const", val)
        raise ValueError(f"unsupported boolean {expr!r}")
    head, *args = expr
    if head == "not":
        return _to_nnf(args[0], names, not negate)
    if head in ("and", "or"):
        op = head if not negate else ("or" if head == "and" else "and")
        return (op, [_to_nnf(a, names, negate) for a in args])
    if head == "=>":
        return _to_nnf(["or", ["not", args[0]], args[1]], names, negate)
    if head in ("<=", "<", ">=", ">", "="):
        lc, lk = _linear(args[0], names)
        rc, rk = _linear(args[1], names)
        coeffs = dict(lc)
        for v, x in rc.items():
            coeffs[v] = coeffs.get(v, 0) - x
        return ("lit", Literal(LinearAtom.make(coeffs, head, rk - lk), negate))
    raise ValueError(f"unsupported connective {head!r}")


def _cnf(node):
    kind = node[0]
    if kind == "lit":
        return [[node[1]]]
    if kind == "const":
        return [] if node[1] else [[]]
    if kind == "and":
        out = []
        for a in node[1]:
            out.extend(_cnf(a))
        return out
    # or: distribute
    out = [[]]
    for a in node[1]:
        sub = _cnf(a)
        out = [x + y for x in out for y in sub]
    return out


def smtlib_to_formula(text: str, default_box=None) -> CnfFormula:
    """Convert a QF_LRA SMT-LIB2 script (and/or/not/=> over linear atoms).

    Variable boxes are read from unit bound assertions such as
    ``(assert (<= 0 x))``; variables without both bounds use ``default_box``
    or raise ValueError.
    """
    names = []
    asserts = []
    for form in _parse_sexprs(text):
        if not isinstance(form, list) or not form:
            continue
        head = form[0]
        if head == "declare-fun":
            if form[2] != [] or form[3] != "Real":
                raise ValueError("only nullary Real declarations are supported")
            names.append(form[1])
        elif head == "declare-const":
            if form[2] != "Real":
                raise ValueError("only Real constants are supported")
            names.append(form[1])
        elif head == "assert":
            asserts.append(form[1])
    clauses = []
    nameset = set(names)
    for a in asserts:
        clauses.extend(_cnf(_to_nnf(a, nameset)))
    bounds = {n: [None, None] for n in names}
    rest = []
    for c in clauses:
        if len(c) == 1 and len(c[0].variables) == 1 and not c[0].negated:
            atom = c[0].atom
            v = atom.variables[0]
            a = atom.coeff(v)
            val = atom.constant / a
            if atom.op in (LE, GE):  # canonical atoms have a > 0
                k = 1 if atom.op == LE else 0
                old = bounds[v][k]
                bounds[v][k] = val if old is None else (min(old, val) if k else max(old, val))
                continue
        rest.append(c)
    variables = []
    for n in names:
        lo, hi = bounds[n]
        if lo is None or hi is None:
            if default_box is None:
                raise ValueError(f"variable {n} lacks a box")
            lo = lo if lo is not None else Fraction(default_box[0])
            hi = hi if hi is not None else Fraction(default_box[1])
        variables.append(Variable(n, lo, hi))
    return CnfFormula(variables, rest)
