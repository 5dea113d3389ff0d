"""Exact constrained MAP on tree-shaped problems by message passing.

Each variable x_i owns a node factor (its box, its univariate clauses
and its node density).  Each tree edge (child i, parent j) owns the
bivariate clauses and the edge density.  Messages flow leaves-to-root:

    m_{i->j}(y) = max over cells of  right(y) * max_out(left * gather_i, l, u)(y)

where gather_i is the node factor times the messages of i's children and the cells
come from the arrangement of the edge's atom lines.  Message pieces keep
argmax records, so the maximizer is recovered top-down once the root's
gathered function has been maximized.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .logic import (
    CnfFormula,
    NotAForest,
    build_primal_graph,
    critical_points,
    find_symbolic_bounds_in,
)
from .maxout import max_out
from .numeric import EXACT, INF, ScalarBackend
from .piecewise import (
    EXP,
    POLY,
    MixedKind,
    Piece,
    PieceFunc,
    PiecewiseFunc,
    _elementary_cells,
    final_max_score,
    interval_sample,
    pw_max,
    pw_product,
    pw_scale,
    pw_simplify,
)
from .poly import UniPoly
from .problem import EdgePiece, NonSeparableFactor, Problem, split_bivariate

__all__ = [
    "Unsatisfiable",
    "Timeout",
    "NotAForest",
    "NonSeparableFactor",
    "MixedKind",
    "FactorGraph",
    "Message",
    "MapResult",
    "validate_and_admit",
    "gather_msgs",
    "compute_msgs",
    "solve",
    "backtrack_argmax",
]

log = logging.getLogger(__name__)


class Unsatisfiable(ValueError):
    """No point satisfies the constraints (or every such point has zero density)."""


class Timeout(RuntimeError):
    """The solver exceeded its deadline."""


@dataclass
class EdgeData:
    child: str
    parent: str
    atoms: list
    clauses: list
    pieces: list  # EdgePiece with separable bodies, oriented (child, parent)


@dataclass
class FactorGraph:
    problem: Problem
    roots: list
    parent: dict
    children: dict
    order: list  # leaves first
    node_clauses: dict
    node_factor: dict  # name -> PiecewiseFunc (node factor)
    edges: dict  # child name -> EdgeData
    diameter: int
    constant_false: bool = False


@dataclass
class Message:
    """A message to ``target`` with the argmax records of the eliminated subtree."""

    source: str
    target: str
    value: PiecewiseFunc
    eliminated: list = field(default_factory=list)  # (var, parent var, message value)


@dataclass
class MapResult:
    value: object
    assignment: dict
    attained: bool
    stats: dict = field(default_factory=dict)
    log_value: Fraction | None = None

    def to_json(self) -> dict:
        from .numeric import rational_to_str

        def fmt(v):
            return rational_to_str(v) if isinstance(v, Fraction) else v

        out = {
            "value": fmt(self.value),
            "value_float": float(self.value),
            "assignment": {k: fmt(v) for k, v in self.assignment.items()},
            "attained": self.attained,
            "stats": self.stats,
        }
        if self.log_value is not None:
            out["log_value"] = fmt(self.log_value)
        return out


# ---------------------------------------------------------------------------
# admission


def _orient(piece: EdgePiece, u: str, child: str, kind: str) -> EdgePiece:
    """Separable piece with ``left`` over the child and ``right`` over the parent."""
    if piece.separable:
        left, right = piece.left, piece.right
    else:
        lc, rc = split_bivariate(piece.terms, kind)
        left, right = UniPoly(lc), UniPoly(rc)
    if u != child:
        left, right = right, left
    return EdgePiece(piece.guard, left, right)


def _node_function(problem: Problem, name: str, clauses) -> PiecewiseFunc:
    """The node factor as a piecewise function on the box of x_i."""
    lo, hi = (Fraction(v) for v in problem.formula.box(name))
    pieces = problem.node_factors.get(name)
    atoms = {l.atom for c in clauses for l in c}
    if pieces:
        atoms |= {l.atom for p in pieces for l in p.guard}
    pts = {lo, hi}
    for a in atoms:
        c = a.coeff(name)
        if c:
            t = a.constant / c
            if lo < t < hi:
                pts.add(t)
    unit = Fraction(1) if problem.kind == POLY else Fraction(0)
    out = []
    for clo, lc, chi, hc in _elementary_cells(sorted(pts)):
        if clo == -INF or chi == INF:
            continue
        x = clo if lc else interval_sample(clo, chi)
        if not (lo <= x <= hi):
            continue
        pt = {name: x}
        if not all(any(l.holds(pt) for l in c) for c in clauses):
            continue
        if pieces is None:
            body = UniPoly.const(unit, name)
        else:
            body = next((p.body for p in pieces if all(l.holds(pt) for l in p.guard)), None)
            if body is None:
                if problem.kind == EXP:
                    continue
                body = UniPoly.const(0, name)
        out.append(Piece(clo, lc, chi, hc, PieceFunc(problem.kind, body.with_var(name))))
    return pw_simplify(PiecewiseFunc(out, name, check=False))


def validate_and_admit(problem: Problem, root=None) -> FactorGraph:
    """Check the tree hypotheses and build the rooted factor graph.

    Raises `NotAForest` for cycles or clauses over more than two variables,
    `NonSeparableFactor` for edge bodies that do not split, and `MixedKind`
    when a body is of the wrong family.  ``root`` forces the root of the
    tree containing it; other trees are rooted at their centers.
    """
    formula: CnfFormula = problem.formula
    if problem.kind not in (POLY, EXP):
        raise MixedKind(f"unknown density kind {problem.kind!r}")
    for ef in problem.edge_factors:
        for p in ef.pieces:
            for l in p.guard:
                if not set(l.variables) <= {ef.u, ef.v}:
                    raise NotAForest("edge guard mentions a foreign variable")
    for name, pieces in problem.node_factors.items():
        for p in pieces:
            for l in p.guard:
                if not set(l.variables) <= {name}:
                    raise NotAForest("node guard mentions a foreign variable")
    graph = build_primal_graph(formula, problem.edges())
    constant_false = False
    node_clauses = {n: [] for n in graph.nodes}
    pair_clauses = {}
    for c in formula.clauses:
        vs = sorted({v for l in c for v in l.variables})
        if not vs:
            if not any(l.holds({}) for l in c):
                constant_false = True
        elif len(vs) == 1:
            node_clauses[vs[0]].append(c)
        else:
            pair_clauses.setdefault(tuple(vs), []).append(c)
    parent, children, order, roots = {}, {n: [] for n in graph.nodes}, [], []
    for comp in graph.components:
        r = root if root in comp else graph.center(comp)
        roots.append(r)
        seen, frontier, bfs = {r}, [r], [r]
        while frontier:
            nxt = []
            for a in frontier:
                for b in sorted(graph.adjacency[a], key=graph.nodes.index):
                    if b not in seen:
                        seen.add(b)
                        parent[b] = a
                        children[a].append(b)
                        nxt.append(b)
            bfs.extend(nxt)
            frontier = nxt
        order.extend(reversed(bfs))
    edge_factor_by_pair = {}
    for ef in problem.edge_factors:
        key = tuple(sorted((ef.u, ef.v)))
        edge_factor_by_pair.setdefault(key, []).append(ef)
    edges = {}
    for child, par in parent.items():
        key = tuple(sorted((child, par)))
        clauses = pair_clauses.get(key, [])
        factors = edge_factor_by_pair.get(key, [])
        if len(factors) > 1:
            raise NonSeparableFactor("several density factors on one edge; merge them first")
        pieces = []
        if factors:
            ef = factors[0]
            pieces = [_orient(p, ef.u, child, problem.kind) for p in ef.pieces]
        atoms = list(dict.fromkeys([l.atom for c in clauses for l in c] +
                                   [l.atom for p in pieces for l in p.guard]))
        edges[child] = EdgeData(child, par, atoms, clauses, pieces if factors else None)
    node_factor = {n: _node_function(problem, n, node_clauses[n]) for n in graph.nodes}
    return FactorGraph(problem, roots, parent, children, order, node_clauses, node_factor,
                       edges, graph.diameter, constant_false)


# ---------------------------------------------------------------------------
# messages


def _round_float(f: PiecewiseFunc) -> PiecewiseFunc:
    def rnd(p):
        body = p.body
        coeffs = [Fraction(float(c)) for c in body.coeffs]
        return p.replace(func=PieceFunc(p.kind, UniPoly(coeffs, body.var)))
    return f.map_pieces(rnd)


def gather_msgs(fg: FactorGraph, name: str, messages: dict) -> PiecewiseFunc:
    """The node factor times every child message of x_i."""
    out = fg.node_factor[name]
    for c in fg.children[name]:
        out = pw_product(messages[c].value.with_var(name), out, tag=None)
    return out


def _classifier(edge: EdgeData, kind: str):
    clause_atoms = edge.clauses
    pieces = edge.pieces

    def classify(truth):
        for c in clause_atoms:
            if not any(truth[l.atom] != l.negated for l in c):
                return None
        if pieces is None:
            return "unit"
        for k, p in enumerate(pieces):
            if all(truth[l.atom] != l.negated for l in p.guard):
                return k
        return "zero" if kind == POLY else None

    return classify


def _bodies(edge: EdgeData, label, kind, child, parent):
    unit = 1 if kind == POLY else 0
    if label == "unit":
        return UniPoly.const(unit, child), UniPoly.const(unit, parent)
    if label == "zero":
        return UniPoly.const(0, child), UniPoly.const(1, parent)
    p = edge.pieces[label]
    return p.left.with_var(child), p.right.with_var(parent)


def _hull_restrict(q: PiecewiseFunc, cell, ylo, yhi) -> PiecewiseFunc:
    lo_vals = [cell.lower(ylo), cell.lower(yhi)]
    hi_vals = [cell.upper(ylo), cell.upper(yhi)]
    lo, hi = min(lo_vals), max(hi_vals)
    lo_closed = cell.lower_closed or not cell.lower.is_const
    hi_closed = cell.upper_closed or not cell.upper.is_const
    if lo == hi and not (lo_closed and hi_closed):
        return PiecewiseFunc([], q.var)
    return q.restrict(lo, lo_closed, hi, hi_closed)


def compute_msgs(fg: FactorGraph, child: str, gathered: PiecewiseFunc, backend=EXACT,
                 deadline=None) -> Message:
    """Eliminate x_child from its edge factor and the gathered function."""
    problem = fg.problem
    edge = fg.edges[child]
    parent = edge.parent
    kind = problem.kind
    box_i = problem.formula.box(child)
    box_j = problem.formula.box(parent)
    tol = backend.eps_root
    classify = _classifier(edge, kind)
    crit = critical_points(edge.atoms, child, parent, box_i, box_j)
    intervals = []
    for k, c in enumerate(crit):
        intervals.append((c, c))
        if k + 1 < len(crit):
            intervals.append((c, crit[k + 1]))
    weighted = {}
    out = []
    n_cells = 0
    for ylo, yhi in intervals:
        _check(deadline)
        cells = find_symbolic_bounds_in(ylo, yhi, edge.atoms, classify, child, parent, box_i)
        parts = []
        for cell in cells:
            n_cells += 1
            if cell.label not in weighted:
                left, right = _bodies(edge, cell.label, kind, child, parent)
                q = pw_scale(gathered, PieceFunc(kind, left))
                weighted[cell.label] = (q, PieceFunc(kind, right))
            q, right = weighted[cell.label]
            q = _hull_restrict(q, cell, ylo, yhi)
            if not q.pieces:
                continue
            m = max_out(q, cell.lower, cell.upper, tol)
            if ylo == yhi:
                m = m.restrict(ylo, True, ylo, True)
            else:
                m = m.restrict(ylo, False, yhi, False)
            if m.pieces:
                parts.append(pw_scale(m, right))
        if parts:
            best, _ = pw_max(parts, tol)
            out.extend(best.pieces)
    value = pw_simplify(PiecewiseFunc(out, parent, check=False))
    if backend.mode == "float":
        value = _round_float(value)
    msg = Message(child, parent, value)
    msg.stats = {"pieces": len(value.pieces), "cells": n_cells, "critical_points": len(crit),
                 "max_degree": value.max_degree(), "in_pieces": len(gathered.pieces)}
    return msg


def _check(deadline):
    if deadline is not None and time.monotonic() > deadline:
        raise Timeout("message passing exceeded its deadline")


# ---------------------------------------------------------------------------
# solving


def _piece_near(f: PiecewiseFunc, x):
    """Piece containing x, or one with x as an endpoint whose limit is largest."""
    p = f.piece_at(x)
    if p is not None:
        return p
    best = None
    for q in f.pieces:
        if q.lo == x or q.hi == x:
            s = q.func.score(x)
            if best is None or s > best[0]:
                best = (s, q)
    return best[1] if best else None


def backtrack_argmax(root: str, root_value, fg: FactorGraph, messages: dict) -> dict:
    """Materialize the subtree below ``root`` from the stored argmax records."""
    assignment = {root: Fraction(root_value)}
    stack = [root]
    while stack:
        j = stack.pop()
        for c in fg.children[j]:
            p = _piece_near(messages[c].value, assignment[j])
            if p is None or p.tag is None:
                lo, hi = fg.problem.formula.box(c)
                assignment[c] = Fraction(lo)
            else:
                assignment[c] = Fraction(p.tag(assignment[j]))
            stack.append(c)
    return assignment


def solve(problem: Problem, backend: ScalarBackend = EXACT, deadline: float | None = None,
          root=None, emit_messages=None) -> MapResult:
    """Exact constrained MAP of a tree-shaped problem.

    ``deadline`` is a budget in seconds.  ``emit_messages`` (a callable)
    receives every computed `Message`.  Raises `Unsatisfiable` when the
    feasible set (with nonzero density, for exp-polynomial densities) is
    empty.
    """
    t0 = time.monotonic()
    stop = None if deadline is None else t0 + deadline
    fg = validate_and_admit(problem, root)
    if fg.constant_false:
        raise Unsatisfiable("a clause without variables is false")
    messages = {}
    stats = {"messages": [], "roots": list(fg.roots), "diameter": fg.diameter}
    gathered_root = {}
    for name in fg.order:
        _check(stop)
        g = gather_msgs(fg, name, messages)
        if backend.mode == "float":
            g = _round_float(g)
        if name in fg.parent:
            msg = compute_msgs(fg, name, g, backend, stop)
            messages[name] = msg
            stats["messages"].append({"from": name, "to": msg.target, **msg.stats})
            if emit_messages is not None:
                emit_messages(msg)
        else:
            gathered_root[name] = g
    total = Fraction(0) if problem.kind == EXP else Fraction(1)
    assignment = {}
    for r in fg.roots:
        g = gathered_root[r]
        if not g.pieces:
            raise Unsatisfiable(f"no feasible value for the tree rooted at {r}")
        score, arg, _ = final_max_score(g, backend.eps_root)
        assignment.update(backtrack_argmax(r, arg, fg, messages))
        total = total + score if problem.kind == EXP else total * score
    assignment = {n: assignment[n] for n in problem.names}
    stats["seconds"] = time.monotonic() - t0
    stats["max_pieces"] = max((m["pieces"] for m in stats["messages"]), default=0)
    feasible = problem.satisfies(assignment)
    if problem.kind == EXP:
        value = math.exp(total)
        dens = problem.log_density(assignment)
        attained = feasible and dens is not None and abs(dens - total) <= 1e-9 * (1 + abs(total))
        return MapResult(value, assignment, attained, stats, log_value=total)
    dens = problem.density(assignment)
    attained = feasible and abs(dens - total) <= Fraction(1, 10**9) * max(1, abs(total))
    return MapResult(total, assignment, attained, stats)
