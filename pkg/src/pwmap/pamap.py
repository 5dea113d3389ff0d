"""Anytime constrained MAP by convex polytope enumeration.

The feasible region is split into convex polytopes by enumerating truth
assignments of the formula's atoms (a DPLL search with exact feasibility
checks), once per density piece, so that every polytope sees a single
smooth body.  Each polytope is handed to a local optimizer; a polytope
whose upper bound cannot beat the incumbent is skipped.
"""
from __future__ import annotations

import hashlib
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .logic import CnfFormula, Literal, Polytope
from .mpmap import Unsatisfiable
from .numeric import rational_to_str
from .problem import DensityPiece, Problem

__all__ = [
    "NoFeasibleGridPoint",
    "ProjectionStalled",
    "Unsatisfiable",
    "Objective",
    "PolytopeEnumerator",
    "PamapResult",
    "OptimizerSpec",
    "upper_bound",
    "enumerate_polytopes",
    "pamap_solve",
    "pcadam",
    "grid_refine",
    "project_onto_polytope",
    "chebyshev_center",
]

log = logging.getLogger(__name__)

NEG_INF = -math.inf


class NoFeasibleGridPoint(ValueError):
    """No grid point in any recursion satisfied the constraints."""


class ProjectionStalled(RuntimeError):
    """Alternating projections did not reach the polytope."""


# ---------------------------------------------------------------------------
# objectives and regions


class Objective:
    """A density with float (vectorized, with gradient) and exact evaluation."""

    def __init__(self, names, fn_grad, exact):
        self.names = list(names)
        self.fn_grad = fn_grad
        self.exact = exact

    @classmethod
    def of(cls, density, names=None):
        if isinstance(density, Objective):
            return density
        if isinstance(density, Problem):
            return cls(density.names, density.density_and_grad_np, density.density)
        if isinstance(density, DensityPiece):
            return cls(density.names, density.value_and_grad_np, density.value)
        raise TypeError(f"cannot optimize {type(density).__name__}")

    def values(self, X):
        return self.fn_grad(X)[0]


class _Region:
    """Uniform view of a formula or a polytope: box, float and exact tests."""

    def __init__(self, region):
        self.region = region
        if isinstance(region, Polytope):
            self.names = region.names
            self._box = None
        elif isinstance(region, CnfFormula):
            self.names = region.names
            self._box = {n: region.box(n) for n in self.names}
        else:
            raise TypeError("expected a Polytope or a CnfFormula")

    def box(self):
        if self._box is None:
            self._box = self.region.bounding_box()
        return self._box

    def contains_np(self, X):
        if isinstance(self.region, Polytope):
            return self.region.contains_np(X)
        return self.region.holds_np(X)

    def contains(self, point) -> bool:
        if isinstance(self.region, Polytope):
            return self.region.contains(point)
        return self.region.holds(point)


def _to_point(names, row):
    return {n: Fraction(float(v)) for n, v in zip(names, row)}


def _better(v, best) -> bool:
    return best is None or best == NEG_INF or v > best


# ---------------------------------------------------------------------------
# upper bounds


def upper_bound(piece: DensityPiece, box: dict):
    """Sound upper bound of a density piece over a box (see `DensityPiece.upper_bound`)."""
    return piece.upper_bound(box)


# ---------------------------------------------------------------------------
# projection


def _float_rows(P: Polytope):
    A, b, strict = P.float_rows()
    return np.asarray(A, float), np.asarray(b, float), np.asarray(strict, bool)


def _dykstra(X, A, b, sweeps, tol=1e-10, nearest=True):
    """Dykstra's alternating projection of every row of X onto {A x <= b}.

    With ``nearest=False`` the corrections are dropped (plain cyclic
    projections) and the iteration stops at the first feasible sweep,
    which is all the particle optimizer needs.
    """
    X = np.array(X, dtype=float, copy=True)
    if A.shape[0] == 0:
        return X, True
    norms = np.einsum("ij,ij->i", A, A)
    norms[norms == 0] = 1.0
    inc = np.zeros((X.shape[0], A.shape[0], X.shape[1]))
    for _ in range(sweeps):
        prev = X
        for r in range(A.shape[0]):
            Y = X + inc[:, r, :] if nearest else X
            viol = Y @ A[r] - b[r]
            step = np.where(viol > 0, viol / norms[r], 0.0)
            Xn = Y - step[:, None] * A[r][None, :]
            inc[:, r, :] = Y - Xn
            X = Xn
        feasible = np.all(X @ A.T - b <= tol)
        if feasible and (not nearest or np.max(np.abs(X - prev)) <= tol):
            return X, True
    return X, bool(np.all(X @ A.T - b <= tol))


def _pull_inside(X, A, b, center, sweeps=5):
    """Cheap feasibility repair for particles.

    A few cyclic projections, then any row still outside is moved along
    the segment towards ``center`` (an interior point) until it enters.
    """
    X, ok = _dykstra(X, A, b, sweeps, tol=1e-12, nearest=False)
    if ok or center is None or np.any(A @ center > b):
        return X
    D = X - center
    slack = b - A @ center
    rate = D @ A.T
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(rate > slack, slack / rate, 1.0)
    t = np.clip(np.min(t, axis=1), 0.0, 1.0)
    return center + t[:, None] * D


def _solve_exact(M, rhs):
    """Least-norm solution of M z = rhs over rationals (Gauss-Jordan)."""
    rows = [list(r) + [v] for r, v in zip(M, rhs)]
    n = len(M[0]) if M else 0
    piv_cols = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        pv = rows[r][c]
        rows[r] = [v / pv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * bb for a, bb in zip(rows[i], rows[r])]
        piv_cols.append(c)
        r += 1
    if any(all(v == 0 for v in row[:-1]) and row[-1] != 0 for row in rows[r:]):
        return None
    return rows[:r], piv_cols


def _snap(x0, rows):
    """Exact orthogonal projection of x0 onto {a . x = b for (a, b) in rows}."""
    if not rows:
        return list(x0)
    A = [a for a, _ in rows]
    resid = [sum(ai * xi for ai, xi in zip(a, x0)) - bi for a, bi in rows]
    # x = x0 - A^T lam with (A A^T) lam = resid; drop dependent rows
    gram = [[sum(p * q for p, q in zip(a1, a2)) for a2 in A] for a1 in A]
    red = _solve_exact(gram, resid)
    if red is None:
        return None
    reduced, piv = red
    lam = [Fraction(0)] * len(A)
    for row, c in zip(reduced, piv):
        lam[c] = row[-1]
    return [xi - sum(lam[k] * A[k][j] for k in range(len(A))) for j, xi in enumerate(x0)]


def _exact_rows(P: Polytope):
    d = len(P.names)
    out = []
    for coeffs, rhs, strict in P.rows():
        a = [Fraction(0)] * d
        for k, v in coeffs.items():
            a[k] = Fraction(v)
        out.append((a, Fraction(rhs), strict))
    for k, v in enumerate(P.variables):
        e = [Fraction(0)] * d
        e[k] = Fraction(1)
        out.append((e, Fraction(v.hi), False))
        out.append(([-c for c in e], -Fraction(v.lo), False))
    return out


def _walk_inside(x, w, rows):
    """Move x toward an interior witness w until every row holds exactly."""
    t = Fraction(0)
    for a, b, strict in rows:
        ax = sum(ai * xi for ai, xi in zip(a, x))
        aw = sum(ai * wi for ai, wi in zip(a, w))
        if ax < b or (ax == b and not strict):
            continue
        # a.(x + t (w - x)) <= b  <=>  t >= (ax - b) / (ax - aw)
        need = (ax - b) / (ax - aw)
        if strict:
            need = (need + 1) / 2
        t = max(t, need)
    return [xi + t * (wi - xi) for xi, wi in zip(x, w)]


def project_onto_polytope(x, P: Polytope, max_sweeps: int = 1000, snap_tol: float = 1e-8):
    """Project a point onto P; the result satisfies P exactly.

    Dykstra's alternating projections run in floating point; the rows
    active at the float result (within ``snap_tol``) then define an affine
    subspace onto which the original point is projected exactly.  If the
    snapped point still misses P it is pulled toward an interior witness.
    Raises `ProjectionStalled` when the float iteration does not converge.
    """
    names = P.names
    if isinstance(x, dict):
        x0 = [Fraction(x[n]) for n in names]
    else:
        x0 = [Fraction(v) for v in x]
    pt = dict(zip(names, x0))
    if P.contains(pt):
        return pt
    A, b, _ = _float_rows(P)
    Xf, ok = _dykstra(np.array([[float(v) for v in x0]]), A, b, max_sweeps)
    if not ok:
        raise ProjectionStalled(f"no convergence after {max_sweeps} sweeps")
    xf = Xf[0]
    rows = _exact_rows(P)
    scale = 1.0 + float(np.max(np.abs(xf)))
    active = [(a, bb) for a, bb, _ in rows
              if abs(sum(float(ai) * v for ai, v in zip(a, xf)) - float(bb)) <= snap_tol * scale]
    cand = _snap(x0, active)
    if cand is None or not P.contains(dict(zip(names, cand))):
        cand = [Fraction(float(v)) for v in xf]
        if not P.contains(dict(zip(names, cand))):
            ok, w = P.feasible()
            if not ok:
                raise ValueError("cannot project onto an empty polytope")
            cand = _walk_inside(cand, [w[n] for n in names], rows)
    return dict(zip(names, cand))


def chebyshev_center(P: Polytope):
    """Centre of the largest inscribed ball (float LP), or None."""
    from scipy.optimize import linprog

    A, b, _ = _float_rows(P)
    d = A.shape[1]
    norms = np.linalg.norm(A, axis=1)
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A_ub = np.hstack([A, norms[:, None]])
    res = linprog(c, A_ub=A_ub, b_ub=b, bounds=[(None, None)] * d + [(0, None)], method="highs")
    if not res.success:
        return None
    return res.x[:d]


# ---------------------------------------------------------------------------
# optimizers


def _exact_check(obj: Objective, region: _Region, row, project_to=None):
    """Exact (value, point) of a float candidate, or None if infeasible."""
    pt = _to_point(region.names, row)
    if not region.contains(pt):
        if project_to is None:
            return None
        try:
            moved = project_onto_polytope(pt, project_to, max_sweeps=200)
        except (ProjectionStalled, ValueError):
            return None
        shift = max(abs(float(moved[n] - pt[n])) for n in region.names)
        if shift > 1e-6:
            log.info("candidate moved by %.3g when projected onto its polytope", shift)
        pt = moved
        if not region.contains(pt):
            return None
    return obj.exact(pt), pt


def pcadam(region, density, particles: int = 10, iterations: int = 500, step=0.1,
           init_points=None, seed: int = 0, project: bool = False, incumbent=NEG_INF,
           trajectory: list | None = None, deadline: float | None = None):
    """Particle Adam ascent with an exact feasibility gate.

    ``region`` is a `CnfFormula` or a `Polytope`.  All particles follow
    Adam (beta1 0.9, beta2 0.999, eps 1e-8) on the unconstrained density;
    after every step the best float-feasible particle that beats the
    incumbent is re-checked exactly.  With ``project`` (polytopes only)
    particles are projected back onto the polytope after each step.
    Returns ``(value, point)``; ``(-inf, {})`` when no particle was ever
    feasible.  ``trajectory`` collects the particle arrays per step.
    """
    reg = _Region(region)
    obj = Objective.of(density)
    names = reg.names
    if particles < 1:
        raise ValueError("particles must be positive")
    rng = np.random.default_rng(seed)
    if isinstance(region, CnfFormula):
        box = {n: region.box(n) for n in names}
    else:
        try:
            box = reg.box()
        except Exception:  # empty polytope
            return NEG_INF, {}
    lo = np.array([float(box[n][0]) for n in names])
    hi = np.array([float(box[n][1]) for n in names])
    if init_points is None:
        X = rng.uniform(lo, hi, size=(particles, len(names)))
    else:
        X = np.array(init_points, dtype=float).reshape(-1, len(names))
    proj = None
    if project and isinstance(region, Polytope):
        proj = _float_rows(region)
        center = chebyshev_center(region)
    best_v, best_pt = incumbent, {}
    best_f = -np.inf if incumbent == NEG_INF else float(incumbent)
    m = np.zeros_like(X)
    v = np.zeros_like(X)
    b1, b2, eps = 0.9, 0.999, 1e-8
    lr = float(step)
    stop = None if deadline is None else time.monotonic() + deadline

    def gate(X):
        nonlocal best_v, best_pt, best_f
        vals = obj.values(X)
        ok = reg.contains_np(X)
        cand = np.where(ok & (vals > best_f), vals, -np.inf)
        for k in np.argsort(-cand)[:3]:
            if cand[k] == -np.inf:
                break
            res = _exact_check(obj, reg, X[k])
            if res is not None and _better(res[0], best_v if best_pt else None):
                best_v, best_pt = res
                best_f = float(res[0])
                break

    gate(X)
    for t in range(1, iterations + 1):
        if stop is not None and time.monotonic() > stop:
            break
        _, g = obj.fn_grad(X)
        g = -np.nan_to_num(g)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mh = m / (1 - b1 ** t)
        vh = v / (1 - b2 ** t)
        X = X - lr * mh / (np.sqrt(vh) + eps)
        X = np.clip(X, lo, hi)
        if proj is not None:
            A, b, strict = proj
            inner = b - np.where(strict, 1e-9, 1e-12)
            out = np.any(X @ A.T > inner, axis=1)
            if out.any():
                X[out] = _pull_inside(X[out], A, inner, center)
        if trajectory is not None:
            trajectory.append(X.copy())
        gate(X)
    if not best_pt:
        return NEG_INF, {}
    return best_v, best_pt


def grid_refine(region, density, grid_per_dim: int = 10, recursions: int = 30, shrink=0.2,
                box=None):
    """Recursive grid search restricted to feasible grid points.

    Evaluates the density on a grid over the region's bounding box, keeps
    points that satisfy the region, and recurses on a box shrunk by
    ``shrink`` around the best point.  Returns ``(value, point)`` with an
    exact value at an exactly feasible point; raises `NoFeasibleGridPoint`
    if no grid point is ever feasible.  ``box`` (name -> (lo, hi))
    replaces the bounding box as the initial grid domain.
    """
    reg = _Region(region)
    obj = Objective.of(density)
    names = reg.names
    box = reg.box() if box is None else box
    lo = np.array([float(box[n][0]) for n in names])
    hi = np.array([float(box[n][1]) for n in names])
    clo, chi = lo.copy(), hi.copy()
    best_v, best_pt, best_x = None, None, None
    shrink = float(shrink)
    for _ in range(recursions + 1):
        axes = [np.linspace(clo[k], chi[k], grid_per_dim) for k in range(len(names))]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(names))
        pts = pts[reg.contains_np(pts)]
        if len(pts):
            vals = obj.values(pts)
            for k in np.argsort(-vals, kind="stable")[:5]:
                res = _exact_check(obj, reg, pts[k])
                if res is None:
                    continue
                if best_v is None or res[0] > best_v:
                    best_v, best_pt, best_x = res[0], res[1], pts[k].copy()
                break
        if best_x is None:
            continue
        half = (chi - clo) * shrink / 2
        clo = np.maximum(lo, best_x - half)
        chi = np.minimum(hi, best_x + half)
    if best_pt is None:
        raise NoFeasibleGridPoint("no feasible grid point found")
    return best_v, best_pt


# ---------------------------------------------------------------------------
# enumeration


@dataclass
class OptimizerSpec:
    kind: str = "adam"  # "adam" (particle Adam + one grid pass) or "grid"
    particles: int = 10
    iterations: int = 500
    lr: float = 0.1
    grid_per_dim: int = 10
    recursions: int = 30
    shrink: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("adam", "grid"):
            raise ValueError(f"unknown optimizer {self.kind!r}")
        if min(self.particles, self.iterations, self.grid_per_dim) < 1 or self.lr <= 0:
            raise ValueError("optimizer hyperparameters must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")


@dataclass
class EmittedPolytope:
    polytope: Polytope
    piece: DensityPiece
    piece_index: int
    assignment: tuple  # (atom index, truth) pairs

    @property
    def key(self) -> str:
        text = f"{self.piece_index}|" + ",".join(f"{i}{'T' if t else 'F'}" for i, t in self.assignment)
        return hashlib.sha256(text.encode()).hexdigest()


class PolytopeEnumerator:
    """DPLL enumeration of convex polytopes, one density piece at a time.

    Pieces are visited in decreasing order of their upper bound over the
    global box.  Inside a piece, atoms of the formula are assigned in a
    fixed order; a branch is cut as soon as a clause is falsified or the
    partial conjunction is infeasible.  Leaves (total assignments, or with
    ``partial`` the first point at which every clause is satisfied) are
    emitted; the search tree never revisits a leaf, which plays the role
    of the blocking clauses.  Pieces and polytopes whose upper bound does
    not exceed the incumbent ``lower_bound`` are skipped when ``prune``.
    """

    def __init__(self, problem: Problem, prune: bool = True, partial: bool = False,
                 pieces=None):
        self.problem = problem
        self.formula = problem.formula
        self.prune = prune
        self.partial = partial
        self.atoms = self.formula.atoms()
        self.atom_index = {a: k for k, a in enumerate(self.atoms)}
        self.clauses = [tuple((self.atom_index[l.atom], l.negated) for l in c)
                        for c in self.formula.clauses]
        self.lower_bound = NEG_INF
        self.pruned = 0
        self.pieces_pruned = 0
        self.emitted = 0
        self.blocking = []
        global_box = {n: self.formula.box(n) for n in self.formula.names}
        pieces = problem.density_pieces() if pieces is None else pieces
        ranked = [(piece.upper_bound(global_box), k, guard, piece)
                  for k, (guard, piece) in enumerate(pieces)]
        ranked.sort(key=lambda t: (-t[0], t[1]))
        self.pieces = ranked

    def update_lower_bound(self, value):
        if value is not None and (self.lower_bound == NEG_INF or value > self.lower_bound):
            self.lower_bound = value

    def _skip(self, ub) -> bool:
        return self.prune and self.lower_bound != NEG_INF and ub <= self.lower_bound

    def _clause_state(self, assign):
        """(any clause falsified, all clauses satisfied) under a partial assignment."""
        all_sat = True
        for c in self.clauses:
            sat = False
            undecided = False
            for i, neg in c:
                t = assign.get(i)
                if t is None:
                    undecided = True
                elif t != neg:
                    sat = True
                    break
            if not sat:
                if not undecided:
                    return True, False
                all_sat = False
        return False, all_sat

    def _literals(self, guard, assign):
        lits = list(guard)
        for i, t in sorted(assign.items()):
            lits.append(Literal(self.atoms[i], not t))
        return lits

    def __iter__(self):
        variables = self.formula.variables
        for ub, k, guard, piece in self.pieces:
            if self._skip(ub):
                self.pieces_pruned += 1
                continue
            if not Polytope(guard, variables).feasible()[0]:
                continue
            stack = [{}]
            while stack:
                assign = stack.pop()
                falsified, all_sat = self._clause_state(assign)
                if falsified:
                    continue
                P = Polytope(self._literals(guard, assign), variables)
                if assign and not P.feasible()[0]:
                    continue
                if len(assign) == len(self.atoms) or (self.partial and all_sat):
                    item = EmittedPolytope(P, piece, k, tuple(sorted(assign.items())))
                    self.blocking.append(item.assignment)
                    if self.prune and self.lower_bound != NEG_INF:
                        if piece.upper_bound(P.bounding_box()) <= self.lower_bound:
                            self.pruned += 1
                            continue
                    self.emitted += 1
                    yield item
                    continue
                i = len(assign)
                # push False first so True is explored first
                stack.append({**assign, i: False})
                stack.append({**assign, i: True})


def enumerate_polytopes(problem: Problem, prune=False, partial=False):
    """All emitted polytopes (no incumbent, so nothing is pruned)."""
    return list(PolytopeEnumerator(problem, prune=prune, partial=partial))


# ---------------------------------------------------------------------------
# driver


@dataclass
class PamapResult:
    value: object
    point: dict
    feasible: bool
    polytopes_enumerated: int
    polytopes_pruned: int
    seconds: float
    timed_out: bool = False
    history: list = field(default_factory=list)

    def to_json(self) -> dict:
        def fmt(v):
            if isinstance(v, Fraction):
                return rational_to_str(v)
            if isinstance(v, float) and math.isinf(v):
                return "-inf" if v < 0 else "inf"
            return v

        return {
            "value": fmt(self.value),
            "value_float": fmt(float(self.value)),
            "assignment": {k: fmt(v) for k, v in self.point.items()},
            "attained": self.feasible,
            "feasible": self.feasible,
            "polytopes_enumerated": self.polytopes_enumerated,
            "polytopes_pruned": self.polytopes_pruned,
            "timed_out": self.timed_out,
            "stats": {"seconds": self.seconds},
        }


def _seed_for(item: EmittedPolytope, base: int) -> int:
    return (int(item.key[:12], 16) + base) % (2 ** 32)


def _optimize(item: EmittedPolytope, spec: OptimizerSpec, incumbent, deadline):
    P = item.polytope
    best = (NEG_INF, {})
    if spec.kind == "adam":
        v, pt = pcadam(P, item.piece, spec.particles, spec.iterations, spec.lr,
                       seed=_seed_for(item, spec.seed), project=True, deadline=deadline)
        if pt:
            best = (v, pt)
    try:
        v, pt = grid_refine(P, item.piece, spec.grid_per_dim, spec.recursions, spec.shrink)
    except NoFeasibleGridPoint:
        c = chebyshev_center(P)
        v, pt = NEG_INF, {}
        if c is not None:
            res = _exact_check(Objective.of(item.piece), _Region(P), c, project_to=P)
            if res is not None:
                v, pt = res
    if pt and (not best[1] or v > best[0]):
        best = (v, pt)
    return best


def pamap_solve(problem: Problem, optimizer: OptimizerSpec | None = None, prune: bool = True,
                partial: bool = False, deadline: float | None = None) -> PamapResult:
    """Enumerate polytopes, optimize each, keep the best exactly feasible point.

    Anytime: with a ``deadline`` (seconds) the best incumbent so far is
    returned with ``timed_out`` set.  Raises `Unsatisfiable` when no
    polytope is emitted.
    """
    spec = optimizer or OptimizerSpec()
    t0 = time.monotonic()
    stop = None if deadline is None else t0 + deadline
    en = PolytopeEnumerator(problem, prune=prune, partial=partial)
    best_v, best_pt = NEG_INF, {}
    history = []
    timed_out = False
    seen_any = False
    for item in en:
        seen_any = True
        if stop is not None and time.monotonic() > stop:
            timed_out = True
            break
        remaining = None if stop is None else max(0.0, stop - time.monotonic())
        v, pt = _optimize(item, spec, best_v, remaining)
        if pt and problem.satisfies(pt):
            v = problem.density(pt)
            if best_v == NEG_INF or v > best_v:
                best_v, best_pt = v, pt
                en.update_lower_bound(v)
                history.append(v)
    if not seen_any and not timed_out and en.pruned == 0 and en.pieces_pruned == 0:
        raise Unsatisfiable("no feasible polytope")
    return PamapResult(best_v, best_pt, bool(best_pt) and problem.satisfies(best_pt),
                       en.emitted + en.pruned, en.pruned + en.pieces_pruned,
                       time.monotonic() - t0, timed_out, history)
