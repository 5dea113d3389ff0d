"""Random tree-shaped benchmark problems, the experiment runner and plots.

Problems come in three shapes: STAR (one hub), SNOW (ternary tree) and
PATH (chain).  Every tree edge carries random halfspace clauses over its
two variables; one literal per edge is weighted by a product of two
random univariate polynomials, and every variable carries the box weight
(x - lo)(hi - x).
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import random
import re
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .logic import CnfFormula, LinearAtom, Literal, Variable
from .piecewise import POLY
from .poly import UniPoly
from .problem import EdgeFactor, EdgePiece, NodePiece, Problem

__all__ = [
    "STAR",
    "SNOW",
    "PATH",
    "SHAPES",
    "GenConfig",
    "RunRecord",
    "MalformedCsv",
    "truncated_pareto",
    "rand_poly_univar",
    "tree_edges",
    "gen_problem",
    "SOLVERS",
    "default_suite",
    "write_suite",
    "load_suite",
    "run_suite",
    "write_csv",
    "read_csv",
    "emit_plots",
]

log = logging.getLogger(__name__)

STAR, SNOW, PATH = "STAR", "SNOW", "PATH"
SHAPES = (STAR, SNOW, PATH)
CSV_COLUMNS = ["instance", "solver", "budget", "value", "rel_gap", "seconds", "status"]
SOLVED, INFEASIBLE, TIMEOUT, ERROR = "Solved", "Infeasible", "Timeout", "Error"

_GRID = Fraction(1, 100)


class MalformedCsv(ValueError):
    """A results file is missing columns or holds unparsable values."""


def _shape(name: str) -> str:
    key = name.upper()
    if key == "SNOW3":
        key = SNOW
    if key not in SHAPES:
        raise ValueError(f"unknown shape {name!r}")
    return key


@dataclass
class GenConfig:
    shape: str
    n_vars: int
    degree: int = 2
    n_clauses: int = 2
    n_literals: int = 2
    pareto_upper: float | None = None
    box: tuple = (-1, 1)
    seed: int = 0

    def __post_init__(self):
        self.shape = _shape(self.shape)
        if self.n_vars < 1:
            raise ValueError("n_vars must be positive")
        if self.degree < 2:
            raise ValueError("degree must be at least 2")
        if self.n_clauses < 0 or self.n_literals < 1:
            raise ValueError("clause and literal counts must be positive")
        if self.pareto_upper is None:
            self.pareto_upper = 15.0 if self.n_vars <= 6 else 2.5

    @property
    def name(self) -> str:
        return (f"{self.shape.lower()}_n{self.n_vars}_d{self.degree}_c{self.n_clauses}"
                f"_l{self.n_literals}_s{self.seed}")


# ---------------------------------------------------------------------------
# random pieces


def _round(x: float) -> Fraction:
    return Fraction(round(x * 100), 100)


def truncated_pareto(rng: random.Random, lo=2.0, hi=15.0, eps=0.01) -> float:
    """Pareto(scale=lo, shape=1) truncated to [lo, hi] by inverse CDF.

    ``eps`` keeps the uniform draw away from 1 so the top of the range is
    never hit exactly.
    """
    if hi <= lo:
        return lo
    u = rng.uniform(0.0, 1.0 - eps)
    mass = 1.0 - lo / hi
    return lo / (1.0 - u * mass)


def rand_poly_univar(var, deg, lo, hi, pareto_upper, rng: random.Random) -> UniPoly:
    """Square of an antiderivative of a product of random linear factors, plus one."""
    if deg < 2:
        raise ValueError("degree must be at least 2")
    n_roots = deg // 2 - 1
    roots = [_round(rng.uniform(float(lo), float(hi))) for _ in range(n_roots)]
    deriv = UniPoly.const(1, var)
    for r in roots:
        c = _round(truncated_pareto(rng, 2.0, pareto_upper))
        deriv = deriv * UniPoly([-c * r, c], var)
    prim = deriv.antiderivative()
    return prim * prim + 1


def tree_edges(shape: str, n: int) -> list:
    """Edges (parent, child) over 0-based indices."""
    shape = _shape(shape)
    if shape == STAR:
        return [(0, k) for k in range(1, n)]
    if shape == PATH:
        return [(k - 1, k) for k in range(1, n)]
    return [((k - 1) // 3, k) for k in range(1, n)]


def _rand_point(rng, lo, hi):
    return (_round(rng.uniform(lo, hi)), _round(rng.uniform(lo, hi)))


def _rand_halfspace(rng, a, b, lo, hi) -> Literal:
    while True:
        p, q = _rand_point(rng, lo, hi), _rand_point(rng, lo, hi)
        n = (q[1] - p[1], p[0] - q[0])
        if n != (0, 0):
            break
    atom = LinearAtom.make({a: n[0], b: n[1]}, "<=" if rng.random() < 0.5 else ">=",
                           n[0] * p[0] + n[1] * p[1])
    return Literal(atom)


def _flip(lit: Literal) -> Literal:
    a = lit.atom
    op = {"<=": ">=", ">=": "<="}[a.op]
    return Literal(LinearAtom.make(dict(a.terms), op, a.constant))


def gen_problem(cfg: GenConfig) -> Problem:
    """A random tree-shaped problem that MpMap admits.

    A hidden interior witness keeps every clause satisfiable: a clause
    none of whose literals holds at the witness gets its first literal
    flipped to the other (closed) side.
    """
    rng = random.Random(f"pwmap-gen:{cfg.name}")
    lo, hi = (Fraction(v) for v in cfg.box)
    flo, fhi = float(lo), float(hi)
    names = [f"x{k + 1}" for k in range(cfg.n_vars)]
    margin = (fhi - flo) * 0.1
    witness = {n: _round(rng.uniform(flo + margin, fhi - margin)) for n in names}
    clauses = []
    edge_factors = []
    for pa, ch in tree_edges(cfg.shape, cfg.n_vars):
        a, b = names[pa], names[ch]
        edge_lits = []
        for _ in range(cfg.n_clauses):
            clause = [_rand_halfspace(rng, a, b, flo, fhi) for _ in range(cfg.n_literals)]
            if not any(l.holds(witness) for l in clause):
                clause[0] = _flip(clause[0])
            clauses.append(clause)
            edge_lits.extend(clause)
        if not edge_lits:
            edge_lits = [_rand_halfspace(rng, a, b, flo, fhi)]
        lit = edge_lits[rng.randrange(len(edge_lits))]
        left = rand_poly_univar(a, cfg.degree, lo, hi, cfg.pareto_upper, rng)
        right = rand_poly_univar(b, cfg.degree, lo, hi, cfg.pareto_upper, rng)
        edge_factors.append(EdgeFactor(a, b, [
            EdgePiece((lit,), left, right),
            EdgePiece((lit.negate(),), UniPoly.const(1, a), UniPoly.const(1, b)),
        ]))
    nodes = {n: [NodePiece((), UniPoly([-lo * hi, lo + hi, -1], n))] for n in names}
    formula = CnfFormula([Variable(n, lo, hi) for n in names], clauses)
    return Problem(formula, POLY, nodes, edge_factors)


# ---------------------------------------------------------------------------
# suites


def default_suite(seeds=(0, 1)) -> list:
    """The 36-instance grid: 3 shapes x N in {2,3,4} x degree {2,4} x 2 seeds."""
    return [GenConfig(shape, n, degree, 2, 2, seed=s)
            for shape in SHAPES for n in (2, 3, 4) for degree in (2, 4) for s in seeds]


def write_suite(directory, configs=None) -> list:
    """Generate and save one JSON per config; returns the paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for cfg in configs if configs is not None else default_suite():
        path = os.path.join(directory, cfg.name + ".json")
        gen_problem(cfg).save(path)
        paths.append(path)
    return paths


def load_suite(directory) -> list:
    """``(instance id, problem JSON dict)`` for every ``*.json`` in a directory, sorted."""
    out = []
    for fn in sorted(os.listdir(directory)):
        if fn.endswith(".json"):
            with open(os.path.join(directory, fn)) as fh:
                out.append((fn[:-5], json.load(fh)))
    return out


# ---------------------------------------------------------------------------
# runner

SOLVERS = ("grid", "mpmap", "pamap", "pcadam")
PAMAP_BUDGETS = (1, 2, 4, 16, 32, 64, 128, 256)  # Adam iterations per polytope
PCADAM_BUDGETS = (100, 1000, 10000, 100000, 1000000)  # particles
PCADAM_LR, PCADAM_ITERS = 0.001, 2500
TARGET_GAP = 0.01


@dataclass
class RunRecord:
    instance: str
    solver: str
    budget: str
    value: float | None
    rel_gap: float | None
    seconds: float
    status: str

    def row(self) -> list:
        def num(v):
            return "" if v is None else repr(float(v))
        return [self.instance, self.solver, self.budget, num(self.value), num(self.rel_gap),
                f"{self.seconds:.3f}", self.status]


def _finite(v):
    return v is not None and not (isinstance(v, float) and math.isinf(v))


def _close_enough(v, base) -> bool:
    if not _finite(v):
        return False
    if base is None:
        return True
    return float(v) >= float(base) - TARGET_GAP * abs(float(base))


def _timed(fn):
    t0 = time.monotonic()
    try:
        value, status = fn()
    except Exception as exc:  # recorded, never fatal for the suite
        from .mpmap import Timeout, Unsatisfiable

        if isinstance(exc, Timeout):
            value, status = None, TIMEOUT
        elif isinstance(exc, Unsatisfiable):
            value, status = None, INFEASIBLE
        else:
            log.warning("solver error: %r", exc)
            value, status = None, ERROR
    return value, status, time.monotonic() - t0


def _run_instance(name, problem_json, solvers, deadline) -> list:
    """All records for one instance (rel_gap filled in later)."""
    from .mpmap import solve as mp_solve
    from .pamap import NoFeasibleGridPoint, OptimizerSpec, grid_refine, pamap_solve, pcadam

    problem = Problem.from_json(problem_json)
    records = []

    def add(solver, budget, value, status, secs):
        records.append(RunRecord(name, solver, str(budget), value, None, secs, status))

    def grid():
        try:
            v, _ = grid_refine(problem.formula, problem)
        except NoFeasibleGridPoint:
            return None, INFEASIBLE
        return v, SOLVED

    base, status, secs = _timed(grid)
    if "grid" in solvers:
        add("grid", "10x30", base, status, secs)
    if base is not None and not _finite(base):
        base = None

    if "mpmap" in solvers:
        def run():
            res = mp_solve(problem, deadline=deadline)
            return res.value, SOLVED
        add("mpmap", "exact", *_timed(run))

    def ladder(solver, budgets, run_one):
        start = time.monotonic()
        for budget in budgets:
            left = deadline - (time.monotonic() - start) if deadline is not None else None
            if left is not None and left <= 0:
                break
            value, status, secs = _timed(lambda: run_one(budget, left))
            if status == SOLVED and left is not None and time.monotonic() - start >= deadline:
                status = TIMEOUT
            add(solver, budget, value, status, secs)
            if status != SOLVED or _close_enough(value, base):
                return

    if "pamap" in solvers:
        def pa(budget, left):
            spec = OptimizerSpec(iterations=budget)
            res = pamap_solve(problem, spec, deadline=left)
            return res.value, TIMEOUT if res.timed_out else SOLVED
        ladder("pamap", PAMAP_BUDGETS, pa)

    if "pcadam" in solvers:
        def pc(budget, left):
            v, _ = pcadam(problem.formula, problem, particles=budget, iterations=PCADAM_ITERS,
                          step=PCADAM_LR, seed=0, deadline=left)
            return (v, SOLVED) if _finite(v) else (None, INFEASIBLE)
        ladder("pcadam", PCADAM_BUDGETS, pc)
    return records


def _fill_gaps(records: list) -> None:
    best = {}
    for r in records:
        if r.status in (SOLVED, TIMEOUT) and _finite(r.value):
            best[r.instance] = max(best.get(r.instance, float(r.value)), float(r.value))
    for r in records:
        ref = best.get(r.instance)
        if _finite(r.value) and ref is not None and ref > 0:
            r.rel_gap = max(0.0, ref - float(r.value)) / ref


def write_csv(records: list, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(r.row())


def run_suite(instances, solvers=SOLVERS, deadline: float | None = 60.0, workers=None,
              out=None) -> list:
    """Run every solver on every instance; optionally write the CSV to ``out``.

    ``instances`` is a suite directory or a list of ``(id, Problem or JSON dict)``.
    Instances run in parallel worker processes; records are merged in
    instance order.  ``rel_gap`` is measured against the best value any
    solver (including the grid baseline) reached on the instance.
    """
    if isinstance(instances, (str, os.PathLike)):
        instances = load_suite(instances)
    jobs = [(name, p.to_json() if isinstance(p, Problem) else p) for name, p in instances]
    solvers = tuple(solvers)
    unknown = set(solvers) - set(SOLVERS)
    if unknown:
        raise ValueError(f"unknown solvers {sorted(unknown)}")
    records = []
    if solvers and jobs:
        workers = workers or os.cpu_count() or 1
        if workers == 1 or len(jobs) == 1:
            for name, pj in jobs:
                records.extend(_run_instance(name, pj, solvers, deadline))
        else:
            with ProcessPoolExecutor(workers) as pool:
                futs = [pool.submit(_run_instance, name, pj, solvers, deadline)
                        for name, pj in jobs]
                for (name, _), fut in zip(jobs, futs):
                    try:
                        records.extend(fut.result())
                    except Exception as exc:
                        log.warning("worker failed on %s: %r", name, exc)
                        records.extend(RunRecord(name, s, "", None, None, 0.0, ERROR)
                                       for s in solvers)
    _fill_gaps(records)
    if out is not None:
        write_csv(records, out)
    return records


# ---------------------------------------------------------------------------
# plots

_NAME = re.compile(r"^(star|snow|path)_n(\d+)_", re.IGNORECASE)


def read_csv(path) -> list:
    """Parse a results CSV into `RunRecord`s, raising `MalformedCsv` on bad input."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_COLUMNS:
            raise MalformedCsv(f"expected columns {CSV_COLUMNS}, got {header}")
        out = []
        for k, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_COLUMNS):
                raise MalformedCsv(f"line {k}: expected {len(CSV_COLUMNS)} fields")
            inst, solver, budget, value, gap, secs, status = row
            if status not in (SOLVED, INFEASIBLE, TIMEOUT, ERROR):
                raise MalformedCsv(f"line {k}: unknown status {status!r}")
            try:
                out.append(RunRecord(inst, solver, budget, float(value) if value else None,
                                     float(gap) if gap else None, float(secs), status))
            except ValueError as exc:
                raise MalformedCsv(f"line {k}: {exc}") from None
    return out


def _instance_shape(name):
    m = _NAME.match(name)
    if m is None:
        raise MalformedCsv(f"instance id {name!r} does not encode shape and size")
    return m.group(1).upper(), int(m.group(2))


def emit_plots(csv_path, out_dir, deadline: float | None = None) -> list:
    """One SVG per shape: median runtime against N, one series per solver.

    A solver's runtime on an instance is the sum over its budget rows.
    Runs that ended in Timeout are drawn at ``deadline`` (or their
    recorded time) with an ``x`` marker.  Output bytes depend only on the
    set of rows, not their order.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    records = read_csv(csv_path)
    total, final = {}, {}
    for r in sorted(records, key=lambda r: r.row()):
        shape, n = _instance_shape(r.instance)
        key = (shape, r.solver, n, r.instance)
        total[key] = total.get(key, 0.0) + r.seconds
        if final.get(key) != TIMEOUT:
            final[key] = r.status
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    with matplotlib.rc_context({"svg.hashsalt": "pwmap", "svg.fonttype": "none"}):
        for shape in sorted({k[0] for k in total}):
            fig, ax = plt.subplots(figsize=(5, 3.5))
            solvers = sorted({k[1] for k in total if k[0] == shape})
            for solver in solvers:
                keys = sorted(k for k in total if k[0] == shape and k[1] == solver)
                ns = sorted({k[2] for k in keys})
                med = []
                for n in ns:
                    times = [deadline if final[k] == TIMEOUT and deadline is not None
                             else total[k] for k in keys if k[2] == n]
                    med.append(statistics.median(times))
                line, = ax.plot(ns, med, marker="o", label=solver)
                to = [(k[2], deadline if deadline is not None else total[k])
                      for k in keys if final[k] == TIMEOUT]
                if to:
                    ax.scatter([p[0] for p in to], [p[1] for p in to], marker="x", s=60,
                               color=line.get_color())
            ax.set_xlabel("number of variables")
            ax.set_ylabel("median runtime [s]")
            ax.set_title(shape)
            ax.legend(loc="best", fontsize="small")
            fig.tight_layout()
            path = os.path.join(out_dir, f"{shape.lower()}.svg")
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            paths.append(path)
    return paths
