"""Command line interface: ``pwmap <command> ...`` or ``python -m pwmap``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import bench
from .logic import smtlib_to_formula
from .mpmap import Timeout, Unsatisfiable
from .mpmap import solve as mpmap_solve
from .numeric import EXACT, ScalarBackend
from .pamap import OptimizerSpec, pamap_solve
from .problem import Problem


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def cmd_solve_mpmap(args):
    problem = Problem.load(args.problem)
    backend = EXACT if args.backend == "exact" else ScalarBackend("float")
    emit = None
    if args.emit_messages:
        os.makedirs(args.emit_messages, exist_ok=True)
        count = [0]

        def emit(msg):
            count[0] += 1
            path = os.path.join(args.emit_messages, f"{count[0]:03d}_{msg.source}_to_{msg.target}.json")
            _dump({"source": msg.source, "target": msg.target, "value": msg.value.to_json()}, path)

    res = mpmap_solve(problem, backend=backend, deadline=args.deadline, emit_messages=emit)
    _dump(res.to_json(), args.out)


def cmd_solve_pamap(args):
    problem = Problem.load(args.problem)
    spec = OptimizerSpec(kind=args.optimizer, particles=args.particles, iterations=args.iters,
                         lr=args.lr, seed=args.seed)
    res = pamap_solve(problem, spec, prune=not args.no_prune, deadline=args.deadline)
    _dump(res.to_json(), args.out)


def cmd_gen(args):
    cfg = bench.GenConfig(args.shape, args.n, args.degree, args.clauses, args.literals,
                          seed=args.seed)
    text = bench.gen_problem(cfg).dumps()
    if args.output in (None, "-"):
        print(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")


def cmd_gen_suite(args):
    for path in bench.write_suite(args.out):
        print(path)


def cmd_bench(args):
    solvers = args.solvers.split(",") if args.solvers else ()
    records = bench.run_suite(args.suite, solvers=solvers, deadline=args.deadline,
                              workers=args.workers, out=args.out)
    print(f"{len(records)} records written to {args.out}")


def cmd_plot(args):
    for path in bench.emit_plots(args.input, args.out, deadline=args.deadline):
        print(path)


def cmd_smt2json(args):
    with open(args.input) as fh:
        formula = smtlib_to_formula(fh.read())
    _dump(formula.to_json(), args.output)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pwmap", description="Constrained MAP for piecewise polynomial densities.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve-mpmap", help="exact message passing on a tree-shaped problem")
    s.add_argument("--problem", required=True)
    s.add_argument("--backend", choices=["exact", "float"], default="exact")
    s.add_argument("--emit-messages", metavar="DIR")
    s.add_argument("--deadline", type=float)
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_solve_mpmap)

    s = sub.add_parser("solve-pamap", help="polytope enumeration with a convex optimizer")
    s.add_argument("--problem", required=True)
    s.add_argument("--optimizer", choices=["adam", "grid"], default="adam")
    s.add_argument("--particles", type=int, default=10)
    s.add_argument("--iters", type=int, default=500)
    s.add_argument("--lr", type=float, default=0.1)
    s.add_argument("--no-prune", action="store_true")
    s.add_argument("--deadline", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_solve_pamap)

    s = sub.add_parser("gen", help="generate a random STAR/SNOW/PATH problem")
    s.add_argument("--shape", required=True, type=str.lower, choices=["star", "snow", "path"])
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--degree", type=int, default=2)
    s.add_argument("--clauses", type=int, default=2)
    s.add_argument("--literals", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("gen-suite", help="write the default 36-instance suite")
    s.add_argument("--out", required=True, metavar="DIR")
    s.set_defaults(func=cmd_gen_suite)

    s = sub.add_parser("bench", help="run the solvers over a suite directory")
    s.add_argument("--suite", required=True, metavar="DIR")
    s.add_argument("--out", required=True)
    s.add_argument("--deadline", type=float, default=60.0)
    s.add_argument("--solvers", default=",".join(bench.SOLVERS))
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("plot", help="render runtime plots from a results CSV")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True, metavar="DIR")
    s.add_argument("--deadline", type=float)
    s.set_defaults(func=cmd_plot)

    s = sub.add_parser("smt2json", help="convert an SMT-LIB2 QF_LRA formula to formula JSON")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_smt2json)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except Unsatisfiable as exc:
        print(f"unsatisfiable: {exc}", file=sys.stderr)
        return 2
    except Timeout as exc:
        print(f"timeout: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
