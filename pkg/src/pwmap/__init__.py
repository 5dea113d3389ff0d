"""Constrained MAP inference for piecewise (exponentiated) polynomial densities.

Two solvers share one problem format: `mpmap.solve` does exact message
passing on tree-shaped problems, `pamap.pamap_solve` enumerates convex
polytopes and optimizes each one.  `bench` generates random problems and
runs experiments.
"""
from .bench import GenConfig, gen_problem, run_suite, emit_plots
from .logic import CnfFormula, LinearAtom, Literal, Polytope, Variable, smtlib_to_formula
from .mpmap import MapResult, Timeout, Unsatisfiable
from .mpmap import solve as mpmap_solve
from .numeric import EXACT, ScalarBackend
from .pamap import OptimizerSpec, PamapResult, grid_refine, pamap_solve, pcadam
from .piecewise import EXP, POLY, Piece, PiecewiseFunc
from .poly import AffineFunc, UniPoly
from .problem import EdgeFactor, EdgePiece, NodePiece, Problem

__version__ = "0.1.0"

__all__ = [
    "AffineFunc",
    "CnfFormula",
    "EdgeFactor",
    "EdgePiece",
    "EXACT",
    "EXP",
    "GenConfig",
    "LinearAtom",
    "Literal",
    "MapResult",
    "NodePiece",
    "OptimizerSpec",
    "PamapResult",
    "Piece",
    "PiecewiseFunc",
    "POLY",
    "Polytope",
    "Problem",
    "ScalarBackend",
    "Timeout",
    "UniPoly",
    "Unsatisfiable",
    "Variable",
    "emit_plots",
    "gen_problem",
    "grid_refine",
    "mpmap_solve",
    "pamap_solve",
    "pcadam",
    "run_suite",
    "smtlib_to_formula",
]
