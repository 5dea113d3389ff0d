"""
MAP over a non-convex region by polytope enumeration
====================================================

The square [0, 2]^2 with an open triangle cut out of its upper half is
not convex, and the density is a bivariate bump that does not split
into univariate parts, so message passing does not apply.  The region is
split into convex polytopes, each polytope is optimized on its own, and
polytopes whose upper bound cannot beat the incumbent are skipped.
"""
from fractions import Fraction

import numpy as np

from pwmap import CnfFormula, EdgeFactor, EdgePiece, Literal, LinearAtom, OptimizerSpec, Problem, Variable
from pwmap import grid_refine, pamap_solve
from pwmap.pamap import enumerate_polytopes


def lit(coeffs, op, const=0):
    return Literal(LinearAtom.make(coeffs, op, const))


variables = [Variable("x1", 0, 2), Variable("x2", 0, 2)]
# outside the triangle: below its base, or left of one side, or right of the other
notch = [lit({"x2": 1}, "<=", 1), lit({"x2": 1, "x1": -2}, ">", 0), lit({"x2": 1, "x1": 2}, ">", Fraction(19, 4))]
formula = CnfFormula(variables, [notch])

# 4 - (x1 - 11/10)^2 - (x2 - 3/2)^2 peaks inside the removed triangle
a, b = Fraction(11, 10), Fraction(3, 2)
terms = {(0, 0): 4 - a * a - b * b, (1, 0): 2 * a, (2, 0): Fraction(-1), (0, 1): 2 * b, (0, 2): Fraction(-1)}
problem = Problem(formula, "Poly", {}, [EdgeFactor("x1", "x2", [EdgePiece((), terms=terms)])])

polytopes = enumerate_polytopes(problem)
print(f"{len(polytopes)} convex polytopes:")
for item in polytopes:
    box = item.polytope.bounding_box()
    print("  ", {k: (str(lo), str(hi)) for k, (lo, hi) in box.items()})

result = pamap_solve(problem)
x = {k: float(v) for k, v in result.point.items()}
print(f"PA-MAP value {float(result.value):.6f} at ({x['x1']:.4f}, {x['x2']:.4f})")
print(f"   polytopes optimized {result.polytopes_enumerated}, pruned {result.polytopes_pruned}")

# the same search with a cheaper optimizer and no pruning lands on the same point
cheap = pamap_solve(problem, OptimizerSpec(kind="grid"), prune=False)
print(f"grid-only, unpruned  {float(cheap.value):.6f}")

# plain recursive grid search over the whole square, as a reference
v, pt = grid_refine(formula, problem)
print(f"reference grid       {float(v):.6f}")

# a dense picture of the region, for the curious
xs = np.linspace(0, 2, 41)
X = np.stack(np.meshgrid(xs, xs, indexing="xy"), -1).reshape(-1, 2)
inside = formula.holds_np(X).reshape(41, 41)
for row in inside[::-4]:
    print("   " + "".join("#" if c else "." for c in row[::2]))
