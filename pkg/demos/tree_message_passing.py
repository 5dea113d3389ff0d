"""
Exact MAP on a tree by message passing
======================================

Three variables on [-1, 1], x1 in the middle.  Each outer variable must
stay between 1 and 2 away from x1, and the density is a product of
guarded univariate polynomials.  The solver eliminates the leaves one at
a time and reads the argmax back down the tree.
"""
from fractions import Fraction

from pwmap import CnfFormula, EdgeFactor, EdgePiece, Literal, LinearAtom, NodePiece, Problem, UniPoly, Variable
from pwmap import mpmap_solve


def lit(coeffs, op, const=0):
    return Literal(LinearAtom.make(coeffs, op, const))


def ring(a, b):
    # 1 <= |a - b| <= 2, written as three clauses
    d = {a: 1, b: -1}
    return [[lit(d, ">=", 1), lit(d, "<=", -1)], [lit(d, "<=", 2)], [lit(d, ">=", -2)]]


variables = [Variable(n, -1, 1) for n in ("x1", "x2", "x3")]
formula = CnfFormula(variables, ring("x1", "x2") + ring("x1", "x3"))

nodes = {
    "x1": [NodePiece((), UniPoly([Fraction(1, 20)], "x1"))],
    "x2": [NodePiece((), UniPoly([1, 1], "x2"))],
    "x3": [NodePiece((), UniPoly([1, -1], "x3"))],
}
below = (lit({"x1": 1, "x2": -1}, "<", 0),)
above = (lit({"x1": 1, "x2": -1}, ">=", 0), lit({"x1": 1}, "<=", Fraction(1, 2)))
edges = [
    EdgeFactor("x1", "x2", [
        EdgePiece(below, UniPoly([Fraction(-9, 10), 1], "x1") ** 2 * Fraction(1, 5),
                  UniPoly([Fraction(9, 10), 1], "x2") ** 2),
        EdgePiece(above, UniPoly([1, 1], "x1"), UniPoly([1], "x2")),
    ]),
    EdgeFactor("x1", "x3", [EdgePiece((), UniPoly([1, -1], "x1"), UniPoly([3, -1], "x3"))]),
]
problem = Problem(formula, "Poly", nodes, edges)

# every message is a univariate piecewise polynomial over the parent
def show(msg):
    print(f"message {msg.source} -> {msg.target}: {len(msg.value.pieces)} pieces")
    for p in msg.value.pieces:
        lb, rb = "[" if p.lo_closed else "(", "]" if p.hi_closed else ")"
        print(f"   {lb}{p.lo}, {p.hi}{rb}  {p.body}")


result = mpmap_solve(problem, emit_messages=show)
print("value     ", result.value, f"({float(result.value):.6f})")
print("assignment", {k: str(v) for k, v in result.assignment.items()})
print("attained  ", result.attained)

# rooting the tree elsewhere changes the messages but not the optimum
for root in ("x2", "x3"):
    print(f"rooted at {root}:", mpmap_solve(problem, root=root).value)
