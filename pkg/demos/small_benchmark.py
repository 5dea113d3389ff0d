"""
A small benchmark run
=====================

Generate a handful of random tree-shaped problems, run the grid
baseline, exact message passing and polytope search on each, and render
runtime plots.  Output goes to a temporary directory unless a path is
given on the command line.
"""
import csv
import os
import sys
import tempfile

from pwmap.bench import GenConfig, emit_plots, gen_problem, run_suite

out_dir = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="pwmap-bench-")
os.makedirs(out_dir, exist_ok=True)

configs = [GenConfig(shape, n, degree=2, seed=0) for shape in ("star", "snow", "path") for n in (2, 3, 4)]
instances = [(c.name, gen_problem(c)) for c in configs]

csv_path = os.path.join(out_dir, "results.csv")
run_suite(instances, solvers=("grid", "mpmap", "pamap"), deadline=20, workers=1, out=csv_path)

with open(csv_path, newline="") as fh:
    rows = list(csv.DictReader(fh))
print(f"{'instance':28s} {'solver':7s} {'budget':6s} {'value':>12s} {'gap':>8s} {'secs':>7s}")
for r in rows:
    value = f"{float(r['value']):.6g}" if r["value"] else "-"
    gap = f"{float(r['rel_gap']):.1e}" if r["rel_gap"] else "-"
    print(f"{r['instance']:28s} {r['solver']:7s} {r['budget']:6s} {value:>12s} {gap:>8s} {r['seconds']:>7s}")

for path in emit_plots(csv_path, out_dir):
    print("wrote", path)
