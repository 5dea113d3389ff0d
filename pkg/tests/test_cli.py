import json
import subprocess
import sys

from instances import lit, star3, two_var
from pwmap.cli import main


def run(argv, capsys):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_gen_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        code, _ = run(["gen", "--shape", "SNOW", "--n", 4, "--degree", 3, "--seed", 5, "-o", path], capsys)
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["kind"] == "Poly"


def test_solve_mpmap(tmp_path, capsys):
    prob = tmp_path / "p.json"
    star3().save(prob)
    msgs = tmp_path / "msgs"
    code, out = run(["solve-mpmap", "--problem", prob, "--emit-messages", msgs], capsys)
    assert code == 0
    res = json.loads(out.out)
    assert res["value"] == "390963/250000"
    assert res["assignment"] == {"x1": "-1/1", "x2": "1/1", "x3": "0/1"}
    assert res["attained"] is True
    assert len(list(msgs.iterdir())) == 2
    code, out = run(["solve-mpmap", "--problem", prob, "--backend", "float"], capsys)
    assert code == 0 and abs(json.loads(out.out)["value_float"] - 390963 / 250000) <= 1e-9


def test_solve_pamap(tmp_path, capsys):
    prob = tmp_path / "p.json"
    two_var([lit({"x2": 1, "x1": -1}, ">=", 0)], [1, -1], [1, 1]).save(prob)
    out_file = tmp_path / "r.json"
    code, _ = run(["solve-pamap", "--problem", prob, "--particles", 4, "--iters", 50, "-o", out_file], capsys)
    assert code == 0
    res = json.loads(out_file.read_text())
    assert res["value"] == "4/1" and res["feasible"] is True
    code, _ = run(["solve-pamap", "--problem", prob, "--optimizer", "grid", "--no-prune"], capsys)
    assert code == 0


def test_unsat_exit_code(tmp_path, capsys):
    prob = tmp_path / "p.json"
    two_var([lit({"x1": 1, "x2": 1}, ">=", 3)], [1], [1]).save(prob)
    code, out = run(["solve-mpmap", "--problem", prob], capsys)
    assert code == 2 and "unsatisfiable" in out.err


def test_missing_file_exit_code(tmp_path, capsys):
    code, out = run(["solve-mpmap", "--problem", tmp_path / "nope.json"], capsys)
    assert code == 1 and "error" in out.err


def test_bench_and_plot(tmp_path, capsys):
    suite = tmp_path / "suite"
    suite.mkdir()
    for shape, n in (("path", 2), ("star", 3)):
        run(["gen", "--shape", shape, "--n", n, "-o", suite / f"{shape}_n{n}_d2_c2_l2_s0.json"], capsys)
    csv_path = tmp_path / "r.csv"
    code, _ = run(["bench", "--suite", suite, "--out", csv_path, "--deadline", 10,
                   "--solvers", "grid,mpmap", "--workers", 1], capsys)
    assert code == 0
    assert csv_path.read_text().startswith("instance,solver,budget,value,rel_gap,seconds,status")
    code, out = run(["plot", "--in", csv_path, "--out", tmp_path / "svg"], capsys)
    assert code == 0
    assert sorted(p.name for p in (tmp_path / "svg").iterdir()) == ["path.svg", "star.svg"]


def test_smt2json(tmp_path, capsys):
    src = tmp_path / "f.smt2"
    src.write_text("(declare-fun x () Real)(assert (and (<= 0 x) (<= x 1)))(assert (> x 0.5))")
    code, out = run(["smt2json", "--in", src], capsys)
    assert code == 0
    d = json.loads(out.out)
    assert [v["name"] for v in d["variables"]] == ["x"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pwmap", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("solve-mpmap", "solve-pamap", "gen", "bench", "plot"):
        assert cmd in proc.stdout
