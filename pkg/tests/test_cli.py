import csv
import json
from importlib import resources

import jsonschema
import numpy as np
import pytest

import vasmg
from vasmg.cli import main, read_bc_file
from vasmg.sparse import read_vector, write_matrix_market


def load_schema():
    text = resources.files("vasmg").joinpath("schemas/report.schema.json").read_text()
    return json.loads(text)


def run_cli(args):
    return main([str(a) for a in args])


def read_report(out):
    return json.loads((out / "report.json").read_text())


def test_run_generator_end_to_end(tmp_path):
    out = tmp_path / "out"
    code = run_cli(["run", "--generate", "square-hole-plate", "--refinement", 0,
                    "--solver", "pcg-vasmg", "--out", out])
    assert code == 0
    report = read_report(out)
    jsonschema.validate(report, load_schema())
    assert report["result"]["converged"]
    assert report["result"]["rhs_rel_res"] <= 1e-6
    assert report["matrix"]["symmetric"]
    assert report["matrix"]["n_unknowns"] == 2 * report["matrix"]["n_vertices"]
    assert report["timing"]["total_seconds"] >= report["timing"]["apply_seconds"]
    assert len(report["levels"]) >= 2
    # artifacts
    history = list(csv.DictReader((out / "history.csv").open()))
    assert history[0]["rel_res"] == "1"
    assert float(history[-1]["rel_res"]) < 1e-6
    solution = read_vector(out / "solution.txt")
    assert len(solution) == report["matrix"]["n_unknowns"]


def test_run_matrix_input_matches_library(tmp_path, rng):
    from conftest import delaunay_problem
    system = delaunay_problem(rng, 40)
    mtx = tmp_path / "a.mtx"
    write_matrix_market(mtx, system.matrix)
    out = tmp_path / "out"
    code = run_cli(["run", "--matrix", mtx, "--solver", "pcg-plain",
                    "--tol", "1e-8", "--out", out])
    assert code == 0
    report = read_report(out)
    u_lib, rep_lib = vasmg.pcg(system.matrix, np.ones(system.n_dofs), eps=1e-8)
    assert report["result"]["iterations"] == rep_lib.iterations
    assert report["result"]["final_rel_res"] == rep_lib.rel_res_history[-1]
    assert np.array_equal(read_vector(out / "solution.txt"), u_lib)


def test_run_invalid_mesh_path_no_artifacts(tmp_path, capsys):
    out = tmp_path / "out"
    code = run_cli(["run", "--mesh", tmp_path / "missing.node",
                    "--bc", tmp_path / "missing.bc", "--out", out])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "input-error"
    assert not out.exists()


def test_run_requires_exactly_one_source(tmp_path, capsys):
    code = run_cli(["run", "--out", tmp_path / "out"])
    assert code == 3
    assert json.loads(capsys.readouterr().err)["error"] == "config-error"


def test_run_vasmg_rejects_raw_matrix(tmp_path, capsys):
    mtx = tmp_path / "a.mtx"
    write_matrix_market(mtx, vasmg.SparseMatrix.identity(4))
    code = run_cli(["run", "--matrix", mtx, "--solver", "pcg-vasmg",
                    "--out", tmp_path / "out"])
    assert code == 3
    assert json.loads(capsys.readouterr().err)["error"] == "config-error"


def test_run_mesh_with_bc_file(tmp_path):
    mesh = vasmg.generate_mesh("hole-plate", 0)
    vasmg.write_mesh(tmp_path / "m.node", mesh)
    (tmp_path / "plate.bc").write_text(
        "# quarter plate pulled along x\n"
        "material 2.1e5 0.3\n"
        "dirichlet left x\n"
        "dirichlet bottom y\n"
        "traction right 10 0\n")
    out = tmp_path / "out"
    code = run_cli(["run", "--mesh", tmp_path / "m.node", "--bc", tmp_path / "plate.bc",
                    "--solver", "pcg-vasmg", "--out", out])
    assert code == 0
    assert read_report(out)["result"]["converged"]


def test_bc_file_parser(tmp_path):
    path = tmp_path / "f.bc"
    path.write_text("material 10 0.25 plane-stress\n"
                    "dirichlet rim x,y\n"
                    "traction lip 1 -2\n"
                    "load pin 3 4\n")
    material, bc = read_bc_file(path, 2)
    assert material.poisson_ratio == pytest.approx(0.25 / 1.25)
    assert bc.dirichlet == [("rim", (0, 1))]
    assert bc.traction == [("lip", (1.0, -2.0))]
    assert bc.point_loads == [("pin", (3.0, 4.0))]
    path.write_text("dirichlet rim q\n")
    with pytest.raises(Exception, match="f.bc:1"):
        read_bc_file(path, 2)


@pytest.mark.parametrize("solver", ["pcg-jacobi", "gs", "mg-standalone"])
def test_other_solvers_smoke(tmp_path, solver):
    out = tmp_path / solver
    code = run_cli(["run", "--generate", "hole-plate", "--solver", solver,
                    "--max-iters", 4000, "--out", out])
    assert code == 0
    report = read_report(out)
    jsonschema.validate(report, load_schema())
    assert report["solver"] == solver


def test_paper_literal_weights_smoke(tmp_path):
    out = tmp_path / "out"
    code = run_cli(["run", "--generate", "hole-plate", "--solver", "pcg-vasmg",
                    "--paper-literal-weights", "--max-iters", 4000, "--out", out])
    assert code == 0
    report = read_report(out)
    assert report["config"]["weight_rule"] == "paper-literal"


def test_dump_artifacts(tmp_path):
    out = tmp_path / "out"
    code = run_cli(["run", "--generate", "hole-plate", "--solver", "pcg-vasmg",
                    "--out", out,
                    "--dump-tree", out / "tree.txt",
                    "--dump-hierarchy", out / "hier",
                    "--export-system", out / "sys"])
    assert code == 0
    tree_text = (out / "tree.txt").read_text()
    assert tree_text.startswith("node depth=1")
    assert (out / "sys" / "A.mtx").exists()
    assert (out / "sys" / "F.txt").exists()
    levels = sorted((out / "hier").glob("level*_A.mtx"))
    assert len(levels) >= 2
    assert (out / "hier" / "level0_P.mtx").exists()
    # exported system round-trips
    a = vasmg.read_matrix_market(out / "sys" / "A.mtx")
    f = read_vector(out / "sys" / "F.txt")
    assert a.nrows == len(f)


def test_runs_are_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run_cli(["run", "--generate", "square-hole-plate",
                        "--solver", "pcg-vasmg", "--out", out]) == 0
        outs.append(out)
    r1, r2 = (read_report(o) for o in outs)
    assert r1["result"]["iterations"] == r2["result"]["iterations"]
    h1 = [(row["iteration"], row["rel_res"])
          for row in csv.DictReader((outs[0] / "history.csv").open())]
    h2 = [(row["iteration"], row["rel_res"])
          for row in csv.DictReader((outs[1] / "history.csv").open())]
    assert h1 == h2


def test_compare_vasmg_beats_plain(tmp_path):
    out = tmp_path / "out"
    code = run_cli(["compare", "--generate", "square-hole-plate",
                    "--solvers", "pcg-plain,pcg-vasmg",
                    "--max-iters", 20000, "--out", out])
    assert code == 0
    rows = {row["solver"]: row
            for row in csv.DictReader((out / "compare.csv").open())}
    assert int(rows["pcg-vasmg"]["iterations"]) < int(rows["pcg-plain"]["iterations"])
    assert float(rows["pcg-vasmg"]["numerical_error"]) < 1e-5
    for row in rows.values():
        assert float(row["setup_seconds"]) >= 0.0


def test_compare_rejects_single_solver(tmp_path, capsys):
    code = run_cli(["compare", "--generate", "hole-plate",
                    "--solvers", "pcg-vasmg", "--out", tmp_path / "out"])
    assert code == 3
    assert json.loads(capsys.readouterr().err)["error"] == "config-error"


def test_compare_deterministic_rerun(tmp_path):
    counts = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run_cli(["compare", "--generate", "hole-plate",
                        "--solvers", "pcg-vasmg,pcg-jacobi",
                        "--max-iters", 20000, "--out", out]) == 0
        rows = list(csv.DictReader((out / "compare.csv").open()))
        counts.append([(r["solver"], r["iterations"]) for r in rows])
    assert counts[0] == counts[1]
