"""Batch front-end: load or generate a problem, solve it, emit reports.

``vasmg run`` solves one system with one solver and writes a JSON report,
a convergence CSV and the solution vector into the output directory;
``vasmg compare`` runs several solvers on the same system and tabulates
iterations, error against a direct reference, and the setup/application
time split.  Failures exit nonzero with a machine-readable category on
stderr: ``input-error``, ``config-error`` or ``solve-error``.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np
import scipy.sparse.linalg

from . import elasticity, krylov, mesh as meshmod, multigrid, smoothers, sparse, transfer
from .problems import builtin_problem
from .regiontree import build_tree, prune_and_index
from .sparse import NotSPDError

SOLVERS = ("pcg-vasmg", "pcg-plain", "pcg-jacobi", "gs", "mg-standalone")

_EXIT_CODES = {"input-error": 2, "config-error": 3, "solve-error": 4}


class CLIError(Exception):
    category = "config-error"


class InputError(CLIError):
    category = "input-error"


class ConfigError(CLIError):
    category = "config-error"


class SolveError(CLIError):
    category = "solve-error"


# -- problem loading -----------------------------------------------------------

_AXIS_BY_NAME = {"x": 0, "y": 1, "z": 2}


def read_bc_file(path, dim: int):
    """Parse the small declarative boundary-condition format.

    Lines (``#`` comments allowed)::

        material  E NU [plane-stress]
        dirichlet TAG AXES          # AXES like x, y, z or x,y
        traction  TAG FX FY [FZ]
        load      TAG FX FY [FZ]
    """
    material = None
    bc = elasticity.BoundaryCondition()
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read BC file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kind = tok[0].lower()
        try:
            if kind == "material":
                plane_stress = len(tok) > 3 and tok[3] == "plane-stress"
                material = elasticity.make_material(float(tok[1]), float(tok[2]),
                                                    plane_stress=plane_stress)
            elif kind == "dirichlet":
                axes = tuple(_AXIS_BY_NAME[a.strip()] for a in tok[2].split(","))
                bc.dirichlet.append((tok[1], axes))
            elif kind == "traction":
                bc.traction.append((tok[1], tuple(float(t) for t in tok[2:2 + dim])))
            elif kind == "load":
                bc.point_loads.append((tok[1], tuple(float(t) for t in tok[2:2 + dim])))
            else:
                raise ValueError(f"unknown directive {kind!r}")
        except (ValueError, KeyError, IndexError) as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
    return material, bc


def _load_problem(args):
    """Returns (system, problem_meta, vertices or None)."""
    sources = [s for s in ("generate", "mesh", "matrix") if getattr(args, s.replace("-", "_"))]
    if len(sources) != 1:
        raise ConfigError("exactly one of --generate, --mesh, --matrix is required")
    source = sources[0]

    if source == "matrix":
        a = _catch_input(sparse.read_matrix_market, args.matrix)
        if a.nrows != a.ncols:
            raise InputError(f"matrix {args.matrix} is not square")
        f = _catch_input(sparse.read_vector, args.rhs) if args.rhs else np.ones(a.nrows)
        if f.shape != (a.nrows,):
            raise InputError("right-hand side length does not match the matrix")
        meta = {"source": "matrix", "path": str(args.matrix)}
        system = elasticity.AssembledSystem(
            matrix=a, rhs=f, dim=1, n_vertices=a.nrows,
            constrained_dofs=np.empty(0, dtype=np.int64),
            vertices=np.empty((0, 2)))
        return system, meta, None

    if source == "generate":
        try:
            problem = builtin_problem(args.generate, args.refinement,
                                      youngs_modulus=args.youngs,
                                      poisson_ratio=args.poisson,
                                      plane_stress=args.plane_stress or None)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        msh, material, bc = problem.mesh, problem.material, problem.bc
        meta = {"source": "generate", "kind": args.generate,
                "refinement": args.refinement}
    else:
        msh = _catch_input(meshmod.read_mesh, args.mesh, args.mesh_format)
        material_file, bc = read_bc_file(args.bc, msh.dim) if args.bc else (None, None)
        if bc is None:
            raise ConfigError("--mesh input requires --bc with the boundary conditions")
        if args.youngs is not None or args.poisson is not None:
            if args.youngs is None or args.poisson is None:
                raise ConfigError("--youngs and --poisson must be given together")
            material = elasticity.make_material(args.youngs, args.poisson,
                                                plane_stress=args.plane_stress)
        elif material_file is not None:
            material = material_file
        else:
            raise ConfigError("no material: give a 'material' line in the BC file "
                              "or --youngs/--poisson")
        meta = {"source": "mesh", "path": str(args.mesh)}

    try:
        system = elasticity.assemble(msh, material, bc)
    except ValueError as exc:
        raise ConfigError(f"assembly failed: {exc}") from exc
    return system, meta, msh.vertices


def _catch_input(fn, *a):
    try:
        return fn(*a)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from exc


# -- solving ---------------------------------------------------------------------

def _matrix_meta(system, vertices):
    a = system.matrix
    asym = (a.to_scipy() - a.to_scipy().T)
    max_val = float(np.abs(a.values).max()) if a.nnz else 0.0
    sym = (asym.nnz == 0 or
           float(np.abs(asym.data).max()) <= 1e-12 * max(max_val, 1.0))
    return {
        "n_vertices": int(len(vertices)) if vertices is not None else None,
        "n_unknowns": a.nrows,
        "nnz": a.nnz,
        "symmetric": bool(sym),
    }


def _solve(args, system, vertices):
    """Dispatch one solver; returns (u, SolveReport, tree or None)."""
    solver = args.solver
    a, f = system.matrix, system.rhs
    k_max = args.max_iters
    if args.tol <= 0.0:
        raise ConfigError("--tol must be positive")
    if args.pre_sweeps < 0 or args.post_sweeps < 0:
        raise ConfigError("sweep counts must be >= 0")
    if k_max is not None and k_max < 1:
        raise ConfigError("--max-iters must be >= 1")
    if args.threshold is not None and args.threshold < 1:
        raise ConfigError("--threshold must be >= 1")
    tree = None
    weight_rule = "paper-literal" if args.paper_literal_weights else "hat"

    needs_tree = solver in ("pcg-vasmg", "mg-standalone")
    if needs_tree or args.dump_tree:
        if vertices is None:
            what = f"solver {solver!r}" if needs_tree else "--dump-tree"
            raise ConfigError(f"{what} needs mesh vertices; raw --matrix input "
                              "cannot build the region tree")
        threshold = args.threshold or (4 if system.dim == 2 else 8)
        t0 = time.perf_counter()
        tree = build_tree(vertices, threshold)
        prune_and_index(tree)
        tree_seconds = time.perf_counter() - t0

    try:
        if solver == "pcg-vasmg":
            cfg = multigrid.VCycleConfig(pre_sweeps=args.pre_sweeps,
                                         post_sweeps=args.post_sweeps)
            t0 = time.perf_counter()
            precond = multigrid.build_preconditioner(
                system, coarsest_cap=args.coarsest_cap, weight_rule=weight_rule,
                config=cfg, tree=tree)
            setup = time.perf_counter() - t0 + tree_seconds
            u, report = krylov.pcg(a, f, precond, k_max=k_max, eps=args.tol)
            report.setup_seconds = setup
            report.total_seconds = setup + report.apply_seconds
            report.level_stats = precond.hierarchy.level_stats()
        elif solver == "mg-standalone":
            cfg = multigrid.VCycleConfig(pre_sweeps=args.pre_sweeps,
                                         post_sweeps=args.post_sweeps)
            t0 = time.perf_counter()
            hierarchy = transfer.build_hierarchy(system, tree,
                                                 coarsest_cap=args.coarsest_cap,
                                                 weight_rule=weight_rule)
            setup = time.perf_counter() - t0 + tree_seconds
            u, report = multigrid.mg_solve(hierarchy, f, k_max=k_max or 100,
                                           eps=args.tol, cfg=cfg)
            report.setup_seconds = setup
            report.total_seconds = setup + report.apply_seconds
        elif solver == "pcg-plain":
            u, report = krylov.pcg(a, f, None, k_max=k_max, eps=args.tol)
        elif solver == "pcg-jacobi":
            u, report = krylov.pcg(a, f, krylov.JacobiPreconditioner(a),
                                   k_max=k_max, eps=args.tol)
        elif solver == "gs":
            t0 = time.perf_counter()
            u, iterations, err = smoothers.gs_solve(
                a, f, np.zeros(a.nrows),
                k_max=k_max or int(10.0 * np.sqrt(a.nrows)) + 1000, eps=args.tol)
            elapsed = time.perf_counter() - t0
            final = elasticity.rel_res(a, f, u)
            report = krylov.SolveReport(
                iterations=iterations, rel_res_history=[1.0, final],
                converged=err < args.tol, apply_seconds=elapsed,
                total_seconds=elapsed, rhs_rel_res=final)
        else:
            raise ConfigError(f"unknown solver {solver!r}")
    except (NotSPDError, smoothers.DivergenceError) as exc:
        raise SolveError(str(exc)) from exc
    except ValueError as exc:
        raise SolveError(str(exc)) from exc
    return u, report, tree


def _write_run_artifacts(args, system, meta, vertices, u, report, tree):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report_path = Path(args.report) if args.report else out / "report.json"
    history_path = Path(args.history_csv) if args.history_csv else out / "history.csv"
    solution_path = Path(args.solution) if args.solution else out / "solution.txt"

    doc = {
        "schema": "vasmg-report-v1",
        "solver": args.solver,
        "problem": meta,
        "matrix": _matrix_meta(system, vertices),
        "result": {
            "iterations": report.iterations,
            "converged": report.converged,
            "final_rel_res": report.rel_res_history[-1] if report.rel_res_history else None,
            "rhs_rel_res": report.rhs_rel_res,
            "condition_estimate": report.condition_estimate,
        },
        "timing": {
            "setup_seconds": report.setup_seconds,
            "apply_seconds": report.apply_seconds,
            "total_seconds": report.total_seconds,
        },
        "levels": report.level_stats,
        "config": {
            "threshold": args.threshold,
            "pre_sweeps": args.pre_sweeps,
            "post_sweeps": args.post_sweeps,
            "tol": args.tol,
            "max_iters": args.max_iters,
            "weight_rule": "paper-literal" if args.paper_literal_weights else "hat",
            "coarsest_cap": args.coarsest_cap,
        },
    }
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(json.dumps(doc, indent=2) + "\n")

    with open(history_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "rel_res", "seconds"])
        seconds = report.history_seconds or [0.0] * len(report.rel_res_history)
        for k, (rel, sec) in enumerate(zip(report.rel_res_history, seconds)):
            writer.writerow([k, f"{rel:.17g}", f"{sec:.6f}"])

    sparse.write_vector(solution_path, u)

    if args.dump_tree:
        Path(args.dump_tree).write_text(tree.dump())
    if args.export_system:
        sysdir = Path(args.export_system)
        sysdir.mkdir(parents=True, exist_ok=True)
        sparse.write_matrix_market(sysdir / "A.mtx", system.matrix)
        sparse.write_vector(sysdir / "F.txt", system.rhs)
    if args.dump_hierarchy:
        if args.solver not in ("pcg-vasmg", "mg-standalone"):
            raise ConfigError("--dump-hierarchy needs a hierarchy-building solver")
        hdir = Path(args.dump_hierarchy)
        hdir.mkdir(parents=True, exist_ok=True)
        hierarchy = transfer.build_hierarchy(
            system, tree, coarsest_cap=args.coarsest_cap,
            weight_rule="paper-literal" if args.paper_literal_weights else "hat")
        for i, lv in enumerate(hierarchy.levels):
            sparse.write_matrix_market(hdir / f"level{i}_A.mtx", lv.matrix)
            if lv.prolongation is not None:
                sparse.write_matrix_market(hdir / f"level{i}_P.mtx",
                                           lv.prolongation.matrix)
    return doc


def _cmd_run(args) -> int:
    system, meta, vertices = _load_problem(args)
    u, report, tree = _solve(args, system, vertices)
    doc = _write_run_artifacts(args, system, meta, vertices, u, report, tree)
    status = "converged" if report.converged else "NOT converged"
    print(f"{args.solver}: {status} in {report.iterations} iterations, "
          f"final rel_res {doc['result']['final_rel_res']:.3e}, "
          f"setup {report.setup_seconds:.3f}s apply {report.apply_seconds:.3f}s")
    return 0


def _cmd_compare(args) -> int:
    solver_list = [s.strip() for s in args.solvers.split(",") if s.strip()]
    if len(solver_list) < 2:
        raise ConfigError("compare needs at least two solvers (--solvers a,b)")
    for s in solver_list:
        if s not in SOLVERS:
            raise ConfigError(f"unknown solver {s!r}; choose from {SOLVERS}")
    system, meta, vertices = _load_problem(args)

    u_ref = None
    if system.matrix.nrows <= args.reference_cap:
        u_ref = scipy.sparse.linalg.spsolve(system.matrix.to_scipy().tocsc(),
                                            system.rhs)

    rows = []
    for solver in solver_list:
        args.solver = solver
        u, report, _ = _solve(args, system, vertices)
        err = float(np.linalg.norm(u - u_ref)) if u_ref is not None else None
        rows.append({
            "solver": solver,
            "iterations": report.iterations,
            "converged": report.converged,
            "final_rel_res": report.rel_res_history[-1],
            "numerical_error": err,
            "setup_seconds": report.setup_seconds,
            "apply_seconds": report.apply_seconds,
            "total_seconds": report.total_seconds,
        })

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = Path(args.compare_csv) if args.compare_csv else out / "compare.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
    for row in rows:
        err = row["numerical_error"]
        err_txt = f"{err:.3e}" if err is not None else "n/a"
        print(f"{row['solver']:>14}: {row['iterations']:>6} its  "
              f"rel_res {row['final_rel_res']:.3e}  error {err_txt}  "
              f"total {row['total_seconds']:.3f}s")
    return 0


# -- argument parsing -------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    src = p.add_argument_group("problem source (exactly one)")
    src.add_argument("--generate", metavar="KIND",
                     help=f"built-in problem kind: {', '.join(meshmod.GENERATOR_KINDS)}")
    src.add_argument("--refinement", type=int, default=0)
    src.add_argument("--mesh", metavar="PATH", help="mesh file (.node or .msh)")
    src.add_argument("--mesh-format", choices=("node-ele", "gmsh-v2-subset"),
                     default=None)
    src.add_argument("--bc", metavar="PATH", help="boundary-condition spec file")
    src.add_argument("--matrix", metavar="PATH", help="Matrix Market system matrix")
    src.add_argument("--rhs", metavar="PATH", help="plain-text load vector")

    mat = p.add_argument_group("material")
    mat.add_argument("--youngs", type=float, default=None)
    mat.add_argument("--poisson", type=float, default=None)
    mat.add_argument("--plane-stress", action="store_true")

    sol = p.add_argument_group("solver")
    sol.add_argument("--threshold", type=int, default=None,
                     help="region-tree split threshold (default 4 in 2D, 8 in 3D; "
                          "9 reproduces the classical GMG stencil on uniform grids)")
    sol.add_argument("--pre-sweeps", type=int, default=3)
    sol.add_argument("--post-sweeps", type=int, default=3)
    sol.add_argument("--tol", type=float, default=1e-6)
    sol.add_argument("--max-iters", type=int, default=None)
    sol.add_argument("--coarsest-cap", type=int, default=5000)
    sol.add_argument("--paper-literal-weights", action="store_true",
                     help="distance-ratio interpolation weights instead of hat "
                          "weights (study variant; breaks the interpolation "
                          "property)")

    out = p.add_argument_group("outputs")
    out.add_argument("--out", default="vasmg-out", help="artifact directory")
    out.add_argument("--dump-tree", metavar="PATH",
                     help="write the region-tree text dump")
    out.add_argument("--dump-hierarchy", metavar="DIR",
                     help="export every level operator and prolongation (.mtx)")
    out.add_argument("--export-system", metavar="DIR",
                     help="export the assembled A (.mtx) and F (.txt)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vasmg",
        description="Sparse elasticity solves with an auxiliary-space "
                    "multigrid-preconditioned conjugate gradient method.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve one system with one solver")
    _add_common(run)
    run.add_argument("--solver", choices=SOLVERS, default="pcg-vasmg")
    run.add_argument("--report", metavar="PATH", help="report JSON path")
    run.add_argument("--history-csv", metavar="PATH")
    run.add_argument("--solution", metavar="PATH")
    run.set_defaults(func=_cmd_run)

    comp = sub.add_parser("compare", help="run several solvers on one system")
    _add_common(comp)
    comp.add_argument("--solvers", required=True,
                      help="comma-separated solver list")
    comp.add_argument("--reference-cap", type=int, default=20000,
                      help="max DOFs for the direct reference solution")
    comp.add_argument("--compare-csv", metavar="PATH")
    comp.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CLIError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}),
              file=sys.stderr)
        return _EXIT_CODES[exc.category]


if __name__ == "__main__":
    sys.exit(main())
