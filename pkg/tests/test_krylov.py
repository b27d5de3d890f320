import numpy as np
import pytest

import vasmg
from conftest import delaunay_problem, random_spd
from vasmg.krylov import (JacobiPreconditioner, SolveReport,
                          lanczos_condition_estimate, pcg)
from vasmg.sparse import NotSPDError, SparseMatrix


def test_identity_converges_in_one_iteration(rng):
    a = SparseMatrix.identity(10)
    f = rng.standard_normal(10)
    u, report = pcg(a, f, eps=1e-12)
    assert report.iterations == 1
    assert report.converged
    assert np.abs(u - f).max() <= 1e-14


def test_finite_termination_small_systems(rng):
    # mild conditioning so rounding cannot push past the exact-arithmetic
    # n-step termination at the 1e-12 tolerance
    for n in (5, 12, 20):
        dense = random_spd(n, rng, kappa=5.0)
        a = SparseMatrix.from_dense(dense)
        f = rng.standard_normal(n)
        u, report = pcg(a, f, eps=1e-12, k_max=n + 5)
        assert report.converged
        assert report.iterations <= n
        exact = np.linalg.solve(dense, f)
        assert np.linalg.norm(u - exact) <= 1e-9 * np.linalg.norm(exact)


def test_exact_inverse_preconditioner_one_iteration(rng):
    dense = random_spd(15, rng, kappa=1e4)
    a = SparseMatrix.from_dense(dense)
    inv = np.linalg.inv(dense)
    f = rng.standard_normal(15)
    u, report = pcg(a, f, preconditioner=lambda r: inv @ r, eps=1e-10)
    assert report.iterations == 1
    assert report.converged


def plain_cg_iterates(a, f, n_iters):
    """Textbook plain CG transcribed independently of the pcg code path.

    It shares the package's mat-vec kernel on purpose: CG trajectories are
    chaotically sensitive to last-ulp kernel differences (deviations grow
    several-fold per iteration), so recurrence-structure equivalence is only
    observable with identical elementary operations.
    """
    from vasmg.sparse import spmv

    u = np.zeros(a.nrows)
    r = f.copy()
    p = r.copy()
    rho = float(np.dot(r, r))
    out = []
    for _ in range(n_iters):
        q = spmv(a, p)
        alpha = rho / float(np.dot(p, q))
        u += alpha * p
        r -= alpha * q
        out.append(u.copy())
        rho_new = float(np.dot(r, r))
        p = r + (rho_new / rho) * p
        rho = rho_new
    return out


def test_identity_preconditioner_matches_plain_cg_reference(rng):
    dense = random_spd(20, rng, kappa=300.0)
    a = SparseMatrix.from_dense(dense)
    f = rng.standard_normal(20)
    reference = plain_cg_iterates(a, f, 20)
    for k in (1, 3, 7, 12, 20):
        u, report = pcg(a, f, eps=1e-300, k_max=k)
        assert report.iterations == k
        ref = reference[k - 1]
        assert np.abs(u - ref).max() <= 1e-12 * max(1.0, np.abs(ref).max())


def test_a_norm_error_monotone(rng):
    dense = random_spd(40, rng, kappa=1e3)
    a = SparseMatrix.from_dense(dense)
    f = rng.standard_normal(40)
    exact = np.linalg.solve(dense, f)
    prev = None
    for k in range(1, 30):
        u, _ = pcg(a, f, eps=1e-300, k_max=k)
        e = u - exact
        err = float(e @ (dense @ e))
        if prev is not None:
            assert err <= prev * (1.0 + 1e-10)
        prev = err


def test_residual_drift_is_bounded(rng):
    # ill-conditioned diagonal system forces several hundred iterations
    diag = np.geomspace(1.0, 1e4, 300)
    a = SparseMatrix.from_dense(np.diag(diag))
    f = rng.standard_normal(300)
    u, report = pcg(a, f, eps=1e-8, k_max=3000)
    assert report.converged
    assert report.iterations > 50
    assert len(report.residual_drift) >= 1
    assert all(d <= 1e-8 for _, d in report.residual_drift)


def test_exact_initial_guess(rng):
    from vasmg.sparse import spmv

    dense = random_spd(8, rng)
    a = SparseMatrix.from_dense(dense)
    exact = rng.standard_normal(8)
    f = spmv(a, exact)  # same kernel as pcg's residual -> exactly zero residual
    u, report = pcg(a, f, u0=exact)
    assert report.iterations == 0
    assert report.converged
    assert report.rel_res_history == [0.0]


def test_history_invariants(rng):
    system = delaunay_problem(rng, 20)
    u, report = pcg(system.matrix, system.rhs, eps=1e-8)
    assert report.rel_res_history[0] == 1.0
    assert report.converged
    assert report.rel_res_history[-1] < 1e-8
    assert len(report.rel_res_history) == report.iterations + 1
    assert len(report.history_seconds) == len(report.rel_res_history)


def test_k_max_exhaustion_reports_not_converged(rng):
    dense = random_spd(30, rng, kappa=1e5)
    a = SparseMatrix.from_dense(dense)
    f = rng.standard_normal(30)
    u, report = pcg(a, f, eps=1e-14, k_max=3)
    assert not report.converged
    assert report.iterations == 3


def test_indefinite_matrix_diagnosed():
    a = SparseMatrix.from_dense(np.diag([1.0, -1.0]))
    with pytest.raises(NotSPDError, match="matrix not SPD"):
        pcg(a, np.array([0.0, 1.0]), eps=1e-8)


def test_indefinite_preconditioner_diagnosed(rng):
    a = SparseMatrix.identity(5)
    f = rng.standard_normal(5)
    with pytest.raises(NotSPDError, match="preconditioner not SPD"):
        pcg(a, f, preconditioner=lambda r: -r)


def test_bad_inputs():
    a = SparseMatrix.identity(3)
    with pytest.raises(ValueError, match="tolerance"):
        pcg(a, np.ones(3), eps=0.0)
    with pytest.raises(ValueError, match="rhs"):
        pcg(a, np.ones(2))
    with pytest.raises(TypeError):
        pcg(a, np.ones(3), preconditioner=42)


def test_jacobi_preconditioner(rng):
    diag = np.geomspace(1.0, 1e4, 50)
    a = SparseMatrix.from_dense(np.diag(diag))
    f = rng.standard_normal(50)
    u, report = pcg(a, f, preconditioner=JacobiPreconditioner(a), eps=1e-12)
    assert report.iterations == 1  # jacobi is exact for diagonal systems
    with pytest.raises(NotSPDError):
        JacobiPreconditioner(SparseMatrix.from_dense(np.diag([1.0, -2.0])))


def test_condition_estimate_identity(rng):
    a = SparseMatrix.identity(12)
    _, report = pcg(a, rng.standard_normal(12), eps=1e-12)
    assert abs(report.condition_estimate - 1.0) <= 1e-8


def test_condition_estimate_two_point_spectrum():
    a = SparseMatrix.from_dense(np.diag([1.0, 10.0]))
    _, report = pcg(a, np.array([1.0, 1.0]), eps=1e-12)
    assert report.condition_estimate == pytest.approx(10.0, rel=0.01)


def test_condition_estimate_preconditioning_helps(rng):
    prob = vasmg.builtin_problem("square-hole-plate", 0)
    system = vasmg.assemble(prob.mesh, prob.material, prob.bc)
    precond = vasmg.build_preconditioner(system)
    _, rep_precond = pcg(system.matrix, system.rhs, precond, eps=1e-6)
    _, rep_plain = pcg(system.matrix, system.rhs, eps=1e-6, k_max=20000)
    assert rep_precond.condition_estimate < 0.01 * rep_plain.condition_estimate


def test_lanczos_estimate_direct():
    assert lanczos_condition_estimate([], []) is None
    assert lanczos_condition_estimate([0.5], []) == 1.0


def test_report_dataclass_defaults():
    report = SolveReport(iterations=1, rel_res_history=[1.0, 0.5], converged=False)
    assert report.condition_estimate is None
    assert report.residual_drift == []
