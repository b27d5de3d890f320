import numpy as np
import pytest

from conftest import dense_gs_backward, dense_gs_forward, random_spd
from vasmg.smoothers import (DivergenceError, SmootherConfig, gs_solve,
                             gs_sweep)
from vasmg.sparse import SparseMatrix

A22 = SparseMatrix.from_dense([[2.0, 1.0], [1.0, 3.0]])


def test_config_validation():
    with pytest.raises(ValueError):
        SmootherConfig(sweeps=-1)
    with pytest.raises(ValueError):
        SmootherConfig(order="sideways")


def test_diagonal_matrix_one_sweep_exact():
    a = SparseMatrix.from_dense(np.diag([2.0, 4.0, 8.0]))
    u = gs_sweep(a, [2.0, 8.0, 16.0], np.zeros(3), SmootherConfig(sweeps=1))
    assert np.array_equal(u, [1.0, 2.0, 2.0])


def test_zero_sweeps_is_identity():
    u0 = np.array([1.0, 2.0])
    u = gs_sweep(A22, [3.0, 4.0], u0, SmootherConfig(sweeps=0))
    assert np.array_equal(u, u0)
    assert u is not u0  # fresh copy, caller's vector untouched


def test_forward_sweep_hand_case():
    u = gs_sweep(A22, [3.0, 4.0], np.zeros(2), SmootherConfig(sweeps=1))
    assert u[0] == 1.5
    assert u[1] == pytest.approx((4.0 - 1.5) / 3.0)


def test_backward_sweep_hand_case():
    u = gs_sweep(A22, [3.0, 4.0], np.zeros(2),
                 SmootherConfig(sweeps=1, order="backward"))
    assert u[1] == pytest.approx(4.0 / 3.0)
    assert u[0] == pytest.approx((3.0 - 4.0 / 3.0) / 2.0)


def test_symmetric_sweep_is_forward_then_backward():
    sym = gs_sweep(A22, [3.0, 4.0], np.zeros(2),
                   SmootherConfig(sweeps=1, order="symmetric"))
    fwd = gs_sweep(A22, [3.0, 4.0], np.zeros(2), SmootherConfig(sweeps=1))
    both = gs_sweep(A22, [3.0, 4.0], fwd, SmootherConfig(sweeps=1, order="backward"))
    assert np.array_equal(sym, both)


def test_sweeps_match_dense_reference(rng):
    dense = random_spd(12, rng)
    a = SparseMatrix.from_dense(dense)
    f = rng.standard_normal(12)
    u0 = rng.standard_normal(12)
    fwd = gs_sweep(a, f, u0, SmootherConfig(sweeps=2))
    ref = dense_gs_forward(dense, f, dense_gs_forward(dense, f, u0))
    assert np.abs(fwd - ref).max() <= 1e-13 * max(1.0, np.abs(ref).max())
    bwd = gs_sweep(a, f, u0, SmootherConfig(sweeps=1, order="backward"))
    assert np.abs(bwd - dense_gs_backward(dense, f, u0)).max() <= 1e-13


def test_zero_diagonal_names_row():
    a = SparseMatrix.from_dense([[1.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ValueError, match="row 1"):
        gs_sweep(a, [1.0, 1.0], [0.0, 0.0], SmootherConfig())


def test_gs_solve_identity_converges_immediately():
    a = SparseMatrix.identity(3)
    f = np.array([1.0, 2.0, 3.0])
    u, k, err = gs_solve(a, f, f.copy(), k_max=10, eps=1e-10)
    assert k == 1 and err == 0.0
    assert np.array_equal(u, f)


def test_gs_solve_spd_2x2():
    f = np.array([3.0, 4.0])
    u, k, err = gs_solve(A22, f, np.zeros(2), k_max=200, eps=1e-12)
    exact = np.linalg.solve(A22.to_dense(), f)
    assert np.abs(u - exact).max() <= 1e-10
    assert err < 1e-12


def test_gs_solve_non_diagonally_dominant_spd(rng):
    dense = random_spd(20, rng, kappa=50.0)
    # SPD but certainly not diagonally dominant
    assert (np.abs(dense).sum(axis=1) - 2 * np.abs(np.diag(dense)) > 0).any()
    a = SparseMatrix.from_dense(dense)
    f = rng.standard_normal(20)
    u, k, err = gs_solve(a, f, np.zeros(20), k_max=5000, eps=1e-12)
    exact = np.linalg.solve(dense, f)
    assert np.abs(u - exact).max() <= 1e-9 * max(1.0, np.abs(exact).max())


def test_gs_solve_hits_k_max():
    f = np.array([3.0, 4.0])
    u, k, err = gs_solve(A22, f, np.zeros(2), k_max=2, eps=1e-16)
    assert k == 2 and err > 1e-16


def test_divergence_guard():
    a = SparseMatrix.from_dense([[1.0, 2.0], [2.0, 1.0]])  # indefinite
    with pytest.raises(DivergenceError):
        gs_solve(a, [1.0, 1.0], np.zeros(2), k_max=200, eps=1e-12)


def test_a_norm_error_monotone_per_symmetric_sweep(rng):
    for _ in range(20):
        n = int(rng.integers(5, 31))
        dense = random_spd(n, rng, kappa=float(rng.uniform(5, 500)))
        a = SparseMatrix.from_dense(dense)
        f = rng.standard_normal(n)
        exact = np.linalg.solve(dense, f)
        u = rng.standard_normal(n)
        prev = None
        for _ in range(30):
            u = gs_sweep(a, f, u, SmootherConfig(sweeps=1, order="symmetric"))
            e = u - exact
            a_norm = float(e @ (dense @ e))
            if prev is not None:
                assert a_norm <= prev * (1.0 + 1e-12)
            prev = a_norm


def test_order_reversal_duality_exact_tridiagonal(rng):
    # rows with at most two off-diagonal entries make the per-row sums
    # order-free (float addition is commutative), so the duality is bitwise
    n = 15
    off = rng.standard_normal(n - 1)
    dense = np.diag(rng.uniform(3.0, 5.0, n)) + np.diag(off, 1) + np.diag(off, -1)
    a = SparseMatrix.from_dense(dense)
    f = rng.standard_normal(n)
    u0 = rng.standard_normal(n)
    fwd = gs_sweep(a, f, u0, SmootherConfig(sweeps=1))
    rev = SparseMatrix.from_dense(dense[::-1, ::-1])
    bwd = gs_sweep(rev, f[::-1], u0[::-1],
                   SmootherConfig(sweeps=1, order="backward"))
    assert np.array_equal(fwd, bwd[::-1])


def test_order_reversal_duality_general(rng):
    # dense rows accumulate in opposite index order, so agreement is up to
    # summation rounding only
    dense = random_spd(15, rng)
    a = SparseMatrix.from_dense(dense)
    f = rng.standard_normal(15)
    u0 = rng.standard_normal(15)
    fwd = gs_sweep(a, f, u0, SmootherConfig(sweeps=1))
    rev = SparseMatrix.from_dense(dense[::-1, ::-1])
    bwd = gs_sweep(rev, f[::-1], u0[::-1],
                   SmootherConfig(sweeps=1, order="backward"))
    assert np.abs(fwd - bwd[::-1]).max() <= 1e-13 * max(1.0, np.abs(fwd).max())


def test_symmetric_sweep_defines_symmetric_operator(rng):
    dense = random_spd(20, rng)
    a = SparseMatrix.from_dense(dense)

    def smooth(f):
        return gs_sweep(a, f, np.zeros(20), SmootherConfig(sweeps=1, order="symmetric"))

    for _ in range(10):
        f1 = rng.standard_normal(20)
        f2 = rng.standard_normal(20)
        lhs = float(smooth(f1) @ f2)
        rhs = float(f1 @ smooth(f2))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))
