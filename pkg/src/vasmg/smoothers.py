"""Gauss-Seidel relaxation in forward, backward and symmetric sweep order.

The row loops are the hot path of every V-cycle, so they are jitted with
numba (cached across processes).  Sweep order is semantically significant:
the V-cycle pre-smooths forward and post-smooths backward, which makes one
cycle a symmetric operator and keeps the preconditioner SPD.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .sparse import SparseMatrix, norm2

_jit = {"nogil": True, "cache": True}

SWEEP_ORDERS = ("forward", "backward", "symmetric")


class DivergenceError(RuntimeError):
    """Successive-iterate error grew explosively; the matrix is unsuitable."""


@nb.njit(**_jit)
def _gs_forward(indptr, indices, data, f, u, sweeps):
    n = indptr.shape[0] - 1
    for _ in range(sweeps):
        for i in range(n):
            acc = 0.0
            diag = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                j = indices[jj]
                v = data[jj]
                if j == i:
                    diag = v
                else:
                    acc += v * u[j]
            u[i] = (f[i] - acc) / diag


@nb.njit(**_jit)
def _gs_backward(indptr, indices, data, f, u, sweeps):
    n = indptr.shape[0] - 1
    for _ in range(sweeps):
        for i in range(n - 1, -1, -1):
            acc = 0.0
            diag = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                j = indices[jj]
                v = data[jj]
                if j == i:
                    diag = v
                else:
                    acc += v * u[j]
            u[i] = (f[i] - acc) / diag


def _raw_sweeps(a: SparseMatrix, f: np.ndarray, u: np.ndarray,
                sweeps: int, forward: bool) -> None:
    """In-place sweeps without validation; diagonals must be known nonzero."""
    if sweeps <= 0:
        return
    kernel = _gs_forward if forward else _gs_backward
    kernel(a.row_offsets, a.col_indices, a.values, f, u, sweeps)


@dataclass(frozen=True)
class SmootherConfig:
    sweeps: int = 1
    order: str = "forward"

    def __post_init__(self):
        if self.sweeps < 0:
            raise ValueError("sweeps must be >= 0")
        if self.order not in SWEEP_ORDERS:
            raise ValueError(f"order must be one of {SWEEP_ORDERS}")


def _check_system(a: SparseMatrix, f: np.ndarray, u: np.ndarray) -> None:
    if a.nrows != a.ncols:
        raise ValueError("Gauss-Seidel needs a square matrix")
    if f.shape != (a.nrows,) or u.shape != (a.nrows,):
        raise ValueError(f"vector shapes {f.shape}, {u.shape} do not match "
                         f"matrix order {a.nrows}")
    diag = a.diagonal()
    zeros = np.nonzero(diag == 0.0)[0]
    if len(zeros):
        raise ValueError(f"zero diagonal entry at row {int(zeros[0])}")


def gs_sweep(a: SparseMatrix, f, u, cfg: SmootherConfig) -> np.ndarray:
    """Run ``cfg.sweeps`` in-order update passes and return the new iterate.

    Forward visits rows first to last, backward the reverse; symmetric runs a
    forward/backward pair per sweep.  ``sweeps == 0`` returns the input
    unchanged (a fresh copy).
    """
    f = np.ascontiguousarray(f, dtype=np.float64)
    u = np.array(u, dtype=np.float64, copy=True)
    _check_system(a, f, u)
    if cfg.order == "forward":
        _raw_sweeps(a, f, u, cfg.sweeps, forward=True)
    elif cfg.order == "backward":
        _raw_sweeps(a, f, u, cfg.sweeps, forward=False)
    else:
        for _ in range(cfg.sweeps):
            _raw_sweeps(a, f, u, 1, forward=True)
            _raw_sweeps(a, f, u, 1, forward=False)
    return u


def gs_solve(a: SparseMatrix, f, u0, k_max: int = 1000, eps: float = 1e-10,
             order: str = "forward") -> tuple[np.ndarray, int, float]:
    """Iterate single sweeps until the successive-iterate error drops below eps.

    Returns (iterate, iterations, last error).  An error explosion beyond
    1e6 times its starting value aborts with :class:`DivergenceError`; an SPD
    matrix cannot trigger this, the guard only catches misuse.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    f = np.ascontiguousarray(f, dtype=np.float64)
    u = np.array(u0, dtype=np.float64, copy=True)
    _check_system(a, f, u)
    cfg = SmootherConfig(sweeps=1, order=order)
    err = np.inf
    first_err = None
    k = 0
    while k < k_max:
        u_old = u
        u = gs_sweep(a, f, u, cfg)
        err = norm2(u - u_old)
        k += 1
        if first_err is None:
            first_err = err
        elif first_err > 0.0 and err > 1e6 * first_err:
            raise DivergenceError(
                f"Gauss-Seidel error grew from {first_err:.3e} to {err:.3e} "
                f"after {k} sweeps")
        if err < eps:
            break
    return u, k, float(err)
