"""Sparse CSR matrices and the few dense kernels the solver stack needs.

The data model is deliberately small: a frozen CSR triple (:class:`SparseMatrix`),
plain float64 numpy arrays for dense vectors/matrices, and free functions for
mat-vec, transpose, triple products and dense Cholesky.  SciPy supplies the
compiled kernels behind this surface; everything is 64-bit floating point
because the target systems carry condition numbers that 32-bit cannot survive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp


class NotSPDError(ValueError):
    """A matrix that must be symmetric positive definite failed the check."""


@dataclass(frozen=True)
class SparseMatrix:
    """Immutable CSR matrix with int64 indices and float64 values.

    ``row_offsets`` has length ``nrows + 1``, is non-decreasing and ends at
    ``nnz``; within each row the column indices are strictly increasing.
    Instances are validated on construction and treated as read-only
    afterwards, so they are safe to share across threads.
    """

    nrows: int
    ncols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_offsets",
                           np.ascontiguousarray(self.row_offsets, dtype=np.int64))
        object.__setattr__(self, "col_indices",
                           np.ascontiguousarray(self.col_indices, dtype=np.int64))
        object.__setattr__(self, "values",
                           np.ascontiguousarray(self.values, dtype=np.float64))
        off, col, val = self.row_offsets, self.col_indices, self.values
        if self.nrows < 0 or self.ncols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if off.shape != (self.nrows + 1,):
            raise ValueError("row_offsets must have length nrows + 1")
        if off[0] != 0 or off[-1] != len(val) or np.any(np.diff(off) < 0):
            raise ValueError("row_offsets must be non-decreasing, start at 0 "
                             "and end at the number of stored values")
        if len(col) != len(val):
            raise ValueError("col_indices and values must have equal length")
        if len(col) and (col.min() < 0 or col.max() >= self.ncols):
            raise ValueError("column index out of range")
        if len(col) > 1:
            gaps = np.diff(col)
            row_start = np.zeros(len(col), dtype=bool)
            inner = off[1:-1]
            row_start[inner[inner < len(col)]] = True
            if np.any((gaps <= 0) & ~row_start[1:]):
                raise ValueError("column indices must be strictly increasing "
                                 "within each row")
        if np.isnan(val).any():
            raise ValueError("stored values must not be NaN")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_scipy(cls, m) -> "SparseMatrix":
        """Canonicalize any scipy sparse matrix (duplicates summed, sorted)."""
        m = sp.csr_matrix(m)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        return cls.from_scipy(sp.csr_matrix(np.asarray(a, dtype=np.float64)))

    @classmethod
    def from_coo(cls, nrows, ncols, rows, cols, values) -> "SparseMatrix":
        m = sp.coo_matrix((values, (rows, cols)), shape=(nrows, ncols))
        return cls.from_scipy(m)

    @classmethod
    def identity(cls, n) -> "SparseMatrix":
        return cls.from_scipy(sp.eye(n, format="csr"))

    # -- views -------------------------------------------------------------

    @property
    def nnz(self) -> int:
        return len(self.values)

    def to_scipy(self) -> sp.csr_matrix:
        """Zero-copy scipy view (cached; do not mutate)."""
        cached = getattr(self, "_scipy", None)
        if cached is None:
            cached = sp.csr_matrix(
                (self.values, self.col_indices, self.row_offsets),
                shape=(self.nrows, self.ncols), copy=False)
            object.__setattr__(self, "_scipy", cached)
        return cached

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()


# -- sparse kernels ----------------------------------------------------------

def spmv(a: SparseMatrix, x) -> np.ndarray:
    """y = A x."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.ncols,):
        raise ValueError(f"dimension mismatch: matrix is {a.nrows}x{a.ncols}, "
                         f"vector has shape {x.shape}")
    return a.to_scipy() @ x


def transpose(a: SparseMatrix) -> SparseMatrix:
    """B with B_ij = A_ji.  Exact involution: no value arithmetic happens."""
    return SparseMatrix.from_scipy(a.to_scipy().transpose().tocsr())


def triple_product(r: SparseMatrix, a: SparseMatrix, p: SparseMatrix) -> SparseMatrix:
    """Sparse R·A·P, evaluated as R·(A·P).

    Duplicate contributions are summed.  Drop tolerance is exactly zero:
    entries whose computed value is exactly 0.0 are not stored, and no
    nonzero value is ever thresholded away.
    """
    if r.ncols != a.nrows:
        raise ValueError(f"dimension mismatch: R is {r.nrows}x{r.ncols}, "
                         f"A is {a.nrows}x{a.ncols}")
    if a.ncols != p.nrows:
        raise ValueError(f"dimension mismatch: A is {a.nrows}x{a.ncols}, "
                         f"P is {p.nrows}x{p.ncols}")
    ap = a.to_scipy() @ p.to_scipy()
    return SparseMatrix.from_scipy(r.to_scipy() @ ap)


# -- dense vector kernels ----------------------------------------------------

def norm2(x) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=np.float64)))


def dot(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.dot(x, y))


def axpy(alpha: float, x, y) -> np.ndarray:
    """alpha*x + y."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return alpha * x + y


# -- dense Cholesky ----------------------------------------------------------

@dataclass(frozen=True)
class CholeskyFactor:
    """Cached Cholesky factor of a dense SPD matrix, reusable across solves."""

    factor: np.ndarray
    lower: bool

    @property
    def order(self) -> int:
        return self.factor.shape[0]

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (self.order,):
            raise ValueError(f"dimension mismatch: factor order {self.order}, "
                             f"rhs has shape {b.shape}")
        return scipy.linalg.cho_solve((self.factor, self.lower), b)


def dense_cholesky_factor(m) -> CholeskyFactor:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    try:
        c, lower = scipy.linalg.cho_factor(m, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotSPDError(f"matrix not SPD: {exc}") from exc
    return CholeskyFactor(c, lower)


def dense_cholesky_solve(m, b) -> np.ndarray:
    """Solve M x = b for dense SPD M via Cholesky factorization."""
    return dense_cholesky_factor(m).solve(b)


# -- Matrix Market / plain-text vector IO -------------------------------------

def read_matrix_market(path) -> SparseMatrix:
    """Read a coordinate-format real matrix (general or symmetric)."""
    try:
        m = scipy.io.mmread(path)
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot read Matrix Market file {path}: {exc}") from exc
    return SparseMatrix.from_scipy(m)


def write_matrix_market(path, a: SparseMatrix, *, symmetric: bool = False) -> None:
    """Write in coordinate format with full float64 precision.

    With ``symmetric=True`` only the lower triangle is stored and the header
    declares ``symmetric``; the caller is responsible for A actually being
    symmetric (readers reflect the stored triangle).
    """
    symmetry = "symmetric" if symmetric else "general"
    scipy.io.mmwrite(path, a.to_scipy().tocoo(), field="real",
                     symmetry=symmetry, precision=17)


def read_vector(path) -> np.ndarray:
    """One float per line; '#' starts a comment."""
    try:
        v = np.loadtxt(path, comments="#", ndmin=1, dtype=np.float64)
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot read vector file {path}: {exc}") from exc
    if v.ndim != 1:
        raise ValueError(f"vector file {path} must hold one value per line")
    return v


def write_vector(path, x) -> None:
    np.savetxt(path, np.asarray(x, dtype=np.float64), fmt="%.17g")
