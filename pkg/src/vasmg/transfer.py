"""Grid transfer operators and the Galerkin operator hierarchy.

Prolongation rows interpolate each fine point from the corners of the
auxiliary cell that contains it, using multilinear hat weights; restriction
is the exact transpose.  The scalar weight pattern is replicated once per
displacement axis (DOFs are blocked all-x, all-y[, all-z]), and rows of
Dirichlet-constrained fine DOFs are zeroed so constraints survive coarse
corrections untouched.

``weight_rule="paper-literal"`` swaps each axis weight for its complement
(distance over side length instead of one minus it).  That variant gives a
coincident corner weight zero, so it breaks the interpolation property; it is
kept only for side-by-side study and is never the default.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .elasticity import AssembledSystem
from .regiontree import CoarseLevel, RegionTree, child_order, coarse_level, prune_and_index
from .sparse import (CholeskyFactor, NotSPDError, SparseMatrix,
                     dense_cholesky_factor, transpose, triple_product)

WEIGHT_RULES = ("hat", "paper-literal")


def scalar_weights(cell_bounds, p, rule: str = "hat") -> np.ndarray:
    """Interpolation weights of point ``p`` against the 2^d cell corners.

    Corner order matches the region tree's clockwise convention.  Hat
    weights: with xi_a = (p_a - low_a)/(high_a - low_a), a corner picking the
    high (low) side of axis a contributes the factor xi_a (1 - xi_a).  They
    sum to one and a corner coincident with ``p`` receives weight one.
    """
    b = np.asarray(cell_bounds, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if b.ndim != 2 or b.shape[1] != 2 or b.shape[0] not in (2, 3):
        raise ValueError("cell_bounds must have shape (dim, 2)")
    if rule not in WEIGHT_RULES:
        raise ValueError(f"unknown weight rule {rule!r}")
    lows, highs = b[:, 0], b[:, 1]
    sides = highs - lows
    if np.any(sides <= 0.0):
        raise ValueError("degenerate cell: zero side length")
    if np.any(p < lows) or np.any(p > highs):
        raise ValueError(f"point {p.tolist()} outside the closed cell")
    xi = (p - lows) / sides
    low_w, high_w = 1.0 - xi, xi
    if rule == "paper-literal":
        low_w, high_w = high_w, low_w
    order = child_order(b.shape[0])
    weights = np.empty(len(order))
    for k, sel in enumerate(order):
        w = 1.0
        for a, s in enumerate(sel):
            w *= high_w[a] if s else low_w[a]
        weights[k] = w
    return weights


@dataclass(frozen=True)
class TransferOperator:
    """Prolongation between two consecutive levels.

    ``matrix`` has shape (dof_blocks * fine_count, dof_blocks * coarse_count);
    block a carries the scalar weight pattern shifted by (a*fine_count,
    a*coarse_count), all cross-block entries zero.  Restriction is
    ``transpose(matrix)``.
    """

    matrix: SparseMatrix
    fine_count: int
    coarse_count: int
    dof_blocks: int


def build_prolongation(fine, coarse: CoarseLevel, dof_blocks: int, *,
                       weight_rule: str = "hat",
                       inactive_rows=None) -> TransferOperator:
    """Interpolation operator from ``coarse`` onto fine points.

    ``fine`` is either an (N, dim) point array or a finer :class:`CoarseLevel`
    (its deduplicated vertices are used).  Every fine point must fall in
    exactly one cell of ``coarse``; the containing cell is found with the
    region tree's deterministic tie-break.  ``inactive_rows`` lists blocked
    DOF indices whose rows are zeroed (constrained or dead fine DOFs).
    """
    if isinstance(fine, CoarseLevel):
        points = fine.coarse_vertices
    else:
        points = np.asarray(fine, dtype=np.float64)
    tree = coarse.tree
    d = dof_blocks
    if points.ndim != 2 or points.shape[1] != tree.dim:
        raise ValueError(f"fine points must have shape (N, {tree.dim})")
    if d not in (1, 2, 3):
        raise ValueError("dof_blocks must be 1, 2 or 3")

    n_fine = len(points)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for k in range(n_fine):
        p = points[k]
        try:
            node = tree.locate_cell(p, coarse.level_depth)
        except ValueError as exc:
            raise ValueError(f"fine point {k} is orphaned: {exc}") from exc
        ci = coarse.cell_index(node)
        weights = scalar_weights(tree.node_bounds(node), p, weight_rule)
        for w, cid in zip(weights, coarse.cell_corner_ids[ci]):
            if w != 0.0:
                rows.append(k)
                cols.append(cid)
                vals.append(w)
    scalar = sp.coo_matrix((vals, (rows, cols)), shape=(n_fine, coarse.count)).tocsr()
    blocked = sp.block_diag([scalar] * d, format="csr") if d > 1 else scalar

    if inactive_rows is not None and len(inactive_rows):
        coo = blocked.tocoo()
        dead = np.zeros(blocked.shape[0], dtype=bool)
        dead[np.asarray(inactive_rows, dtype=np.int64)] = True
        keep = ~dead[coo.row]
        blocked = sp.coo_matrix((coo.data[keep], (coo.row[keep], coo.col[keep])),
                                shape=blocked.shape).tocsr()
    return TransferOperator(matrix=SparseMatrix.from_scipy(blocked),
                            fine_count=n_fine, coarse_count=coarse.count,
                            dof_blocks=d)


@dataclass
class GridLevel:
    """One level of the hierarchy: its operator and the transfer below it.

    ``prolongation`` maps the next coarser level onto this one (None on the
    coarsest).  ``coarse_grid`` is this level's auxiliary grid (None on the
    fine FEM level).  ``inactive_dofs`` are rows pinned to a unit diagonal:
    Dirichlet-eliminated DOFs on the fine level and, on coarse levels,
    corners whose prolongation column came out structurally empty.
    """

    matrix: SparseMatrix
    prolongation: TransferOperator | None = None
    coarse_grid: CoarseLevel | None = None
    inactive_dofs: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    stats: dict = field(default_factory=dict)


@dataclass
class Hierarchy:
    """Operator/transfer chain from the fine system down to a dense coarsest.

    ``coarsest_shift`` is the diagonal stabilization added before factorizing
    the coarsest operator, zero whenever the strict factorization succeeds.
    Auxiliary corner sets can be linearly dependent (a cell holding fewer
    vertices than corners), which leaves the Galerkin operator positive
    *semi*-definite with null space exactly null(P); restricted residuals are
    orthogonal to that null space and prolongation annihilates it, so the
    shifted solve acts as the exact solve on the meaningful subspace.
    """

    levels: list[GridLevel]
    coarsest_factor: CholeskyFactor
    setup_seconds: float = 0.0
    coarsest_shift: float = 0.0

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level_stats(self) -> list[dict]:
        return [dict(lv.stats) for lv in self.levels]

    @classmethod
    def single_level(cls, matrix: SparseMatrix) -> "Hierarchy":
        """Degenerate hierarchy: the matrix itself is the coarsest level."""
        t0 = time.perf_counter()
        factor = dense_cholesky_factor(matrix.to_dense())
        lv = GridLevel(matrix=matrix,
                       stats={"dofs": matrix.nrows, "nnz": matrix.nnz,
                              "tree_depth": None})
        return cls(levels=[lv], coarsest_factor=factor,
                   setup_seconds=time.perf_counter() - t0)


def _with_unit_diagonal(a: SparseMatrix, dofs: np.ndarray) -> SparseMatrix:
    if len(dofs) == 0:
        return a
    coo = a.to_scipy().tocoo()
    rows = np.concatenate([coo.row, dofs])
    cols = np.concatenate([coo.col, dofs])
    vals = np.concatenate([coo.data, np.ones(len(dofs))])
    return SparseMatrix.from_scipy(
        sp.coo_matrix((vals, (rows, cols)), shape=(a.nrows, a.ncols)))


def build_hierarchy(system: AssembledSystem, tree: RegionTree, *,
                    coarsest_cap: int = 5000,
                    weight_rule: str = "hat") -> Hierarchy:
    """Build the level chain: fine FEM system, then auxiliary grids by depth.

    Level 1 is always the finest auxiliary grid (all retained leaves); each
    further level truncates the tree one depth higher, stopping once the
    coarse DOF count drops to ``coarsest_cap`` (which the coarsest level must
    reach by tree depth 1, else the cap is reported as too small).  Each
    coarse operator is the Galerkin product of the level above.
    """
    t_start = time.perf_counter()
    prune_and_index(tree)
    if len(tree.points) != system.n_vertices:
        raise ValueError("region tree does not cover the system's vertices")
    d = system.dim

    a = system.matrix
    if np.any(a.diagonal() <= 0.0):
        raise NotSPDError("fine operator has a non-positive diagonal entry")

    entries: list[tuple[SparseMatrix, CoarseLevel | None, np.ndarray, float]] = []
    entries.append((a, None, np.asarray(system.constrained_dofs, dtype=np.int64), 0.0))
    transfers: list[TransferOperator] = []

    fine_side: np.ndarray | CoarseLevel = tree.points
    inactive = entries[0][2]
    depth = tree.height
    while True:
        t0 = time.perf_counter()
        grid = coarse_level(tree, depth)
        p = build_prolongation(fine_side, grid, d, weight_rule=weight_rule,
                               inactive_rows=inactive)
        a_next = triple_product(transpose(p.matrix), a, p.matrix)
        col_nnz = np.bincount(p.matrix.col_indices, minlength=p.matrix.ncols)
        inactive_next = np.nonzero(col_nnz == 0)[0].astype(np.int64)
        a_next = _with_unit_diagonal(a_next, inactive_next)
        if np.any(a_next.diagonal() <= 0.0):
            raise NotSPDError(f"Galerkin operator at level {len(entries)} "
                              f"(tree depth {depth}) has a non-positive diagonal")
        transfers.append(p)
        entries.append((a_next, grid, inactive_next, time.perf_counter() - t0))
        a, fine_side, inactive = a_next, grid, inactive_next
        if a.nrows <= coarsest_cap:
            break
        if depth == 1:
            raise ValueError(
                f"coarsest level still has {a.nrows} DOFs at tree depth 1, above "
                f"the dense cap {coarsest_cap}; increase coarsest_cap")
        depth -= 1

    levels = []
    for i, (m, grid, dead, secs) in enumerate(entries):
        stats = {"dofs": m.nrows, "nnz": m.nnz,
                 "tree_depth": grid.level_depth if grid is not None else None,
                 "setup_ms": 1000.0 * secs}
        levels.append(GridLevel(
            matrix=m,
            prolongation=transfers[i] if i < len(transfers) else None,
            coarse_grid=grid, inactive_dofs=dead, stats=stats))

    t0 = time.perf_counter()
    dense = levels[-1].matrix.to_dense()
    shift = 0.0
    try:
        factor = dense_cholesky_factor(dense)
    except NotSPDError:
        # Dependent corner columns make the coarsest only semi-definite;
        # stabilize the redundant modes and refactor.
        shift = 1e-10 * float(np.abs(dense.diagonal()).max())
        dense[np.diag_indices_from(dense)] += shift
        try:
            factor = dense_cholesky_factor(dense)
        except NotSPDError as exc:
            raise NotSPDError(f"coarsest level {len(levels) - 1} failed the SPD "
                              f"factorization even after stabilization: {exc}") from exc
    levels[-1].stats["setup_ms"] += 1000.0 * (time.perf_counter() - t0)
    levels[-1].stats["stabilizing_shift"] = shift
    return Hierarchy(levels=levels, coarsest_factor=factor,
                     setup_seconds=time.perf_counter() - t_start,
                     coarsest_shift=shift)
