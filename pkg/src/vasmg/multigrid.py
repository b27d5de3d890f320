"""V-cycle recursion over a hierarchy, and its use as a PCG preconditioner.

One cycle per level: pre-smooth forward, restrict the residual, recurse with
a zero initial guess, prolongate the correction, post-smooth backward; the
coarsest level is solved exactly with the cached dense Cholesky factor.
Applied to a residual from a zero initial guess, one cycle is a fixed linear,
symmetric and positive-definite operator, which is what conjugate gradients
requires of a preconditioner.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .elasticity import AssembledSystem
from .regiontree import RegionTree, build_tree
from .smoothers import _raw_sweeps
from .sparse import norm2, spmv
from .transfer import Hierarchy, build_hierarchy


@dataclass(frozen=True)
class VCycleConfig:
    """Sweep counts for pre-/post-smoothing.  Only the V cycle is implemented."""

    pre_sweeps: int = 3
    post_sweeps: int = 3
    cycle: str = "V"

    def __post_init__(self):
        if self.pre_sweeps < 0 or self.post_sweeps < 0:
            raise ValueError("sweep counts must be >= 0")
        if self.cycle != "V":
            raise ValueError("only the V cycle is implemented (W is reserved)")


def v_cycle(hierarchy: Hierarchy, level: int, f, u0,
            cfg: VCycleConfig | None = None) -> np.ndarray:
    """One V-cycle starting at ``level``; returns the updated iterate."""
    cfg = cfg or VCycleConfig()
    if not 0 <= level < hierarchy.n_levels:
        raise ValueError(f"level {level} outside 0..{hierarchy.n_levels - 1}")
    lv = hierarchy.levels[level]
    n = lv.matrix.nrows
    f = np.ascontiguousarray(f, dtype=np.float64)
    if f.shape != (n,):
        raise ValueError(f"rhs has shape {f.shape}, level {level} expects ({n},)")
    if lv.prolongation is None:
        return hierarchy.coarsest_factor.solve(f)
    u = np.array(u0, dtype=np.float64, copy=True)
    if u.shape != (n,):
        raise ValueError(f"iterate has shape {u.shape}, level {level} expects ({n},)")

    a = lv.matrix
    _raw_sweeps(a, f, u, cfg.pre_sweeps, forward=True)
    r = f - spmv(a, u)
    p = lv.prolongation.matrix.to_scipy()
    r_coarse = p.T @ r
    e_coarse = v_cycle(hierarchy, level + 1, r_coarse,
                       np.zeros(p.shape[1]), cfg)
    u += p @ e_coarse
    _raw_sweeps(a, f, u, cfg.post_sweeps, forward=False)
    return u


@dataclass
class Preconditioner:
    """One V-cycle from a zero initial guess, packaged as a linear operator.

    The application is deterministic for a frozen hierarchy (same input,
    bitwise-same output) and symmetric positive definite when the pre- and
    post-sweep counts match.  Dirichlet-constrained DOFs pass through
    unchanged (unit diagonal, zero prolongation rows).
    """

    hierarchy: Hierarchy
    cfg: VCycleConfig = field(default_factory=VCycleConfig)

    def __post_init__(self):
        if self.cfg.pre_sweeps < 1 or self.cfg.post_sweeps < 1:
            raise ValueError("preconditioner use requires at least one pre- "
                             "and one post-sweep")

    @property
    def n_dofs(self) -> int:
        return self.hierarchy.levels[0].matrix.nrows

    def apply(self, r) -> np.ndarray:
        r = np.ascontiguousarray(r, dtype=np.float64)
        if r.shape != (self.n_dofs,):
            raise ValueError(f"residual has shape {r.shape}, expected ({self.n_dofs},)")
        return v_cycle(self.hierarchy, 0, r, np.zeros(self.n_dofs), self.cfg)


def apply_preconditioner(b: Preconditioner, r) -> np.ndarray:
    return b.apply(r)


def build_preconditioner(system: AssembledSystem, *,
                         threshold: int | None = None,
                         coarsest_cap: int = 5000,
                         weight_rule: str = "hat",
                         config: VCycleConfig | None = None,
                         tree: RegionTree | None = None) -> Preconditioner:
    """Region tree + hierarchy + V-cycle config in one step.

    The default split threshold is 4 for 2D vertex sets and 8 for 3D ones.
    """
    if tree is None:
        if threshold is None:
            threshold = 4 if system.dim == 2 else 8
        tree = build_tree(system.vertices, threshold)
    hierarchy = build_hierarchy(system, tree, coarsest_cap=coarsest_cap,
                                weight_rule=weight_rule)
    return Preconditioner(hierarchy=hierarchy, cfg=config or VCycleConfig())


def mg_solve(hierarchy: Hierarchy, f, u0=None, k_max: int = 100,
             eps: float = 1e-6, cfg: VCycleConfig | None = None):
    """Stand-alone multigrid iteration (diagnostic; PCG is the solver).

    Stops when ||F - A U|| drops below ``eps`` times the *initial* residual
    norm.  Exhausting ``k_max`` flags the report as non-converged instead of
    raising.  Returns ``(U, SolveReport)``.
    """
    from .krylov import SolveReport

    cfg = cfg or VCycleConfig()
    a = hierarchy.levels[0].matrix
    f = np.ascontiguousarray(f, dtype=np.float64)
    u = np.zeros(a.nrows) if u0 is None else np.array(u0, dtype=np.float64, copy=True)
    t0 = time.perf_counter()
    res0 = norm2(f - spmv(a, u))
    if res0 == 0.0:
        elapsed = time.perf_counter() - t0
        report = SolveReport(iterations=0, rel_res_history=[0.0], converged=True,
                             setup_seconds=hierarchy.setup_seconds,
                             apply_seconds=elapsed,
                             total_seconds=hierarchy.setup_seconds + elapsed,
                             level_stats=hierarchy.level_stats())
        return u, report
    history = [1.0]
    seconds = [0.0]
    converged = False
    k = 0
    while k < k_max:
        u = v_cycle(hierarchy, 0, f, u, cfg)
        k += 1
        rel = norm2(f - spmv(a, u)) / res0
        history.append(rel)
        seconds.append(time.perf_counter() - t0)
        if rel < eps:
            converged = True
            break
    apply_seconds = time.perf_counter() - t0
    report = SolveReport(iterations=k, rel_res_history=history, converged=converged,
                         setup_seconds=hierarchy.setup_seconds,
                         apply_seconds=apply_seconds,
                         total_seconds=hierarchy.setup_seconds + apply_seconds,
                         history_seconds=seconds,
                         level_stats=hierarchy.level_stats())
    return u, report
