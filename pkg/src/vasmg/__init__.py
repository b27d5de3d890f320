"""Auxiliary-space multigrid preconditioning for sparse elasticity systems.

The pipeline: mesh in (or generated), P1 elasticity assembly, a region tree
over the grid vertices, multilinear transfer operators with Galerkin coarse
operators, and a V-cycle preconditioner driving conjugate gradients.
"""

from .elasticity import (AssembledSystem, BoundaryCondition, Material,
                         assemble, assemble_loads, assemble_operator,
                         make_material, rel_res, residual)
from .krylov import (JacobiPreconditioner, SolveReport,
                     lanczos_condition_estimate, pcg)
from .mesh import (Mesh, MeshFormatError, MeshStats, generate_mesh, mesh_stats,
                   point_stats, read_mesh, write_mesh)
from .multigrid import (Preconditioner, VCycleConfig, apply_preconditioner,
                        build_preconditioner, mg_solve, v_cycle)
from .problems import Problem, builtin_problem
from .regiontree import (CoarseLevel, RegionNode, RegionTree, TreeStats,
                         build_tree, coarse_level, locate, prune_and_index,
                         tree_stats)
from .smoothers import DivergenceError, SmootherConfig, gs_solve, gs_sweep
from .sparse import (CholeskyFactor, NotSPDError, SparseMatrix, axpy,
                     dense_cholesky_factor, dense_cholesky_solve, dot, norm2,
                     read_matrix_market, read_vector, spmv, transpose,
                     triple_product, write_matrix_market, write_vector)
from .transfer import (GridLevel, Hierarchy, TransferOperator,
                       build_hierarchy, build_prolongation, scalar_weights)

__version__ = "0.1.0"

__all__ = [
    "AssembledSystem", "BoundaryCondition", "CholeskyFactor", "CoarseLevel",
    "DivergenceError", "GridLevel", "Hierarchy", "JacobiPreconditioner",
    "Material", "Mesh", "MeshFormatError", "MeshStats", "NotSPDError",
    "Preconditioner", "Problem", "RegionNode", "RegionTree", "SmootherConfig",
    "SolveReport", "SparseMatrix", "TransferOperator", "TreeStats",
    "VCycleConfig", "apply_preconditioner", "assemble", "assemble_loads",
    "assemble_operator", "axpy", "build_hierarchy", "build_preconditioner",
    "build_prolongation", "build_tree", "builtin_problem", "coarse_level",
    "dense_cholesky_factor", "dense_cholesky_solve", "dot", "generate_mesh",
    "gs_solve", "gs_sweep", "lanczos_condition_estimate", "locate",
    "make_material", "mesh_stats",
    "mg_solve", "norm2", "pcg", "point_stats", "prune_and_index",
    "read_matrix_market", "read_mesh", "read_vector", "rel_res", "residual",
    "scalar_weights", "spmv", "transpose", "tree_stats", "triple_product",
    "v_cycle", "write_matrix_market", "write_mesh", "write_vector",
]
