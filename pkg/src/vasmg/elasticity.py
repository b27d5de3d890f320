"""P1 finite-element assembly for isotropic linear elasticity.

Displacement DOFs are blocked by axis: vertex ``i``, axis ``a`` maps to row
``a*N + i``.  The assembled operator is the plane-strain (2D) or full 3D
stiffness matrix; homogeneous Dirichlet constraints are eliminated
symmetrically (row and column zeroed, unit diagonal, zero right-hand side)
so the constrained system stays SPD for conjugate gradients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh, signed_measures
from .sparse import SparseMatrix, norm2, spmv

_AXES = "xyz"


@dataclass(frozen=True)
class Material:
    """Isotropic material: Young's modulus, Poisson's ratio, Lame constants."""

    youngs_modulus: float
    poisson_ratio: float
    lame_mu: float
    lame_lambda: float


def make_material(youngs_modulus: float, poisson_ratio: float,
                  plane_stress: bool = False) -> Material:
    """Derive the Lame constants mu = E/(2(1+nu)), lambda = E*nu/((1+nu)(1-2nu)).

    ``plane_stress`` converts (E, nu) to the equivalent plane-strain pair
    E(1+2nu)/(1+nu)^2, nu/(1+nu) before deriving the constants, so thin
    in-plane problems can reuse the plane-strain kernel.

    The incompressible limit nu >= 0.5 is rejected (lambda diverges); nu = 0
    is accepted as the degenerate lambda = 0 case.
    """
    e, nu = float(youngs_modulus), float(poisson_ratio)
    if e <= 0.0:
        raise ValueError("Young's modulus must be positive")
    if nu < 0.0 or nu >= 0.5:
        raise ValueError("Poisson's ratio must lie in [0, 0.5)")
    if plane_stress:
        e, nu = e * (1.0 + 2.0 * nu) / (1.0 + nu) ** 2, nu / (1.0 + nu)
    mu = e / (2.0 * (1.0 + nu))
    lam = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    return Material(youngs_modulus=e, poisson_ratio=nu, lame_mu=mu, lame_lambda=lam)


@dataclass
class BoundaryCondition:
    """Declarative boundary data keyed by mesh tags.

    dirichlet:  (tag, axes) pairs; the listed displacement axes are fixed to
                zero on every vertex carrying the tag.
    traction:   (tag, force vector) pairs; force per unit length (2D) or unit
                area (3D), integrated consistently over tagged boundary facets.
    point_loads:(tag, force vector) pairs; the vector is added to the load of
                every tagged vertex.
    """

    dirichlet: list[tuple[str, tuple[int, ...]]] = field(default_factory=list)
    traction: list[tuple[str, tuple[float, ...]]] = field(default_factory=list)
    point_loads: list[tuple[str, tuple[float, ...]]] = field(default_factory=list)

    def validate(self, mesh: Mesh) -> None:
        known = mesh.tags()
        for tag, axes in self.dirichlet:
            if tag not in known:
                raise ValueError(f"dirichlet tag {tag!r} not present in mesh")
            if not axes or any(a < 0 or a >= mesh.dim for a in axes):
                raise ValueError(f"dirichlet axes {axes} invalid for dim {mesh.dim}")
        for name, entries in (("traction", self.traction),
                              ("point load", self.point_loads)):
            for tag, vec in entries:
                if tag not in known:
                    raise ValueError(f"{name} tag {tag!r} not present in mesh")
                if len(vec) != mesh.dim:
                    raise ValueError(f"{name} vector {vec} must have {mesh.dim} components")


@dataclass
class AssembledSystem:
    """Constrained stiffness matrix and load vector.

    DOF map: vertex i, axis a -> row a*N + i.  ``constrained_dofs`` lists the
    eliminated rows (unit diagonal, zero load).  ``vertices`` is kept so the
    auxiliary grid hierarchy can be built straight from the system.
    """

    matrix: SparseMatrix
    rhs: np.ndarray
    dim: int
    n_vertices: int
    constrained_dofs: np.ndarray
    vertices: np.ndarray

    def dof(self, vertex: int, axis: int) -> int:
        return axis * self.n_vertices + vertex

    @property
    def n_dofs(self) -> int:
        return self.dim * self.n_vertices


def _p1_gradients(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Constant basis gradients per element.

    Returns (grads, measures): grads[e, k, a] is the a-derivative of the
    barycentric basis of local vertex k on element e.
    """
    p = mesh.vertices[mesh.elements]
    d = mesh.dim
    edges = p[:, 1:, :] - p[:, :1, :]            # (M, d, d): rows are edge vectors
    inv = np.linalg.inv(edges)                   # batched
    grads = np.empty((len(mesh.elements), d + 1, d))
    grads[:, 1:, :] = np.transpose(inv, (0, 2, 1))
    grads[:, 0, :] = -grads[:, 1:, :].sum(axis=1)
    measures = np.abs(signed_measures(mesh.vertices, mesh.elements, d))
    return grads, measures


def assemble_operator(mesh: Mesh, material: Material) -> SparseMatrix:
    """Unconstrained stiffness matrix (symmetric positive semidefinite).

    Block (a, b) couples axis-a test functions with axis-b trial functions:
    the diagonal blocks carry (lambda + 2 mu) in their own direction plus mu
    in the others, the off-diagonal blocks lambda * A_ab + mu * A_ba with
    A_ab[i, j] = integral of d_a(phi_i) d_b(phi_j).
    """
    grads, vol = _p1_gradients(mesh)
    n = mesh.n_vertices
    d = mesh.dim
    lam, mu = material.lame_lambda, material.lame_mu
    conn = mesh.elements
    nper = d + 1

    rows, cols, vals = [], [], []
    for a in range(d):
        for b in range(d):
            # block[e, i, j] for all elements at once
            ga = grads[:, :, a]
            gb = grads[:, :, b]
            if a == b:
                block = (lam + 2.0 * mu) * ga[:, :, None] * ga[:, None, :]
                for c in range(d):
                    if c != a:
                        gc = grads[:, :, c]
                        block = block + mu * gc[:, :, None] * gc[:, None, :]
            else:
                block = lam * ga[:, :, None] * gb[:, None, :] \
                    + mu * gb[:, :, None] * ga[:, None, :]
            block = block * vol[:, None, None]
            rows.append((a * n + conn)[:, :, None].repeat(nper, axis=2).ravel())
            cols.append((b * n + conn)[:, None, :].repeat(nper, axis=1).ravel())
            vals.append(block.ravel())
    coo = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(d * n, d * n))
    return SparseMatrix.from_scipy(coo)


def assemble_loads(mesh: Mesh, bc: BoundaryCondition) -> np.ndarray:
    """Consistent load vector from tractions and point loads.

    A boundary facet contributes to a traction tag only when all of its
    vertices carry the tag; the constant traction is then shared equally
    among the facet nodes (exact for P1 traces).
    """
    n = mesh.n_vertices
    d = mesh.dim
    f = np.zeros(d * n)
    if bc.traction:
        facets = mesh.boundary_facets()
        fverts = mesh.vertices[facets]
        if d == 2:
            measures = np.linalg.norm(fverts[:, 1] - fverts[:, 0], axis=1)
        else:
            measures = 0.5 * np.linalg.norm(
                np.cross(fverts[:, 1] - fverts[:, 0], fverts[:, 2] - fverts[:, 0]),
                axis=1)
        for tag, force in bc.traction:
            tagged = np.array([all(tag in mesh.boundary_tags.get(int(v), ())
                                   for v in facet) for facet in facets])
            for facet, meas in zip(facets[tagged], measures[tagged]):
                share = meas / d
                for v in facet:
                    for a in range(d):
                        f[a * n + v] += force[a] * share
    for tag, force in bc.point_loads:
        for v in mesh.tagged(tag):
            for a in range(d):
                f[a * n + v] += force[a]
    return f


def constrained_dof_indices(mesh: Mesh, bc: BoundaryCondition) -> np.ndarray:
    n = mesh.n_vertices
    dofs: set[int] = set()
    for tag, axes in bc.dirichlet:
        for v in mesh.tagged(tag):
            for a in axes:
                dofs.add(a * n + int(v))
    return np.array(sorted(dofs), dtype=np.int64)


def eliminate_dirichlet(a: SparseMatrix, f: np.ndarray,
                        dofs: np.ndarray) -> tuple[SparseMatrix, np.ndarray]:
    """Symmetric elimination of homogeneous constraints.

    Rows and columns of the listed DOFs are zeroed, the diagonal set to one
    and the load entry to zero.  Homogeneous values mean no load transfer to
    the remaining equations.
    """
    coo = a.to_scipy().tocoo()
    mask = np.zeros(a.nrows, dtype=bool)
    mask[dofs] = True
    keep = ~(mask[coo.row] | mask[coo.col])
    rows = np.concatenate([coo.row[keep], dofs])
    cols = np.concatenate([coo.col[keep], dofs])
    vals = np.concatenate([coo.data[keep], np.ones(len(dofs))])
    out = SparseMatrix.from_scipy(
        sp.coo_matrix((vals, (rows, cols)), shape=(a.nrows, a.ncols)))
    f = f.copy()
    f[dofs] = 0.0
    return out, f


def assemble(mesh: Mesh, material: Material, bc: BoundaryCondition) -> AssembledSystem:
    """Assemble the constrained linear system A U = F for a mesh and loads."""
    bc.validate(mesh)
    dofs = constrained_dof_indices(mesh, bc)
    if len(dofs) == 0:
        raise ValueError("no Dirichlet constraint given: the system would be singular")
    a = assemble_operator(mesh, material)
    f = assemble_loads(mesh, bc)
    a, f = eliminate_dirichlet(a, f, dofs)
    return AssembledSystem(matrix=a, rhs=f, dim=mesh.dim,
                           n_vertices=mesh.n_vertices, constrained_dofs=dofs,
                           vertices=mesh.vertices)


def residual(a: SparseMatrix, f: np.ndarray, u: np.ndarray) -> np.ndarray:
    """r = F - A U."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (a.nrows,):
        raise ValueError(f"rhs has shape {f.shape}, expected ({a.nrows},)")
    return f - spmv(a, u)


def rel_res(a: SparseMatrix, f: np.ndarray, u: np.ndarray) -> float:
    """||F - A U|| / ||F||; falls back to ||F - A U|| when F is zero."""
    r = norm2(residual(a, f, u))
    nf = norm2(f)
    return r / nf if nf > 0.0 else r
