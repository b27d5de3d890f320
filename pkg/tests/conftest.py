"""Shared builders and dense reference implementations.

The dense Gauss-Seidel / CG / triple-product routines here are deliberately
independent, textbook transcriptions: tests compare the package's sparse
paths against them rather than against anything the package computes.
"""

import numpy as np
import pytest
from scipy.spatial import Delaunay

import vasmg


def random_spd(n, rng, kappa=100.0):
    """Dense SPD matrix with roughly the given condition number."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eigs = np.geomspace(1.0, kappa, n)
    return (q * eigs) @ q.T


def random_sparse_spd(n, rng, kappa=100.0):
    return vasmg.SparseMatrix.from_dense(random_spd(n, rng, kappa))


def delaunay_problem(rng, n_points, youngs=1.0, poisson=0.3):
    """Small random FEM problem: hull clamped, interior point-loaded."""
    pts = rng.random((n_points, 2)) * 2.0
    tri = Delaunay(pts)
    hull = set(int(v) for v in np.unique(tri.convex_hull))
    tags = {i: frozenset({"rim"}) if i in hull else frozenset({"body"})
            for i in range(n_points)}
    mesh = vasmg.Mesh(dim=2, vertices=pts, elements=tri.simplices,
                      boundary_tags=tags)
    material = vasmg.make_material(youngs, poisson)
    load = (float(rng.normal()), float(rng.normal()))
    has_body = any("body" in t for t in tags.values())
    bc = vasmg.BoundaryCondition(
        dirichlet=[("rim", (0, 1))],
        point_loads=[("body" if has_body else "rim", load)])
    return vasmg.assemble(mesh, material, bc)


def dense_gs_forward(a, f, u):
    u = u.copy()
    n = len(f)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            if j != i:
                acc += a[i, j] * u[j]
        u[i] = (f[i] - acc) / a[i, i]
    return u


def dense_gs_backward(a, f, u):
    u = u.copy()
    n = len(f)
    for i in range(n - 1, -1, -1):
        acc = 0.0
        for j in range(n):
            if j != i:
                acc += a[i, j] * u[j]
        u[i] = (f[i] - acc) / a[i, i]
    return u


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
