"""Built-in benchmark problems: generated mesh + material + boundary data.

Each entry pairs a mesh generator kind with the loads the corresponding
benchmark applies: plates pulled through a uniform edge traction with
symmetry planes fixed per axis, a quarter ring loaded at the bottom edge, a
dam cross-section under lateral load with a fully fixed base (thin-walled,
so plane stress), and a 3D box clamped on one face and pulled on the other.
"""

from __future__ import annotations

from dataclasses import dataclass

from .elasticity import BoundaryCondition, Material, make_material
from .mesh import Mesh, generate_mesh


@dataclass
class Problem:
    name: str
    mesh: Mesh
    material: Material
    bc: BoundaryCondition


_DEFAULTS: dict[str, dict] = {
    "hole-plate": dict(
        E=2.1e5, nu=0.3, plane_stress=False,
        dirichlet=[("left", (0,)), ("bottom", (1,))],
        traction=[("right", (10.0, 0.0))],
    ),
    "square-hole-plate": dict(
        E=2.1e5, nu=0.3, plane_stress=False,
        dirichlet=[("left", (0,)), ("bottom", (1,))],
        traction=[("right", (10.0, 0.0))],
    ),
    "ring-quadrant": dict(
        E=2.1e5, nu=0.3, plane_stress=False,
        dirichlet=[("left", (0, 1))],
        traction=[("bottom", (0.0, -10.0))],
    ),
    "dam-trapezoid": dict(
        E=2.1e5, nu=0.3, plane_stress=True,
        dirichlet=[("bottom", (0, 1))],
        traction=[("left", (10.0, 0.0))],
    ),
    "box-3d": dict(
        E=2.1e5, nu=0.3, plane_stress=False,
        dirichlet=[("left", (0, 1, 2))],
        traction=[("right", (10.0, 0.0, 0.0))],
    ),
}


def builtin_problem(kind: str, refinement: int = 0, *,
                    youngs_modulus: float | None = None,
                    poisson_ratio: float | None = None,
                    plane_stress: bool | None = None) -> Problem:
    """Generated benchmark problem; material overrides are optional."""
    if kind not in _DEFAULTS:
        raise ValueError(f"unknown problem kind {kind!r}; "
                         f"expected one of {sorted(_DEFAULTS)}")
    spec = _DEFAULTS[kind]
    mesh = generate_mesh(kind, refinement)
    material = make_material(
        spec["E"] if youngs_modulus is None else youngs_modulus,
        spec["nu"] if poisson_ratio is None else poisson_ratio,
        plane_stress=spec["plane_stress"] if plane_stress is None else plane_stress,
    )
    bc = BoundaryCondition(dirichlet=list(spec["dirichlet"]),
                           traction=list(spec["traction"]))
    return Problem(name=f"{kind}-r{refinement}", mesh=mesh, material=material, bc=bc)
