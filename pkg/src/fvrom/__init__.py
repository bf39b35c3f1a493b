"""Finite-volume workbench for POD-Galerkin reduced-order models."""

__version__ = "0.1.0"

from .fields import BoundaryCondition, Field
from .mesh import Mesh, Patch, generate_cavity_mesh, generate_cylinder_mesh

__all__ = [
    "BoundaryCondition",
    "Field",
    "Mesh",
    "Patch",
    "generate_cavity_mesh",
    "generate_cylinder_mesh",
]
