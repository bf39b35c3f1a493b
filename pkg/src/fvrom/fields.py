"""Cell-centred fields with per-patch boundary conditions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FieldError
from .mesh import Mesh

FIXED_VALUE = "fixedValue"
FIXED_GRADIENT = "fixedGradient"
ZERO_GRADIENT = "zeroGradient"
SYMMETRY = "symmetry"

BC_KINDS = (FIXED_VALUE, FIXED_GRADIENT, ZERO_GRADIENT, SYMMETRY)


@dataclass(frozen=True)
class BoundaryCondition:
    """Time-constant boundary condition on one patch.

    ``value`` is the datum: a boundary value for ``fixedValue``, a
    face-normal gradient for ``fixedGradient``, and absent otherwise.
    """

    kind: str
    value: float | tuple | None = None

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise FieldError(f"unknown boundary condition kind {self.kind!r}")
        needs_value = self.kind in (FIXED_VALUE, FIXED_GRADIENT)
        if needs_value and self.value is None:
            raise FieldError(f"{self.kind} requires a datum")
        if not needs_value and self.value is not None:
            raise FieldError(f"{self.kind} does not take a datum")
        if isinstance(self.value, (list, np.ndarray)):
            object.__setattr__(self, "value", tuple(float(v) for v in self.value))

    @property
    def rank(self):
        if self.value is None:
            return None
        return "vector" if isinstance(self.value, tuple) else "scalar"

    def scaled(self, factor: float) -> "BoundaryCondition":
        if self.value is None:
            return self
        if isinstance(self.value, tuple):
            return BoundaryCondition(self.kind, tuple(factor * v for v in self.value))
        return BoundaryCondition(self.kind, factor * self.value)

    def datum(self) -> np.ndarray:
        """Datum as an array, zero when the condition carries none."""
        if self.value is None:
            return np.zeros(2) if False else np.array(0.0)
        return np.asarray(self.value, dtype=float)


class Field:
    """Scalar or 2-vector quantity stored at cell centres.

    Values are one row per cell: shape ``(n_cells,)`` for scalars and
    ``(n_cells, 2)`` for vectors.  Boundary conditions must cover every
    mesh patch exactly once.  Fields are treated as immutable by all
    operators.
    """

    def __init__(self, mesh: Mesh, values, bcs: dict[str, BoundaryCondition]):
        self.mesh = mesh
        self.values = np.asarray(values, dtype=float)
        self.bcs = dict(bcs)
        if self.values.shape not in ((mesh.n_cells,), (mesh.n_cells, 2)):
            raise FieldError(
                f"values shape {self.values.shape} incompatible with {mesh.n_cells} cells"
            )
        if set(self.bcs) != set(mesh.patch_names):
            missing = set(mesh.patch_names) - set(self.bcs)
            extra = set(self.bcs) - set(mesh.patch_names)
            raise FieldError(f"boundary conditions missing={sorted(missing)} extra={sorted(extra)}")
        for name, bc in self.bcs.items():
            if bc.rank is not None and bc.rank != self.rank:
                raise FieldError(f"patch {name!r}: datum rank {bc.rank} != field rank {self.rank}")

    @property
    def rank(self) -> str:
        return "vector" if self.values.ndim == 2 else "scalar"

    @property
    def n_components(self) -> int:
        return 2 if self.rank == "vector" else 1

    def copy(self, values=None) -> "Field":
        return Field(self.mesh, self.values.copy() if values is None else values, self.bcs)

    def flat(self) -> np.ndarray:
        """Component-major flat view: [all x; all y] for vectors."""
        if self.rank == "scalar":
            return self.values
        return self.values.T.reshape(-1)

    @staticmethod
    def from_flat(mesh, flat, bcs, rank) -> "Field":
        if rank == "vector":
            return Field(mesh, flat.reshape(2, mesh.n_cells).T, bcs)
        return Field(mesh, flat, bcs)

    @staticmethod
    def uniform(mesh, value, bcs) -> "Field":
        value = np.asarray(value, dtype=float)
        if value.ndim == 0:
            return Field(mesh, np.full(mesh.n_cells, float(value)), bcs)
        return Field(mesh, np.tile(value, (mesh.n_cells, 1)), bcs)

    @staticmethod
    def combine(fields, coefficients) -> "Field":
        """Linear combination of fields sharing mesh and BC structure.

        Fixed-value and fixed-gradient datums combine with the same
        coefficients, so the result carries the boundary data implied by
        linearity.
        """
        fields = list(fields)
        coefficients = np.asarray(coefficients, dtype=float)
        if len(fields) != len(coefficients) or not fields:
            raise FieldError("need matching, nonempty fields/coefficients")
        base = fields[0]
        values = np.zeros_like(base.values)
        for f, c in zip(fields, coefficients):
            if f.mesh is not base.mesh or f.rank != base.rank:
                raise FieldError("combined fields must share mesh and rank")
            values += c * f.values
        bcs = {}
        for name, bc in base.bcs.items():
            if bc.value is None:
                bcs[name] = bc
                continue
            datum = np.zeros_like(np.asarray(bc.value, dtype=float))
            for f, c in zip(fields, coefficients):
                other = f.bcs[name]
                if other.kind != bc.kind:
                    raise FieldError(f"patch {name!r}: mixed BC kinds in combination")
                datum = datum + c * np.asarray(other.value, dtype=float)
            value = tuple(datum) if datum.ndim else float(datum)
            bcs[name] = BoundaryCondition(bc.kind, value)
        return Field(base.mesh, values, bcs)

    def __repr__(self):
        return f"Field(rank={self.rank}, cells={self.mesh.n_cells})"


def homogeneous_like(bcs: dict[str, BoundaryCondition]) -> dict[str, BoundaryCondition]:
    """Same BC kinds with all datums zeroed (the linear part of the BCs)."""
    return {name: bc.scaled(0.0) for name, bc in bcs.items()}
