import numpy as np
import pytest

from fvrom.fields import BoundaryCondition, Field
from fvrom.mesh import _build, generate_cavity_mesh, generate_cylinder_mesh

# acceptance-summary collection (filled by test_acceptance.py)
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cavity8():
    return generate_cavity_mesh(8, 1.0)


@pytest.fixture(scope="session")
def cavity16_small():
    return generate_cavity_mesh(16, 0.1)


@pytest.fixture(scope="session")
def cylinder_coarse():
    return generate_cylinder_mesh(8, 24, 0.5, 3.0, 6.0, 3.0)


def strip_mesh(n, length=1.0, height=None):
    """1 x n quad strip with patches left/right/top/bottom."""
    h = length / n if height is None else height
    pid = lambda i, j: j * (n + 1) + i
    points = [(i * length / n, j * h) for j in (0, 1) for i in range(n + 1)]
    interior = [(pid(i, 0), pid(i, 1), i - 1, i) for i in range(1, n)]
    left = [(pid(0, 0), pid(0, 1), 0)]
    right = [(pid(n, 0), pid(n, 1), n - 1)]
    top = [(pid(i, 1), pid(i + 1, 1), i) for i in range(n)]
    bottom = [(pid(i, 0), pid(i + 1, 0), i) for i in range(n)]
    return _build(
        np.asarray(points, dtype=float),
        interior,
        [("left", left), ("right", right), ("top", top), ("bottom", bottom)],
        {},
    )


def wall_bcs(mesh, value=(0.0, 0.0)):
    return {p.name: BoundaryCondition("fixedValue", value) for p in mesh.patches}


def zero_gradient_bcs(mesh):
    return {p.name: BoundaryCondition("zeroGradient") for p in mesh.patches}


def linear_scalar_field(mesh, a, b, c, bc_kind="dirichlet"):
    """Field a*x + b*y + c with exact fixed-value data per boundary face.

    Exact per-face Dirichlet data is not expressible with constant patch
    datums, so tests using this helper construct meshes whose patches are
    each a single face or an iso-line of the function.
    """
    vals = a * mesh.cell_centre[:, 0] + b * mesh.cell_centre[:, 1] + c
    return vals


def cavity_velocity_bcs(lid=(1.0, 0.0)):
    return {
        "lid": BoundaryCondition("fixedValue", lid),
        "walls": BoundaryCondition("fixedValue", (0.0, 0.0)),
    }


def cavity_pressure_bcs():
    return {
        "lid": BoundaryCondition("zeroGradient"),
        "walls": BoundaryCondition("zeroGradient"),
    }


def cylinder_velocity_bcs(inflow=(1.0, 0.0)):
    return {
        "cylinder": BoundaryCondition("fixedValue", (0.0, 0.0)),
        "inlet": BoundaryCondition("fixedValue", inflow),
        "outlet": BoundaryCondition("zeroGradient"),
        "top_bottom": BoundaryCondition("symmetry"),
    }


def cylinder_pressure_bcs():
    return {
        "cylinder": BoundaryCondition("zeroGradient"),
        "inlet": BoundaryCondition("zeroGradient"),
        "outlet": BoundaryCondition("fixedValue", 0.0),
        "top_bottom": BoundaryCondition("zeroGradient"),
    }


def random_vector_field(mesh, bcs, rng):
    return Field(mesh, rng.standard_normal((mesh.n_cells, 2)), bcs)


def random_scalar_field(mesh, bcs, rng):
    return Field(mesh, rng.standard_normal(mesh.n_cells), bcs)
