"""Matrix assembly against the matrix-free operators (dual-route check)."""

import numpy as np
import pytest

from fvrom import operators as ops
from fvrom.fields import Field
from fvrom.matrices import (
    assemble_operator_matrices,
    convection_matrix,
    divergence_matrix,
    gradient_matrix,
    laplacian_scalar_matrix,
    laplacian_vector_matrix,
)
from fvrom.mesh import generate_cavity_mesh

from conftest import (
    cavity_pressure_bcs,
    cavity_velocity_bcs,
    cylinder_pressure_bcs,
    cylinder_velocity_bcs,
)


def rel_err(a, b):
    scale = max(np.abs(a).max(), np.abs(b).max(), 1e-300)
    return np.abs(a - b).max() / scale


@pytest.fixture(params=["cavity", "cylinder"])
def setting(request, cylinder_coarse):
    if request.param == "cavity":
        mesh = generate_cavity_mesh(8, 0.1)
        return mesh, cavity_velocity_bcs(), cavity_pressure_bcs()
    return cylinder_coarse, cylinder_velocity_bcs(), cylinder_pressure_bcs()


class TestMatrixOperatorEquivalence:
    def test_laplacian_scalar(self, setting):
        mesh, _, p_bcs = setting
        rng = np.random.default_rng(10)
        L, c = laplacian_scalar_matrix(mesh, p_bcs)
        for _ in range(3):
            x = rng.standard_normal(mesh.n_cells)
            f = Field(mesh, x, p_bcs)
            assert rel_err(L @ x + c, ops.laplacian(f, 1.0)) <= 1e-10

    def test_laplacian_vector(self, setting):
        mesh, u_bcs, _ = setting
        rng = np.random.default_rng(11)
        L, c = laplacian_vector_matrix(mesh, u_bcs)
        for _ in range(3):
            f = Field(mesh, rng.standard_normal((mesh.n_cells, 2)), u_bcs)
            assert rel_err(L @ f.flat() + c, ops.laplacian(f, 1.0).T.reshape(-1)) <= 1e-10

    def test_gradient(self, setting):
        mesh, _, p_bcs = setting
        rng = np.random.default_rng(12)
        B, c = gradient_matrix(mesh, p_bcs)
        x = rng.standard_normal(mesh.n_cells)
        f = Field(mesh, x, p_bcs)
        assert rel_err(B @ x + c, ops.gradient(f).T.reshape(-1)) <= 1e-10

    def test_divergence(self, setting):
        mesh, u_bcs, _ = setting
        rng = np.random.default_rng(13)
        P, c = divergence_matrix(mesh, u_bcs)
        f = Field(mesh, rng.standard_normal((mesh.n_cells, 2)), u_bcs)
        assert rel_err(P @ f.flat() + c, ops.divergence(f)) <= 1e-10

    @pytest.mark.parametrize("scheme", ["linear", "upwind", "linear-upwind"])
    def test_convection(self, setting, scheme):
        mesh, u_bcs, _ = setting
        rng = np.random.default_rng(14)
        uprev = Field(mesh, rng.standard_normal((mesh.n_cells, 2)), u_bcs)
        flux = ops.face_flux(uprev)
        C, c = convection_matrix(mesh, u_bcs, flux, scheme)
        f = Field(mesh, rng.standard_normal((mesh.n_cells, 2)), u_bcs)
        assert rel_err(C @ f.flat() + c, ops.convection(flux, f, scheme).T.reshape(-1)) <= 1e-10


class TestAssembledSystem:
    def test_mass_matrix_is_cell_volumes(self):
        mesh = generate_cavity_mesh(2, 1.0)
        m = assemble_operator_matrices(
            mesh, cavity_velocity_bcs(), cavity_pressure_bcs(), np.zeros(mesh.n_faces)
        )
        np.testing.assert_allclose(m.M.diagonal(), 0.25)
        assert m.M.shape == (8, 8)

    def test_laplacian_of_linear_field_matches_operator(self):
        mesh = generate_cavity_mesh(6, 1.0)
        u_bcs = cavity_velocity_bcs()
        m = assemble_operator_matrices(mesh, u_bcs, cavity_pressure_bcs(), np.zeros(mesh.n_faces))
        f = Field(mesh, np.column_stack([mesh.cell_centre[:, 0], mesh.cell_centre[:, 1]]), u_bcs)
        np.testing.assert_allclose(
            m.apply_laplacian(f.flat()), ops.laplacian(f, 1.0).T.reshape(-1), atol=1e-12
        )

    def test_divergence_of_uniform_velocity_is_zero(self):
        from fvrom.fields import BoundaryCondition

        mesh = generate_cavity_mesh(4, 1.0)
        u_bcs = {
            "lid": BoundaryCondition("fixedValue", (1.0, 0.0)),
            "walls": BoundaryCondition("fixedValue", (1.0, 0.0)),
        }
        m = assemble_operator_matrices(mesh, u_bcs, cavity_pressure_bcs(), np.zeros(mesh.n_faces))
        u = Field.uniform(mesh, (1.0, 0.0), u_bcs)
        np.testing.assert_allclose(m.apply_divergence(u.flat()), 0.0, atol=1e-12)
