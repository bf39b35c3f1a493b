"""Sparse-matrix form of the finite-volume operators.

Because boundary conditions make the discrete operators affine, every
builder returns ``(matrix, constant)`` such that ``matrix @ x + constant``
reproduces the matrix-free operator applied to a field with cell values
``x`` and the given boundary conditions.  Vector unknowns and vector face
values are component-major: ``[all x; all y]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import fields as fl
from .errors import FieldError
from .mesh import Mesh


def _scatter_matrix(mesh: Mesh) -> sp.csr_matrix:
    """Signed face-to-cell sum: owner +1, neighbour -1.  Shape (N, F)."""
    ni = mesh.n_interior
    rows = np.concatenate([mesh.owner, mesh.neighbour[:ni]])
    cols = np.concatenate([np.arange(mesh.n_faces), np.arange(ni)])
    data = np.concatenate([np.ones(mesh.n_faces), -np.ones(ni)])
    return sp.csr_matrix((data, (rows, cols)), shape=(mesh.n_cells, mesh.n_faces))


def _cell_value_to_face(mesh: Mesh) -> sp.csr_matrix:
    """Plain linear interpolation of any cell quantity; owner on boundary."""
    ni = mesh.n_interior
    w = mesh.face_weight
    rows = np.concatenate([np.arange(mesh.n_faces), np.arange(ni)])
    cols = np.concatenate([mesh.owner, mesh.neighbour[:ni]])
    data = np.concatenate([w, 1.0 - w[:ni]])
    return sp.csr_matrix((data, (rows, cols)), shape=(mesh.n_faces, mesh.n_cells))


def _patch_bc(mesh, bcs):
    for patch in mesh.patches:
        yield patch, bcs[patch.name]


def interp_scalar_matrix(mesh: Mesh, bcs, scheme: str = "linear", flux=None):
    """Face interpolation of a scalar field: (F x N, F)."""
    scheme = scheme.replace("_", "-")
    ni = mesh.n_interior
    rows, cols, data = [], [], []
    const = np.zeros(mesh.n_faces)

    if scheme == "linear":
        w = mesh.face_weight[:ni]
        rows += [np.arange(ni), np.arange(ni)]
        cols += [mesh.owner[:ni], mesh.neighbour[:ni]]
        data += [w, 1.0 - w]
    elif scheme in ("upwind", "linear-upwind"):
        if flux is None:
            raise FieldError(f"scheme {scheme!r} requires a mass flux")
        up = np.where(np.asarray(flux)[:ni] >= 0.0, mesh.owner[:ni], mesh.neighbour[:ni])
        rows.append(np.arange(ni))
        cols.append(up)
        data.append(np.ones(ni))
    else:
        raise FieldError(f"unknown interpolation scheme {scheme!r}")

    for patch, bc in _patch_bc(mesh, bcs):
        sl = patch.slice
        idx = np.arange(sl.start, sl.stop)
        if bc.kind == fl.FIXED_VALUE:
            const[sl] = float(bc.value)
        elif bc.kind in (fl.ZERO_GRADIENT, fl.SYMMETRY):
            rows.append(idx)
            cols.append(mesh.owner[sl])
            data.append(np.ones(patch.size))
        elif bc.kind == fl.FIXED_GRADIENT:
            rows.append(idx)
            cols.append(mesh.owner[sl])
            data.append(np.ones(patch.size))
            sf = mesh.face_area_vec[sl]
            dn = np.einsum("fd,fd->f", sf, mesh.face_delta[sl]) / mesh.face_area[sl]
            const[sl] = dn * float(bc.value)

    W = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(mesh.n_faces, mesh.n_cells),
    )
    if scheme == "linear-upwind":
        Gx, Gy, cgx, cgy = gradient_cell_matrices(mesh, bcs)
        up = np.where(np.asarray(flux)[:ni] >= 0.0, mesh.owner[:ni], mesh.neighbour[:ni])
        dx = mesh.face_centre[:ni] - mesh.cell_centre[up]
        sel = sp.csr_matrix((np.ones(ni), (np.arange(ni), up)), shape=(mesh.n_faces, mesh.n_cells))
        corr = sp.diags(np.concatenate([dx[:, 0], np.zeros(mesh.n_boundary)])) @ sel @ Gx
        corr += sp.diags(np.concatenate([dx[:, 1], np.zeros(mesh.n_boundary)])) @ sel @ Gy
        cvec = np.zeros(mesh.n_faces)
        cvec[:ni] = dx[:, 0] * (sel @ cgx)[:ni] + dx[:, 1] * (sel @ cgy)[:ni]
        const = const + cvec
        W = W + corr
    return W, const


def gradient_cell_matrices(mesh: Mesh, bcs):
    """Intensive Gauss-gradient of a scalar field as two N x N matrices."""
    W, c = interp_scalar_matrix(mesh, bcs, "linear")
    D = _scatter_matrix(mesh)
    inv_v = sp.diags(1.0 / mesh.cell_volume)
    DSx = D @ sp.diags(mesh.face_area_vec[:, 0])
    DSy = D @ sp.diags(mesh.face_area_vec[:, 1])
    Gx = inv_v @ DSx @ W
    Gy = inv_v @ DSy @ W
    return Gx.tocsr(), Gy.tocsr(), inv_v @ DSx @ c, inv_v @ DSy @ c


def interp_vector_matrix(mesh: Mesh, bcs, scheme: str = "linear", flux=None, grad_vec=None):
    """Face interpolation of a vector field: (2F x 2N, 2F).

    Symmetry patches couple the two components through the removal of the
    face-normal part; everything else is block diagonal.  ``grad_vec``
    may carry precomputed ``gradient_vector_matrices`` output.
    """
    scheme = scheme.replace("_", "-")
    nf, nc, ni = mesh.n_faces, mesh.n_cells, mesh.n_interior
    rows, cols, data = [], [], []
    const = np.zeros(2 * nf)

    def add(r, c, d):
        rows.append(np.asarray(r))
        cols.append(np.asarray(c))
        data.append(np.asarray(d, dtype=float))

    if scheme == "linear":
        w = mesh.face_weight[:ni]
        for comp in range(2):
            add(comp * nf + np.arange(ni), comp * nc + mesh.owner[:ni], w)
            add(comp * nf + np.arange(ni), comp * nc + mesh.neighbour[:ni], 1.0 - w)
    else:
        if flux is None:
            raise FieldError(f"scheme {scheme!r} requires a mass flux")
        up = np.where(np.asarray(flux)[:ni] >= 0.0, mesh.owner[:ni], mesh.neighbour[:ni])
        for comp in range(2):
            add(comp * nf + np.arange(ni), comp * nc + up, np.ones(ni))

    for patch, bc in _patch_bc(mesh, bcs):
        sl = patch.slice
        idx = np.arange(sl.start, sl.stop)
        if bc.kind == fl.FIXED_VALUE:
            v = np.asarray(bc.value, dtype=float)
            const[sl] = v[0]
            const[nf + sl.start : nf + sl.stop] = v[1]
        elif bc.kind == fl.ZERO_GRADIENT:
            for comp in range(2):
                add(comp * nf + idx, comp * nc + mesh.owner[sl], np.ones(patch.size))
        elif bc.kind == fl.FIXED_GRADIENT:
            g = np.asarray(bc.value, dtype=float)
            sf = mesh.face_area_vec[sl]
            dn = np.einsum("fd,fd->f", sf, mesh.face_delta[sl]) / mesh.face_area[sl]
            for comp in range(2):
                add(comp * nf + idx, comp * nc + mesh.owner[sl], np.ones(patch.size))
                const[comp * nf + sl.start : comp * nf + sl.stop] = dn * g[comp]
        elif bc.kind == fl.SYMMETRY:
            nhat = mesh.face_area_vec[sl] / mesh.face_area[sl, None]
            own = mesh.owner[sl]
            for comp in range(2):
                for other in range(2):
                    coeff = (1.0 if comp == other else 0.0) - nhat[:, comp] * nhat[:, other]
                    add(comp * nf + idx, other * nc + own, coeff)

    W = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * nf, 2 * nc),
    )
    if scheme == "linear-upwind":
        Gall, gconst = grad_vec if grad_vec is not None else gradient_vector_matrices(mesh, bcs)
        up = np.where(np.asarray(flux)[:ni] >= 0.0, mesh.owner[:ni], mesh.neighbour[:ni])
        dx = mesh.face_centre[:ni] - mesh.cell_centre[up]
        sel = sp.csr_matrix((np.ones(ni), (np.arange(ni), up)), shape=(nf, nc))
        corr_blocks = []
        cvec = np.zeros(2 * nf)
        for comp in range(2):
            # (grad u_comp)_up . dx
            block = (
                sp.diags(np.concatenate([dx[:, 0], np.zeros(mesh.n_boundary)])) @ sel @ Gall[comp][0]
                + sp.diags(np.concatenate([dx[:, 1], np.zeros(mesh.n_boundary)])) @ sel @ Gall[comp][1]
            )
            corr_blocks.append(block)
            cvec[comp * nf : comp * nf + ni] = dx[:, 0] * (sel @ gconst[comp][0])[:ni] + dx[:, 1] * (
                sel @ gconst[comp][1]
            )[:ni]
        W = W + sp.vstack(corr_blocks).tocsr()
        const = const + cvec
    return W, const


def gradient_vector_matrices(mesh: Mesh, bcs):
    """Intensive gradients of both components of a vector field.

    Returns ``G[comp][axis]`` (each N x 2N) and matching constants, where
    component coupling enters through symmetry patches.
    """
    W, c = interp_vector_matrix(mesh, bcs, "linear")
    D = _scatter_matrix(mesh)
    inv_v = sp.diags(1.0 / mesh.cell_volume)
    nf = mesh.n_faces
    G, consts = [], []
    for comp in range(2):
        rows = W[comp * nf : (comp + 1) * nf]
        crow = c[comp * nf : (comp + 1) * nf]
        Gc, cc = [], []
        for axis in range(2):
            DS = inv_v @ D @ sp.diags(mesh.face_area_vec[:, axis])
            Gc.append((DS @ rows).tocsr())
            cc.append(DS @ crow)
        G.append(Gc)
        consts.append(cc)
    return G, consts


def divergence_matrix(mesh: Mesh, bcs):
    """Extensive divergence of a vector field: (N x 2N, N)."""
    W, c = interp_vector_matrix(mesh, bcs, "linear")
    nf = mesh.n_faces
    D = _scatter_matrix(mesh)
    Dv = sp.hstack([D @ sp.diags(mesh.face_area_vec[:, 0]), D @ sp.diags(mesh.face_area_vec[:, 1])])
    return (Dv @ W).tocsr(), Dv @ c


def gradient_matrix(mesh: Mesh, bcs):
    """Extensive Gauss gradient of a scalar field: (2N x N, 2N)."""
    W, c = interp_scalar_matrix(mesh, bcs, "linear")
    D = _scatter_matrix(mesh)
    Dg = sp.vstack([D @ sp.diags(mesh.face_area_vec[:, 0]), D @ sp.diags(mesh.face_area_vec[:, 1])])
    return (Dg @ W).tocsr(), Dg @ c


def convection_matrix(mesh: Mesh, bcs, flux, scheme: str = "upwind", grad_vec=None):
    """Extensive Picard convection with frozen mass flux: (2N x 2N, 2N)."""
    W, c = interp_vector_matrix(mesh, bcs, scheme, flux=flux, grad_vec=grad_vec)
    phi2 = sp.diags(np.concatenate([flux, flux]))
    D = _scatter_matrix(mesh)
    Dv = sp.block_diag([D, D])
    op = Dv @ phi2
    return (op @ W).tocsr(), op @ c


def _orthogonal_part_scalar(mesh, bcs, face_coeff):
    ni = mesh.n_interior
    coeff = mesh.face_ortho_coeff * face_coeff
    rows, cols, data = [], [], []
    const = np.zeros(mesh.n_faces)
    rows += [np.arange(ni)] * 2
    cols += [mesh.neighbour[:ni], mesh.owner[:ni]]
    data += [coeff[:ni], -coeff[:ni]]
    corr_mask = np.zeros(mesh.n_faces, dtype=bool)
    corr_mask[:ni] = True
    for patch, bc in _patch_bc(mesh, bcs):
        sl = patch.slice
        idx = np.arange(sl.start, sl.stop)
        if bc.kind == fl.FIXED_VALUE:
            rows.append(idx)
            cols.append(mesh.owner[sl])
            data.append(-coeff[sl])
            const[sl] = coeff[sl] * float(bc.value)
            corr_mask[sl] = True
        elif bc.kind == fl.FIXED_GRADIENT:
            const[sl] = mesh.face_area[sl] * face_coeff[sl] * float(bc.value)
    O = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(mesh.n_faces, mesh.n_cells),
    )
    return O, const, corr_mask


def laplacian_face_operator(mesh: Mesh, bcs, face_coeff=None, grad_mats=None):
    """Diffusive face fluxes of a scalar field: (F x N, F).

    Scattering the result with owner/neighbour signs gives the extensive
    Laplacian, so flux corrections built from this operator are exactly
    consistent with the assembled matrix.  ``grad_mats`` may carry
    precomputed ``gradient_cell_matrices`` output for reuse across calls.
    """
    fc = np.ones(mesh.n_faces) if face_coeff is None else np.asarray(face_coeff, dtype=float)
    O, const, corr_mask = _orthogonal_part_scalar(mesh, bcs, fc)
    kvec = mesh.face_nonortho_vec
    if np.abs(kvec).max() > 1e-13 * mesh.face_area.max():
        FI = _cell_value_to_face(mesh)
        Gx, Gy, cgx, cgy = grad_mats if grad_mats is not None else gradient_cell_matrices(mesh, bcs)
        kx = np.where(corr_mask, kvec[:, 0] * fc, 0.0)
        ky = np.where(corr_mask, kvec[:, 1] * fc, 0.0)
        O = O + sp.diags(kx) @ FI @ Gx + sp.diags(ky) @ FI @ Gy
        const = const + kx * (FI @ cgx) + ky * (FI @ cgy)
    return O.tocsr(), const


def laplacian_scalar_matrix(mesh: Mesh, bcs, face_coeff=None, grad_mats=None):
    """Extensive scalar diffusion operator with non-orthogonal correction."""
    O, const = laplacian_face_operator(mesh, bcs, face_coeff, grad_mats)
    D = _scatter_matrix(mesh)
    return (D @ O).tocsr(), D @ const


def laplacian_vector_matrix(mesh: Mesh, bcs):
    """Extensive vector diffusion operator: (2N x 2N, 2N)."""
    nf, nc, ni = mesh.n_faces, mesh.n_cells, mesh.n_interior
    coeff = mesh.face_ortho_coeff
    rows, cols, data = [], [], []
    const = np.zeros(2 * nf)
    corr_mask = np.zeros(nf, dtype=bool)
    corr_mask[:ni] = True
    for comp in range(2):
        rows += [comp * nf + np.arange(ni)] * 2
        cols += [comp * nc + mesh.neighbour[:ni], comp * nc + mesh.owner[:ni]]
        data += [coeff[:ni], -coeff[:ni]]
    for patch, bc in _patch_bc(mesh, bcs):
        sl = patch.slice
        idx = np.arange(sl.start, sl.stop)
        if bc.kind == fl.FIXED_VALUE:
            v = np.asarray(bc.value, dtype=float)
            for comp in range(2):
                rows.append(comp * nf + idx)
                cols.append(comp * nc + mesh.owner[sl])
                data.append(-coeff[sl])
                const[comp * nf + sl.start : comp * nf + sl.stop] = coeff[sl] * v[comp]
            corr_mask[sl] = True
        elif bc.kind == fl.FIXED_GRADIENT:
            g = np.asarray(bc.value, dtype=float)
            for comp in range(2):
                const[comp * nf + sl.start : comp * nf + sl.stop] = mesh.face_area[sl] * g[comp]
        elif bc.kind == fl.SYMMETRY:
            nhat = mesh.face_area_vec[sl] / mesh.face_area[sl, None]
            for comp in range(2):
                for other in range(2):
                    rows.append(comp * nf + idx)
                    cols.append(other * nc + mesh.owner[sl])
                    data.append(-coeff[sl] * nhat[:, comp] * nhat[:, other])
    O = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * nf, 2 * nc),
    )
    kvec = mesh.face_nonortho_vec
    if np.abs(kvec).max() > 1e-13 * mesh.face_area.max():
        FI = _cell_value_to_face(mesh)
        Gall, gconst = gradient_vector_matrices(mesh, bcs)
        kx = np.where(corr_mask, kvec[:, 0], 0.0)
        ky = np.where(corr_mask, kvec[:, 1], 0.0)
        blocks, cvec = [], np.zeros(2 * nf)
        for comp in range(2):
            block = sp.diags(kx) @ FI @ Gall[comp][0] + sp.diags(ky) @ FI @ Gall[comp][1]
            blocks.append(block)
            cvec[comp * nf : (comp + 1) * nf] = kx * (FI @ gconst[comp][0]) + ky * (FI @ gconst[comp][1])
        O = O + sp.vstack(blocks)
        const = const + cvec
    D = _scatter_matrix(mesh)
    Dv = sp.block_diag([D, D])
    return (Dv @ O).tocsr(), Dv @ const


@dataclass
class OperatorMatrices:
    """Sparse operators of the semi-discrete momentum/continuity system.

    ``M`` is the diagonal cell-volume mass matrix; ``A`` the vector
    Laplacian; ``B`` maps pressure to the extensive pressure-gradient
    term; ``P`` maps velocity to the extensive divergence; ``C`` the
    Picard-linearised convection for the frozen flux.  The ``*_const``
    vectors carry the boundary contributions, so e.g.
    ``A @ u + a_const`` equals the matrix-free Laplacian of the field.
    """

    M: sp.csr_matrix
    A: sp.csr_matrix
    B: sp.csr_matrix
    P: sp.csr_matrix
    C: sp.csr_matrix
    a_const: np.ndarray
    b_const: np.ndarray
    p_const: np.ndarray
    c_const: np.ndarray

    def apply_laplacian(self, u_flat):
        return self.A @ u_flat + self.a_const

    def apply_gradient(self, p):
        return self.B @ p + self.b_const

    def apply_divergence(self, u_flat):
        return self.P @ u_flat + self.p_const

    def apply_convection(self, u_flat):
        return self.C @ u_flat + self.c_const


def assemble_operator_matrices(
    mesh: Mesh, u_bcs, p_bcs, flux, conv_scheme: str = "upwind"
) -> OperatorMatrices:
    """All sparse operators of the momentum/continuity matrix form."""
    vol = mesh.cell_volume
    M = sp.diags(np.concatenate([vol, vol])).tocsr()
    A, ac = laplacian_vector_matrix(mesh, u_bcs)
    B, bc = gradient_matrix(mesh, p_bcs)
    P, pc = divergence_matrix(mesh, u_bcs)
    C, cc = convection_matrix(mesh, u_bcs, flux, conv_scheme)
    return OperatorMatrices(M, A, B, P, C, ac, bc, pc, cc)
