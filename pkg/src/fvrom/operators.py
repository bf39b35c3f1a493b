"""Matrix-free finite-volume operators.

Every operator returns the extensive (volume-integrated) quantity per
cell by default, mirroring the flux-sum form of the discretisation;
``intensive=True`` divides by the cell volume.  Face values come from the
requested interpolation scheme on interior faces and from the field's
boundary conditions on boundary faces.
"""

from __future__ import annotations

import numpy as np

from . import fields as fl
from .errors import FieldError, MeshError
from .fields import Field

SCHEMES = ("linear", "upwind", "linear-upwind")


def _normalise_scheme(scheme: str) -> str:
    scheme = scheme.replace("_", "-")
    if scheme not in SCHEMES:
        raise FieldError(f"unknown interpolation scheme {scheme!r}")
    return scheme


def _boundary_values(field: Field, out):
    """Fill boundary-face values into ``out`` (modified in place)."""
    mesh = field.mesh
    ni = mesh.n_interior
    own = mesh.owner
    for patch in mesh.patches:
        sl = patch.slice
        bc = field.bcs[patch.name]
        vo = field.values[own[sl]]
        if bc.kind == fl.FIXED_VALUE:
            out[sl] = np.asarray(bc.value, dtype=float)
        elif bc.kind == fl.ZERO_GRADIENT:
            out[sl] = vo
        elif bc.kind == fl.FIXED_GRADIENT:
            sf = mesh.face_area_vec[sl]
            dn = np.einsum("fd,fd->f", sf, mesh.face_delta[sl]) / mesh.face_area[sl]
            g = np.asarray(bc.value, dtype=float)
            out[sl] = vo + dn[..., None] * g if field.rank == "vector" else vo + dn * g
        elif bc.kind == fl.SYMMETRY:
            if field.rank == "scalar":
                out[sl] = vo
            else:
                nhat = mesh.face_area_vec[sl] / mesh.face_area[sl, None]
                out[sl] = vo - (np.einsum("fd,fd->f", vo, nhat))[:, None] * nhat
        else:  # pragma: no cover
            raise FieldError(f"unhandled BC kind {bc.kind}")
    _ = ni
    return out


def interpolate_to_faces(field: Field, scheme: str = "linear", flux=None):
    """Face values of a field: shape (n_faces,) or (n_faces, 2).

    Upwind-biased schemes require the mass flux that defines the upwind
    direction on each interior face.
    """
    scheme = _normalise_scheme(scheme)
    mesh = field.mesh
    ni = mesh.n_interior
    own, nei = mesh.owner[:ni], mesh.neighbour[:ni]
    shape = (mesh.n_faces,) if field.rank == "scalar" else (mesh.n_faces, 2)
    out = np.zeros(shape)

    vo = field.values[own]
    vn = field.values[nei]
    if scheme == "linear":
        w = mesh.face_weight[:ni]
        w = w[:, None] if field.rank == "vector" else w
        out[:ni] = w * vo + (1.0 - w) * vn
    else:
        if flux is None:
            raise FieldError(f"scheme {scheme!r} requires a mass flux")
        up = np.where(np.asarray(flux)[:ni] >= 0.0, own, nei)
        out[:ni] = field.values[up]
        if scheme == "linear-upwind":
            g = gradient(field, intensive=True)
            dx = mesh.face_centre[:ni] - mesh.cell_centre[up]
            if field.rank == "scalar":
                out[:ni] += np.einsum("fd,fd->f", g[up], dx)
            else:
                out[:ni] += np.einsum("fcd,fd->fc", g[up], dx)
    _boundary_values(field, out)
    return out


def face_flux(field: Field, scheme: str = "linear") -> np.ndarray:
    """Mass flux S_f . u_f per face for a vector field."""
    if field.rank != "vector":
        raise FieldError("face_flux needs a vector field")
    uf = interpolate_to_faces(field, scheme)
    return np.einsum("fd,fd->f", field.mesh.face_area_vec, uf)


def _scatter(mesh, per_face):
    """Signed sum of per-face contributions into cells (owner +, neighbour -)."""
    ni = mesh.n_interior
    shape = (mesh.n_cells,) + per_face.shape[1:]
    out = np.zeros(shape)
    np.add.at(out, mesh.owner, per_face)
    np.subtract.at(out, mesh.neighbour[:ni], per_face[:ni])
    return out


def _maybe_intensive(mesh, out, intensive):
    if not intensive:
        return out
    v = mesh.cell_volume
    return out / (v[:, None] if out.ndim == 2 else v)


def divergence(field: Field = None, *, flux=None, mesh=None, intensive: bool = False):
    """Per-cell sum of face fluxes of a vector field.

    Either give a vector field (fluxes from linear interpolation and the
    boundary conditions) or a precomputed per-face flux array.
    """
    if flux is not None:
        if mesh is None:
            mesh = field.mesh if field is not None else None
        if mesh is None:
            raise FieldError("divergence from a raw flux needs the mesh")
        return _maybe_intensive(mesh, _scatter(mesh, np.asarray(flux, dtype=float)), intensive)
    if field is None or field.rank != "vector":
        raise FieldError("divergence needs a vector field or a flux array")
    return _maybe_intensive(field.mesh, _scatter(field.mesh, face_flux(field)), intensive)


def gradient(field: Field, intensive: bool = False):
    """Gauss gradient: (n_cells, 2) for scalars, (n_cells, 2, 2) for vectors.

    For vectors, ``out[e, c, d]`` approximates d u_c / d x_d.
    """
    mesh = field.mesh
    qf = interpolate_to_faces(field, "linear")
    if field.rank == "scalar":
        contrib = mesh.face_area_vec * qf[:, None]
    else:
        contrib = np.einsum("fc,fd->fcd", qf, mesh.face_area_vec)
    out = _scatter(mesh, contrib)
    if intensive:
        v = mesh.cell_volume
        out = out / (v[:, None] if out.ndim == 2 else v[:, None, None])
    return out


def _laplacian_boundary_flux(field: Field, grad_cells):
    """Diffusive boundary-face fluxes honouring the boundary conditions."""
    mesh = field.mesh
    ni = mesh.n_interior
    own = mesh.owner
    shape = (mesh.n_boundary,) if field.rank == "scalar" else (mesh.n_boundary, 2)
    out = np.zeros(shape)
    coeff = mesh.face_ortho_coeff
    kvec = mesh.face_nonortho_vec
    for patch in mesh.patches:
        sl = patch.slice
        rel = slice(sl.start - ni, sl.stop - ni)
        bc = field.bcs[patch.name]
        vo = field.values[own[sl]]
        if bc.kind == fl.FIXED_VALUE:
            vb = np.asarray(bc.value, dtype=float)
            c = coeff[sl, None] if field.rank == "vector" else coeff[sl]
            out[rel] = c * (vb - vo)
            go = grad_cells[own[sl]]
            if field.rank == "scalar":
                out[rel] += np.einsum("fd,fd->f", go, kvec[sl])
            else:
                out[rel] += np.einsum("fcd,fd->fc", go, kvec[sl])
        elif bc.kind == fl.FIXED_GRADIENT:
            g = np.asarray(bc.value, dtype=float)
            out[rel] = mesh.face_area[sl, None] * g if field.rank == "vector" else mesh.face_area[sl] * g
        elif bc.kind == fl.ZERO_GRADIENT:
            pass
        elif bc.kind == fl.SYMMETRY:
            if field.rank == "vector":
                nhat = mesh.face_area_vec[sl] / mesh.face_area[sl, None]
                un = np.einsum("fd,fd->f", vo, nhat)
                out[rel] = -coeff[sl, None] * un[:, None] * nhat
    return out


def laplacian(field: Field, diffusivity: float = 1.0, intensive: bool = False, face_coeff=None):
    """Diffusion operator: per cell, nu * sum_f S_f . (grad field)_f.

    The face-normal gradient uses the two-point difference over the
    owner-neighbour distance with an explicit over-relaxed correction on
    non-orthogonal faces.  ``face_coeff`` optionally scales the flux per
    face (used for the pressure equation).
    """
    if diffusivity < 0.0:
        raise FieldError("diffusivity must be >= 0")
    mesh = field.mesh
    ni = mesh.n_interior
    own, nei = mesh.owner[:ni], mesh.neighbour[:ni]

    grad_cells = gradient(field, intensive=True)
    dv = field.values[nei] - field.values[own]
    coeff = mesh.face_ortho_coeff[:ni]
    flux_i = coeff[:, None] * dv if field.rank == "vector" else coeff * dv

    gf = interpolate_to_faces_of_gradient(field, grad_cells)
    kvec = mesh.face_nonortho_vec[:ni]
    if field.rank == "scalar":
        flux_i = flux_i + np.einsum("fd,fd->f", gf[:ni], kvec)
    else:
        flux_i = flux_i + np.einsum("fcd,fd->fc", gf[:ni], kvec)

    flux_b = _laplacian_boundary_flux(field, grad_cells)
    per_face = np.concatenate([flux_i, flux_b], axis=0)
    if face_coeff is not None:
        fc = np.asarray(face_coeff, dtype=float)
        per_face = per_face * (fc[:, None] if per_face.ndim == 2 else fc)
    out = _scatter(mesh, per_face)
    return diffusivity * _maybe_intensive(mesh, out, intensive)


def interpolate_to_faces_of_gradient(field: Field, grad_cells):
    """Linear face interpolation of cell gradients; owner value on boundary."""
    mesh = field.mesh
    ni = mesh.n_interior
    own, nei = mesh.owner, mesh.neighbour
    w = mesh.face_weight[:ni]
    w = w.reshape((-1,) + (1,) * (grad_cells.ndim - 1))
    out = np.empty((mesh.n_faces,) + grad_cells.shape[1:])
    out[:ni] = w * grad_cells[own[:ni]] + (1.0 - w) * grad_cells[nei[:ni]]
    out[ni:] = grad_cells[own[ni:]]
    return out


def convection(flux, field: Field, scheme: str = "upwind", intensive: bool = False):
    """Picard-linearised convection: per cell, sum_f (S_f . u^flux_f) u_f.

    ``flux`` is the per-face mass flux of the previous,
    continuity-satisfying velocity; ``field`` is the transported quantity.
    """
    if flux is None:
        raise FieldError("convection requires a mass flux")
    flux = np.asarray(flux, dtype=float)
    scheme = _normalise_scheme(scheme)
    uf = interpolate_to_faces(field, scheme, flux=flux if scheme != "linear" else None)
    per_face = flux[:, None] * uf if field.rank == "vector" else flux * uf
    return _maybe_intensive(field.mesh, _scatter(field.mesh, per_face), intensive)


def curl_z(field: Field, intensive: bool = True) -> np.ndarray:
    """Out-of-plane vorticity d u_y/d x - d u_x/d y per cell."""
    if field.rank != "vector":
        raise FieldError("curl_z needs a vector field")
    g = gradient(field, intensive=intensive)
    return g[:, 1, 0] - g[:, 0, 1]


def check_distances(mesh):
    """Reject meshes with coincident owner/neighbour points (zero distance)."""
    d = np.linalg.norm(mesh.face_delta, axis=1)
    if np.any(d <= 0.0):
        raise MeshError("zero owner-neighbour distance")
