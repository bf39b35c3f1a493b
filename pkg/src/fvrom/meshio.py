"""Mesh persistence: versioned plain-text format and legacy VTK export.

The text format (see ``docs/mesh_format.md``) is line-oriented with the
sections POINTS / FACES / OWNER / NEIGHBOUR / PATCHES in that order.
Floats are written with 17 significant digits so a save/load round trip
is bit-exact.
"""

from __future__ import annotations

import numpy as np

from .errors import ParseError
from .fields import Field
from .mesh import Mesh, Patch

FORMAT_TAG = "FVMESH"
FORMAT_VERSION = 1


def save_mesh(mesh: Mesh, path):
    lines = [f"{FORMAT_TAG} {FORMAT_VERSION}"]
    lines.append(f"POINTS {len(mesh.points)}")
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.points]
    lines.append(f"FACES {mesh.n_faces}")
    lines += [f"{a} {b}" for a, b in mesh.face_points]
    lines.append(f"OWNER {mesh.n_faces}")
    lines += [str(o) for o in mesh.owner]
    lines.append(f"NEIGHBOUR {mesh.n_interior}")
    lines += [str(n) for n in mesh.neighbour[: mesh.n_interior]]
    lines.append(f"PATCHES {len(mesh.patches)}")
    lines += [f"{p.name} {p.kind} {p.start} {p.size}" for p in mesh.patches]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


class _Reader:
    def __init__(self, path):
        self.path = str(path)
        with open(path) as fh:
            self.lines = fh.read().splitlines()
        self.pos = 0

    def next(self):
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line:
                return line
        raise ParseError(f"{self.path}: unexpected end of file at line {self.pos}")

    def section(self, name):
        try:
            line = self.next()
        except ParseError:
            raise ParseError(f"{self.path}: missing section {name}") from None
        parts = line.split()
        if len(parts) != 2 or parts[0] != name:
            raise ParseError(f"{self.path}:{self.pos}: expected section '{name} <count>', got {line!r}")
        try:
            return int(parts[1])
        except ValueError:
            raise ParseError(f"{self.path}:{self.pos}: bad count in section {name}: {parts[1]!r}") from None


def load_mesh(path) -> Mesh:
    rd = _Reader(path)
    header = rd.next().split()
    if len(header) != 2 or header[0] != FORMAT_TAG:
        raise ParseError(f"{rd.path}:1: not a {FORMAT_TAG} file")
    if int(header[1]) != FORMAT_VERSION:
        raise ParseError(f"{rd.path}:1: unsupported version {header[1]}")

    n = rd.section("POINTS")
    points = np.empty((n, 2))
    for i in range(n):
        parts = rd.next().split()
        if len(parts) != 2:
            raise ParseError(f"{rd.path}:{rd.pos}: POINTS entry needs two coordinates")
        points[i] = [float(parts[0]), float(parts[1])]

    n = rd.section("FACES")
    faces = np.empty((n, 2), dtype=np.int64)
    for i in range(n):
        parts = rd.next().split()
        if len(parts) != 2:
            raise ParseError(f"{rd.path}:{rd.pos}: FACES entry needs two point indices")
        faces[i] = [int(parts[0]), int(parts[1])]
    if n and (faces.min() < 0 or faces.max() >= len(points)):
        raise ParseError(f"{rd.path}: face references a nonexistent point")

    n = rd.section("OWNER")
    owner = np.array([int(rd.next()) for _ in range(n)], dtype=np.int64)
    n_int = rd.section("NEIGHBOUR")
    neighbour = np.full(len(faces), -1, dtype=np.int64)
    for i in range(n_int):
        neighbour[i] = int(rd.next())

    n = rd.section("PATCHES")
    patches = []
    for _ in range(n):
        parts = rd.next().split()
        if len(parts) != 4:
            raise ParseError(f"{rd.path}:{rd.pos}: PATCHES entry needs 'name kind start size'")
        patches.append(Patch(parts[0], parts[1], int(parts[2]), int(parts[3])))
    return Mesh(points, faces, owner, neighbour, patches)


def write_vtk(path, mesh: Mesh, fields: dict[str, Field] | None = None, title="fvrom export"):
    """Legacy ASCII VTK unstructured grid with cell data."""
    loops = mesh.cell_loops()
    out = [
        "# vtk DataFile Version 2.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {len(mesh.points)} double",
    ]
    out += [f"{x:.17g} {y:.17g} 0" for x, y in mesh.points]
    size = sum(len(lp) + 1 for lp in loops)
    out.append(f"CELLS {len(loops)} {size}")
    out += [" ".join([str(len(lp))] + [str(i) for i in lp]) for lp in loops]
    out.append(f"CELL_TYPES {len(loops)}")
    out += ["7"] * len(loops)  # VTK_POLYGON
    if fields:
        out.append(f"CELL_DATA {mesh.n_cells}")
        for name, field in fields.items():
            if field.rank == "scalar":
                out.append(f"SCALARS {name} double 1")
                out.append("LOOKUP_TABLE default")
                out += [f"{v:.17g}" for v in field.values]
            else:
                out.append(f"VECTORS {name} double")
                out += [f"{v[0]:.17g} {v[1]:.17g} 0" for v in field.values]
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
