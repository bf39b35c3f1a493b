"""Snapshot collections and their little-endian binary container.

A snapshot set stores full-order solution records ordered
parameter-major, then time.  The file layout is:

    magic  8 bytes  b"ROMSNAP1"
    header 4 x u32  rank code (0 scalar, 1 vector, 2 face scalar),
                    values per record base count, n_params, n_times
    records         per record: mu f64, t f64, values f64[...]

Vector records hold 2 values per cell in (cell, component) C order.
Rank code 2 reuses the container for per-face quantities (mass fluxes);
the base count is then the face count.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FieldError, ParseError

MAGIC = b"ROMSNAP1"
_RANK_CODES = {"scalar": 0, "vector": 1, "face": 2}
_RANK_NAMES = {v: k for k, v in _RANK_CODES.items()}


class SnapshotSet:
    """Ordered (parameter, time) collection of full-order records.

    ``data`` has one row per record; row width is the cell count for
    scalars, twice that for vectors ((cell, component) C order) and the
    face count for face-flux sets.  ``bc`` optionally carries the
    boundary-condition template of the recorded field; it is not
    persisted (stages reattach it from the case configuration).
    """

    def __init__(self, rank, n_base, params, times, data, mesh=None, bc=None):
        self.rank = rank
        if rank not in _RANK_CODES:
            raise FieldError(f"unknown snapshot rank {rank!r}")
        self.n_base = int(n_base)
        self.params = np.asarray(params, dtype=float)
        self.times = np.asarray(times, dtype=float)
        self.data = np.asarray(data, dtype=float)
        self.mesh = mesh
        self.bc = bc
        width = self.n_base * (2 if rank == "vector" else 1)
        if self.data.ndim != 2 or self.data.shape[1] != width:
            raise FieldError(f"snapshot data width {self.data.shape} does not match rank/base count")
        if not (len(self.params) == len(self.times) == len(self.data)):
            raise FieldError("params/times/data length mismatch")
        self._check_ordering()

    def _check_ordering(self):
        seen = []
        for mu in self.params:
            if not seen or seen[-1] != mu:
                if mu in seen:
                    raise FieldError("records are not parameter-major")
                seen.append(mu)
        counts = {mu: np.count_nonzero(self.params == mu) for mu in seen}
        if len(set(counts.values())) > 1:
            raise FieldError(f"unequal record counts per parameter: {counts}")
        for mu in seen:
            t = self.times[self.params == mu]
            if np.any(np.diff(t) <= 0):
                raise FieldError(f"times not strictly increasing within parameter {mu}")
        self._param_values = seen

    def __len__(self):
        return len(self.data)

    @property
    def n_params(self) -> int:
        return len(self._param_values)

    @property
    def n_times(self) -> int:
        return len(self) // self.n_params if len(self) else 0

    @property
    def param_values(self):
        return tuple(self._param_values)

    def record(self, i):
        """Record ``i`` as (mu, t, values) with values in natural shape."""
        row = self.data[i]
        if self.rank == "vector":
            row = row.reshape(self.n_base, 2)
        return self.params[i], self.times[i], row

    def matrix(self) -> np.ndarray:
        """Snapshot matrix, one column per record (flattened values)."""
        return self.data.T

    def subset(self, mask) -> "SnapshotSet":
        mask = np.asarray(mask)
        return SnapshotSet(
            self.rank, self.n_base, self.params[mask], self.times[mask], self.data[mask], self.mesh, self.bc
        )

    @staticmethod
    def concatenate(sets) -> "SnapshotSet":
        sets = list(sets)
        base = sets[0]
        if any(s.rank != base.rank or s.n_base != base.n_base for s in sets):
            raise FieldError("cannot concatenate incompatible snapshot sets")
        return SnapshotSet(
            base.rank,
            base.n_base,
            np.concatenate([s.params for s in sets]),
            np.concatenate([s.times for s in sets]),
            np.vstack([s.data for s in sets]),
            base.mesh,
            base.bc,
        )

    def save(self, path):
        width = self.n_base * (2 if self.rank == "vector" else 1)
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<4I", _RANK_CODES[self.rank], self.n_base, self.n_params, self.n_times))
            for mu, t, row in zip(self.params, self.times, self.data):
                fh.write(struct.pack("<2d", mu, t))
                fh.write(np.ascontiguousarray(row, dtype="<f8").tobytes())
        _ = width

    @staticmethod
    def load(path, mesh=None, bc=None) -> "SnapshotSet":
        with open(path, "rb") as fh:
            magic = fh.read(8)
            if magic != MAGIC:
                raise ParseError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
            header = fh.read(16)
            if len(header) != 16:
                raise ParseError(f"{path}: truncated header")
            code, n_base, n_params, n_times = struct.unpack("<4I", header)
            if code not in _RANK_NAMES:
                raise ParseError(f"{path}: unknown rank code {code}")
            rank = _RANK_NAMES[code]
            width = n_base * (2 if rank == "vector" else 1)
            n_rec = n_params * n_times
            params = np.empty(n_rec)
            times = np.empty(n_rec)
            data = np.empty((n_rec, width))
            rec_bytes = 16 + 8 * width
            for i in range(n_rec):
                blob = fh.read(rec_bytes)
                if len(blob) != rec_bytes:
                    raise ParseError(f"{path}: truncated record {i} of {n_rec}")
                params[i], times[i] = struct.unpack_from("<2d", blob)
                data[i] = np.frombuffer(blob, dtype="<f8", offset=16)
        return SnapshotSet(rank, n_base, params, times, data, mesh=mesh, bc=bc)
