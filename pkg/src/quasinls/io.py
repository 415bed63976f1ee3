"""Binary and CSV containers for spectral fields.

Binary layout (little-endian): 8-byte magic ``QNLSFLD1``, uint32 field count,
then per field a header ``uint64 n_points, float64 period, uint8 is_real``
followed by ``n_points`` complex coefficients as interleaved float64 pairs.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .spectral import FieldPair, SpectralField, SpectralGrid

MAGIC = b"QNLSFLD1"
_HEADER = struct.Struct("<QdB")


class ContainerError(ValueError):
    pass


def write_fields(path, fields: Sequence[SpectralField]) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(fields)))
        for f in fields:
            fh.write(_HEADER.pack(f.grid.n_points, f.grid.period, int(f.is_real)))
            fh.write(np.ascontiguousarray(f.coefficients, dtype="<c16").tobytes())


def read_fields(path, k0_index=None) -> list[SpectralField]:
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise ContainerError(f"{path}: not a field container")
    (count,) = struct.unpack_from("<I", data, 8)
    pos = 12
    out = []
    for _ in range(count):
        n, period, real = _HEADER.unpack_from(data, pos)
        pos += _HEADER.size
        nbytes = 16 * n
        if pos + nbytes > len(data):
            raise ContainerError(f"{path}: truncated payload")
        c = np.frombuffer(data, dtype="<c16", count=n, offset=pos).astype(complex)
        pos += nbytes
        out.append(SpectralField(SpectralGrid(int(n), float(period), k0_index), c, bool(real)))
    return out


def write_pair(path, pair: FieldPair) -> None:
    write_fields(path, [pair.u_minus, pair.u_plus])


def read_pair(path, k0_index=None) -> FieldPair:
    fields = read_fields(path, k0_index)
    if len(fields) != 2:
        raise ContainerError(f"{path}: expected 2 fields, found {len(fields)}")
    return FieldPair(*fields)


def write_field_csv(path, field: SpectralField) -> None:
    """One row per lattice mode: k, Re c, Im c."""
    order = np.argsort(field.grid.k)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "re", "im"])
        for i in order:
            c = field.coefficients[i]
            w.writerow([repr(float(field.grid.k[i])), repr(float(c.real)), repr(float(c.imag))])


def write_pair_physical_csv(path, pair: FieldPair) -> None:
    x = pair.grid.x
    um, up = pair.u_minus.physical().real, pair.u_plus.physical().real
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "u_minus", "u_plus"])
        for row in zip(x, um, up):
            w.writerow([repr(float(v)) for v in row])


def write_rows(path, rows: Iterable[dict], columns: Sequence[str] | None = None) -> None:
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)
