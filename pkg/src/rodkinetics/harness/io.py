"""Binary field files and CSV time series.

Field file layout (all little-endian)::

    b"KINF1" | u32 nx | u32 ny | u32 ntheta | f64 time
             | f64 values[nx*ny*ntheta]  (theta fastest, then y, then x)
             | u64 FNV-1a checksum of the value bytes
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from ..errors import FieldChecksumError, FieldFormatError, FieldTruncatedError
from ..grid import GridSpec, KineticField

MAGIC = b"KINF1"
_HEADER = struct.Struct("<5sIIId")
_CHECKSUM = struct.Struct("<Q")


@njit(cache=True)
def _fnv1a64(data):
    h = np.uint64(0xCBF29CE484222325)
    prime = np.uint64(0x100000001B3)
    for b in data:
        h ^= np.uint64(b)
        h *= prime
    return h


def fnv1a64(payload: bytes) -> int:
    return int(_fnv1a64(np.frombuffer(payload, dtype=np.uint8)))


def encode_field(f: KineticField) -> bytes:
    g = f.grid
    payload = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    return (
        _HEADER.pack(MAGIC, g.nx, g.ny, g.ntheta, float(f.time))
        + payload
        + _CHECKSUM.pack(fnv1a64(payload))
    )


def decode_field(blob: bytes) -> KineticField:
    if len(blob) < len(MAGIC) or blob[: len(MAGIC)] != MAGIC:
        raise FieldFormatError("not a KINF1 field file (bad magic)")
    if len(blob) < _HEADER.size:
        raise FieldTruncatedError("field file header is truncated")
    _, nx, ny, nth, time = _HEADER.unpack_from(blob)
    n_bytes = 8 * nx * ny * nth
    end = _HEADER.size + n_bytes
    if len(blob) < end + _CHECKSUM.size:
        raise FieldTruncatedError(
            f"field payload truncated: expected {end + _CHECKSUM.size} bytes, got {len(blob)}"
        )
    if len(blob) > end + _CHECKSUM.size:
        raise FieldFormatError("trailing bytes after field checksum")
    payload = blob[_HEADER.size : end]
    (stored,) = _CHECKSUM.unpack_from(blob, end)
    if fnv1a64(payload) != stored:
        raise FieldChecksumError("field payload checksum mismatch")
    try:
        grid = GridSpec(nx, ny, nth)
    except ValueError as exc:
        raise FieldFormatError(f"invalid grid in header: {exc}") from None
    values = np.frombuffer(payload, dtype="<f8").reshape(grid.shape)
    return KineticField(grid, values, time)


def write_field(f: KineticField, path) -> None:
    Path(path).write_bytes(encode_field(f))


def read_field(path) -> KineticField:
    return decode_field(Path(path).read_bytes())


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_timeseries(table, path) -> None:
    """Write anything with ``columns`` and ``rows()`` (or ``rows``) as CSV.

    Floats use the shortest repr that round-trips.
    """
    rows = table.rows() if callable(getattr(table, "rows", None)) else table.rows
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.columns)
        for row in rows:
            w.writerow([format_value(v) for v in row])


def read_timeseries(path) -> tuple[list[str], list[list[float]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[_parse_cell(c) for c in row] for row in reader]
    return header, rows


def _parse_cell(c: str):
    try:
        return int(c)
    except ValueError:
        pass
    try:
        return float(c)
    except ValueError:
        return c


class Table:
    """Column-named rows plus summary metadata."""

    def __init__(self, columns: Sequence[str], rows: Iterable[Sequence] = (), meta=None):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.meta = dict(meta or {})

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def meta_table(self) -> "Table":
        return Table(["key", "value"], [[k, v] for k, v in self.meta.items()])

    def __repr__(self):
        return f"Table(columns={self.columns}, rows={len(self.rows)}, meta={self.meta})"
