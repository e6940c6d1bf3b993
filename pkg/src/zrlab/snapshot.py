"""Binary field snapshots.

Layout (all little-endian)::

    b"ZRSNAP01"
    u32 dim
    u32 n[dim]          points per axis, x first
    f64 length[dim]
    f64 time
    f64 Re psi, Im psi, rho, phi   each row-major with x fastest
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .spectral import FieldState, Grid

MAGIC = b"ZRSNAP01"


class SnapshotError(ValueError):
    pass


def write_snapshot(fs: FieldState) -> bytes:
    g = fs.grid
    head = MAGIC + struct.pack(f"<I{g.dim}I{g.dim}dd", g.dim, *g.n, *g.length, fs.time)
    body = b"".join(np.ascontiguousarray(f, dtype="<f8").tobytes() for f in (fs.psi.real, fs.psi.imag, fs.rho, fs.phi))
    return head + body


def read_snapshot(data: bytes, origin=None, expect: Grid | None = None) -> FieldState:
    """Inverse of :func:`write_snapshot`. The box origin is not stored; it
    defaults to the centred box, or to the origin of ``expect``.

    If ``expect`` is given the stored grid must match it.
    """
    if expect is not None and origin is None:
        origin = expect.origin
    if data[:8] != MAGIC:
        raise SnapshotError("bad magic: not a ZRSNAP01 snapshot")
    pos = 8
    if len(data) < pos + 4:
        raise SnapshotError("truncated header")
    (dim,) = struct.unpack_from("<I", data, pos)
    pos += 4
    if dim not in (1, 2):
        raise SnapshotError(f"unsupported dimension {dim}")
    if expect is not None and dim != expect.dim:
        raise SnapshotError(f"dimension mismatch: file has {dim}, expected {expect.dim}")
    need = pos + 4 * dim + 8 * dim + 8
    if len(data) < need:
        raise SnapshotError("truncated header")
    n = struct.unpack_from(f"<{dim}I", data, pos)
    pos += 4 * dim
    length = struct.unpack_from(f"<{dim}d", data, pos)
    pos += 8 * dim
    (time,) = struct.unpack_from("<d", data, pos)
    pos += 8
    count = int(np.prod(n))
    expected = pos + 4 * 8 * count
    if len(data) < expected:
        raise SnapshotError(f"truncated payload: {len(data)} bytes, expected {expected}")
    if len(data) > expected:
        raise SnapshotError(f"trailing bytes: {len(data)} bytes, expected {expected}")
    grid = Grid(n, length, origin)
    if expect is not None and grid != expect:
        raise SnapshotError(f"grid mismatch: file has n={grid.n}, length={grid.length}")
    arr = np.frombuffer(data, dtype="<f8", count=4 * count, offset=pos).astype(float).reshape((4,) + grid.shape)
    return FieldState(grid, arr[0] + 1j * arr[1], arr[2].copy(), arr[3].copy(), time)


def save(path, fs: FieldState) -> None:
    Path(path).write_bytes(write_snapshot(fs))


def load(path, expect: Grid | None = None) -> FieldState:
    return read_snapshot(Path(path).read_bytes(), expect=expect)
