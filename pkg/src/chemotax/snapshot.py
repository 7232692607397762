"""Binary field snapshots.

Layout, all little-endian: ``b"CTX2"``, u32 version, u32 nx, u32 ny, then eight
f64 (hx, hy, t, tau1, tau2, chi1, chi2, chi3), then u, v, w, z as f64 arrays of
shape (nx, ny) in C order.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import ModelParams, SimState

MAGIC = b"CTX2"
VERSION = 1
_HEAD = struct.Struct("<4sIII8d")
_F64 = np.dtype("<f8")


@dataclass(frozen=True)
class SnapshotHeader:
    nx: int
    ny: int
    hx: float
    hy: float
    t: float
    tau1: float
    tau2: float
    chi1: float
    chi2: float
    chi3: float
    version: int = VERSION


def encode(state: SimState, hx: float, hy: float, params: ModelParams) -> bytes:
    nx, ny = state.u.shape
    head = _HEAD.pack(MAGIC, VERSION, nx, ny, hx, hy, state.t,
                      params.tau1, params.tau2, params.chi1, params.chi2, params.chi3)
    body = b"".join(np.ascontiguousarray(f, dtype=_F64).tobytes(order="C")
                    for f in (state.u, state.v, state.w, state.z))
    return head + body


def decode(buf: bytes) -> tuple[SnapshotHeader, SimState]:
    if len(buf) < _HEAD.size:
        raise ValueError("snapshot truncated before header end")
    magic, version, nx, ny, *vals = _HEAD.unpack_from(buf)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    n = nx * ny
    expected = _HEAD.size + 4 * n * 8
    if len(buf) != expected:
        raise ValueError(f"payload length {len(buf) - _HEAD.size}, expected {4 * n * 8}")
    hdr = SnapshotHeader(nx, ny, *vals, version=version)
    arr = np.frombuffer(buf, dtype=_F64, offset=_HEAD.size).astype(np.float64)
    u, v, w, z = (a.reshape(nx, ny) for a in np.split(arr, 4))
    return hdr, SimState(hdr.t, u, v, w, z)


def write_snapshot(path, state: SimState, hx: float, hy: float, params: ModelParams) -> None:
    Path(path).write_bytes(encode(state, hx, hy, params))


def read_snapshot(path) -> tuple[SnapshotHeader, SimState]:
    return decode(Path(path).read_bytes())
