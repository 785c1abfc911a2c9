"""
KP5LAB1 field snapshots.

Layout: the 7-byte magic, nx and ny as little-endian int64, lambda as little-endian
float64, then the half spectrum as interleaved (real, imag) little-endian float64,
m-major.
"""

import logging
import os
import struct
from fractions import Fraction

import numpy as np

from .constants import SNAPSHOT_MAGIC
from .exceptions import ParameterError
from .report import atomic_write_bytes
from .spectral import SpectralField, TorusGrid

logger = logging.getLogger(__name__)

_HEADER = struct.Struct("<qqd")


def encode_snapshot(u: SpectralField) -> bytes:
    grid = u.grid
    payload = np.ascontiguousarray(u.coefficients, dtype="<c16").tobytes()
    return SNAPSHOT_MAGIC + _HEADER.pack(grid.nx, grid.ny, grid.lam) + payload


def write_snapshot(u: SpectralField, path: str) -> str:
    """Writes `u` atomically to `path` and returns the path."""
    atomic_write_bytes(path, encode_snapshot(u))
    logger.debug("snapshot %s (%dx%d)", path, u.grid.nx, u.grid.ny)
    return path


def decode_snapshot(data: bytes, dealias_fraction: Fraction = Fraction(2, 3)) -> SpectralField:
    """
    Inverse of encode_snapshot.

    Raises:
        ParameterError: On a wrong magic string or a payload of the wrong length.
    """
    if not data.startswith(SNAPSHOT_MAGIC):
        raise ParameterError("not a KP5LAB1 snapshot (bad magic)")
    offset = len(SNAPSHOT_MAGIC)
    if len(data) < offset + _HEADER.size:
        raise ParameterError("truncated KP5LAB1 header")
    nx, ny, lam = _HEADER.unpack_from(data, offset)
    grid = TorusGrid(nx=nx, ny=ny, lam=lam, dealias_fraction=dealias_fraction)
    payload = data[offset + _HEADER.size :]
    expected = grid.shape[0] * grid.shape[1] * 16
    if len(payload) != expected:
        raise ParameterError(f"KP5LAB1 payload holds {len(payload)} bytes, expected {expected}")
    coefficients = np.frombuffer(payload, dtype="<c16").reshape(grid.shape).astype(complex)
    return SpectralField(coefficients, grid)


def read_snapshot(path: str) -> SpectralField:
    if not os.path.isfile(path):
        raise ParameterError(f"snapshot not found: {path}")
    with open(path, "rb") as f:
        return decode_snapshot(f.read())
