"""Binary operator cache.

Layout (little-endian)::

    b"IVAC" | u32 version | u32 ell_max | u32 nk | 8 bytes grid fingerprint
    per ell: u32 kind (0 = diagonal, nk entries; 1 = dense, nk*nk row-major)
             then the entries as float64 (re, im) pairs
    u32 CRC32 of everything above
"""

from __future__ import annotations

import os
import struct
import zlib
from pathlib import Path
from typing import Union

import numpy as np

from .errors import CacheError
from .grid import SectorGrid
from .oper import SectorOperator

MAGIC = b"IVAC"
VERSION = 1
_HEADER = struct.Struct("<4sIII8s")
_KIND = struct.Struct("<I")
_CRC = struct.Struct("<I")


def _pack_fingerprint(fp: str) -> bytes:
    return bytes.fromhex(fp[:16].ljust(16, "0"))


def encode(op: SectorOperator, fingerprint: str) -> bytes:
    parts = [_HEADER.pack(MAGIC, VERSION, op.ell_max, op.n, _pack_fingerprint(fingerprint))]
    for b in op.blocks:
        kind = 0 if b.ndim == 1 else 1
        parts.append(_KIND.pack(kind))
        parts.append(np.ascontiguousarray(b, dtype="<c16").tobytes())
    body = b"".join(parts)
    return body + _CRC.pack(zlib.crc32(body))


def decode(data: bytes, grid: SectorGrid, label: str = "") -> SectorOperator:
    if len(data) < _HEADER.size + _CRC.size:
        raise CacheError("cache file truncated")
    magic, version, ell_max, nk, fp = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CacheError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CacheError(f"unsupported cache version {version}")
    body, (crc,) = data[: -_CRC.size], _CRC.unpack_from(data, len(data) - _CRC.size)
    if zlib.crc32(body) != crc:
        raise CacheError("checksum mismatch")
    if nk != grid.nk or ell_max != grid.ell_max or fp != _pack_fingerprint(grid.fingerprint):
        raise CacheError("cache was written for a different grid")
    pos = _HEADER.size
    blocks = []
    for _ in range(ell_max + 1):
        if pos + _KIND.size > len(body):
            raise CacheError("cache file truncated")
        (kind,) = _KIND.unpack_from(body, pos)
        pos += _KIND.size
        if kind not in (0, 1):
            raise CacheError(f"unknown block kind {kind}")
        count = nk if kind == 0 else nk * nk
        nbytes = 16 * count
        if pos + nbytes > len(body):
            raise CacheError("cache file truncated")
        arr = np.frombuffer(body, dtype="<c16", count=count, offset=pos).astype(complex)
        pos += nbytes
        if np.all(arr.imag == 0):
            arr = arr.real.copy()
        blocks.append(arr if kind == 0 else arr.reshape(nk, nk))
    if pos != len(body):
        raise CacheError("trailing bytes in cache file")
    return SectorOperator(blocks, grid.sqrt_w, label=label)


def save(path: Union[str, os.PathLike], op: SectorOperator, grid: SectorGrid) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(encode(op, grid.fingerprint))
    os.replace(tmp, path)
    return path


def load(path: Union[str, os.PathLike], grid: SectorGrid, label: str = "") -> SectorOperator:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CacheError(f"cannot read cache file {path}: {exc}") from exc
    return decode(data, grid, label)
