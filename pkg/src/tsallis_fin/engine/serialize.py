"""Versioned binary container for model snapshots.

Layout (all integers little-endian)::

    offset  size  field
    0       6     magic  b"TSFIN\\0"
    6       2     uint16 format version
    8       4     uint32 header length H
    12      H     UTF-8 JSON header (sorted keys); its "arrays" entry lists
                  {"name", "shape"} for every array in payload order
    12+H    8*N   payload: float64 values of each array, row-major, concatenated
    end-4   4     uint32 CRC-32 of every preceding byte

Readers check magic, then version, then header, then payload size, then CRC.
"""
from __future__ import annotations

import json
import os
import struct
import zlib

import numpy as np

from ..errors import ModelFileError, VersionError

MAGIC = b"TSFIN\0"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<6sHI")


def encode(header: dict, arrays: dict[str, np.ndarray], version: int = FORMAT_VERSION) -> bytes:
    header = dict(header)
    header["arrays"] = [{"name": k, "shape": list(np.shape(v))} for k, v in arrays.items()]
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = b"".join(np.ascontiguousarray(v, dtype="<f8").tobytes() for v in arrays.values())
    body = _PREFIX.pack(MAGIC, version, len(head)) + head + payload
    return body + struct.pack("<I", zlib.crc32(body))


def decode(blob: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if len(blob) < _PREFIX.size:
        raise ModelFileError("file truncated: missing prefix")
    magic, version, hlen = _PREFIX.unpack_from(blob)
    if magic != MAGIC:
        raise ModelFileError("not a model file (bad magic)")
    if version != FORMAT_VERSION:
        raise VersionError(f"unsupported format version {version} (expected {FORMAT_VERSION})")
    start = _PREFIX.size
    if len(blob) < start + hlen + 4:
        raise ModelFileError("file truncated: header incomplete")
    try:
        header = json.loads(blob[start:start + hlen].decode("utf-8"))
        specs = header["arrays"]
        sizes = [int(np.prod(s["shape"], dtype=np.int64)) for s in specs]
    except (ValueError, KeyError, TypeError) as exc:
        raise ModelFileError(f"unparseable header: {exc}") from exc
    pos = start + hlen
    expected = pos + 8 * sum(sizes) + 4
    if len(blob) != expected:
        kind = "truncated" if len(blob) < expected else "has trailing bytes"
        raise ModelFileError(f"file {kind}: {len(blob)} bytes, expected {expected}")
    (crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    if crc != zlib.crc32(blob[:-4]):
        raise ModelFileError("checksum mismatch: file is corrupt")
    arrays = {}
    for spec, n in zip(specs, sizes):
        arrays[spec["name"]] = np.frombuffer(blob, dtype="<f8", count=n, offset=pos) \
            .astype(np.float64).reshape(spec["shape"])
        pos += 8 * n
    return header, arrays


def write(path, header: dict, arrays: dict[str, np.ndarray]):
    blob = encode(header, arrays)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def read(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        return decode(fh.read())
