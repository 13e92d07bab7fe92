"""Versioned binary container shared by the FFN and SVR model files.

Layout::

    magic      8 bytes  b"AFFREG\\x00\\x01"
    version    u16      container schema version
    tag        4 bytes  model type, e.g. b"FFN " or b"SVR "
    hlen       u32      header length
    header     hlen     UTF-8 JSON: metadata plus {name: shape} for arrays
    arrays              little-endian float64, in header order
    checksum   32 bytes sha256 of everything above
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"AFFREG\x00\x01"
VERSION = 1
_HEAD = struct.Struct("<H4sI")


class ContainerError(ValueError):
    """Corrupt, truncated, or incompatible model file."""


def write_container(path, tag: bytes, meta: dict, arrays: dict) -> None:
    if len(tag) != 4:
        raise ValueError("tag must be 4 bytes")
    arrays = {k: np.ascontiguousarray(v, dtype="<f8") for k, v in arrays.items()}
    header = dict(meta)
    header["arrays"] = [[k, list(v.shape)] for k, v in arrays.items()]
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    body = MAGIC + _HEAD.pack(VERSION, tag, len(hbytes)) + hbytes
    body += b"".join(v.tobytes() for v in arrays.values())
    Path(path).write_bytes(body + hashlib.sha256(body).digest())


def read_container(path, tag: bytes) -> tuple[dict, dict]:
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + _HEAD.size + 32 or not raw.startswith(MAGIC):
        raise ContainerError(f"{path}: not a model file")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise ContainerError(f"{path}: checksum mismatch")
    version, found_tag, hlen = _HEAD.unpack_from(body, len(MAGIC))
    if version != VERSION:
        raise ContainerError(f"{path}: unsupported version {version}")
    if found_tag != tag:
        raise ContainerError(f"{path}: expected a {tag!r} model, found {found_tag!r}")
    pos = len(MAGIC) + _HEAD.size
    header = json.loads(body[pos:pos + hlen].decode("utf-8"))
    pos += hlen
    arrays = {}
    for name, shape in header.pop("arrays"):
        count = int(np.prod(shape)) if shape else 1
        arrays[name] = np.frombuffer(body, dtype="<f8", count=count, offset=pos).reshape(shape).copy()
        pos += 8 * count
    if pos != len(body):
        raise ContainerError(f"{path}: trailing bytes after arrays")
    return header, arrays


def peek_tag(path) -> bytes:
    raw = Path(path).read_bytes()[: len(MAGIC) + _HEAD.size]
    if not raw.startswith(MAGIC):
        raise ContainerError(f"{path}: not a model file")
    return _HEAD.unpack_from(raw, len(MAGIC))[1]
