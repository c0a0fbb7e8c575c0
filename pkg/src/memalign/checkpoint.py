"""Binary parameter checkpoints.

Layout (all integers little-endian):

    magic          8 bytes   "MEMALNCK"
    version        uint32
    section count  uint32
    section table  per entry: name length uint32, name bytes (UTF-8),
                   offset uint64, length uint64
    sections       per entry: rank uint64, dims uint64 * rank,
                   row-major float32 payload
    checksum       uint64    FNV-1a over all prior bytes
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .seeding import fnv1a64

MAGIC = b"MEMALNCK"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(sections: dict[str, np.ndarray], path: str | Path) -> None:
    """Write named tensors; payloads are stored as float32."""
    names = list(sections)
    if len(set(names)) != len(names):
        raise CheckpointError("duplicate section names")
    blobs: list[bytes] = []
    for name in names:
        # note: asarray keeps 0-d shapes; ascontiguousarray would promote to 1-d
        arr = np.asarray(sections[name], dtype="<f4", order="C")
        header = struct.pack("<Q", arr.ndim) + struct.pack(
            f"<{arr.ndim}Q", *arr.shape
        )
        blobs.append(header + arr.tobytes())

    encoded_names = [name.encode("utf-8") for name in names]
    table_size = sum(4 + len(n) + 16 for n in encoded_names)
    offset = len(MAGIC) + 4 + 4 + table_size

    table = bytearray()
    for encoded, blob in zip(encoded_names, blobs):
        table += struct.pack("<I", len(encoded)) + encoded
        table += struct.pack("<QQ", offset, len(blob))
        offset += len(blob)

    body = MAGIC + struct.pack("<II", VERSION, len(names)) + bytes(table) + b"".join(blobs)
    checksum = struct.pack("<Q", fnv1a64(body))
    Path(path).write_bytes(body + checksum)


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    """Read named tensors back; validates magic, version, and checksum."""
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 8 + 8:
        raise CheckpointError("truncated checkpoint file")
    body, stored = data[:-8], data[-8:]
    if body[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"bad magic {body[:len(MAGIC)]!r}")
    if struct.unpack("<Q", stored)[0] != fnv1a64(body):
        raise CheckpointError("checksum mismatch")
    pos = len(MAGIC)
    version, count = struct.unpack_from("<II", body, pos)
    pos += 8
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")

    entries: list[tuple[str, int, int]] = []
    for _ in range(count):
        if pos + 4 > len(body):
            raise CheckpointError("truncated section table")
        (name_len,) = struct.unpack_from("<I", body, pos)
        pos += 4
        name = body[pos : pos + name_len].decode("utf-8")
        pos += name_len
        offset, length = struct.unpack_from("<QQ", body, pos)
        pos += 16
        entries.append((name, offset, length))

    sections: dict[str, np.ndarray] = {}
    for name, offset, length in entries:
        if offset + length > len(body):
            raise CheckpointError(f"truncated section {name!r}")
        blob = body[offset : offset + length]
        (rank,) = struct.unpack_from("<Q", blob, 0)
        dims = struct.unpack_from(f"<{rank}Q", blob, 8)
        payload = blob[8 + 8 * rank :]
        expected = int(np.prod(dims, dtype=np.int64)) * 4
        if len(payload) != expected:
            raise CheckpointError(
                f"section {name!r} payload length {len(payload)} does not "
                f"match declared shape {dims}"
            )
        sections[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
    return sections
