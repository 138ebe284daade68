"""LWDC weight container codec and model size reporting.

LWDC layout, all integers little-endian, no padding ambiguity::

    bytes 0..3    magic "LWDC"
    bytes 4..7    u32 version (= 1)
    bytes 8..15   u64 header length in bytes (unpadded)
    ...           UTF-8 JSON header
    ...           zero padding to the next 8-byte file offset
    ...           payload (raw little-endian row-major tensor bytes)

The JSON header is ``{"arch": ..., "dtype": "f16"|"f32", "tensors": [{"name",
"dtype", "shape", "offset", "length"}, ...]}`` with offsets relative to the
payload start. Tensor offsets are 8-byte aligned; gaps are permitted, overlap
is not. f16 tensors are written with round-to-nearest-even and widened to f32
when read back.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    CorruptManifest,
    TruncatedPayload,
    UnrepresentableValue,
    VersionUnsupported,
)

MAGIC = b"LWDC"
VERSION = 1
_F16_MAX = 65504.0
_DTYPE_SIZE = {"f16": 2, "f32": 4}
_NP_DTYPE = {"f16": np.dtype("<f2"), "f32": np.dtype("<f4")}


@dataclass(frozen=True)
class TensorEntry:
    name: str
    dtype: str
    shape: tuple
    offset: int
    length: int


@dataclass(frozen=True)
class WeightContainer:
    arch: str
    dtype: str
    manifest: tuple
    payload: bytes

    def tensor(self, name: str) -> np.ndarray:
        """Return the named tensor as float32 (f16 payloads are widened)."""
        for entry in self.manifest:
            if entry.name == name:
                raw = np.frombuffer(
                    self.payload, dtype=_NP_DTYPE[entry.dtype],
                    count=int(np.prod(entry.shape)) if entry.shape else 1,
                    offset=entry.offset)
                arr = raw.reshape(entry.shape)
                return arr.astype(np.float32) if entry.dtype == "f16" else arr
        raise KeyError(name)

    def names(self):
        return [entry.name for entry in self.manifest]


def _align8(n: int) -> int:
    return (n + 7) & ~7


def write_tensors(arch: str, tensors, dtype: str, path) -> int:
    """Write named float32 arrays as an LWDC container; returns bytes written.

    ``tensors`` is an iterable of (name, ndarray) pairs; order is preserved
    in the manifest and payload.
    """
    if dtype not in _DTYPE_SIZE:
        raise ValueError(f"dtype must be f16 or f32, got {dtype!r}")
    entries = []
    blobs = []
    offset = 0
    for name, arr in tensors:
        arr = np.asarray(arr, dtype=np.float32)
        if dtype == "f16":
            if arr.size and float(np.abs(arr).max()) > _F16_MAX:
                raise UnrepresentableValue(
                    f"tensor {name} exceeds f16 range (max abs "
                    f"{float(np.abs(arr).max()):.4g} > {_F16_MAX})")
            raw = arr.astype("<f2").tobytes()
        else:
            raw = arr.astype("<f4").tobytes()
        offset = _align8(offset)
        entries.append({"name": name, "dtype": dtype, "shape": list(arr.shape),
                        "offset": offset, "length": len(raw)})
        blobs.append((offset, raw))
        offset += len(raw)
    header = json.dumps({"arch": arch, "dtype": dtype, "tensors": entries},
                        indent=1).encode("utf-8")
    payload_start = _align8(4 + 4 + 8 + len(header))
    payload_size = _align8(offset) if blobs else 0
    payload = bytearray(payload_size)
    for off, raw in blobs:
        payload[off:off + len(raw)] = raw
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        fh.write(b"\x00" * (payload_start - (16 + len(header))))
        fh.write(bytes(payload))
    return path.stat().st_size


def write_container(model, dtype: str, path) -> int:
    """Serialize a decoder model's weights; returns the file size in bytes."""
    return write_tensors(model.arch.value, model.named_tensors(), dtype, path)


def read_container(path) -> WeightContainer:
    """Parse and validate an LWDC file."""
    data = Path(path).read_bytes()
    if len(data) < 16:
        raise TruncatedPayload(f"{path}: file shorter than the fixed header")
    if data[:4] != MAGIC:
        raise BadMagic(f"{path}: magic {data[:4]!r} != {MAGIC!r}")
    version = struct.unpack_from("<I", data, 4)[0]
    if version != VERSION:
        raise VersionUnsupported(f"{path}: version {version} unsupported")
    header_len = struct.unpack_from("<Q", data, 8)[0]
    if 16 + header_len > len(data):
        raise TruncatedPayload(f"{path}: declared header exceeds file size")
    try:
        header = json.loads(data[16:16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptManifest(f"{path}: header is not valid JSON: {exc}") from None
    payload_start = _align8(16 + header_len)
    payload = data[payload_start:]

    arch = header.get("arch")
    dtype = header.get("dtype")
    raw_entries = header.get("tensors")
    if not isinstance(arch, str) or dtype not in _DTYPE_SIZE \
            or not isinstance(raw_entries, list):
        raise CorruptManifest(f"{path}: header missing arch/dtype/tensors")
    entries = []
    seen = set()
    spans = []
    for raw in raw_entries:
        try:
            entry = TensorEntry(str(raw["name"]), str(raw["dtype"]),
                                tuple(int(d) for d in raw["shape"]),
                                int(raw["offset"]), int(raw["length"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptManifest(f"{path}: malformed manifest entry: {exc}") from None
        if entry.dtype not in _DTYPE_SIZE:
            raise CorruptManifest(f"{path}: tensor {entry.name} has dtype "
                                  f"{entry.dtype!r}")
        if entry.name in seen:
            raise CorruptManifest(f"{path}: duplicate tensor name {entry.name!r}")
        seen.add(entry.name)
        expect = int(np.prod(entry.shape)) * _DTYPE_SIZE[entry.dtype] \
            if entry.shape else _DTYPE_SIZE[entry.dtype]
        if entry.length != expect:
            raise CorruptManifest(
                f"{path}: tensor {entry.name} length {entry.length} != "
                f"element count x dtype size {expect}")
        if entry.offset < 0 or entry.length < 0:
            raise CorruptManifest(f"{path}: negative offset/length on {entry.name}")
        if entry.offset + entry.length > len(payload):
            raise TruncatedPayload(
                f"{path}: tensor {entry.name} extends past end of payload")
        spans.append((entry.offset, entry.offset + entry.length, entry.name))
        entries.append(entry)
    spans.sort()
    for (s0, e0, n0), (s1, e1, n1) in zip(spans, spans[1:]):
        if s1 < e0:
            raise CorruptManifest(f"{path}: tensors {n0!r} and {n1!r} overlap")
    return WeightContainer(arch=arch, dtype=dtype, manifest=tuple(entries),
                           payload=bytes(payload))


def file_size_mb(path) -> float:
    """Model size on disk in MB (bytes / 2**20)."""
    return Path(path).stat().st_size / (1 << 20)
