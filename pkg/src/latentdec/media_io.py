"""Latent, embedding, image and frame-sequence I/O.

Binary formats (all little-endian):

* LATZ latents — ``"LATZ"``, u32 version (=1), u32 dim count (3 or 4),
  dim-count u64 dims ([4,h,w] or [T,4,h,w]), f32 scale, f32 payload. Values
  are divided by the stored scale on read.
* EMBD embeddings — ``"EMBD"``, u32 version (=1), u64 rows N, u64 dim D,
  N x D f32 payload. Readers require N >= 2 (covariance needs two samples).
* Images — binary PPM (P6, maxval 255), one byte per channel,
  byte = round-half-up(value * 255).
* Videos — a directory of numbered PPM frames plus a line-oriented manifest
  (``fps <rate>`` then one frame path per line).

Readers reject truncated files deterministically; no partial data escapes.
"""
from __future__ import annotations

import math
import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    CorruptManifest,
    DimMismatch,
    RangeError,
    ShapeMismatch,
    TooFewRows,
    TruncatedPayload,
    ValidationError,
    VersionUnsupported,
)
from .tensor import Layout, Tensor

LATZ_MAGIC = b"LATZ"
EMBD_MAGIC = b"EMBD"
VERSION = 1


def _read_exact(data: bytes, offset: int, count: int, path, what: str) -> bytes:
    if offset + count > len(data):
        raise TruncatedPayload(f"{path}: file ends inside {what}")
    return data[offset:offset + count]


# ---------------------------------------------------------------------------
# LATZ
# ---------------------------------------------------------------------------

def write_latent(path, tensor: Tensor, scale: float = 1.0) -> None:
    """Write a CHW or TCHW latent tensor as a LATZ file.

    The stored payload is ``tensor * scale`` so that reading (which divides
    by scale) returns the original values.
    """
    dims = tensor.shape
    if len(dims) == 3:
        channel = dims[0]
    elif len(dims) == 4:
        channel = dims[1]
    else:
        raise ShapeMismatch(f"latent must be CHW or TCHW, got shape {dims}")
    if channel != 4:
        raise DimMismatch(f"latent channel axis must be 4, got {channel}")
    if not (scale > 0 and math.isfinite(scale)):
        raise ValidationError(f"scale must be a positive finite float, got {scale}")
    with open(path, "wb") as fh:
        fh.write(LATZ_MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(dims)))
        for d in dims:
            fh.write(struct.pack("<Q", d))
        fh.write(struct.pack("<f", scale))
        fh.write((tensor.data * np.float32(scale)).astype("<f4").tobytes())


def read_latent(path):
    """Read a LATZ file; returns (tensor, scale) with values already divided."""
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != LATZ_MAGIC:
        raise BadMagic(f"{path}: not a LATZ file")
    version = struct.unpack_from("<I", _read_exact(data, 4, 4, path, "version"))[0]
    if version != VERSION:
        raise VersionUnsupported(f"{path}: LATZ version {version} unsupported")
    ndim = struct.unpack_from("<I", _read_exact(data, 8, 4, path, "dim count"))[0]
    if ndim not in (3, 4):
        raise DimMismatch(f"{path}: latent must have 3 or 4 dims, got {ndim}")
    dims_raw = _read_exact(data, 12, 8 * ndim, path, "dims")
    dims = struct.unpack(f"<{ndim}Q", dims_raw)
    channel = dims[0] if ndim == 3 else dims[1]
    if channel != 4:
        raise DimMismatch(f"{path}: channel axis must be 4, got {channel}")
    if any(d < 1 for d in dims):
        raise CorruptManifest(f"{path}: non-positive dimension in {dims}")
    off = 12 + 8 * ndim
    scale = struct.unpack("<f", _read_exact(data, off, 4, path, "scale"))[0]
    if not (scale > 0 and math.isfinite(scale)):
        raise CorruptManifest(f"{path}: bad latent scale {scale}")
    off += 4
    count = 1
    for d in dims:
        count *= d
    raw = _read_exact(data, off, 4 * count, path, "payload")
    values = np.frombuffer(raw, dtype="<f4").reshape(dims)
    values = (values / np.float32(scale)).astype(np.float32)
    layout = Layout.CHW if ndim == 3 else Layout.TCHW
    return Tensor(values, layout), float(scale)


# ---------------------------------------------------------------------------
# EMBD
# ---------------------------------------------------------------------------

def write_embeddings(path, matrix) -> None:
    mat = np.ascontiguousarray(matrix, dtype=np.float32)
    if mat.ndim != 2:
        raise ShapeMismatch(f"embeddings must be [N, D], got shape {mat.shape}")
    with open(path, "wb") as fh:
        fh.write(EMBD_MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", mat.shape[0]))
        fh.write(struct.pack("<Q", mat.shape[1]))
        fh.write(mat.astype("<f4").tobytes())


def read_embeddings(path) -> np.ndarray:
    """Read an EMBD file as an [N, D] float32 matrix; requires N >= 2."""
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != EMBD_MAGIC:
        raise BadMagic(f"{path}: not an EMBD file")
    version = struct.unpack_from("<I", _read_exact(data, 4, 4, path, "version"))[0]
    if version != VERSION:
        raise VersionUnsupported(f"{path}: EMBD version {version} unsupported")
    n = struct.unpack("<Q", _read_exact(data, 8, 8, path, "row count"))[0]
    d = struct.unpack("<Q", _read_exact(data, 16, 8, path, "dim"))[0]
    if n < 2:
        raise TooFewRows(f"{path}: covariance needs >= 2 rows, got {n}")
    if d < 1:
        raise CorruptManifest(f"{path}: dimension must be >= 1, got {d}")
    raw = _read_exact(data, 24, 4 * n * d, path, "payload")
    return np.frombuffer(raw, dtype="<f4").reshape(n, d).copy()


# ---------------------------------------------------------------------------
# PPM
# ---------------------------------------------------------------------------

def write_image_ppm(img: Tensor, path) -> None:
    """Write a [3, H, W] tensor with values in [0, 1] as binary PPM (P6)."""
    arr = img.data
    if arr.ndim != 3 or arr.shape[0] != 3:
        raise ShapeMismatch(f"PPM image must be [3, H, W], got {arr.shape}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise RangeError(
            f"pixel values must lie in [0, 1], got [{arr.min():.4g}, {arr.max():.4g}]")
    # round-half-up; np.round would round half to even
    bytes_ = np.floor(arr * 255.0 + 0.5).clip(0, 255).astype(np.uint8)
    interleaved = np.ascontiguousarray(bytes_.transpose(1, 2, 0))
    h, w = arr.shape[1], arr.shape[2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(interleaved.tobytes())


def read_image_ppm(path) -> Tensor:
    """Read a binary PPM (P6, maxval 255) as a [3, H, W] tensor in [0, 1]."""
    data = Path(path).read_bytes()
    if data[:2] != b"P6":
        raise BadMagic(f"{path}: not a P6 PPM file")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise TruncatedPayload(f"{path}: header ended early")
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        w, h, maxval = (int(f) for f in fields)
    except ValueError:
        raise CorruptManifest(f"{path}: non-numeric PPM header") from None
    if maxval != 255:
        raise CorruptManifest(f"{path}: only maxval 255 supported, got {maxval}")
    raw = _read_exact(data, pos, 3 * w * h, path, "pixel data")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(h, w, 3)
    return Tensor(pixels.transpose(2, 0, 1).astype(np.float32) / 255.0, Layout.CHW)


# ---------------------------------------------------------------------------
# Frame manifests
# ---------------------------------------------------------------------------

def write_frame_manifest(path, frame_paths, fps: float = 24.0) -> None:
    frame_paths = list(frame_paths)
    if not frame_paths:
        raise ValidationError("frame manifest must list at least one frame")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"fps {fps}\n")
        for frame in frame_paths:
            fh.write(f"{frame}\n")


def read_frame_manifest(path):
    """Returns (frame path list, fps)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("fps "):
        raise CorruptManifest(f"{path}: first line must be 'fps <rate>'")
    try:
        fps = float(lines[0][4:])
    except ValueError:
        raise CorruptManifest(f"{path}: bad fps value") from None
    frames = [line for line in lines[1:] if line.strip()]
    if not frames:
        raise ValidationError(f"{path}: manifest lists no frames")
    return frames, fps


def write_video_frames(out_dir, video: Tensor, prefix: str = "frame",
                       fps: float = 24.0):
    """Write a TCHW tensor as numbered PPM frames plus a manifest.

    Returns the manifest path.
    """
    arr = video.data
    if arr.ndim != 4 or arr.shape[1] != 3:
        raise ShapeMismatch(f"video must be [T, 3, H, W], got {arr.shape}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for t in range(arr.shape[0]):
        name = f"{prefix}_{t:04d}.ppm"
        write_image_ppm(Tensor(arr[t], Layout.CHW), out_dir / name)
        names.append(name)
    manifest = out_dir / f"{prefix}s.txt"
    write_frame_manifest(manifest, names, fps)
    return manifest
