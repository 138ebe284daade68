"""Benchmark harness: times decoders, measures sizes, renders report tables.

Timing scope is the latent-to-pixels compute only: latents are loaded before
the clock starts and nothing is written inside a timed iteration. Warmup
iterations are discarded. Besides mean ± std, the median is reported to
resist scheduler noise; a checksum of the decoded bytes is recorded per
iteration so determinism is checkable. Absolute published timings are
hardware-bound and never acceptance targets; only ratios are.
"""
from __future__ import annotations

import hashlib
import json
import math
import statistics
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

from .decoders import (
    Arch,
    DecoderConfig,
    build_decoder,
    decode_image,
    decode_video,
)
from .errors import EmptyInput, SpecMismatch, ValidationError
from .media_io import read_latent
from .tensor import ExecMode, Tensor
from .weights_io import file_size_mb, read_container, write_container

# Size on disk follows each model's shipping dtype: the tiny decoders ship
# f16, the reference decoder f32.
SIZE_DTYPE = {Arch.TAE192: "f16", Arch.TAE192T: "f16", Arch.REFVAE: "f32"}


@dataclass(frozen=True)
class BenchSpec:
    arch: Arch
    resolution: tuple  # (H, W) pixel dims
    frames: int = 1
    warmup_iters: int = 2
    timed_iters: int = 10
    threads: int = 1
    mode: ExecMode = ExecMode.optimized()
    seed: int = 0

    def __post_init__(self):
        if self.timed_iters < 3:
            raise ValidationError(f"timed_iters must be >= 3, got {self.timed_iters}")
        if self.warmup_iters < 0:
            raise ValidationError("warmup_iters must be >= 0")
        h, w = self.resolution
        if h % 8 or w % 8 or h < 8 or w < 8:
            raise ValidationError(f"resolution must be divisible by 8, got {h}x{w}")
        if self.frames < 1:
            raise ValidationError("frames must be >= 1")
        if self.threads < 1:
            raise ValidationError("threads must be >= 1")


@dataclass(frozen=True)
class BenchRow:
    arch: str
    delta_t_mean: float
    delta_t_std: float
    delta_t_median: float
    size_mb: float
    ssim: float | None = None
    ssim_std: float | None = None
    psnr: float | None = None
    psnr_std: float | None = None
    frechet: float | None = None
    checksums: tuple = field(default=())

    def to_record(self) -> dict:
        rec = {
            "arch": self.arch,
            "delta_t_mean": self.delta_t_mean,
            "delta_t_std": self.delta_t_std,
            "delta_t_median": self.delta_t_median,
            "size_mb": self.size_mb,
        }
        for key in ("ssim", "ssim_std", "psnr", "psnr_std", "frechet"):
            value = getattr(self, key)
            if value is not None:
                rec[key] = value
        if self.checksums:
            rec["checksums"] = list(self.checksums)
        return rec


def _load_latents(latents, spec: BenchSpec):
    loaded = []
    lh, lw = spec.resolution[0] // 8, spec.resolution[1] // 8
    want = (4, lh, lw) if spec.frames == 1 else (spec.frames, 4, lh, lw)
    for item in latents:
        tensor = item if isinstance(item, Tensor) else read_latent(item)[0]
        if tensor.shape != want:
            raise SpecMismatch(
                f"latent shape {tensor.shape} does not match spec "
                f"(expected {want})")
        loaded.append(tensor)
    if not loaded:
        raise SpecMismatch("benchmark needs at least one latent")
    return loaded


def _checksum(outputs) -> str:
    digest = hashlib.sha256()
    for out in outputs:
        digest.update(out.data.tobytes())
    return digest.hexdigest()


def run_bench(spec: BenchSpec, weights=None, latents=()) -> BenchRow:
    """Time decodes of the given latents under one spec.

    ``weights`` is an LWDC path (its file size becomes size_mb) or None for
    seeded random weights (size_mb then comes from a freshly written
    container in the model's shipping dtype). ``latents`` are LATZ paths or
    in-memory tensors matching the spec's resolution and frame count.
    """
    config = DecoderConfig(arch=spec.arch)
    if weights is not None:
        model = build_decoder(config, read_container(weights))
        size_mb = file_size_mb(weights)
    else:
        model = build_decoder(config, spec.seed)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "weights.lwdc"
            write_container(model, SIZE_DTYPE[spec.arch], path)
            size_mb = file_size_mb(path)
    loaded = _load_latents(latents, spec)

    def decode_all():
        outs = []
        for latent in loaded:
            if spec.frames == 1:
                outs.append(decode_image(model, latent, spec.mode))
            else:
                outs.append(decode_video(model, latent, spec.mode,
                                         threads=spec.threads))
        return outs

    for _ in range(spec.warmup_iters):
        decode_all()
    times = []
    checksums = []
    for _ in range(spec.timed_iters):
        start = time.perf_counter()
        outputs = decode_all()
        elapsed = time.perf_counter() - start
        times.append(elapsed / len(loaded))
        checksums.append(_checksum(outputs))
    mean = sum(times) / len(times)
    std = math.sqrt(sum((t - mean) ** 2 for t in times) / len(times))
    return BenchRow(arch=spec.arch.value, delta_t_mean=mean, delta_t_std=std,
                    delta_t_median=statistics.median(times), size_mb=size_mb,
                    checksums=tuple(checksums))


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

def _fmt_pm(mean, std, digits=4):
    if mean is None:
        return "-"
    if std is None:
        return f"{mean:.{digits}f}"
    return f"{mean:.{digits}f} ± {std:.{digits}f}"


def load_reference(path, table: str):
    """Pick one table out of a reference-values JSON file."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return data.get(table, {})


def compare_report(rows, reference=None):
    """Render an aligned text table plus line-delimited JSON records.

    ``reference`` maps arch id to published values ({"ssim": [m, s],
    "delta_t": x, ...}); when given, reference columns appear next to the
    measured ones. The ratio column is each row's delta_t over the first
    row's. Returns (table_text, records_text).
    """
    rows = list(rows)
    if not rows:
        raise EmptyInput("compare_report needs at least one row")
    reference = reference or {}
    headers = ["decoder", "SSIM", "PSNR", "Frechet", "dt (s)", "ratio",
               "size (MB)"]
    with_ref = bool(reference)
    if with_ref:
        headers += ["paper SSIM", "paper dt (s)"]
    base = rows[0].delta_t_mean
    table = []
    records = []
    for row in rows:
        ref = reference.get(row.arch, {})
        cells = [
            row.arch,
            _fmt_pm(row.ssim, row.ssim_std),
            _fmt_pm(row.psnr, row.psnr_std, 2),
            "-" if row.frechet is None else f"{row.frechet:.4f}",
            _fmt_pm(row.delta_t_mean, row.delta_t_std),
            f"{row.delta_t_mean / base:.2f}",
            f"{row.size_mb:.1f}",
        ]
        if with_ref:
            ref_ssim = ref.get("ssim")
            cells.append(_fmt_pm(*ref_ssim) if ref_ssim else "-")
            dt = ref.get("delta_t")
            cells.append(f"{dt:.4f}" if dt is not None else "-")
        table.append(cells)
        record = row.to_record()
        record["ratio"] = row.delta_t_mean / base
        if ref:
            record["reference"] = ref
        records.append(json.dumps(record, sort_keys=True))
    widths = [max(len(headers[i]), *(len(r[i]) for r in table))
              for i in range(len(headers))]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    lines.append("  ".join("-" * w for w in widths))
    for cells in table:
        lines.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(cells)))
    return "\n".join(lines) + "\n", "\n".join(records) + "\n"
