"""Lightweight latent-diffusion decoders: inference engine, metrics, bench."""

from .tensor import ExecMode, Layout, Mode, Tensor
from .kernels import ActKind, activation, attention, conv2d, group_norm, upsample_nearest_2x
from .layers import (
    MidSpatioTemporalBlock,
    ResidualBlock,
    UpStage,
    mid_spatiotemporal_forward,
    residual_forward,
)
from .decoders import (
    Arch,
    DecoderConfig,
    DecoderModel,
    build_decoder,
    decode_image,
    decode_video,
    manifest_for,
)
from .weights_io import WeightContainer, file_size_mb, read_container, write_container, write_tensors
from .media_io import (
    read_embeddings,
    read_image_ppm,
    read_latent,
    write_embeddings,
    write_image_ppm,
    write_latent,
    write_video_frames,
)
from .metrics import (
    GaussianStats,
    MetricReport,
    aggregate,
    frechet_distance,
    gaussian_stats,
    psnr,
    ssim,
)
from .loss import LossComponents, LossSchedule, combine_loss, mse_loss, temporal_alignment_loss
from .bench import BenchRow, BenchSpec, compare_report, run_bench

__version__ = "0.1.0"

__all__ = [
    "ActKind", "Arch", "BenchRow", "BenchSpec", "DecoderConfig", "DecoderModel",
    "ExecMode", "GaussianStats", "Layout", "LossComponents", "LossSchedule",
    "MetricReport", "MidSpatioTemporalBlock", "Mode", "ResidualBlock", "Tensor",
    "UpStage", "WeightContainer", "activation", "aggregate", "attention",
    "build_decoder", "combine_loss", "compare_report", "conv2d", "decode_image",
    "decode_video", "file_size_mb", "frechet_distance", "gaussian_stats",
    "group_norm", "manifest_for", "mid_spatiotemporal_forward", "mse_loss",
    "psnr", "read_container", "read_embeddings", "read_image_ppm", "read_latent",
    "residual_forward", "run_bench", "ssim", "temporal_alignment_loss",
    "upsample_nearest_2x", "write_container", "write_embeddings",
    "write_image_ppm", "write_latent", "write_tensors", "write_video_frames",
]
