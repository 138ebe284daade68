"""Command-line harness.

Subcommands: ``decode`` (latents to images/frame dirs), ``bench`` (timing +
size table), ``metrics`` (SSIM/PSNR over image pairs), ``frechet`` (distance
between two embedding files), ``loss`` (composite loss evaluation).

Exit codes: 0 success, 2 validation/input error, 1 internal error.
"""
from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path

from .bench import BenchSpec, compare_report, load_reference, run_bench
from .decoders import Arch, DecoderConfig, build_decoder, decode_image, decode_video
from .errors import FormatError, ValidationError
from .loss import LossComponents, LossSchedule, combine_loss
from .media_io import (
    read_embeddings,
    read_image_ppm,
    read_latent,
    write_image_ppm,
    write_video_frames,
)
from .metrics import aggregate, frechet_distance, gaussian_stats, psnr, ssim
from .tensor import ExecMode, Mode
from .weights_io import read_container

_ARCHES = [a.value for a in Arch]


def _exec_mode(args) -> ExecMode:
    mode = Mode(args.mode)
    return ExecMode(mode, True if mode is Mode.NAIVE else args.deterministic)


def _add_common(p):
    p.add_argument("--mode", choices=["naive", "optimized"], default="optimized")
    p.add_argument("--deterministic", action="store_true",
                   help="force sequential fixed-order execution")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0,
                   help="seed for random weights when --weights is omitted")


def _build_model(arch_name, weights_path, seed):
    arch = Arch.parse(arch_name)
    config = DecoderConfig(arch=arch)
    if weights_path:
        container = read_container(weights_path)
        if container.arch != arch.value:
            raise ValidationError(
                f"container holds {container.arch!r} weights, --arch says "
                f"{arch.value!r}")
        return build_decoder(config, container)
    return build_decoder(config, seed)


def _cmd_decode(args) -> int:
    model = _build_model(args.arch, args.weights, args.seed)
    mode = _exec_mode(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for latent_path in args.latent:
        tensor, _scale = read_latent(latent_path)
        stem = Path(latent_path).stem
        if len(tensor.shape) == 3:
            image = decode_image(model, tensor, mode)
            target = out_dir / f"{stem}.ppm"
            write_image_ppm(image, target)
            print(f"wrote {target}")
        else:
            video = decode_video(model, tensor, mode, threads=args.threads)
            manifest = write_video_frames(out_dir / stem, video)
            print(f"wrote {video.shape[0]} frames, manifest {manifest}")
    return 0


def _reference_table(resolution, frames):
    if frames > 1:
        return "video_ucf101"
    if resolution[0] == 1024 and resolution[1] == 1024:
        return "image_1024"
    if resolution[0] == 256 and resolution[1] == 256:
        return "image_256"
    return None


def _cmd_bench(args) -> int:
    first, _ = read_latent(args.latent[0])
    dims = first.shape
    if len(dims) == 3:
        frames, (h, w) = 1, (dims[1] * 8, dims[2] * 8)
    else:
        frames, (h, w) = dims[0], (dims[2] * 8, dims[3] * 8)
    arches = args.arch or ["tae192"]
    if args.weights and len(arches) != 1:
        raise ValidationError("--weights requires exactly one --arch")
    rows = []
    for arch_name in arches:
        spec = BenchSpec(arch=Arch.parse(arch_name), resolution=(h, w),
                         frames=frames, warmup_iters=args.warmup,
                         timed_iters=args.iters, threads=args.threads,
                         mode=_exec_mode(args), seed=args.seed)
        rows.append(run_bench(spec, weights=args.weights, latents=args.latent))
    reference = None
    if args.paper_ref:
        table = _reference_table((h, w), frames)
        if table:
            reference = load_reference(args.paper_ref, table)
    text, records = compare_report(rows, reference)
    print(text, end="")
    if args.report:
        Path(args.report).write_text(records, encoding="utf-8")
        print(f"report written to {args.report}")
    return 0


def _cmd_metrics(args) -> int:
    if len(args.test) != len(args.ref):
        raise ValidationError(
            f"{len(args.test)} test images vs {len(args.ref)} references")
    ssims, psnrs = [], []
    for test_path, ref_path in zip(args.test, args.ref):
        test = read_image_ppm(test_path)
        ref = read_image_ppm(ref_path)
        ssims.append(ssim(test, ref))
        psnrs.append(psnr(test, ref))
    s_mean, s_std = aggregate(ssims)
    p_mean, p_std = aggregate(psnrs)
    print(f"SSIM  {s_mean:.4f} ± {s_std:.4f}")
    print(f"PSNR  {p_mean:.2f} ± {p_std:.2f} dB")
    if args.report:
        import json
        record = json.dumps({"ssim_mean": s_mean, "ssim_std": s_std,
                             "psnr_mean": p_mean, "psnr_std": p_std,
                             "pairs": len(ssims)}, sort_keys=True)
        Path(args.report).write_text(record + "\n", encoding="utf-8")
    return 0


def _cmd_frechet(args) -> int:
    real = gaussian_stats(read_embeddings(args.real))
    fake = gaussian_stats(read_embeddings(args.fake))
    print(f"{frechet_distance(real, fake):.6f}")
    return 0


def _cmd_loss(args) -> int:
    schedule = LossSchedule(alpha=args.alpha, beta=args.beta, gamma=args.gamma,
                            t0=args.t0)
    components = LossComponents(mse=args.mse, lpips=args.lpips, gan=args.gan)
    print(f"{combine_loss(components, args.step, schedule):.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentdec",
        description="Lightweight latent-decoder inference and benchmarking")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="decode LATZ latents to PPM images/frames")
    p.add_argument("--arch", choices=_ARCHES, required=True)
    p.add_argument("--weights", help="LWDC weight container")
    p.add_argument("--latent", nargs="+", required=True, metavar="PATH")
    p.add_argument("--out", required=True, metavar="DIR")
    _add_common(p)
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("bench", help="time decodes and report a table")
    p.add_argument("--arch", choices=_ARCHES, action="append",
                   help="may repeat to benchmark several architectures")
    p.add_argument("--weights", help="LWDC weight container")
    p.add_argument("--latent", nargs="+", required=True, metavar="PATH")
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--warmup", type=int, default=2)
    p.add_argument("--paper-ref", metavar="PATH",
                   help="reference-values JSON for a side-by-side column")
    p.add_argument("--report", metavar="PATH",
                   help="write line-delimited JSON records here")
    _add_common(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("metrics", help="SSIM/PSNR between decoded and reference images")
    p.add_argument("--test", nargs="+", required=True, metavar="PPM")
    p.add_argument("--ref", nargs="+", required=True, metavar="PPM")
    p.add_argument("--report", metavar="PATH")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("frechet", help="Frechet distance between two EMBD files")
    p.add_argument("--real", required=True, metavar="EMBD")
    p.add_argument("--fake", required=True, metavar="EMBD")
    p.set_defaults(func=_cmd_frechet)

    p = sub.add_parser("loss", help="evaluate the composite loss")
    p.add_argument("--mse", type=float, required=True)
    p.add_argument("--lpips", type=float, default=0.0)
    p.add_argument("--gan", type=float, default=0.0)
    p.add_argument("--step", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.4)
    p.add_argument("--gamma", type=float, default=0.8)
    p.add_argument("--t0", type=int, default=10000)
    p.set_defaults(func=_cmd_loss)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:  # pragma: no cover - internal failure path
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
