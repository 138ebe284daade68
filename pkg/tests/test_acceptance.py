"""Acceptance gate: one test per criterion, one printed status line each.

Run with ``pytest -s tests/test_acceptance.py`` to see the per-criterion
lines. Timing-sensitive criteria use median-of-3 iterations after a warmup
and repeat over 3 consecutive runs.

Known honest red: the video speed criterion demands the frame-wise tiny
decoder be >= 2x faster than its temporal variant. The temporal variant adds
one mid spatio-temporal block at latent resolution, which is ~2% of the
stack's arithmetic at any resolution, so the gap is ~1.02-1.05x on CPU; the
published 1.82x gap is a GPU launch-overhead artifact. The assertion is kept
as stated and fails; see the refvae-ratio test for the part that holds.
"""
import hashlib
import math
import time

import numpy as np
import pytest

from latentdec import (
    Arch,
    BenchSpec,
    DecoderConfig,
    ExecMode,
    GaussianStats,
    LossComponents,
    LossSchedule,
    Tensor,
    build_decoder,
    combine_loss,
    decode_image,
    decode_video,
    frechet_distance,
    psnr,
    run_bench,
    ssim,
    write_container,
)
from latentdec.tensor import Layout
from latentdec.weights_io import file_size_mb

import test_kernels

FAST = ExecMode.optimized()


def _report(name, ok, detail):
    print(f"\n[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def _latent(seed, shape):
    rng = np.random.default_rng(seed)
    layout = Layout.CHW if len(shape) == 3 else Layout.TCHW
    return Tensor((rng.normal(size=shape) * 0.5).astype(np.float32), layout)


@pytest.fixture(scope="module")
def models():
    return {
        Arch.TAE192: build_decoder(DecoderConfig(arch=Arch.TAE192), 0),
        Arch.TAE192T: build_decoder(DecoderConfig(arch=Arch.TAE192T), 0),
        Arch.REFVAE: build_decoder(DecoderConfig(arch=Arch.REFVAE), 0),
    }


# ---------------------------------------------------------------------------
# Criterion: kernel oracle suite (>=200 randomized cases per op, < 2 min)
# ---------------------------------------------------------------------------

def test_kernel_oracle_suite():
    start = time.perf_counter()
    test_kernels.test_battery_conv2d_optimized_equals_naive()
    test_kernels.test_battery_group_norm_optimized_equals_naive()
    test_kernels.test_battery_attention_optimized_equals_naive()
    test_kernels.test_battery_upsample_optimized_equals_naive()
    elapsed = time.perf_counter() - start
    _report("kernel-oracle-suite", elapsed < 120.0,
            f"4 x 200 cases at 1e-5 rel in {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# Criterion: topology contracts (256^2 and 1024^2, outputs in [0, 1])
# ---------------------------------------------------------------------------

def test_topology_contracts(models):
    details = []
    for arch in (Arch.TAE192, Arch.REFVAE):
        model = models[arch]
        times = {}
        for latent_hw, pixel_hw in ((32, 256), (128, 1024)):
            latent = _latent(latent_hw, (4, latent_hw, latent_hw))
            start = time.perf_counter()
            out = decode_image(model, latent, FAST)
            times[pixel_hw] = time.perf_counter() - start
            assert out.shape == (3, pixel_hw, pixel_hw), \
                f"{arch.value}: {out.shape} != (3, {pixel_hw}, {pixel_hw})"
            assert out.data.min() >= 0.0 and out.data.max() <= 1.0, \
                f"{arch.value}: pixels escape [0, 1]"
        # monotone workload: 64x the pixels must cost strictly more
        assert times[1024] > times[256], \
            f"{arch.value}: t(1024^2)={times[1024]:.2f}s !> t(256^2)={times[256]:.2f}s"
        details.append(f"{arch.value} 256^2 {times[256]:.1f}s / 1024^2 {times[1024]:.1f}s")
    _report("topology-contracts", True, "; ".join(details))


# ---------------------------------------------------------------------------
# Criterion: size claims
# ---------------------------------------------------------------------------

def test_size_claims(models, tmp_path):
    tae_path = tmp_path / "tae192.f16.lwdc"
    write_container(models[Arch.TAE192], "f16", tae_path)
    tae_mb = file_size_mb(tae_path)
    ref_path = tmp_path / "refvae.f32.lwdc"
    write_container(models[Arch.REFVAE], "f32", ref_path)
    ref_mb = file_size_mb(ref_path)
    ratio = models[Arch.REFVAE].param_count / models[Arch.TAE192].param_count
    ok = 15.0 <= tae_mb <= 35.0 and ref_mb >= 180.0 and ratio >= 4.0
    _report("size-claims", ok,
            f"tae192 f16 {tae_mb:.1f} MB in [15, 35]; refvae f32 {ref_mb:.1f} MB "
            f">= 180; param ratio {ratio:.2f} >= 4")


# ---------------------------------------------------------------------------
# Criterion: speed ratios (image and video), 3 consecutive runs
# ---------------------------------------------------------------------------

def _bench(arch, resolution, frames, latent):
    spec = BenchSpec(arch=arch, resolution=resolution, frames=frames,
                     warmup_iters=1, timed_iters=3, mode=FAST, seed=0)
    return run_bench(spec, latents=[latent]).delta_t_median


def test_speed_ratio_image_256(models):
    latent = _latent(99, (4, 32, 32))
    ratios = []
    for _ in range(3):
        t_tae = _bench(Arch.TAE192, (256, 256), 1, latent)
        t_ref = _bench(Arch.REFVAE, (256, 256), 1, latent)
        ratios.append(t_ref / t_tae)
    ok = all(r >= 1.5 for r in ratios)
    _report("speed-ratio-image-256", ok,
            "refvae/tae192 ratios " + ", ".join(f"{r:.2f}" for r in ratios)
            + " all >= 1.5")


@pytest.fixture(scope="module")
def video_timings(models):
    """Three consecutive runs of interleaved per-bunch timings.

    The three decoders are timed back to back within each iteration and the
    per-iteration ratios aggregated by median, which cancels the slow machine
    drift this box exhibits; a plain per-arch pass would confound drift with
    the few-percent architectural differences under test.
    """
    latent = _latent(98, (8, 4, 8, 8))

    def once(arch):
        start = time.perf_counter()
        decode_video(models[arch], latent, FAST)
        return time.perf_counter() - start

    for arch in (Arch.TAE192, Arch.TAE192T, Arch.REFVAE):
        once(arch)  # warmup
    import statistics
    runs = []
    for _ in range(3):
        triples = [(once(Arch.TAE192), once(Arch.TAE192T), once(Arch.REFVAE))
                   for _ in range(5)]
        runs.append({
            "temporal_over_tae": statistics.median(tt / t for t, tt, _ in triples),
            "ref_over_temporal": statistics.median(r / tt for _, tt, r in triples),
        })
    return runs


def test_speed_ratio_video_refvae(video_timings):
    # solid half of the video criterion: the temporal decoder beats the
    # reference decoder by >= 1.5x per 8-frame bunch on 3 consecutive runs
    factors = [run["ref_over_temporal"] for run in video_timings]
    ok = all(f >= 1.5 for f in factors)
    _report("speed-ratio-video-refvae", ok,
            "refvae/temporal " + ", ".join(f"{f:.2f}" for f in factors)
            + " all >= 1.5 (ordering temporal < refvae holds)")


def test_speed_ratio_video_temporal_overhead(video_timings):
    # Criterion as stated: frame-wise tae192 must be >= 2x faster than the
    # temporal variant (and strictly faster) on all 3 runs. See module
    # docstring: the architecture's mid block makes the true gap ~2-4%,
    # below both the 2x bar and this machine's noise floor. Asserted
    # faithfully regardless.
    factors = [run["temporal_over_tae"] for run in video_timings]
    ok = all(f >= 2.0 for f in factors)
    _report("speed-ratio-video-temporal-overhead", ok,
            "temporal/tae192 factors " + ", ".join(f"{f:.3f}" for f in factors)
            + " (criterion needs all >= 2.0; architectural margin is ~1.02-1.04x)")


# ---------------------------------------------------------------------------
# Criterion: metric identities
# ---------------------------------------------------------------------------

def test_metric_identities():
    rng = np.random.default_rng(7)
    x = rng.uniform(0.0, 1.0, size=(3, 32, 32))
    checks = []

    ssim_err = abs(ssim(x, x) - 1.0)
    checks.append(("ssim(x,x)=1", ssim_err < 1e-9, f"err {ssim_err:.2e}"))

    base = rng.uniform(0.0, 0.85, size=(3, 24, 24))
    psnr_err = abs(psnr(base, base + 0.1) - 20.0)
    checks.append(("psnr(+0.1)=20dB", psnr_err < 1e-9, f"err {psnr_err:.2e}"))

    a = rng.normal(size=(6, 6))
    stats = GaussianStats(mu=rng.normal(size=6), sigma=a @ a.T + 6 * np.eye(6))
    self_d = frechet_distance(stats, stats)
    checks.append(("frechet(a,a)=0", 0.0 <= self_d < 1e-6, f"value {self_d:.2e}"))

    m = rng.normal(size=5)
    ident = frechet_distance(GaussianStats(np.zeros(5), np.eye(5)),
                             GaussianStats(m, np.eye(5)))
    ident_err = abs(ident - float(m @ m))
    checks.append(("identity-cov=|mu|^2", ident_err < 1e-6, f"err {ident_err:.2e}"))

    diag = frechet_distance(GaussianStats(np.zeros(2), np.diag([1.0, 4.0])),
                            GaussianStats(np.zeros(2), np.diag([9.0, 16.0])))
    diag_err = abs(diag - 8.0)
    checks.append(("diagonal-case=8", diag_err < 1e-6, f"err {diag_err:.2e}"))

    ok = all(c[1] for c in checks)
    _report("metric-identities", ok,
            "; ".join(f"{n} {d}" for n, okc, d in checks if okc or True))


# ---------------------------------------------------------------------------
# Criterion: loss gate
# ---------------------------------------------------------------------------

def test_loss_gate():
    unit = LossComponents(1.0, 1.0, 1.0)
    schedule = LossSchedule()
    open_val = combine_loss(unit, 20000, schedule)
    closed_val = combine_loss(unit, 5000, schedule)
    step = combine_loss(unit, schedule.t0, schedule) \
        - combine_loss(unit, schedule.t0 - 1, schedule)
    # "exactly" means up to one IEEE rounding of the final addition
    step_exact = math.isclose(step, schedule.gamma * 1.0, rel_tol=1e-15, abs_tol=0.0)
    ok = open_val == 2.2 and closed_val == 1.4 and step_exact
    _report("loss-gate", ok,
            f"t=20000 -> {open_val}; t=5000 -> {closed_val}; step {step!r}")


# ---------------------------------------------------------------------------
# Criterion: determinism across runs and thread counts
# ---------------------------------------------------------------------------

def test_determinism(models):
    det = ExecMode.optimized(deterministic=True)
    model = models[Arch.TAE192]
    latent = _latent(5, (4, 8, 8))
    video = _latent(6, (4, 4, 8, 8))

    def image_digest():
        return hashlib.sha256(decode_image(model, latent, det).data.tobytes()).hexdigest()

    def video_digest(threads):
        out = decode_video(model, video, det, threads=threads)
        return hashlib.sha256(out.data.tobytes()).hexdigest()

    img = image_digest()
    ok = image_digest() == img
    vid = video_digest(1)
    ok = ok and video_digest(1) == vid and video_digest(4) == vid \
        and video_digest(8) == vid
    _report("determinism", ok,
            f"image digest stable; video digest stable over threads 1/4/8 "
            f"({vid[:12]}...)")


# ---------------------------------------------------------------------------
# Criterion: temporal identity at T=1
# ---------------------------------------------------------------------------

def test_temporal_identity(models):
    model = models[Arch.TAE192T]
    frame = _latent(8, (4, 8, 8))
    video = Tensor(frame.data[None], Layout.TCHW)
    got = decode_video(model, video, FAST).data[0]
    stack = model.stack
    x = stack.head(frame.data, FAST)
    x = stack.mid.spatial_post.forward(stack.mid.spatial_pre.forward(x, FAST), FAST)
    expected = np.clip(stack.tail(x, FAST), 0.0, 1.0)
    ok = np.array_equal(got, expected)
    _report("temporal-identity", ok, "T=1 equals the per-frame path bit-exactly")
