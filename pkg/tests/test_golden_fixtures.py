"""Cross-implementation golden fixtures.

Each fixture directory (committed under tests/fixtures/golden/) holds a LATZ
latent, reference PPM outputs decoded by an independent implementation of the
same topology, and a fixture.json naming the weight rule. Weights regenerate
here from that rule (a pinned splitmix64 stream or the zero/bias rule), get
verified against the recorded sha256, round-trip through a real LWDC file,
and the engine's decode is compared per pixel against the reference.

Tolerances follow the acceptance criterion - 1e-3 per pixel for f32 weights,
1e-2 for f16 - plus the half-quantum 1/510 the 8-bit reference encoding eats.
"""
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from latentdec import (
    Arch,
    DecoderConfig,
    ExecMode,
    build_decoder,
    decode_image,
    decode_video,
    manifest_for,
    read_image_ppm,
    read_latent,
)
from latentdec.weights_io import read_container, write_tensors

FIXTURE_ROOT = Path(__file__).parent / "fixtures" / "golden"
FIXTURE_NAMES = ["tae192_image", "tae192t_video", "refvae_image", "tae192_zero"]
FAST = ExecMode.optimized()
PPM_HALF_QUANTUM = 1.0 / 510.0


def _splitmix64(seed: int, count: int) -> np.ndarray:
    """Vectorized splitmix64; state after n steps is seed + n*gamma mod 2^64."""
    steps = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + steps * np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z ^= z >> np.uint64(31)
    return z


def _uniform_stream(seed: int, count: int, span: float, low: float) -> np.ndarray:
    unit = (_splitmix64(seed, count) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    return (unit * span + low).astype(np.float32)


def _rule_weights(meta: dict, arch: Arch) -> list:
    manifest = manifest_for(arch)
    total = sum(int(np.prod(shape)) for _, shape in manifest)
    rule = meta["weight_rule"]
    if rule == "splitmix-uniform-v1":
        flat = _uniform_stream(meta["seed"], total, 0.1, -0.05)
    elif rule == "zeros-bias-half-v1":
        flat = np.zeros(total, dtype=np.float32)
        at = 0
        for name, shape in manifest:
            n = int(np.prod(shape))
            if name == "out_conv.bias":
                flat[at:at + n] = 0.5
            at += n
    else:
        pytest.fail(f"unknown weight rule {rule!r}")
    digest = hashlib.sha256(flat.astype("<f4").tobytes()).hexdigest()
    assert digest == meta["weight_sha256"], \
        "regenerated weights disagree with the fixture's recorded checksum"
    tensors = []
    at = 0
    for name, shape in manifest:
        n = int(np.prod(shape))
        tensors.append((name, flat[at:at + n].reshape(shape)))
        at += n
    return tensors


def _load_fixture(name: str):
    fdir = FIXTURE_ROOT / name
    if not fdir.is_dir():
        pytest.fail(f"committed fixture missing: {fdir}")
    meta = json.loads((fdir / "fixture.json").read_text())
    refs = [read_image_ppm(fdir / f"ref_{i:04d}.ppm").data
            for i in range(meta["frames"])]
    latent, scale = read_latent(fdir / "latent.latz")
    assert scale == meta["latent_scale"]
    return fdir, meta, latent, np.stack(refs)


def _decode_with(meta, latent, tensors, dtype, tmp_path):
    arch = Arch.parse(meta["arch"])
    tmp_path.mkdir(parents=True, exist_ok=True)
    path = tmp_path / f"weights.{dtype}.lwdc"
    write_tensors(arch.value, tensors, dtype, path)
    model = build_decoder(DecoderConfig(arch=arch), read_container(path))
    if len(latent.shape) == 3:
        return decode_image(model, latent, FAST).data[None]
    return decode_video(model, latent, FAST).data


def _max_error(decoded, refs):
    return float(np.abs(decoded - refs).max())


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_fixture_f32_within_tolerance(name, tmp_path):
    fdir, meta, latent, refs = _load_fixture(name)
    tensors = _rule_weights(meta, Arch.parse(meta["arch"]))
    decoded = _decode_with(meta, latent, tensors, "f32", tmp_path)
    assert decoded.shape == refs.shape
    err = _max_error(decoded, refs)
    bound = meta["tolerance"]["f32"] + PPM_HALF_QUANTUM
    assert err <= bound, f"{name}: max per-pixel error {err:.2e} > {bound:.2e}"


def test_fixture_f16_within_tolerance(tmp_path):
    fdir, meta, latent, refs = _load_fixture("tae192_image")
    tensors = _rule_weights(meta, Arch.TAE192)
    decoded = _decode_with(meta, latent, tensors, "f16", tmp_path)
    err = _max_error(decoded, refs)
    bound = meta["tolerance"]["f16"] + PPM_HALF_QUANTUM
    assert err <= bound, f"f16: max per-pixel error {err:.2e} > {bound:.2e}"


def test_zero_fixture_is_constant():
    _, meta, latent, refs = _load_fixture("tae192_zero")
    np.testing.assert_array_equal(refs, np.full_like(refs, 128.0 / 255.0))


def test_foreign_written_containers_parse_exactly():
    """LWDC/EMBD files produced by the other implementation load correctly."""
    probe_dir = FIXTURE_ROOT / "interop"
    if not probe_dir.is_dir():
        pytest.fail(f"committed interop probes missing: {probe_dir}")
    meta = json.loads((probe_dir / "probe.json").read_text())
    expected = _uniform_stream(meta["weight_seed"], meta["weight_count"], 0.1, -0.05)

    f32 = read_container(probe_dir / "probe.f32.lwdc")
    assert f32.arch == "probe"
    got = np.concatenate([f32.tensor(n).ravel() for n in meta["tensor_names"]])
    np.testing.assert_array_equal(got, expected)

    f16 = read_container(probe_dir / "probe.f16.lwdc")
    got16 = np.concatenate([f16.tensor(n).ravel() for n in meta["tensor_names"]])
    nz = expected != 0
    rel = np.abs(got16[nz] - expected[nz]) / np.abs(expected[nz])
    assert rel.max() <= 2.0 ** -10

    from latentdec import read_embeddings
    emb = read_embeddings(probe_dir / "probe.embd")
    want = _uniform_stream(meta["embd_seed"], meta["embd_rows"] * meta["embd_dim"],
                           2.0, -1.0).reshape(meta["embd_rows"], meta["embd_dim"])
    np.testing.assert_array_equal(emb, want)


def test_acceptance_golden_fixtures(tmp_path):
    """[SECONDARY] criterion: all shipped fixtures within 1e-3 (f32) / 1e-2 (f16)."""
    details = []
    worst_f32 = 0.0
    for name in FIXTURE_NAMES:
        _, meta, latent, refs = _load_fixture(name)
        tensors = _rule_weights(meta, Arch.parse(meta["arch"]))
        decoded = _decode_with(meta, latent, tensors, "f32", tmp_path / name)
        err = _max_error(decoded, refs)
        worst_f32 = max(worst_f32, err)
        assert err <= 1e-3 + PPM_HALF_QUANTUM, f"{name}: f32 error {err:.2e}"
    _, meta, latent, refs = _load_fixture("tae192_image")
    tensors = _rule_weights(meta, Arch.TAE192)
    decoded = _decode_with(meta, latent, tensors, "f16", tmp_path / "f16")
    f16_err = _max_error(decoded, refs)
    ok = f16_err <= 1e-2 + PPM_HALF_QUANTUM
    print(f"\n[ACCEPTANCE] golden-fixtures: {'PASS' if ok else 'FAIL'} "
          f"(worst f32 err {worst_f32:.2e} <= 1e-3+q; f16 err {f16_err:.2e} <= 1e-2+q)")
    assert ok
