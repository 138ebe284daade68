"""Builders and forward passes for the three decoder topologies.

All three decoders map a 4-channel latent to RGB pixels at 8x the latent's
spatial size and clamp the result to [0, 1]:

* ``refvae`` — reference latent-diffusion decoder: 512-channel trunk,
  GroupNorm(32) + SiLU residual blocks, a mid attention block, four channel
  tiers (512/512/256/128) with three residual blocks each and an upsample
  conv after the first three tiers.
* ``tae192`` — tiny decoder at constant width 192: input conv, three
  up-stages of three ReLU residual blocks plus nearest-2x upsample + conv,
  output conv.
* ``tae192t`` — ``tae192`` with a mid spatio-temporal block (spatial
  residual block, per-position attention over frames, spatial residual
  block) inserted immediately after the input convolution.

Models are immutable; any number of concurrent decodes may share one model.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    ArchMismatch,
    ManifestMismatch,
    ShapeMismatch,
    UnsupportedArch,
    ValidationError,
)
from .kernels import ActKind, _act_fast, _act_naive, _upsample2x_fast, _upsample2x_naive
from .layers import (
    AttnBlock,
    Conv2dLayer,
    GroupNormLayer,
    MidSpatioTemporalBlock,
    ResidualBlock,
    UpStage,
    VaeResBlock,
)
from .tensor import ExecMode, Layout, Tensor, require_finite

LATENT_CHANNELS = 4
UPSAMPLE_FACTOR = 8

_TAE_WIDTH = 192
_TAE_STAGES = 3
_TAE_BLOCKS_PER_STAGE = 3
_VAE_WIDTH = 512
_VAE_TIER_IN = (512, 512, 512, 256)
_VAE_TIER_OUT = (512, 512, 256, 128)
_VAE_GROUPS = 32
_GN_EPS = 1e-6


class Arch(Enum):
    REFVAE = "refvae"
    TAE192 = "tae192"
    TAE192T = "tae192t"

    @classmethod
    def parse(cls, name: str) -> "Arch":
        try:
            return cls(name.lower())
        except ValueError:
            raise UnsupportedArch(f"unknown architecture {name!r}") from None


@dataclass(frozen=True)
class DecoderConfig:
    arch: Arch
    latent_channels: int = LATENT_CHANNELS
    base_channels: int = 0  # filled per arch when left at 0
    stages: int = 0
    latent_scale: float = 1.0

    def __post_init__(self):
        if not isinstance(self.arch, Arch):
            object.__setattr__(self, "arch", Arch.parse(str(self.arch)))
        if self.latent_channels != LATENT_CHANNELS:
            raise ValidationError(
                f"latent_channels must be {LATENT_CHANNELS}, got {self.latent_channels}")
        base = _TAE_WIDTH if self.arch is not Arch.REFVAE else _VAE_WIDTH
        stages = _TAE_STAGES if self.arch is not Arch.REFVAE else len(_VAE_TIER_OUT)
        if self.base_channels == 0:
            object.__setattr__(self, "base_channels", base)
        elif self.base_channels != base:
            raise ValidationError(
                f"{self.arch.value} is fixed at {base} base channels")
        if self.stages == 0:
            object.__setattr__(self, "stages", stages)
        elif self.stages != stages:
            raise ValidationError(f"{self.arch.value} is fixed at {stages} stages")
        if self.latent_scale <= 0:
            raise ValidationError("latent_scale must be positive")


# ---------------------------------------------------------------------------
# Tensor manifests (canonical name/shape order; also the random-init order)
# ---------------------------------------------------------------------------

def _conv_entries(prefix, out_c, in_c, k=3):
    return [(f"{prefix}.weight", (out_c, in_c, k, k)), (f"{prefix}.bias", (out_c,))]


def _tae_res_entries(prefix, c=_TAE_WIDTH):
    entries = []
    for i in (1, 2, 3):
        entries += _conv_entries(f"{prefix}.conv{i}", c, c)
    return entries


def _vae_res_entries(prefix, c_in, c_out):
    entries = [(f"{prefix}.norm1.gamma", (c_in,)), (f"{prefix}.norm1.beta", (c_in,))]
    entries += _conv_entries(f"{prefix}.conv1", c_out, c_in)
    entries += [(f"{prefix}.norm2.gamma", (c_out,)), (f"{prefix}.norm2.beta", (c_out,))]
    entries += _conv_entries(f"{prefix}.conv2", c_out, c_out)
    if c_in != c_out:
        entries.append((f"{prefix}.skip.weight", (c_out, c_in, 1, 1)))
    return entries


def manifest_for(arch: Arch):
    """Ordered (name, shape) list describing one architecture's tensors."""
    w = _TAE_WIDTH
    entries = []
    if arch in (Arch.TAE192, Arch.TAE192T):
        entries += _conv_entries("in_conv", w, LATENT_CHANNELS)
        if arch is Arch.TAE192T:
            entries += _tae_res_entries("mid.pre")
            entries += [("mid.attn.wq", (w, w)), ("mid.attn.wk", (w, w))]
            entries += _tae_res_entries("mid.post")
        for s in range(_TAE_STAGES):
            for b in range(_TAE_BLOCKS_PER_STAGE):
                entries += _tae_res_entries(f"stages.{s}.blocks.{b}")
            entries += _conv_entries(f"stages.{s}.up_conv", w, w)
        entries += _conv_entries("out_conv", 3, w)
        return entries
    if arch is Arch.REFVAE:
        entries += _conv_entries("in_conv", _VAE_WIDTH, LATENT_CHANNELS)
        entries += _vae_res_entries("mid.res1", _VAE_WIDTH, _VAE_WIDTH)
        entries += [("mid.attn.norm.gamma", (_VAE_WIDTH,)),
                    ("mid.attn.norm.beta", (_VAE_WIDTH,))]
        for name in ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo"):
            shape = (_VAE_WIDTH, _VAE_WIDTH) if name.startswith("w") else (_VAE_WIDTH,)
            entries.append((f"mid.attn.{name}", shape))
        entries += _vae_res_entries("mid.res2", _VAE_WIDTH, _VAE_WIDTH)
        for t in range(len(_VAE_TIER_OUT)):
            c_out = _VAE_TIER_OUT[t]
            for r in range(3):
                c_in = _VAE_TIER_IN[t] if r == 0 else c_out
                entries += _vae_res_entries(f"up.{t}.res.{r}", c_in, c_out)
            if t < len(_VAE_TIER_OUT) - 1:
                entries += _conv_entries(f"up.{t}.up_conv", c_out, c_out)
        entries += [("out_norm.gamma", (_VAE_TIER_OUT[-1],)),
                    ("out_norm.beta", (_VAE_TIER_OUT[-1],))]
        entries += _conv_entries("out_conv", 3, _VAE_TIER_OUT[-1])
        return entries
    raise UnsupportedArch(f"unknown architecture {arch!r}")


# ---------------------------------------------------------------------------
# Layer assembly
# ---------------------------------------------------------------------------

def _conv(params, prefix, padding=1):
    return Conv2dLayer(params[f"{prefix}.weight"], params[f"{prefix}.bias"],
                       stride=1, padding=padding)


def _tae_res(params, prefix):
    return ResidualBlock(
        _TAE_WIDTH, _TAE_WIDTH,
        _conv(params, f"{prefix}.conv1"),
        _conv(params, f"{prefix}.conv2"),
        _conv(params, f"{prefix}.conv3"),
        skip=None, act=ActKind.RELU)


def _gn(params, prefix):
    return GroupNormLayer(params[f"{prefix}.gamma"], params[f"{prefix}.beta"],
                          groups=_VAE_GROUPS, eps=_GN_EPS)


def _vae_res(params, prefix, c_in, c_out):
    skip = None
    if c_in != c_out:
        skip = Conv2dLayer(params[f"{prefix}.skip.weight"], None, stride=1, padding=0)
    return VaeResBlock(
        c_in, c_out,
        _gn(params, f"{prefix}.norm1"), _conv(params, f"{prefix}.conv1"),
        _gn(params, f"{prefix}.norm2"), _conv(params, f"{prefix}.conv2"),
        skip=skip)


@dataclass(frozen=True)
class _TaeStack:
    in_conv: Conv2dLayer
    mid: MidSpatioTemporalBlock | None
    stages: tuple
    out_conv: Conv2dLayer

    def head(self, x, mode):
        return self.in_conv.forward(x, mode)

    def tail(self, x, mode):
        for stage in self.stages:
            x = stage.forward(x, mode)
        return self.out_conv.forward(x, mode)

    def forward_image(self, x, mode):
        return self.tail(self.head(x, mode), mode)


@dataclass(frozen=True)
class _RefVaeStack:
    in_conv: Conv2dLayer
    mid_res1: VaeResBlock
    mid_attn: AttnBlock
    mid_res2: VaeResBlock
    tiers: tuple  # ((resblocks, up_conv | None), ...)
    out_norm: GroupNormLayer
    out_conv: Conv2dLayer

    def forward_image(self, x, mode):
        x = self.in_conv.forward(x, mode)
        x = self.mid_res1.forward(x, mode)
        x = self.mid_attn.forward(x, mode)
        x = self.mid_res2.forward(x, mode)
        up = _upsample2x_naive if mode.is_naive else _upsample2x_fast
        act = _act_naive if mode.is_naive else _act_fast
        for resblocks, up_conv in self.tiers:
            for block in resblocks:
                x = block.forward(x, mode)
            if up_conv is not None:
                x = up_conv.forward(up(x), mode)
        x = act(self.out_norm.forward(x, mode), ActKind.SILU)
        return self.out_conv.forward(x, mode)


@dataclass(frozen=True)
class DecoderModel:
    config: DecoderConfig
    stack: object
    manifest: tuple
    params: dict = field(repr=False)
    param_count: int = 0
    weight_bytes_f16: int = 0

    @property
    def arch(self) -> Arch:
        return self.config.arch

    def named_tensors(self):
        """Iterate (name, ndarray) in canonical manifest order."""
        for name, _ in self.manifest:
            yield name, self.params[name]


def _assemble(arch: Arch, params):
    if arch in (Arch.TAE192, Arch.TAE192T):
        mid = None
        if arch is Arch.TAE192T:
            mid = MidSpatioTemporalBlock(
                _tae_res(params, "mid.pre"),
                params["mid.attn.wq"], params["mid.attn.wk"],
                _tae_res(params, "mid.post"))
        stages = tuple(
            UpStage(
                tuple(_tae_res(params, f"stages.{s}.blocks.{b}")
                      for b in range(_TAE_BLOCKS_PER_STAGE)),
                _conv(params, f"stages.{s}.up_conv"))
            for s in range(_TAE_STAGES))
        return _TaeStack(_conv(params, "in_conv"), mid, stages,
                         _conv(params, "out_conv"))
    attn = AttnBlock(_gn(params, "mid.attn.norm"),
                     *(params[f"mid.attn.{n}"]
                       for n in ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo")))
    tiers = []
    for t in range(len(_VAE_TIER_OUT)):
        c_out = _VAE_TIER_OUT[t]
        blocks = tuple(
            _vae_res(params, f"up.{t}.res.{r}",
                     _VAE_TIER_IN[t] if r == 0 else c_out, c_out)
        for r in range(3))
        up_conv = None
        if t < len(_VAE_TIER_OUT) - 1:
            up_conv = _conv(params, f"up.{t}.up_conv")
        tiers.append((blocks, up_conv))
    return _RefVaeStack(
        _conv(params, "in_conv"),
        _vae_res(params, "mid.res1", _VAE_WIDTH, _VAE_WIDTH), attn,
        _vae_res(params, "mid.res2", _VAE_WIDTH, _VAE_WIDTH),
        tuple(tiers), _gn(params, "out_norm"), _conv(params, "out_conv"))


def build_decoder(config: DecoderConfig, weights) -> DecoderModel:
    """Build an immutable decoder from a weight container or a random seed.

    ``weights`` is either a :class:`~latentdec.weights_io.WeightContainer`
    whose manifest must match the topology exactly, or an integer seed for
    uniform [-0.05, 0.05] initialization in canonical manifest order.
    """
    manifest = manifest_for(config.arch)
    expected = {name: shape for name, shape in manifest}
    params = {}
    if isinstance(weights, (int, np.integer)):
        rng = np.random.default_rng(int(weights))
        for name, shape in manifest:
            params[name] = rng.uniform(-0.05, 0.05, size=shape).astype(np.float32)
    else:
        have = {entry.name: entry for entry in weights.manifest}
        missing = sorted(set(expected) - set(have))
        extra = sorted(set(have) - set(expected))
        if missing or extra:
            raise ManifestMismatch(
                f"container does not match {config.arch.value}: "
                f"missing={missing[:5]}{'...' if len(missing) > 5 else ''} "
                f"extra={extra[:5]}{'...' if len(extra) > 5 else ''}")
        for name, shape in manifest:
            if tuple(have[name].shape) != tuple(shape):
                raise ManifestMismatch(
                    f"tensor {name} has shape {tuple(have[name].shape)}, "
                    f"expected {tuple(shape)}")
            params[name] = weights.tensor(name)
    for name, arr in params.items():
        arr.flags.writeable = False
        require_finite(arr, f"weight {name}")
    param_count = sum(int(np.prod(shape)) for _, shape in manifest)
    return DecoderModel(config=config, stack=_assemble(config.arch, params),
                        manifest=tuple(manifest), params=params,
                        param_count=param_count,
                        weight_bytes_f16=2 * param_count)


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------

def _check_latent_frame(arr):
    if arr.ndim != 3:
        raise ShapeMismatch(f"latent must be CHW, got shape {arr.shape}")
    if arr.shape[0] != LATENT_CHANNELS:
        raise ShapeMismatch(
            f"latent must have {LATENT_CHANNELS} channels, got {arr.shape[0]}")


def decode_image(model: DecoderModel, latent: Tensor,
                 mode: ExecMode = ExecMode.optimized()) -> Tensor:
    """Decode a [4, h, w] latent to a [3, 8h, 8w] image clamped to [0, 1]."""
    if model.arch is Arch.TAE192T:
        raise ArchMismatch(
            "temporal decoder cannot take a single-frame latent; use decode_video")
    xd = latent.data
    _check_latent_frame(xd)
    require_finite(xd, "latent")
    if model.config.latent_scale != 1.0:
        xd = (xd / np.float32(model.config.latent_scale)).astype(np.float32)
    out = model.stack.forward_image(xd, mode)
    return Tensor(np.clip(out, 0.0, 1.0), Layout.CHW)


def decode_video(model: DecoderModel, latents: Tensor,
                 mode: ExecMode = ExecMode.optimized(), threads: int = 1) -> Tensor:
    """Decode [T, 4, h, w] latents to [T, 3, 8h, 8w] video frames.

    The temporal decoder mixes information across frames in its mid block;
    refvae and tae192 decode each frame independently (and may fan frames out
    over ``threads`` workers in non-deterministic optimized mode).
    """
    xd = latents.data
    if xd.ndim != 4:
        raise ShapeMismatch(f"video latents must be TCHW, got shape {xd.shape}")
    if xd.shape[1] != LATENT_CHANNELS:
        raise ShapeMismatch(
            f"video latents must have {LATENT_CHANNELS} channels, got {xd.shape[1]}")
    require_finite(xd, "latents")
    t = xd.shape[0]
    if model.config.latent_scale != 1.0:
        xd = (xd / np.float32(model.config.latent_scale)).astype(np.float32)

    if model.arch is Arch.TAE192T:
        heads = np.stack([model.stack.head(xd[f], mode) for f in range(t)])
        mixed = model.stack.mid.forward(heads, mode)
        frames = [model.stack.tail(mixed[f], mode) for f in range(t)]
    else:
        def one(f):
            return model.stack.forward_image(xd[f], mode)

        parallel = (threads > 1 and not mode.is_naive and not mode.deterministic
                    and t > 1)
        if parallel:
            with ThreadPoolExecutor(max_workers=min(threads, t)) as pool:
                frames = list(pool.map(one, range(t)))
        else:
            frames = [one(f) for f in range(t)]
    return Tensor(np.clip(np.stack(frames), 0.0, 1.0), Layout.TCHW)
