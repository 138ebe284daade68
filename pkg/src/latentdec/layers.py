"""Composite layers assembled from the micro-kernels.

The two public operations mirror the kernel API (Tensor in, Tensor out, mode
dispatch); the layer classes themselves work on raw ndarrays and are what the
decoder forwards iterate over. All layers are immutable after construction
and their forwards are pure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .kernels import (
    ActKind,
    _act_fast,
    _act_naive,
    _attention_fast,
    _attention_naive,
    _conv2d_fast,
    _conv2d_naive,
    _group_norm_fast,
    _group_norm_naive,
    _upsample2x_fast,
    _upsample2x_naive,
)
from .tensor import ExecMode, Layout, Tensor, require_finite


@dataclass(frozen=True)
class Conv2dLayer:
    weight: np.ndarray  # [out_c, in_c, kh, kw]
    bias: np.ndarray | None
    stride: int = 1
    padding: int = 1

    def forward(self, x, mode: ExecMode):
        fn = _conv2d_naive if mode.is_naive else _conv2d_fast
        return fn(x, self.weight, self.bias, self.stride, self.padding)

    def named_params(self, prefix):
        yield f"{prefix}.weight", self.weight
        if self.bias is not None:
            yield f"{prefix}.bias", self.bias


@dataclass(frozen=True)
class GroupNormLayer:
    gamma: np.ndarray
    beta: np.ndarray
    groups: int = 32
    eps: float = 1e-6

    def forward(self, x, mode: ExecMode):
        fn = _group_norm_naive if mode.is_naive else _group_norm_fast
        return fn(x, self.groups, self.gamma, self.beta, self.eps)

    def named_params(self, prefix):
        yield f"{prefix}.gamma", self.gamma
        yield f"{prefix}.beta", self.beta


def _act(x, kind, mode: ExecMode):
    return (_act_naive if mode.is_naive else _act_fast)(x, kind)


@dataclass(frozen=True)
class ResidualBlock:
    """Three 3x3 convs with an activation after each, plus a skip path.

    The skip is the identity when channel counts match and a bias-free 1x1
    conv otherwise, so spatial size is always preserved.
    """

    channels_in: int
    channels_out: int
    conv1: Conv2dLayer
    conv2: Conv2dLayer
    conv3: Conv2dLayer
    skip: Conv2dLayer | None = None
    act: ActKind = ActKind.RELU

    def __post_init__(self):
        if (self.skip is not None) != (self.channels_in != self.channels_out):
            raise ShapeMismatch(
                "skip conv must be present exactly when channel counts differ")

    def forward(self, x, mode: ExecMode):
        h = _act(self.conv1.forward(x, mode), self.act, mode)
        h = _act(self.conv2.forward(h, mode), self.act, mode)
        h = _act(self.conv3.forward(h, mode), self.act, mode)
        residual = x if self.skip is None else self.skip.forward(x, mode)
        return h + residual

    def named_params(self, prefix):
        yield from self.conv1.named_params(f"{prefix}.conv1")
        yield from self.conv2.named_params(f"{prefix}.conv2")
        yield from self.conv3.named_params(f"{prefix}.conv3")
        if self.skip is not None:
            yield from self.skip.named_params(f"{prefix}.skip")


@dataclass(frozen=True)
class MidSpatioTemporalBlock:
    """Spatial residual block, attention over the frame axis, spatial block.

    The temporal attention runs per spatial position over the T tokens of
    dimension C. Queries and keys go through bias-free C x C projections (the
    block's attention weights); values are the tokens themselves and there is
    no output projection or residual add, so a single frame passes through
    the mixing stage bit-exactly (softmax over one token is 1.0).
    """

    spatial_pre: ResidualBlock
    wq: np.ndarray  # [C, C]
    wk: np.ndarray  # [C, C]
    spatial_post: ResidualBlock

    def _mix_fast(self, y):
        t, c, h, w = y.shape
        tokens = np.ascontiguousarray(y.transpose(2, 3, 0, 1)).reshape(h * w, t, c)
        q = tokens @ self.wq.T
        k = tokens @ self.wk.T
        scores = (q @ k.transpose(0, 2, 1)) * np.float32(1.0 / math.sqrt(c))
        scores -= scores.max(axis=2, keepdims=True)
        e = np.exp(scores)
        weights = e / e.sum(axis=2, keepdims=True)
        mixed = (weights @ tokens).astype(np.float32)
        return np.ascontiguousarray(mixed.reshape(h, w, t, c).transpose(2, 3, 0, 1))

    def _mix_naive(self, y):
        t, c, h, w = y.shape
        out = np.zeros_like(y, dtype=np.float32)
        scale = 1.0 / math.sqrt(c)
        for i in range(h):
            for j in range(w):
                tokens = y[:, :, i, j].astype(np.float64)
                q = np.zeros((t, c))
                k = np.zeros((t, c))
                for a in range(t):
                    for b in range(c):
                        q[a, b] = sum(float(tokens[a, d]) * float(self.wq[b, d])
                                      for d in range(c))
                        k[a, b] = sum(float(tokens[a, d]) * float(self.wk[b, d])
                                      for d in range(c))
                out[:, :, i, j] = _attention_naive(
                    q.astype(np.float32), k.astype(np.float32),
                    tokens.astype(np.float32), scale)
        return out

    def forward(self, x, mode: ExecMode):
        t = x.shape[0]
        pre = np.stack([self.spatial_pre.forward(x[f], mode) for f in range(t)])
        if t == 1:
            mixed = pre
        else:
            mixed = self._mix_naive(pre) if mode.is_naive else self._mix_fast(pre)
        return np.stack([self.spatial_post.forward(mixed[f], mode) for f in range(t)])

    def named_params(self, prefix):
        yield from self.spatial_pre.named_params(f"{prefix}.pre")
        yield f"{prefix}.attn.wq", self.wq
        yield f"{prefix}.attn.wk", self.wk
        yield from self.spatial_post.named_params(f"{prefix}.post")


@dataclass(frozen=True)
class UpStage:
    """Residual blocks followed by nearest-2x upsampling and one 3x3 conv."""

    blocks: tuple
    up_conv: Conv2dLayer

    def forward(self, x, mode: ExecMode):
        for block in self.blocks:
            x = block.forward(x, mode)
        x = (_upsample2x_naive if mode.is_naive else _upsample2x_fast)(x)
        return self.up_conv.forward(x, mode)

    def named_params(self, prefix):
        for i, block in enumerate(self.blocks):
            yield from block.named_params(f"{prefix}.blocks.{i}")
        yield from self.up_conv.named_params(f"{prefix}.up_conv")


@dataclass(frozen=True)
class VaeResBlock:
    """Reference-decoder residual block: GN32 -> SiLU -> conv, twice, + skip."""

    channels_in: int
    channels_out: int
    norm1: GroupNormLayer
    conv1: Conv2dLayer
    norm2: GroupNormLayer
    conv2: Conv2dLayer
    skip: Conv2dLayer | None = None

    def forward(self, x, mode: ExecMode):
        h = self.conv1.forward(_act(self.norm1.forward(x, mode), ActKind.SILU, mode), mode)
        h = self.conv2.forward(_act(self.norm2.forward(h, mode), ActKind.SILU, mode), mode)
        residual = x if self.skip is None else self.skip.forward(x, mode)
        return h + residual

    def named_params(self, prefix):
        yield from self.norm1.named_params(f"{prefix}.norm1")
        yield from self.conv1.named_params(f"{prefix}.conv1")
        yield from self.norm2.named_params(f"{prefix}.norm2")
        yield from self.conv2.named_params(f"{prefix}.conv2")
        if self.skip is not None:
            yield from self.skip.named_params(f"{prefix}.skip")


@dataclass(frozen=True)
class AttnBlock:
    """Single-head self-attention over spatial positions with residual add."""

    norm: GroupNormLayer
    wq: np.ndarray
    bq: np.ndarray
    wk: np.ndarray
    bk: np.ndarray
    wv: np.ndarray
    bv: np.ndarray
    wo: np.ndarray
    bo: np.ndarray

    def forward(self, x, mode: ExecMode):
        c, h, w = x.shape
        normed = self.norm.forward(x, mode)
        tokens = np.ascontiguousarray(normed.reshape(c, h * w).T)
        q = tokens @ self.wq.T + self.bq
        k = tokens @ self.wk.T + self.bk
        v = tokens @ self.wv.T + self.bv
        fn = _attention_naive if mode.is_naive else _attention_fast
        attended = fn(q.astype(np.float32), k.astype(np.float32),
                      v.astype(np.float32), 1.0 / math.sqrt(c))
        out = attended @ self.wo.T + self.bo
        return x + np.ascontiguousarray(out.T).reshape(c, h, w).astype(np.float32)

    def named_params(self, prefix):
        yield from self.norm.named_params(f"{prefix}.norm")
        for name in ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo"):
            yield f"{prefix}.{name}", getattr(self, name)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def residual_forward(block: ResidualBlock, x: Tensor,
                     mode: ExecMode = ExecMode.optimized()) -> Tensor:
    """Forward a CHW tensor through a residual block."""
    xd = x.data
    if xd.ndim != 3:
        raise ShapeMismatch(f"residual_forward input must be CHW, got {xd.shape}")
    if xd.shape[0] != block.channels_in:
        raise ShapeMismatch(
            f"input has {xd.shape[0]} channels, block expects {block.channels_in}")
    require_finite(xd, "residual_forward input")
    return Tensor(block.forward(xd, mode), Layout.CHW)


def mid_spatiotemporal_forward(block: MidSpatioTemporalBlock, x: Tensor,
                               mode: ExecMode = ExecMode.optimized()) -> Tensor:
    """Forward a TCHW tensor through the mid spatio-temporal block."""
    xd = x.data
    if xd.ndim != 4:
        raise ShapeMismatch(f"mid block input must be TCHW, got {xd.shape}")
    if xd.shape[1] != block.spatial_pre.channels_in:
        raise ShapeMismatch(
            f"input has {xd.shape[1]} channels, block expects "
            f"{block.spatial_pre.channels_in}")
    require_finite(xd, "mid block input")
    return Tensor(block.forward(xd, mode), Layout.TCHW)
