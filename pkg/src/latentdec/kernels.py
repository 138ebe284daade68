"""Numeric micro-kernels every decoder layer is built from.

Each operation has two paths: a naive reference (sequential Python loops,
fixed accumulation order, used as the oracle) and an optimized path
(vectorized numpy, im2col + GEMM for convolution). Public functions take and
return :class:`~latentdec.tensor.Tensor`, validate shapes and finiteness at
entry, and dispatch on :class:`~latentdec.tensor.ExecMode`. The private
``*_fast``/``*_naive`` ndarray functions skip re-validation and are what the
layer forwards call internally.
"""
from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .errors import EmptyOutput, ShapeMismatch, ValidationError
from .tensor import ExecMode, Layout, Tensor, require_finite

# Patch buffers for the im2col GEMM stay small enough to be cache-resident;
# this also keeps peak memory flat for 1024x1024 decodes.
_PATCH_CHUNK_BYTES = 8 * 1024 * 1024


class ActKind(Enum):
    RELU = "relu"
    SILU = "silu"


# ---------------------------------------------------------------------------
# conv2d
# ---------------------------------------------------------------------------

def _conv2d_fast(x, w, b, stride, padding):
    out_c, in_c, kh, kw = w.shape
    if padding:
        x = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    _, hp, wp = x.shape
    h_out = (hp - kh) // stride + 1
    w_out = (wp - kw) // stride + 1
    k = in_c * kh * kw
    wmat = w.reshape(out_c, k)

    if kh == 1 and kw == 1 and stride == 1:
        out = (wmat @ x.reshape(in_c, hp * wp)).reshape(out_c, hp, wp)
    else:
        out = np.empty((out_c, h_out, w_out), dtype=np.float32)
        rows = min(h_out, max(1, _PATCH_CHUNK_BYTES // max(1, w_out * k * 4)))
        # one reused patch buffer; rows ordered (c, u, v) to match wmat, and
        # every tap copy is a run of contiguous columns
        patch = np.empty((k, rows * w_out), dtype=np.float32)
        taps = patch.reshape(in_c, kh, kw, rows, w_out)
        for r0 in range(0, h_out, rows):
            r1 = min(h_out, r0 + rows)
            nr = r1 - r0
            for u in range(kh):
                row_stop = (r1 - 1) * stride + u + 1
                for v in range(kw):
                    col_stop = (w_out - 1) * stride + v + 1
                    taps[:, u, v, :nr] = x[:, r0 * stride + u:row_stop:stride,
                                           v:col_stop:stride]
            cols = patch if nr == rows else patch[:, :nr * w_out]
            out[:, r0:r1] = (wmat @ cols).reshape(out_c, nr, w_out)
    if b is not None:
        out = out + b[:, None, None]
    return out


def _conv2d_naive(x, w, b, stride, padding):
    out_c, in_c, kh, kw = w.shape
    _, h, wid = x.shape
    h_out = (h + 2 * padding - kh) // stride + 1
    w_out = (wid + 2 * padding - kw) // stride + 1
    out = np.zeros((out_c, h_out, w_out), dtype=np.float32)
    for oc in range(out_c):
        bias = float(b[oc]) if b is not None else 0.0
        for i in range(h_out):
            for j in range(w_out):
                acc = 0.0
                for ic in range(in_c):
                    for u in range(kh):
                        src_i = i * stride + u - padding
                        if src_i < 0 or src_i >= h:
                            continue
                        for v in range(kw):
                            src_j = j * stride + v - padding
                            if src_j < 0 or src_j >= wid:
                                continue
                            acc += float(x[ic, src_i, src_j]) * float(w[oc, ic, u, v])
                out[oc, i, j] = acc + bias
    return out


def conv2d(x: Tensor, weight: Tensor, bias, stride: int = 1, padding: int = 0,
           mode: ExecMode = ExecMode.optimized()) -> Tensor:
    """2D convolution with zero padding over a CHW tensor.

    ``weight`` is [out_c, in_c, kh, kw]; ``bias`` a length-out_c vector or
    None. Output spatial size is floor((H + 2*padding - kh)/stride) + 1.
    """
    xd, wd = x.data, weight.data
    if xd.ndim != 3:
        raise ShapeMismatch(f"conv2d input must be CHW, got shape {xd.shape}")
    if wd.ndim != 4:
        raise ShapeMismatch(f"conv2d weight must be 4-D, got shape {wd.shape}")
    out_c, in_c, kh, kw = wd.shape
    if xd.shape[0] != in_c:
        raise ShapeMismatch(
            f"input has {xd.shape[0]} channels, weight expects {in_c}")
    bd = None
    if bias is not None:
        bd = np.asarray(bias, dtype=np.float32)
        if bd.shape != (out_c,):
            raise ShapeMismatch(f"bias must have shape ({out_c},), got {bd.shape}")
    if stride < 1:
        raise ValidationError(f"stride must be positive, got {stride}")
    if padding < 0:
        raise ValidationError(f"padding must be non-negative, got {padding}")
    h_out = (xd.shape[1] + 2 * padding - kh) // stride + 1
    w_out = (xd.shape[2] + 2 * padding - kw) // stride + 1
    if h_out < 1 or w_out < 1:
        raise EmptyOutput(
            f"kernel {kh}x{kw} with stride {stride}, padding {padding} leaves "
            f"no output for input {xd.shape}")
    require_finite(xd, "conv2d input")
    require_finite(wd, "conv2d weight")
    if bd is not None:
        require_finite(bd, "conv2d bias")
    fn = _conv2d_naive if mode.is_naive else _conv2d_fast
    return Tensor(fn(xd, wd, bd, stride, padding), Layout.CHW)


# ---------------------------------------------------------------------------
# group_norm
# ---------------------------------------------------------------------------

def _group_norm_fast(x, groups, gamma, beta, eps):
    c, h, w = x.shape
    grouped = x.reshape(groups, (c // groups) * h * w)
    mu = grouped.mean(axis=1)
    var = grouped.var(axis=1)
    inv = 1.0 / np.sqrt(var + np.float32(eps))
    # subtract the mean first (cancellation-safe), then fold inv and gamma
    # into one per-channel scale; a single full-size temporary
    per = c // groups
    mu_ch = np.repeat(mu, per).astype(np.float32)
    scale = (np.repeat(inv, per) * gamma).astype(np.float32)
    out = x - mu_ch[:, None, None]
    out *= scale[:, None, None]
    out += beta[:, None, None]
    return out


def _group_norm_naive(x, groups, gamma, beta, eps):
    c, h, w = x.shape
    per = c // groups
    out = np.zeros_like(x, dtype=np.float32)
    for g in range(groups):
        vals = []
        for ch in range(g * per, (g + 1) * per):
            for i in range(h):
                for j in range(w):
                    vals.append(float(x[ch, i, j]))
        n = len(vals)
        mu = sum(vals) / n
        var = sum((v - mu) ** 2 for v in vals) / n
        inv = 1.0 / math.sqrt(var + eps)
        for ch in range(g * per, (g + 1) * per):
            for i in range(h):
                for j in range(w):
                    xhat = (float(x[ch, i, j]) - mu) * inv
                    out[ch, i, j] = xhat * float(gamma[ch]) + float(beta[ch])
    return out


def group_norm(x: Tensor, groups: int, gamma, beta, eps: float = 1e-6,
               mode: ExecMode = ExecMode.optimized()) -> Tensor:
    """Group normalization over a CHW tensor with per-channel affine."""
    xd = x.data
    if xd.ndim != 3:
        raise ShapeMismatch(f"group_norm input must be CHW, got {xd.shape}")
    c = xd.shape[0]
    if groups < 1 or c % groups != 0:
        raise ShapeMismatch(f"{c} channels not divisible into {groups} groups")
    gd = np.asarray(gamma, dtype=np.float32)
    bd = np.asarray(beta, dtype=np.float32)
    if gd.shape != (c,) or bd.shape != (c,):
        raise ShapeMismatch(
            f"gamma/beta must have shape ({c},), got {gd.shape}/{bd.shape}")
    require_finite(xd, "group_norm input")
    fn = _group_norm_naive if mode.is_naive else _group_norm_fast
    return Tensor(fn(xd, groups, gd, bd, eps), Layout.CHW)


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------

def _act_fast(x, kind):
    if kind is ActKind.RELU:
        return np.maximum(x, 0.0)
    with np.errstate(over="ignore"):
        out = np.exp(-x)
        out += 1.0
        np.divide(x, out, out=out)
    return out


def _act_naive(x, kind):
    flat = x.reshape(-1)
    out = np.zeros_like(flat, dtype=np.float32)
    for i in range(flat.size):
        v = float(flat[i])
        if kind is ActKind.RELU:
            out[i] = v if v > 0.0 else 0.0
        else:
            if v < -500.0:
                out[i] = 0.0
            else:
                out[i] = v / (1.0 + math.exp(-v))
    return out.reshape(x.shape)


def activation(x: Tensor, kind: ActKind | str,
               mode: ExecMode = ExecMode.optimized()) -> Tensor:
    """Elementwise ReLU or SiLU (x * sigmoid(x))."""
    if isinstance(kind, str):
        kind = ActKind(kind.lower())
    require_finite(x.data, "activation input")
    fn = _act_naive if mode.is_naive else _act_fast
    return Tensor(fn(x.data, kind), x.layout)


# ---------------------------------------------------------------------------
# upsample
# ---------------------------------------------------------------------------

def _upsample2x_fast(x):
    return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)


def _upsample2x_naive(x):
    c, h, w = x.shape
    out = np.zeros((c, 2 * h, 2 * w), dtype=np.float32)
    for ch in range(c):
        for i in range(h):
            for j in range(w):
                v = x[ch, i, j]
                out[ch, 2 * i, 2 * j] = v
                out[ch, 2 * i, 2 * j + 1] = v
                out[ch, 2 * i + 1, 2 * j] = v
                out[ch, 2 * i + 1, 2 * j + 1] = v
    return out


def upsample_nearest_2x(x: Tensor, mode: ExecMode = ExecMode.optimized()) -> Tensor:
    """Nearest-neighbour 2x spatial upsampling of a CHW tensor."""
    xd = x.data
    if xd.ndim != 3:
        raise ShapeMismatch(f"upsample input must be CHW, got {xd.shape}")
    require_finite(xd, "upsample input")
    fn = _upsample2x_naive if mode.is_naive else _upsample2x_fast
    return Tensor(fn(xd), Layout.CHW)


# ---------------------------------------------------------------------------
# attention
# ---------------------------------------------------------------------------

def _attention_fast(q, k, v, scale):
    scores = (q @ k.T) * np.float32(scale)
    scores = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(scores)
    weights = e / e.sum(axis=1, keepdims=True)
    return (weights @ v).astype(np.float32)


def _attention_naive(q, k, v, scale):
    n, d = q.shape
    out = np.zeros((n, d), dtype=np.float32)
    for i in range(n):
        scores = []
        for j in range(n):
            s = 0.0
            for c in range(d):
                s += float(q[i, c]) * float(k[j, c])
            scores.append(s * scale)
        m = max(scores)
        exps = [math.exp(s - m) for s in scores]
        denom = sum(exps)
        for j in range(n):
            wgt = exps[j] / denom
            for c in range(d):
                out[i, c] += wgt * float(v[j, c])
    return out


def attention(q: Tensor, k: Tensor, v: Tensor, scale: float | None = None,
              mode: ExecMode = ExecMode.optimized()) -> Tensor:
    """Scaled dot-product attention over [L, D] token matrices.

    Computes softmax(q @ k.T * scale) @ v; scale defaults to 1/sqrt(D). Every
    softmax row sums to 1 by construction.
    """
    qd, kd, vd = q.data, k.data, v.data
    for name, arr in (("q", qd), ("k", kd), ("v", vd)):
        if arr.ndim != 2:
            raise ShapeMismatch(f"attention {name} must be 2-D, got {arr.shape}")
    if not (qd.shape == kd.shape == vd.shape):
        raise ShapeMismatch(
            f"attention q/k/v shapes differ: {qd.shape}, {kd.shape}, {vd.shape}")
    require_finite(qd, "attention q")
    require_finite(kd, "attention k")
    require_finite(vd, "attention v")
    if scale is None:
        scale = 1.0 / math.sqrt(qd.shape[1])
    fn = _attention_naive if mode.is_naive else _attention_fast
    return Tensor(fn(qd, kd, vd, scale), Layout.FLAT)
