"""Composite layer tests: identity maps, composition oracles, temporal
attention exactness and permutation equivariance."""
import math

import numpy as np
import pytest

from latentdec import ExecMode, Tensor, activation, conv2d, mid_spatiotemporal_forward, residual_forward
from latentdec.errors import ShapeMismatch
from latentdec.kernels import ActKind
from latentdec.layers import Conv2dLayer, MidSpatioTemporalBlock, ResidualBlock, UpStage

from conftest import assert_close, chw, tchw

NAIVE = ExecMode.naive()
FAST = ExecMode.optimized()


def _zero_conv(c_out, c_in, k=3, padding=1):
    return Conv2dLayer(np.zeros((c_out, c_in, k, k), dtype=np.float32),
                       np.zeros(c_out, dtype=np.float32), padding=padding)


def _rand_conv(rng, c_out, c_in, k=3, padding=1, scale=0.3):
    return Conv2dLayer((rng.normal(size=(c_out, c_in, k, k)) * scale).astype(np.float32),
                       (rng.normal(size=c_out) * scale).astype(np.float32),
                       padding=padding)


def _rand_block(rng, c_in, c_out):
    skip = None
    if c_in != c_out:
        skip = Conv2dLayer(rng.normal(size=(c_out, c_in, 1, 1)).astype(np.float32) * 0.3,
                           None, padding=0)
    return ResidualBlock(c_in, c_out,
                         _rand_conv(rng, c_out, c_in),
                         _rand_conv(rng, c_out, c_out),
                         _rand_conv(rng, c_out, c_out), skip=skip)


def test_zero_weights_block_is_identity(rng):
    block = ResidualBlock(3, 3, _zero_conv(3, 3), _zero_conv(3, 3), _zero_conv(3, 3))
    x = chw(rng.normal(size=(3, 5, 5)))
    for mode in (NAIVE, FAST):
        out = residual_forward(block, x, mode)
        np.testing.assert_array_equal(out.data, x.data)


def test_skip_presence_validated():
    with pytest.raises(ShapeMismatch):
        ResidualBlock(2, 3, _zero_conv(3, 2), _zero_conv(3, 3), _zero_conv(3, 3))
    with pytest.raises(ShapeMismatch):
        ResidualBlock(3, 3, _zero_conv(3, 3), _zero_conv(3, 3), _zero_conv(3, 3),
                      skip=_zero_conv(3, 3, k=1, padding=0))


def test_zero_input_bias_only_path(rng):
    # 1x1 spatial input: only the kernel's center tap contributes
    block = _rand_block(rng, 2, 2)
    x = chw(np.zeros((2, 1, 1), dtype=np.float32))
    out = residual_forward(block, x, FAST).data

    def act(v):
        return np.maximum(v, 0.0)

    h = act(block.conv1.bias.astype(np.float64))
    h = act(block.conv2.weight[:, :, 1, 1].astype(np.float64) @ h
            + block.conv2.bias.astype(np.float64))
    h = act(block.conv3.weight[:, :, 1, 1].astype(np.float64) @ h
            + block.conv3.bias.astype(np.float64))
    assert_close(out[:, 0, 0], h, rtol=1e-5)


def test_block_matches_flat_naive_composition(rng):
    block = _rand_block(rng, 3, 5)
    x = chw(rng.normal(size=(3, 6, 6)))
    h = conv2d(x, Tensor(block.conv1.weight), block.conv1.bias, 1, 1, NAIVE)
    h = activation(h, ActKind.RELU, NAIVE)
    h = conv2d(h, Tensor(block.conv2.weight), block.conv2.bias, 1, 1, NAIVE)
    h = activation(h, ActKind.RELU, NAIVE)
    h = conv2d(h, Tensor(block.conv3.weight), block.conv3.bias, 1, 1, NAIVE)
    h = activation(h, ActKind.RELU, NAIVE)
    skip = conv2d(x, Tensor(block.skip.weight), None, 1, 0, NAIVE)
    expected = h.data + skip.data
    for mode in (NAIVE, FAST):
        assert_close(residual_forward(block, x, mode).data, expected, rtol=1e-5)
    assert residual_forward(block, x, FAST).shape == (5, 6, 6)


def test_block_channel_mismatch(rng):
    block = _rand_block(rng, 3, 3)
    with pytest.raises(ShapeMismatch):
        residual_forward(block, chw(rng.normal(size=(4, 5, 5))))


def _rand_mid(rng, c):
    return MidSpatioTemporalBlock(
        _rand_block(rng, c, c),
        (rng.normal(size=(c, c)) * 0.4).astype(np.float32),
        (rng.normal(size=(c, c)) * 0.4).astype(np.float32),
        _rand_block(rng, c, c))


def test_mid_block_single_frame_is_pure_spatial(rng):
    mid = _rand_mid(rng, 4)
    frame = rng.normal(size=(4, 3, 3)).astype(np.float32)
    out = mid_spatiotemporal_forward(mid, tchw(frame[None]), FAST).data
    expected = mid.spatial_post.forward(mid.spatial_pre.forward(frame, FAST), FAST)
    np.testing.assert_array_equal(out[0], expected)


def test_mid_block_identical_frames_stay_identical(rng):
    mid = _rand_mid(rng, 3)
    frame = rng.normal(size=(3, 4, 4)).astype(np.float32)
    x = tchw(np.stack([frame] * 4))
    out = mid_spatiotemporal_forward(mid, x, FAST).data
    for t in range(1, 4):
        np.testing.assert_array_equal(out[t], out[0])


def test_mid_block_matches_per_position_loop_oracle(rng):
    c = 5
    mid = _rand_mid(rng, c)
    x = rng.normal(size=(3, c, 4, 4)).astype(np.float32)
    pre = np.stack([mid.spatial_pre.forward(x[t], FAST) for t in range(3)])
    mixed = np.zeros_like(pre, dtype=np.float64)
    scale = 1.0 / math.sqrt(c)
    for i in range(4):
        for j in range(4):
            tokens = pre[:, :, i, j].astype(np.float64)
            q = tokens @ mid.wq.T.astype(np.float64)
            k = tokens @ mid.wk.T.astype(np.float64)
            scores = q @ k.T * scale
            e = np.exp(scores - scores.max(axis=1, keepdims=True))
            weights = e / e.sum(axis=1, keepdims=True)
            mixed[:, :, i, j] = weights @ tokens
    expected = np.stack(
        [mid.spatial_post.forward(mixed[t].astype(np.float32), FAST) for t in range(3)])
    for mode in (NAIVE, FAST):
        out = mid_spatiotemporal_forward(mid, tchw(x), mode).data
        assert_close(out, expected, rtol=2e-5)


def test_mid_block_naive_equals_fast(rng):
    mid = _rand_mid(rng, 4)
    x = tchw(rng.normal(size=(3, 4, 3, 3)))
    assert_close(mid_spatiotemporal_forward(mid, x, FAST).data,
                 mid_spatiotemporal_forward(mid, x, NAIVE).data, rtol=1e-5)


def test_mid_block_permutation_equivariance(rng):
    mid = _rand_mid(rng, 3)
    x = rng.normal(size=(4, 3, 3, 3)).astype(np.float32)
    perm = [2, 0, 3, 1]
    base = mid_spatiotemporal_forward(mid, tchw(x), FAST).data
    permuted = mid_spatiotemporal_forward(mid, tchw(x[perm]), FAST).data
    assert_close(permuted, base[perm], rtol=1e-5)


def test_mid_block_shape_checks(rng):
    mid = _rand_mid(rng, 3)
    with pytest.raises(ShapeMismatch):
        mid_spatiotemporal_forward(mid, tchw(rng.normal(size=(2, 4, 3, 3))))
    with pytest.raises(ShapeMismatch):
        mid_spatiotemporal_forward(mid, chw(rng.normal(size=(3, 3, 3))))


def test_up_stage_doubles_spatial(rng):
    stage = UpStage((_rand_block(rng, 3, 3), _rand_block(rng, 3, 3)),
                    _rand_conv(rng, 3, 3))
    x = rng.normal(size=(3, 5, 7)).astype(np.float32)
    out = stage.forward(x, FAST)
    assert out.shape == (3, 10, 14)
    assert_close(stage.forward(x, NAIVE), out, rtol=1e-5)
