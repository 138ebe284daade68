"""Forward-only evaluation of the composite training objective.

The combined loss is ``alpha * mse + beta * lpips + gamma * gan * gate`` where
the gate is a Heaviside step opening at training step t0 (inclusive: the
adversarial term is active at t0 itself). LPIPS and GAN terms enter as
externally computed scalars; this module never evaluates those networks.

The temporal alignment term is defined here as the mean squared error between
consecutive-frame differences of prediction and target, evaluated on decoded
pixels. The source work names this term without defining it; the
frame-difference form is this artifact's documented choice (it is invariant
under adding a constant to every predicted frame).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch, TooFewFrames, ValidationError
from .tensor import Tensor


@dataclass(frozen=True)
class LossSchedule:
    alpha: float = 1.0
    beta: float = 0.4
    gamma: float = 0.8
    t0: int = 10000

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValidationError("loss coefficients must be >= 0")
        if self.t0 < 0:
            raise ValidationError("t0 must be >= 0")


@dataclass(frozen=True)
class LossComponents:
    mse: float
    lpips: float
    gan: float

    def __post_init__(self):
        if self.mse < 0:
            raise ValidationError("mse component must be >= 0")
        if self.lpips < 0:
            raise ValidationError("lpips component must be >= 0")


def heaviside(x: float) -> float:
    """Step function with the closed convention: 1 for x >= 0, else 0."""
    return 1.0 if x >= 0 else 0.0


def combine_loss(c: LossComponents, t: int, s: LossSchedule = LossSchedule()) -> float:
    """alpha*mse + beta*lpips + gamma*gan*step(t - t0)."""
    return s.alpha * c.mse + s.beta * c.lpips + s.gamma * c.gan * heaviside(t - s.t0)


def mse_loss(x: Tensor, y: Tensor) -> float:
    """Mean of squared differences."""
    xa, ya = x.data, y.data
    if xa.shape != ya.shape:
        raise ShapeMismatch(f"shapes differ: {xa.shape} vs {ya.shape}")
    return float(np.mean((xa.astype(np.float64) - ya.astype(np.float64)) ** 2))


def temporal_alignment_loss(pred: Tensor, target: Tensor) -> float:
    """MSE between consecutive-frame differences of prediction and target."""
    pa, ta = pred.data, target.data
    if pa.shape != ta.shape:
        raise ShapeMismatch(f"shapes differ: {pa.shape} vs {ta.shape}")
    if pa.ndim != 4:
        raise ShapeMismatch(f"temporal loss expects TCHW tensors, got {pa.shape}")
    if pa.shape[0] < 2:
        raise TooFewFrames(f"need >= 2 frames, got {pa.shape[0]}")
    pd = np.diff(pa.astype(np.float64), axis=0)
    td = np.diff(ta.astype(np.float64), axis=0)
    return float(np.mean((pd - td) ** 2))
