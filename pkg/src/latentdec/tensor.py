"""Dense tensor container and execution-mode tags.

Tensors are immutable: the backing numpy array is contiguous float32 with the
writeable flag cleared, so sharing one tensor across threads is safe. Layout
is an explicit tag rather than a convention — CHW for single images/latents,
TCHW for frame stacks, FLAT for anything else (vectors, matrices, weights).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ShapeMismatch, ValidationError


class Layout(Enum):
    CHW = "chw"
    TCHW = "tchw"
    FLAT = "flat"


class Mode(Enum):
    NAIVE = "naive"
    OPTIMIZED = "optimized"


_LAYOUT_RANK = {Layout.CHW: 3, Layout.TCHW: 4}


@dataclass(frozen=True)
class ExecMode:
    """Kernel execution mode.

    Naive is the reference path: sequential, fixed-order accumulation, always
    deterministic (the constructor coerces the flag). Optimized may reorder
    accumulation and batch work, and is only forced into a fixed sequential
    order when ``deterministic`` is set.
    """

    mode: Mode = Mode.OPTIMIZED
    deterministic: bool = False

    def __post_init__(self):
        if self.mode is Mode.NAIVE and not self.deterministic:
            object.__setattr__(self, "deterministic", True)

    @classmethod
    def naive(cls) -> "ExecMode":
        return cls(Mode.NAIVE, True)

    @classmethod
    def optimized(cls, deterministic: bool = False) -> "ExecMode":
        return cls(Mode.OPTIMIZED, deterministic)

    @property
    def is_naive(self) -> bool:
        return self.mode is Mode.NAIVE


class Tensor:
    """Immutable N-dimensional float32 array with a layout tag."""

    __slots__ = ("_data", "_layout")

    def __init__(self, data, layout: Layout = Layout.FLAT):
        arr = np.ascontiguousarray(data, dtype=np.float32)
        if arr.ndim == 0:
            raise ShapeMismatch("tensor must have at least one axis")
        if any(d < 1 for d in arr.shape):
            raise ShapeMismatch(f"all dimension sizes must be >= 1, got {arr.shape}")
        rank = _LAYOUT_RANK.get(layout)
        if rank is not None and arr.ndim != rank:
            raise ShapeMismatch(
                f"layout {layout.value} requires {rank} axes, got shape {arr.shape}"
            )
        if arr.base is not None or arr.flags.writeable:
            arr = arr.copy()
        arr.flags.writeable = False
        self._data = arr
        self._layout = layout

    @property
    def data(self) -> np.ndarray:
        """Read-only float32 view of the underlying storage."""
        return self._data

    @property
    def layout(self) -> Layout:
        return self._layout

    @property
    def shape(self) -> tuple:
        return self._data.shape

    @property
    def size(self) -> int:
        return self._data.size

    def __repr__(self) -> str:
        return f"Tensor(shape={self._data.shape}, layout={self._layout.value})"

    def tolist(self):
        return self._data.tolist()


def require_finite(arr: np.ndarray, what: str = "input") -> None:
    """Raise ValidationError if the array contains NaN or Inf."""
    if not np.isfinite(arr).all():
        raise ValidationError(f"{what} contains NaN or Inf")


def as_tensor(x, layout: Layout = Layout.FLAT) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x, layout)
