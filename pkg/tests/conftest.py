import os

# Single-threaded BLAS must be set before numpy loads: at these GEMM sizes
# OpenBLAS threading adds sync jitter without speedup, and the acceptance
# timing tests need the quietest clock this box can give.
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")

import numpy as np
import pytest

from latentdec import Layout, Tensor


def assert_close(actual, expected, rtol=1e-5):
    """Elementwise comparison at a relative tolerance.

    Near-zero elements produced by cancellation get an absolute floor scaled
    to the expected tensor's magnitude (rtol * max|expected|), which is what
    "within rtol relative" means for a tensor-valued result.
    """
    expected = np.asarray(expected)
    scale = max(1.0, float(np.abs(expected).max())) if expected.size else 1.0
    np.testing.assert_allclose(np.asarray(actual), expected,
                               rtol=rtol, atol=rtol * scale)


def chw(arr) -> Tensor:
    return Tensor(np.asarray(arr, dtype=np.float32), Layout.CHW)


def tchw(arr) -> Tensor:
    return Tensor(np.asarray(arr, dtype=np.float32), Layout.TCHW)


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
