"""Composite loss and temporal alignment term tests."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentdec import LossComponents, LossSchedule, combine_loss, mse_loss, temporal_alignment_loss
from latentdec.errors import ShapeMismatch, TooFewFrames, ValidationError

from conftest import chw, tchw

UNIT = LossComponents(mse=1.0, lpips=1.0, gan=1.0)


def test_gate_open_at_late_step():
    assert combine_loss(UNIT, 20000) == pytest.approx(2.2, abs=1e-12)


def test_gate_closed_before_t0():
    assert combine_loss(UNIT, 5000) == pytest.approx(1.4, abs=1e-12)


def test_gate_opens_at_t0_inclusive():
    schedule = LossSchedule()
    assert combine_loss(UNIT, schedule.t0) == pytest.approx(2.2, abs=1e-12)
    assert combine_loss(UNIT, schedule.t0 - 1) == pytest.approx(1.4, abs=1e-12)


def test_all_zero_components():
    assert combine_loss(LossComponents(0.0, 0.0, 0.0), 0) == 0.0


def test_step_size_is_gamma_times_gan():
    schedule = LossSchedule()
    for gan in (1.0, 0.25, -3.0):
        c = LossComponents(mse=0.7, lpips=0.3, gan=gan)
        step = combine_loss(c, schedule.t0, schedule) \
            - combine_loss(c, schedule.t0 - 1, schedule)
        assert step == pytest.approx(schedule.gamma * gan, abs=1e-15)


@given(mse=st.floats(0, 10), lpips=st.floats(0, 10), gan=st.floats(0, 10),
       bump=st.floats(0.001, 5.0))
@settings(max_examples=60, deadline=None)
def test_monotone_in_open_components(mse, lpips, gan, bump):
    base = combine_loss(LossComponents(mse, lpips, gan), 20000)
    assert combine_loss(LossComponents(mse + bump, lpips, gan), 20000) >= base
    assert combine_loss(LossComponents(mse, lpips + bump, gan), 20000) >= base
    assert combine_loss(LossComponents(mse, lpips, gan + bump), 20000) >= base
    # below the gate the gan term must not matter
    assert combine_loss(LossComponents(mse, lpips, gan + bump), 100) \
        == combine_loss(LossComponents(mse, lpips, gan), 100)


def test_schedule_validation():
    with pytest.raises(ValidationError):
        LossSchedule(alpha=-0.1)
    with pytest.raises(ValidationError):
        LossSchedule(t0=-5)
    with pytest.raises(ValidationError):
        LossComponents(mse=-1.0, lpips=0.0, gan=0.0)


def test_mse_loss_cases(rng):
    x = chw(rng.normal(size=(3, 4, 4)))
    assert mse_loss(x, x) == 0.0
    y = chw(x.data + 0.5)
    assert mse_loss(x, y) == pytest.approx(0.25, rel=1e-6)
    with pytest.raises(ShapeMismatch):
        mse_loss(x, chw(rng.normal(size=(3, 5, 4))))


def test_mse_loss_matches_loop_oracle(rng):
    x = rng.normal(size=(2, 3, 3)).astype(np.float32)
    y = rng.normal(size=(2, 3, 3)).astype(np.float32)
    total = 0.0
    for idx in np.ndindex(x.shape):
        total += (float(x[idx]) - float(y[idx])) ** 2
    assert mse_loss(chw(x), chw(y)) == pytest.approx(total / x.size, abs=1e-12)


def test_temporal_loss_identity_and_shift_invariance(rng):
    pred = tchw(rng.normal(size=(4, 3, 5, 5)))
    assert temporal_alignment_loss(pred, pred) == 0.0
    shifted = tchw(pred.data + 0.75)
    assert temporal_alignment_loss(shifted, pred) == pytest.approx(0.0, abs=1e-12)


def test_temporal_loss_matches_loop_oracle(rng):
    pred = rng.normal(size=(3, 2, 4, 4)).astype(np.float32)
    target = rng.normal(size=(3, 2, 4, 4)).astype(np.float32)
    diffs = []
    for t in range(2):
        pd = pred[t + 1].astype(np.float64) - pred[t].astype(np.float64)
        td = target[t + 1].astype(np.float64) - target[t].astype(np.float64)
        diffs.append((pd - td) ** 2)
    expected = float(np.mean(np.stack(diffs)))
    got = temporal_alignment_loss(tchw(pred), tchw(target))
    assert got == pytest.approx(expected, abs=1e-12)


def test_temporal_loss_errors(rng):
    single = tchw(rng.normal(size=(1, 3, 4, 4)))
    with pytest.raises(TooFewFrames):
        temporal_alignment_loss(single, single)
    a = tchw(rng.normal(size=(3, 3, 4, 4)))
    b = tchw(rng.normal(size=(3, 3, 5, 4)))
    with pytest.raises(ShapeMismatch):
        temporal_alignment_loss(a, b)
