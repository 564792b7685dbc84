"""System-identification properties: fit, predict, rollout, excitation."""

from __future__ import annotations

import numpy as np
import pytest
from helpers import recoverable_arx_truth, simulate_arx_series

from preftune.arx import (
    N_ARX,
    N_INPUTS,
    ArxModel,
    IdentificationError,
    IoWindow,
    NormStats,
    excitation_control,
    fit_arx,
    load_model,
    predict_one_step,
    rollout_open_loop,
    save_model,
)


def fitted_pair(rng, noise=0.0, n=700, ridge=0.0):
    a, b = recoverable_arx_truth(rng)
    y, u = simulate_arx_series(a, b, n, rng, noise=noise)
    model, report = fit_arx(y, u, ridge=ridge)
    return (a, b), (y, u), model, report


def test_noiseless_coefficient_recovery(rng):
    (a, b), _, model, report = fitted_pair(rng)
    a_fit, b_fit, intercept = model.raw_coefficients()
    assert a_fit == pytest.approx(a, abs=1e-8)
    assert b_fit == pytest.approx(b, abs=1e-8)
    assert intercept == pytest.approx(0.0, abs=1e-7)
    assert report.train_mae <= 1e-9


def test_noiseless_rollout_is_exact(rng):
    (a, b), (y, u), model, _ = fitted_pair(rng, n=900)
    # Roll 50 steps open loop from inside the series and compare with
    # the realized continuation.
    k = 700
    w = IoWindow(y[k - N_ARX:k], u[:, k - N_ARX:k])
    horizon = 50
    fut = u[:, k:k + horizon].copy()
    pred = rollout_open_loop(model, w, fut)
    assert pred == pytest.approx(y[k:k + horizon], abs=1e-8)


def test_horizon_one_equals_one_step(rng):
    _, (y, u), model, _ = fitted_pair(rng)
    w = IoWindow(y[:N_ARX], u[:, :N_ARX])
    one = predict_one_step(model, w)
    roll = rollout_open_loop(model, w, np.zeros((N_INPUTS, 1)))
    assert roll.shape == (1,)
    assert roll[0] == one


def test_affine_rescaling_invariance(rng):
    _, (y, u), model, _ = fitted_pair(rng, noise=0.05, ridge=1e-3)
    scale_u = np.array([0.5, 3.0, 10.0])[:, None]
    shift_u = np.array([-1.0, 4.0, 50.0])[:, None]
    model2, _ = fit_arx(2.0 * y + 3.0, u * scale_u + shift_u, ridge=1e-3)
    w1 = IoWindow(y[40:50], u[:, 40:50])
    w2 = IoWindow(2.0 * y[40:50] + 3.0,
                  u[:, 40:50] * scale_u + shift_u)
    p1 = predict_one_step(model, w1)
    p2 = predict_one_step(model2, w2)
    assert p2 == pytest.approx(2.0 * p1 + 3.0, abs=1e-8)


def test_training_residuals_zero_mean(rng):
    _, (y, u), model, report = fitted_pair(rng, noise=0.05, ridge=1e-3)
    preds = np.array([
        predict_one_step(model, IoWindow(y[k - N_ARX:k], u[:, k - N_ARX:k]))
        for k in range(N_ARX, y.shape[0])])
    resid = y[N_ARX:] - preds
    assert abs(resid.mean()) <= 3.0 * resid.std() / np.sqrt(resid.size)
    assert report.n_rows == resid.size


def test_excitation_control_contract():
    rng_a = np.random.default_rng(7)
    rng_b = np.random.default_rng(7)
    seq_a = [excitation_control(21.0, 19.0, 24.0, rng_a) for _ in range(50)]
    seq_b = [excitation_control(21.0, 19.0, 24.0, rng_b) for _ in range(50)]
    assert seq_a == seq_b
    assert set(seq_a) == {0, 1}
    rng = np.random.default_rng(0)
    assert excitation_control(25.0, 19.0, 24.0, rng) == 0
    assert excitation_control(18.0, 19.0, 24.0, rng) == 1
    with pytest.raises(ValueError):
        excitation_control(20.0, 24.0, 19.0, rng)


def test_fit_rejects_short_series(rng):
    y = rng.normal(20.0, 1.0, 30)
    u = rng.normal(0.0, 1.0, (N_INPUTS, 30))
    with pytest.raises(IdentificationError):
        fit_arx(y, u)


def test_fit_rejects_flat_channel(rng):
    _, (y, u), _, _ = fitted_pair(rng)
    u = u.copy()
    u[1] = 5.0
    with pytest.raises(IdentificationError):
        fit_arx(y, u)


def test_model_save_load_round_trip(tmp_path, rng):
    _, (y, u), model, report = fitted_pair(rng, noise=0.02, ridge=1e-3)
    path = tmp_path / "model.txt"
    save_model(model, report, path)
    back = load_model(path)
    assert np.array_equal(back.a, model.a)
    assert np.array_equal(back.b, model.b)
    assert np.array_equal(back.norm_stats.mean, model.norm_stats.mean)
    assert np.array_equal(back.norm_stats.scale, model.norm_stats.scale)
    w = IoWindow(y[:N_ARX], u[:, :N_ARX])
    assert predict_one_step(back, w) == predict_one_step(model, w)


def test_window_validation_and_advance(rng):
    with pytest.raises(ValueError):
        IoWindow(np.zeros(9), np.zeros((N_INPUTS, N_ARX)))
    with pytest.raises(ValueError):
        IoWindow(np.full(N_ARX, np.nan), np.zeros((N_INPUTS, N_ARX)))
    y = np.arange(25, dtype=float)
    u = rng.normal(0.0, 1.0, (N_INPUTS, 25))
    w = IoWindow.from_series(y, u)
    assert np.array_equal(w.y_hist, y[-N_ARX:])
    nxt = w.advance(99.0, np.array([1.0, 2.0, 3.0]))
    assert nxt.y_hist[-1] == 99.0
    assert np.array_equal(nxt.y_hist[:-1], y[-N_ARX + 1:])
    assert np.array_equal(nxt.u_hist[:, -1], [1.0, 2.0, 3.0])


def test_model_shape_validation():
    stats = NormStats(np.zeros(4), np.ones(4))
    with pytest.raises(ValueError):
        ArxModel(np.zeros(9), np.zeros((N_INPUTS, N_ARX)), stats)
    with pytest.raises(ValueError):
        ArxModel(np.zeros(N_ARX), np.zeros((2, N_ARX)), stats)
    with pytest.raises(ValueError):
        NormStats(np.zeros(3), np.ones(3))
