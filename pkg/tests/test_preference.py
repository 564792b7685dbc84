"""Likelihood, gradient, and constrained-MLE properties."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from preftune.kernels import Context, EvalPoint, KernelConfig, ParamPoint
from preftune.preference import (
    PreferenceDataset,
    confidence_margin,
    load_dataset,
    log_likelihood,
    log_likelihood_grad,
    save_dataset,
    sigmoid,
    solve_mle,
)


def random_dataset(rng: np.random.Generator, t: int) -> PreferenceDataset:
    ds = PreferenceDataset()
    for _ in range(t + 1):
        ds.add_day(EvalPoint(
            ParamPoint(rng.uniform(0.0889, 0.1019), rng.uniform(20, 26)),
            Context(rng.uniform(-10, 10))))
    for day in range(1, t + 1):
        ds.add_comparison(day, bool(rng.integers(0, 2)))
    return ds


def random_comparisons(rng, t):
    later = np.arange(1, t + 1)
    signs = rng.choice([-1.0, 1.0], t)
    return later, later - 1, signs


@given(st.integers(0, 10**6), st.integers(1, 6),
       st.floats(0.01, 0.99, allow_nan=False))
def test_log_likelihood_concavity(seed, t, lam):
    rng = np.random.default_rng(seed)
    later, earlier, signs = random_comparisons(rng, t)
    J1 = rng.normal(0, 3, t + 1)
    J2 = rng.normal(0, 3, t + 1)
    mix = log_likelihood(lam * J1 + (1 - lam) * J2, later, earlier, signs)
    sep = (lam * log_likelihood(J1, later, earlier, signs)
           + (1 - lam) * log_likelihood(J2, later, earlier, signs))
    assert mix >= sep - 1e-10


@given(st.integers(0, 10**6), st.integers(1, 6))
def test_gradient_matches_central_differences(seed, t):
    rng = np.random.default_rng(seed)
    later, earlier, signs = random_comparisons(rng, t)
    J = rng.normal(0, 2, t + 1)
    g = log_likelihood_grad(J, later, earlier, signs)
    h = 1e-6
    for i in range(t + 1):
        e = np.zeros(t + 1)
        e[i] = h
        fd = (log_likelihood(J + e, later, earlier, signs)
              - log_likelihood(J - e, later, earlier, signs)) / (2 * h)
        assert g[i] == pytest.approx(fd, rel=1e-5, abs=1e-7)


@given(st.integers(0, 10**6), st.integers(1, 6))
def test_sign_symmetry(seed, t):
    # Flipping every answer and negating J leaves the likelihood alone.
    rng = np.random.default_rng(seed)
    later, earlier, signs = random_comparisons(rng, t)
    J = rng.normal(0, 2, t + 1)
    assert log_likelihood(J, later, earlier, signs) == \
        log_likelihood(-J, later, earlier, -signs)


def test_likelihood_zero_for_empty():
    empty = np.empty(0, dtype=int)
    assert log_likelihood(np.array([1.0]), empty, empty, np.empty(0)) == 0.0
    assert np.array_equal(
        log_likelihood_grad(np.array([1.0]), empty, empty, np.empty(0)),
        np.zeros(1))


def test_sigmoid_basics():
    assert sigmoid(0.0) == 0.5
    assert sigmoid(50.0) == pytest.approx(1.0, abs=1e-12)
    assert sigmoid(-50.0) == pytest.approx(0.0, abs=1e-12)
    x = np.linspace(-5, 5, 11)
    assert sigmoid(x) + sigmoid(-x) == pytest.approx(np.ones(11), abs=1e-14)


def test_mle_time_reversal_invariance(rng):
    # Reversing the day order while flipping each answer describes the
    # same comparisons, so the attained maximum must agree.
    cfg = KernelConfig()
    for t in (2, 3, 4):
        ds = random_dataset(rng, t)
        rev = PreferenceDataset(points=list(ds.points[::-1]))
        m = ds.n_days
        for day, q in ds.comparisons:
            rev.add_comparison(m - day, not q)
        a = solve_mle(ds, cfg)
        b = solve_mle(rev, cfg)
        assert a.loglik == pytest.approx(b.loglik, abs=1e-6)


def test_mle_nondecreasing_in_bound(rng):
    cfg = KernelConfig()
    ds = random_dataset(rng, 4)
    lls = [solve_mle(ds, cfg, bound=b).loglik for b in (1.0, 2.0, 5.0)]
    assert lls[0] <= lls[1] + 1e-7
    assert lls[1] <= lls[2] + 1e-7


def test_mle_respects_ball(rng):
    for t in (1, 3, 5):
        ds = random_dataset(rng, t)
        for bound in (1.0, 5.0):
            cs = solve_mle(ds, KernelConfig(), bound=bound)
            assert np.linalg.norm(cs.alpha) <= bound + 1e-9
            assert cs.loglik == pytest.approx(
                cs.loglik_of(cs.utilities), abs=1e-12)


def test_confidence_margin_anchors(rng):
    ds = random_dataset(rng, 3)
    cs = solve_mle(ds, KernelConfig(), beta=1.0)
    # At the MLE itself the margin is exactly beta.
    assert confidence_margin(cs, cs.utilities) == pytest.approx(1.0, abs=1e-12)
    cs0 = solve_mle(ds, KernelConfig(), beta=0.0)
    assert confidence_margin(cs0, cs0.utilities) == pytest.approx(0.0, abs=1e-12)


def test_confidence_margin_at_two_beta_deficit(rng):
    # A vector whose likelihood sits 2*beta below the maximum scores -beta.
    ds = random_dataset(rng, 3)
    beta = 1.0
    cs = solve_mle(ds, KernelConfig(), beta=beta)
    target = cs.loglik - 2.0 * beta

    def f(c):
        return cs.loglik_of(c * cs.utilities) - target

    lo, hi = 0.0, -1.0
    while f(hi) > 0:
        hi *= 2.0
        assert hi > -1e6
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    J = 0.5 * (lo + hi) * cs.utilities
    assert confidence_margin(cs, J) == pytest.approx(-beta, abs=1e-6)


def test_no_comparisons_gives_zero_utilities():
    ds = PreferenceDataset()
    ds.add_day(EvalPoint(ParamPoint(0.0954, 22.0), Context(0.0)))
    cs = solve_mle(ds, KernelConfig())
    assert cs.loglik == 0.0
    assert np.array_equal(cs.utilities, np.zeros(1))
    assert cs.threshold == -1.0


def test_dataset_validation():
    ds = PreferenceDataset()
    ds.add_day(EvalPoint(ParamPoint(0.0954, 22.0), Context(0.0)))
    with pytest.raises(ValueError):
        ds.add_comparison(1, True)
    ds.add_day(EvalPoint(ParamPoint(0.0954, 23.0), Context(1.0)))
    ds.add_comparison(1, True)
    with pytest.raises(ValueError):
        ds.add_comparison(1, False)
    with pytest.raises(ValueError):
        ds.add_comparison(0, True)


def test_empty_dataset_rejected():
    with pytest.raises(ValueError):
        solve_mle(PreferenceDataset(), KernelConfig())


def test_dataset_save_load_round_trip(tmp_path, rng):
    ds = random_dataset(rng, 4)
    path = tmp_path / "ds.txt"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert back.comparisons == ds.comparisons
    assert back.points == ds.points


def test_solve_is_reproducible(rng):
    ds = random_dataset(rng, 4)
    a = solve_mle(ds, KernelConfig())
    b = solve_mle(ds, KernelConfig())
    assert np.array_equal(a.alpha, b.alpha)
    assert a.loglik == b.loglik
