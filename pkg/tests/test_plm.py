import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from haartrend.errors import InputError, RankError
from haartrend.oracle import replicate_rng
from haartrend.plm import build_design, fit_plm, ols, project_identifiable
from haartrend.shrinkage import ThresholdPolicy, estimate_trend
from haartrend.simulation import AR1Noise, step_function


def test_design_example():
    d = build_design(4, 2)
    np.testing.assert_allclose(d.X[:, 0], [-0.5, -1 / 6, 1 / 6, 0.5], atol=1e-15)
    np.testing.assert_array_equal(d.season, [1, 2, 1, 2])
    np.testing.assert_array_equal(d.X[:, 1:], [[1, 0], [0, 1], [1, 0], [0, 1]])


def test_design_period_one_is_intercept():
    d = build_design(9, 1)
    np.testing.assert_array_equal(d.X[:, 1], np.ones(9))


@given(st.integers(1, 20), st.integers(0, 200))
def test_design_invariants(p, extra):
    n = p + 1 + extra
    X = build_design(n, p).X
    np.testing.assert_array_equal(X[:, 1:].sum(axis=1), np.ones(n))
    assert abs(X[:, 0].sum()) < 1e-12
    assert X[0, 0] == pytest.approx(-0.5) and X[-1, 0] == pytest.approx(0.5)
    s = np.linalg.svd(X, compute_uv=False)
    assert s[-1] / s[0] > 1e-10


def test_design_gram_limit():
    n, p = 10_000, 12
    X = build_design(n, p).X
    G = X.T @ X / n
    target = np.diag([1 / 12] + [1 / p] * p)
    assert np.max(np.abs(G - target)) <= 0.02


@pytest.mark.parametrize("n, p", [(2, 2), (12, 12), (1, 1), (10, 0)])
def test_design_too_small(n, p):
    with pytest.raises(RankError):
        build_design(n, p)


def test_ols_exact_recovery(rng):
    d = build_design(60, 4)
    gamma = rng.standard_normal(5)
    np.testing.assert_allclose(ols(d, d.X @ gamma), gamma, atol=1e-10)
    m0 = project_identifiable(rng.standard_normal(60), d)
    np.testing.assert_allclose(ols(d, d.X @ gamma + m0), gamma, atol=1e-10)
    with pytest.raises(InputError):
        ols(d, np.zeros(59))


def test_projection(rng):
    d = build_design(50, 3)
    m = project_identifiable(rng.standard_normal(50), d)
    assert np.max(np.abs(d.X.T @ m)) <= 1e-9
    np.testing.assert_allclose(project_identifiable(m, d), m, atol=1e-12)
    np.testing.assert_allclose(project_identifiable(d.X[:, 2], d), 0, atol=1e-12)


def test_fit_plm_noiseless_parametric(rng):
    d = build_design(120, 12)
    gamma = rng.standard_normal(13)
    fit = fit_plm(d.X @ gamma, 12)
    np.testing.assert_allclose(fit.gamma_hat, gamma, atol=1e-10)
    np.testing.assert_allclose(fit.m_hat, 0, atol=1e-10)
    assert fit.residual_coeffs.alpha0 == 0.0


def test_fit_plm_recovers_projected_step():
    n, p = 256, 4
    d = build_design(n, p)
    gamma = np.array([1.0, 0.5, -0.2, 0.1, 0.3])
    m0 = project_identifiable(step_function(np.arange(1, n + 1) / n, 0.4), d)
    fit = fit_plm(d.X @ gamma + m0, p, ThresholdPolicy("soft", 1e-6))
    np.testing.assert_allclose(fit.gamma_hat, gamma, atol=1e-10)
    assert np.max(np.abs(d.X.T @ fit.m_identified)) <= 1e-9
    # tiny threshold: kept coefficients are moved by at most t
    assert np.max(np.abs(fit.m_hat - m0)) < 1e-3
    np.testing.assert_allclose(fit.fitted, fit.linear_seasonal + fit.m_hat)


def test_fit_plm_period_one_matches_estimate_trend(rng):
    n = 200
    y = step_function(np.arange(1, n + 1) / n, 0.3) + 0.1 * rng.standard_normal(n)
    y = y - y.mean()
    # remove the linear part so the zero-slope case applies
    d = build_design(n, 1)
    y = project_identifiable(y, d)
    policy = ThresholdPolicy("soft", 0.1)
    fit = fit_plm(y, 1, policy)
    np.testing.assert_allclose(fit.gamma_hat, 0, atol=1e-12)
    np.testing.assert_allclose(fit.m_hat, estimate_trend(y, policy), atol=1e-12)


def test_gamma_unbiased_under_symmetric_noise():
    n, p, reps = 240, 12, 400
    d = build_design(n, p)
    gamma = np.linspace(-1, 1, p + 1)
    noise = AR1Noise(0.7, 0.01)
    E = np.column_stack([noise.sample(n, replicate_rng(3, r)) for r in range(reps)])
    G = ols(d, (d.X @ gamma)[:, None] + E)
    mean = G.mean(axis=1)
    se = G.std(axis=1, ddof=1) / np.sqrt(reps)
    assert np.all(np.abs(mean - gamma) <= 3.5 * se)


def test_gamma_error_decays_like_one_over_n():
    p, reps = 12, 200
    gamma = np.linspace(-1, 1, p + 1)
    noise = AR1Noise(0.7, 0.01)
    ns = [2**e for e in range(8, 14)]
    err = []
    for n in ns:
        d = build_design(n, p)
        E = np.column_stack([noise.sample(n, replicate_rng(4, n, r)) for r in range(reps)])
        G = ols(d, (d.X @ gamma)[:, None] + E)
        err.append(np.mean(np.sum((G - gamma[:, None]) ** 2, axis=0)))
    slope = np.polyfit(np.log(ns), np.log(err), 1)[0]
    assert -1.25 <= slope <= -0.75


@pytest.mark.parametrize("K", [0.05, 0.1, 0.2])
def test_break_is_visible_in_trend(K):
    n, p, brk = 122, 12, 69
    rng = np.random.default_rng(12)
    t = np.arange(n)
    y = 1.5 + 0.002 * t + 0.15 * np.sin(2 * np.pi * t / p) + 0.03 * rng.standard_normal(n)
    y[brk:90] -= 1.4
    trend = fit_plm(y, p, ThresholdPolicy("soft", K)).trend
    steps = np.abs(np.diff(trend))
    assert abs(trend[brk] - trend[brk - 1]) > 5 * np.median(steps)


def test_batched_ols_matches_single(rng):
    d = build_design(40, 3)
    Y = rng.standard_normal((40, 4))
    G = ols(d, Y)
    for i in range(4):
        np.testing.assert_allclose(G[:, i], ols(d, Y[:, i]), atol=1e-12)


def test_fit_plm_input_checks():
    with pytest.raises(InputError):
        fit_plm(np.array([1.0, np.nan] * 10), 2)
    with pytest.raises(RankError):
        fit_plm(np.zeros(10), 12)
