import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import naive_nw
from haartrend.errors import ConfigError, DomainError, EstimationError
from haartrend.grid import index_set
from haartrend.oracle import replicate_rng
from haartrend.shrinkage import ThresholdPolicy, critical_scale, estimate_trend
from haartrend.simulation import (
    DEFAULT_B_GRID,
    DEFAULT_K_GRID,
    AR1Noise,
    KernelSpec,
    ScenarioSpec,
    ar1_noise,
    grid_search_mse,
    tail_integral_sides,
    moment_bound_check,
    monte_carlo_compare,
    nw_estimate,
    rate_check,
    scenario_f,
    scenario_g,
    scenario_truth,
    scott_bandwidth,
    step_function,
    tail_majorant_check,
)
from haartrend.transform import analyze, synthesize


@pytest.mark.parametrize("t, v", [(0.25, 1.75), (0.6, 0.1), (0.75, 0.9660254037844386), (0.0, 1.5), (0.5, 0.1)])
def test_scenario_f(t, v):
    assert scenario_f(t) == pytest.approx(v, abs=1e-12)


@pytest.mark.parametrize("t, v", [(0.25, 0.5), (0.85, 0.5), (0.0, 0.0), (0.69, 0.9), (0.7, 0.5)])
def test_scenario_g(t, v):
    assert scenario_g(t) == pytest.approx(v, abs=1e-12)


@pytest.mark.parametrize("fn", [scenario_f, scenario_g, step_function])
def test_scenario_domain(fn):
    for bad in (-0.01, 1.01, np.nan):
        with pytest.raises(DomainError):
            fn(bad)
    assert np.isfinite(fn(1.0))


def test_scenario_truth_and_spec():
    np.testing.assert_array_equal(scenario_truth("g", 10), scenario_g(np.arange(1, 11) / 10))
    np.testing.assert_array_equal(scenario_truth([1.0, 2.0]), [1.0, 2.0])
    with pytest.raises(ConfigError):
        scenario_truth("h", 10)
    spec = ScenarioSpec("f", 50)
    assert spec.truth().shape == (50,)
    assert spec.noise() == AR1Noise(0.7, 0.01)
    with pytest.raises(ConfigError):
        ScenarioSpec("f", 50, ar_coefficient=1.0)
    with pytest.raises(ConfigError):
        ScenarioSpec("f", 50, innovation_variance=0.0)


def test_ar1_stationary_variance():
    e = ar1_noise(1_000_000, 0.7, 0.01, seed=1)
    target = 0.01 / (1 - 0.49)
    assert target == pytest.approx(0.0196078, abs=1e-7)
    # batch-means standard error accounts for the serial correlation
    batches = (e**2).reshape(1000, 1000).mean(axis=1)
    se = batches.std(ddof=1) / np.sqrt(batches.size)
    assert abs(np.mean(e**2) - target) <= 3 * se


@pytest.mark.parametrize("a", [0.0, 0.7, -0.4])
def test_ar1_lag_one_autocorrelation(a):
    reps, n = 400, 500
    rhos = []
    for r in range(reps):
        e = AR1Noise(a, 1.0).sample(n, replicate_rng(8, r))
        rhos.append(np.sum(e[1:] * e[:-1]) / np.sum(e * e))
    rhos = np.array(rhos)
    # the ratio estimator is biased by about -(1 + 3a)/n
    assert abs(rhos.mean() - a + (1 + 3 * a) / n) <= 3 * rhos.std(ddof=1) / np.sqrt(reps)


def test_ar1_first_value_is_stationary():
    first = np.array([AR1Noise(0.9, 1.0).sample(3, replicate_rng(2, r))[0] for r in range(20_000)])
    target = 1 / (1 - 0.81)
    se = np.std(first**2, ddof=1) / np.sqrt(first.size)
    assert abs(np.mean(first**2) - target) <= 3 * se


def test_ar1_errors_and_reproducibility():
    with pytest.raises(ConfigError):
        ar1_noise(10, 1.0, 0.01, 0)
    with pytest.raises(ConfigError):
        ar1_noise(10, 0.5, 0.0, 0)
    np.testing.assert_array_equal(ar1_noise(50, 0.7, 0.01, 4), ar1_noise(50, 0.7, 0.01, 4))


def test_ar1_covariance_and_constants():
    noise = AR1Noise(0.7, 0.01)
    C = noise.covariance(5)
    assert C[0, 0] == pytest.approx(noise.stationary_variance)
    assert C[0, 3] == pytest.approx(noise.stationary_variance * 0.7**3)
    # c1 is the absolute covariance sum over an infinite range
    assert noise.c1 == pytest.approx(noise.stationary_variance * (1 + 2 * sum(0.7**k for k in range(1, 2000))))
    assert noise.c2 == 0


@pytest.mark.parametrize("kind", ["rectangular", "epanechnikov"])
def test_nw_matches_double_loop(kind, rng):
    n = 100
    x = np.arange(1, n + 1) / n
    y = rng.standard_normal(n)
    for b in (0.013, 0.05, 0.3):
        np.testing.assert_allclose(nw_estimate(x, y, KernelSpec(kind, b)), naive_nw(x, y, x, b, kind), atol=1e-12, rtol=0)


@given(st.integers(5, 60), st.floats(0.02, 0.5), st.sampled_from(["rectangular", "epanechnikov"]), st.integers(0, 2**31))
@settings(max_examples=40, deadline=None)
def test_nw_matches_double_loop_property(n, b, kind, seed):
    x = np.sort(np.random.default_rng(seed).random(n))
    y = np.random.default_rng(seed + 1).standard_normal(n)
    x_eval = x[:: max(1, n // 7)]
    try:
        got = nw_estimate(x, y, KernelSpec(kind, b), x_eval)
    except EstimationError:
        return
    np.testing.assert_allclose(got, naive_nw(x, y, x_eval, b, kind), atol=1e-12, rtol=0)


def test_nw_examples():
    x = np.arange(1, 51) / 50
    np.testing.assert_allclose(nw_estimate(x, np.full(50, 2.5), KernelSpec("epanechnikov", 0.1)), 2.5)
    # window of +-1.5 grid steps: three nearest points, equal weights
    y = np.arange(50.0)
    got = nw_estimate(x, y, KernelSpec("rectangular", 1.5 / 50))
    np.testing.assert_allclose(got[10], y[9:12].mean())
    with pytest.raises(EstimationError, match="x = "):
        nw_estimate(x, y, KernelSpec("rectangular", 0.001), x_eval=np.array([0.5, 0.505]))
    with pytest.raises(ConfigError):
        KernelSpec("gaussian", 0.1)
    with pytest.raises(ConfigError):
        KernelSpec("rectangular", 0.0)


def test_scott_bandwidth():
    x = np.arange(1, 1001) / 1000
    assert scott_bandwidth(x, "rectangular") == pytest.approx(0.186, rel=0.15)
    assert scott_bandwidth(x, "epanechnikov") == pytest.approx(0.145, rel=0.15)
    assert scott_bandwidth(2 * x, "rectangular") == pytest.approx(2 * scott_bandwidth(x, "rectangular"))
    with pytest.raises(ConfigError):
        scott_bandwidth(np.ones(10))
    with pytest.raises(ConfigError):
        scott_bandwidth(x, "triangular")


def test_default_grids_bracket_reported_optima():
    assert DEFAULT_K_GRID.size == 40 and DEFAULT_B_GRID.size == 40
    assert DEFAULT_K_GRID[0] == pytest.approx(0.005) and DEFAULT_K_GRID[-1] == pytest.approx(1.0)
    assert DEFAULT_B_GRID[0] == pytest.approx(0.003) and DEFAULT_B_GRID[-1] == pytest.approx(0.3)
    for v in (0.1, 0.045):
        assert DEFAULT_K_GRID[0] < v < DEFAULT_K_GRID[-1]
    for v in (0.006, 0.007, 0.009):
        assert DEFAULT_B_GRID[0] < v < DEFAULT_B_GRID[-1]


def test_grid_search_is_deterministic_and_workers_invariant():
    truth = scenario_truth("f", 256)
    noise = AR1Noise(0.7, 0.01)
    a = grid_search_mse("soft", truth, noise, [0.05, 0.1, 0.2], reps=30, seed=3)
    b = grid_search_mse("soft", truth, noise, [0.05, 0.1, 0.2], reps=30, seed=3, workers=3)
    np.testing.assert_array_equal(a.mse, b.mse)
    assert a.best in (0.05, 0.1, 0.2)
    assert a.mse.shape == (3, 30)
    assert np.all(a.std_error > 0)
    with pytest.raises(ConfigError):
        grid_search_mse("soft", truth, noise, [], reps=3)


def test_compare_is_paired_and_order_independent():
    truth = scenario_truth("g", 300)
    noise = AR1Noise(0.7, 0.01)
    ests = [("soft", 0.05), ("rectangular", 0.006), ("epanechnikov", 0.007)]
    t1 = monte_carlo_compare(truth, ests, noise, reps=40, seed=9)
    t2 = monte_carlo_compare(truth, ests[::-1], noise, reps=40, seed=9, workers=2)
    for name in t1.estimators:
        np.testing.assert_array_equal(t1.mse[t1.estimators.index(name)], t2.mse[t2.estimators.index(name)])
    rows = t1.summary()
    assert [r["estimator"] for r in rows] == ["wavelet_soft", "nw_rectangular", "nw_epanechnikov"]
    assert all(r["q1"] <= r["median"] <= r["q3"] for r in rows)
    assert len(t1.boxplot_rows()) == 3 * 40
    with pytest.raises(ConfigError):
        monte_carlo_compare(truth, ests, noise, reps=1)


class _NoNoise:
    def sample(self, n, rng):
        return np.zeros(n)


def test_compare_without_noise_gives_approximation_error():
    n = 200
    truth = scenario_truth("f", n)
    table = monte_carlo_compare(truth, [("soft", 0.1), ("rectangular", 0.05)], _NoNoise(), reps=4)
    assert np.all(table.mse.std(axis=1) == 0)
    fw = estimate_trend(truth, ThresholdPolicy("soft", 0.1))
    assert table.mse[0, 0] == pytest.approx(np.mean((fw - truth) ** 2), rel=1e-12)
    x = np.arange(1, n + 1) / n
    nw = nw_estimate(x, truth, KernelSpec("rectangular", 0.05))
    assert table.mse[1, 0] == pytest.approx(np.mean((nw - truth) ** 2), rel=1e-12)


def test_rate_check_examples():
    ns = [2**e for e in range(6, 10)]
    flat = rate_check("step", ns, reps=20, fit=lambda Y: synthesize(analyze(Y)))
    assert abs(flat.slope) < 0.1
    np.testing.assert_allclose(flat.mse, 1.0, rtol=0.1)
    zero = rate_check("step", ns, reps=3, noise=_NoNoise(), fit=lambda Y: synthesize(analyze(Y)))
    assert np.all(zero.mse < 1e-28)
    with pytest.raises(ConfigError):
        rate_check("step", ns[:3], reps=3)


def _fine_coefficient_errors(noise, n, reps, seed):
    E = np.column_stack([noise.sample(n, replicate_rng(seed, r)) for r in range(reps)])
    fine = index_set(n).j >= critical_scale(n)
    return np.sqrt(n) * analyze(E).beta[fine].ravel()


def test_tail_check_gaussian_dominated():
    report = tail_majorant_check(np.random.default_rng(0).standard_normal(50_000), gamma=4)
    assert report.dominated and report.C < 10


def test_tail_check_ar1_fine_scales_dominated():
    errs = _fine_coefficient_errors(AR1Noise(0.7, 0.01), 1000, 40, seed=6)
    assert errs.size >= 1000
    assert tail_majorant_check(errs, gamma=4).dominated


def test_tail_check_cauchy_fails():
    report = tail_majorant_check(np.random.default_rng(1).standard_cauchy(50_000), gamma=4)
    assert not report.dominated
    assert report.violations.size > 0


def test_tail_check_separates_by_moment_order():
    rng = np.random.default_rng(2)
    assert tail_majorant_check(rng.standard_t(5, 50_000), gamma=4).dominated
    assert not tail_majorant_check(rng.standard_t(3, 50_000), gamma=4).dominated


def test_tail_check_needs_samples():
    with pytest.raises(ConfigError):
        tail_majorant_check(np.ones(999))


def test_moment_bound_examples():
    white = AR1Noise(0.0, 1.0)
    r = moment_bound_check(np.eye(1, 20)[0], white, reps=40_000, seed=1)
    assert r.bound == pytest.approx(3.0) and r.exact == pytest.approx(3.0)
    assert abs(r.mc_mean - 3.0) <= 3 * r.std_error
    r = moment_bound_check(np.linspace(-1, 1, 60), AR1Noise(0.7, 0.01), reps=20_000, seed=2)
    assert r.holds and r.exact <= r.bound
    z = moment_bound_check(np.zeros(10), white)
    assert z.mc_mean == 0 and z.bound == 0 and z.holds


@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=200), st.floats(0, 120))
def test_tail_integral_identity(samples, t):
    lhs, rhs = tail_integral_sides(np.array(samples), t)
    assert abs(lhs - rhs) <= 1e-8 * max(1.0, lhs)


def test_tail_integral_errors():
    with pytest.raises(DomainError):
        tail_integral_sides(np.array([-1.0, 2.0]), 0.5)
    with pytest.raises(DomainError):
        tail_integral_sides(np.array([1.0]), -0.5)
