import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pottslab.errors import DegenerateDataError, DimensionError
from pottslab.inference import (METHOD_POTTS, StatsSummary, SteppingConfig, cumulant_approx,
                                cumulant_maximizer, derived_seed, fit_pseudolikelihood, mcmcmle,
                                moment_check, monte_carlo_se, naive_loglik_ratio,
                                neighbor_color_counts, partial_stepping, pseudo_log_likelihood)
from pottslab.lattice import FREE, Grid, PottsParams, exact_distribution, suff_stats
from pottslab.samplers import ChainConfig, gibbs_sample


def fd_grad(fun, theta, h=1e-5):
    theta = np.asarray(theta, dtype=float)
    out = np.empty_like(theta)
    for j in range(len(theta)):
        e = h * np.eye(len(theta))[j]
        out[j] = (fun(theta + e) - fun(theta - e)) / (2 * h)
    return out


@pytest.fixture(scope="module")
def beta_half_grid():
    cfg = ChainConfig(sample_size=1, burn_in=400, seed=31, keep_grids=True)
    return gibbs_sample(30, 30, 3, PottsParams.zero(3, 0.5), cfg).grid(0)


@pytest.fixture(scope="module")
def batch():
    cfg = ChainConfig(sample_size=400, burn_in=100, seed=5)
    return gibbs_sample(6, 6, 3, PottsParams((0.2, -0.1), 0.6), cfg)


def test_neighbor_color_counts():
    g = Grid.from_labels([[1, 2, 1], [2, 2, 2], [1, 2, 1]])
    n = neighbor_color_counts(g)
    assert n[4].tolist() == [0, 4]
    assert n.sum() == 4 * 9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4))
def test_pseudo_likelihood_derivatives(seed, k):
    rng = np.random.default_rng(seed)
    g = Grid(rng.integers(k, size=(4, 5)), k)
    theta = rng.normal(size=k)
    _, grad, hess = pseudo_log_likelihood(g, theta, hessian=True)
    np.testing.assert_allclose(grad, fd_grad(lambda th: pseudo_log_likelihood(g, th)[0], theta),
                               rtol=1e-5, atol=1e-6)
    fd_hess = np.array([fd_grad(lambda th: pseudo_log_likelihood(g, th)[1][j], theta)
                        for j in range(k)])
    np.testing.assert_allclose(hess, fd_hess, rtol=1e-5, atol=1e-6)
    assert np.all(np.linalg.eigvalsh(hess) <= 1e-9)


def test_pseudo_likelihood_recovers_beta(beta_half_grid):
    fit = fit_pseudolikelihood(beta_half_grid)
    assert fit.estimates.beta == pytest.approx(0.5, abs=0.1)
    assert np.all(np.abs(fit.estimates.alpha) < 0.3)


def test_pseudo_likelihood_at_independence():
    # checkerboard: no concordant neighbors, so the estimate sits on beta = 0
    g = Grid.from_labels((np.indices((4, 4)).sum(axis=0) % 2) + 1, 2)
    fit = fit_pseudolikelihood(g)
    assert fit.estimates.beta == 0.0
    assert fit.estimates.alpha[0] == pytest.approx(0.0, abs=1e-6)


def test_degenerate_grids():
    with pytest.raises(DegenerateDataError):
        fit_pseudolikelihood(Grid.constant(3, 3, 2))
    missing = Grid.from_labels([[1, 2, 1], [2, 1, 2], [1, 1, 1]], 3)
    with pytest.raises(DegenerateDataError):
        fit_pseudolikelihood(missing)
    with pytest.raises(DegenerateDataError):
        mcmcmle(missing)


def test_naive_ratio_value_and_derivatives(batch):
    theta0 = batch.params.theta
    g_obs = np.array([12.0, 11.0, 40.0])
    value, grad = naive_loglik_ratio(theta0, theta0, g_obs, batch)
    assert value == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(grad, g_obs - batch.g.mean(axis=0))
    theta = theta0 + np.array([0.05, -0.03, 0.02])
    _, grad, hess = naive_loglik_ratio(theta, theta0, g_obs, batch, hessian=True)
    np.testing.assert_allclose(
        grad, fd_grad(lambda th: naive_loglik_ratio(th, theta0, g_obs, batch)[0], theta),
        rtol=1e-5)
    fd_hess = np.array([fd_grad(lambda th: naive_loglik_ratio(th, theta0, g_obs, batch)[1][j],
                                theta) for j in range(3)])
    np.testing.assert_allclose(hess, fd_hess, rtol=1e-4, atol=1e-6)
    with pytest.raises(DimensionError):
        naive_loglik_ratio(theta0[:2], theta0[:2], g_obs, batch)


def test_naive_ratio_tracks_exact_likelihood():
    params0 = PottsParams((0.1,), 0.4)
    params1 = PottsParams((0.2,), 0.5)
    cfg = ChainConfig(sample_size=20000, burn_in=100, seed=2)
    batch = gibbs_sample(3, 3, 2, params0, cfg)
    g_obs = np.array([5.0, 10.0])
    exact = ((params1.theta - params0.theta) @ g_obs
             - exact_distribution(3, 3, 2, params1).log_normalizer
             + exact_distribution(3, 3, 2, params0).log_normalizer)
    value, _ = naive_loglik_ratio(params1.theta, params0.theta, g_obs, batch)
    assert value == pytest.approx(exact, abs=0.02)


def test_cumulant_maximizer_zeroes_gradient(batch):
    summary = StatsSummary.from_samples(batch)
    theta0 = batch.params.theta
    g_obs = summary.mean + np.array([1.0, -0.5, 2.0])
    best = cumulant_maximizer(theta0, g_obs, summary)
    grad = fd_grad(lambda th: cumulant_approx(th, theta0, g_obs, summary), best)
    np.testing.assert_allclose(grad, 0.0, atol=1e-5)
    assert cumulant_approx(theta0, theta0, g_obs, summary) == 0.0


def test_cumulant_maximizer_rejects_constant_batch():
    g = np.tile([3.0, 4.0, 5.0], (10, 1))
    with pytest.raises(DegenerateDataError):
        cumulant_maximizer(np.zeros(3), [3.0, 4.0, 6.0], g)


def test_stats_summary_moments():
    rng = np.random.default_rng(0)
    g = np.column_stack([rng.normal(size=20000), rng.exponential(size=20000)])
    s = StatsSummary.from_samples(g)
    np.testing.assert_allclose(s.mean, [0, 1], atol=0.03)
    np.testing.assert_allclose(s.skewness, [0, 2], atol=0.15)
    np.testing.assert_allclose(s.kurtosis, [3, 9], atol=1.0)
    assert s.size == 20000
    with pytest.raises(ValueError):
        StatsSummary.from_samples(g[:1])


def test_monte_carlo_se_iid_and_correlated():
    rng = np.random.default_rng(1)
    n = 50000
    iid = rng.normal(size=n)
    assert monte_carlo_se(iid)[0] == pytest.approx(1 / np.sqrt(n), rel=0.05)
    rho = 0.9
    ar = np.empty(n)
    ar[0] = rng.normal()
    eps = rng.normal(size=n) * np.sqrt(1 - rho**2)
    for i in range(1, n):
        ar[i] = rho * ar[i - 1] + eps[i]
    inflation = monte_carlo_se(ar)[0] * np.sqrt(n)
    assert inflation == pytest.approx(np.sqrt((1 + rho) / (1 - rho)), rel=0.1)


def test_derived_seed_is_stable():
    assert derived_seed(0, 1, 2) == derived_seed(0, 1, 2)
    assert derived_seed(0, 1, 2) != derived_seed(0, 2, 1)
    assert 0 <= derived_seed(7) < 2**64


def test_stepping_config_validation():
    with pytest.raises(ValueError):
        SteppingConfig(approx="exact")
    with pytest.raises(ValueError):
        SteppingConfig(margin_anchor="median")
    with pytest.raises(ValueError):
        SteppingConfig(max_iterations=0)
    assert SteppingConfig(seed=3).chain(9).seed == 9


def test_partial_stepping_from_far_start(beta_half_grid):
    trace = partial_stepping(beta_half_grid, np.array([0.0, 0.0, 0.0]),
                             config=SteppingConfig(seed=2))
    assert trace.converged and trace.stop_reason == "converged"
    assert trace.gammas[-2:].tolist() == [1.0, 1.0]
    assert trace.theta_final[-1] == pytest.approx(0.5, abs=0.1)
    assert trace.mean_t.shape == (len(trace), 3)


def test_mcmcmle_report(beta_half_grid):
    report = mcmcmle(beta_half_grid, config=SteppingConfig(seed=4))
    assert report.method == METHOD_POTTS and report.converged
    assert report.moment_check.passed
    assert report.estimates.beta == pytest.approx(0.5, abs=0.1)
    assert report.observed == suff_stats(beta_half_grid)
    data = json.loads(json.dumps(report.to_dict(include_timing=False)))
    assert "wall_time" not in data and data["trace"]["converged"]
    again = mcmcmle(beta_half_grid, config=SteppingConfig(seed=4))
    assert again.estimates == report.estimates


def test_moment_check_at_exact_mean():
    params = PottsParams((0.0,), 0.3)
    grid = Grid.from_labels([[1, 2, 1], [2, 1, 2], [1, 2, 2]], 2, FREE)
    check = moment_check(grid, params, config=SteppingConfig(check_sample_size=500))
    assert check.sample_size == 500 and check.z.shape == (2,)
    assert set(check.to_dict()) >= {"z", "passed", "seed"}
