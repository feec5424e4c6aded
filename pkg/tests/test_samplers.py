import numpy as np
import pytest
from scipy import stats

from pottslab.inference import monte_carlo_se
from pottslab.lattice import (FREE, PERIODIC, Grid, PottsParams, TaperingSpec, exact_distribution,
                              state_code, suff_stats)
from pottslab.samplers import (ChainConfig, chain_rng, draw, gibbs_sample, gibbs_sweep, quench,
                               resolve_site_update, sample_like, swendsen_wang_sample,
                               swendsen_wang_step, symmetric_swap, tapered_gibbs_sample)


def state_chisquare(batch, dist):
    codes = np.array([state_code(batch.grid(i)) for i in range(len(batch))])
    probs = dist.state_probabilities()
    observed = np.bincount(codes, minlength=len(probs))
    return stats.chisquare(observed, probs * len(codes)).pvalue


def within_se(batch, dist, z=4.5):
    g = batch.g
    exact = np.append(dist.mean_t[:-1], dist.mean_s)
    return np.all(np.abs(g.mean(axis=0) - exact) <= z * monte_carlo_se(g) + 1e-9)


def test_same_seed_same_output():
    params = PottsParams((0.2, -0.1), 0.6)
    cfg = ChainConfig(sample_size=50, burn_in=20, seed=9, keep_grids=True)
    a = gibbs_sample(5, 4, 3, params, cfg)
    b = gibbs_sample(5, 4, 3, params, cfg)
    np.testing.assert_array_equal(a.t, b.t)
    np.testing.assert_array_equal(a.grids, b.grids)
    c = gibbs_sample(5, 4, 3, params, ChainConfig(sample_size=50, burn_in=20, seed=10))
    assert not np.array_equal(a.t, c.t)


@pytest.mark.parametrize("method", ["gibbs", "swendsen_wang"])
def test_stored_grids_match_statistics(method):
    cfg = ChainConfig(sample_size=40, burn_in=10, seed=3, keep_grids=True, chains=2)
    batch = draw(6, 5, 3, PottsParams((0.3, 0.0), 0.7), cfg, method=method)
    assert len(batch) == 40 and batch.grids.shape == (40, 5, 6)
    assert np.all(batch.t.sum(axis=1) == 30)
    for i in range(len(batch)):
        st_ = suff_stats(batch.grid(i))
        assert st_.t == tuple(batch.t[i]) and st_.s == batch.s[i]


def test_chains_do_not_depend_on_thread_count(monkeypatch):
    cfg = ChainConfig(sample_size=30, burn_in=5, seed=2, chains=3)
    params = PottsParams.zero(2, 0.5)
    monkeypatch.setenv("POTTSLAB_THREADS", "1")
    a = gibbs_sample(4, 4, 2, params, cfg)
    monkeypatch.setenv("POTTSLAB_THREADS", "3")
    b = gibbs_sample(4, 4, 2, params, cfg)
    np.testing.assert_array_equal(a.t, b.t)


def test_symmetric_swap_preserves_concordance():
    rng = np.random.default_rng(5)
    params = PottsParams((1.0, -0.5, 0.2), 0.4)
    g = Grid(rng.integers(4, size=(5, 5)), 4)
    for _ in range(20):
        h = symmetric_swap(g, params, rng)
        assert suff_stats(h).s == suff_stats(g).s
        assert sorted(suff_stats(h).t) == sorted(suff_stats(g).t)
        g = h


def test_single_step_functions_keep_shape():
    rng = np.random.default_rng(1)
    params = PottsParams.zero(3, 0.8)
    g = Grid(rng.integers(3, size=(4, 6)), 3)
    for update in ("metropolis", "heat_bath"):
        h = gibbs_sweep(g, params, rng, update=update)
        assert (h.width, h.height, h.num_colors) == (6, 4, 3)
    assert swendsen_wang_step(g, params, rng).labels.shape == (4, 6)


def test_resolve_site_update():
    assert resolve_site_update("auto", 2) == "heat_bath"
    assert resolve_site_update("auto", 3) == "metropolis"
    assert resolve_site_update("metropolis", 2) == "metropolis"
    with pytest.raises(ValueError):
        resolve_site_update("glauber", 2)


def test_config_validation():
    with pytest.raises(ValueError):
        ChainConfig(sample_size=0)
    with pytest.raises(ValueError):
        ChainConfig(thinning=0)
    with pytest.raises(ValueError):
        ChainConfig(swap_rule="always")
    with pytest.raises(ValueError):
        ChainConfig(site_update="random")
    with pytest.raises(ValueError):
        ChainConfig(seed=-1)
    assert ChainConfig().to_dict()["site_update"] == "auto"


def test_swendsen_wang_rejects_tapering():
    tap = TaperingSpec((0.01,), (8.0,))
    with pytest.raises(ValueError):
        draw(4, 4, 2, PottsParams.zero(2, 0.3), ChainConfig(sample_size=5), tapering=tap,
             method="swendsen_wang")


def test_heat_bath_matches_exact_states():
    # two-by-two free lattice, beta = 0.4: all 16 configurations
    dist = exact_distribution(2, 2, 2, PottsParams.zero(2, 0.4), boundary=FREE)
    cfg = ChainConfig(sample_size=20000, burn_in=100, seed=12, keep_grids=True)
    batch = gibbs_sample(2, 2, 2, PottsParams.zero(2, 0.4), cfg, boundary=FREE)
    assert state_chisquare(batch, dist) > 1e-3


def test_forced_flip_at_two_colors_is_periodic():
    # with K = 2 and beta = 0 every Metropolis proposal is accepted, so each
    # sweep flips every site and the chain alternates deterministically
    cfg = ChainConfig(sample_size=200, burn_in=1, seed=0, site_update="metropolis")
    batch = gibbs_sample(3, 3, 2, PottsParams.zero(2), cfg)
    assert len(np.unique(batch.s)) == 1


@pytest.mark.parametrize("alpha", [(0.2, 0.0), (0.8, -0.4), (0.0, 0.0)])
def test_metropolis_swap_rule_is_unbiased(alpha):
    params = PottsParams(alpha, 0.5)
    dist = exact_distribution(3, 3, 3, params)
    cfg = ChainConfig(sample_size=20000, burn_in=200, seed=21)
    assert within_se(gibbs_sample(3, 3, 3, params, cfg), dist)


def test_threshold_swap_rule_is_biased_with_fields():
    # accepting only favorable relabelings pushes counts toward the strongest field
    params = PottsParams((0.2, 0.0), 0.5)
    dist = exact_distribution(3, 3, 3, params)
    cfg = ChainConfig(sample_size=20000, burn_in=200, seed=21, swap_rule="paper")
    batch = gibbs_sample(3, 3, 3, params, cfg)
    assert batch.t[:, 0].mean() > dist.mean_t[0] + 0.5
    assert not within_se(batch, dist)


def test_gibbs_and_swendsen_wang_agree():
    params = PottsParams.zero(4, 0.5)
    cfg = ChainConfig(sample_size=3000, burn_in=200, seed=8)
    a = gibbs_sample(8, 8, 4, params, cfg).g
    b = swendsen_wang_sample(8, 8, 4, params, cfg).g
    se = np.hypot(monte_carlo_se(a), monte_carlo_se(b))
    assert np.all(np.abs(a.mean(axis=0) - b.mean(axis=0)) <= 4 * se)


def test_zero_tau_tapering_is_bit_identical():
    params = PottsParams((0.2,), 0.6)
    cfg = ChainConfig(sample_size=100, burn_in=30, seed=4, keep_grids=True)
    a = gibbs_sample(5, 5, 2, params, cfg)
    b = tapered_gibbs_sample(5, 5, 2, params, TaperingSpec((0.0,), (3.0,)), cfg)
    np.testing.assert_array_equal(a.grids, b.grids)


def test_tapered_sampler_matches_exact():
    params = PottsParams((0.0, 0.0), 0.9)
    tap = TaperingSpec((0.2, 0.2), (3.0, 3.0))
    dist = exact_distribution(3, 3, 3, params, tap)
    cfg = ChainConfig(sample_size=20000, burn_in=200, seed=14)
    batch = tapered_gibbs_sample(3, 3, 3, params, tap, cfg)
    assert within_se(batch, dist)


def test_sample_like_copies_lattice():
    g = Grid(np.zeros((2, 4), dtype=int), 3, FREE)
    batch = sample_like(g, PottsParams.zero(3), ChainConfig(sample_size=5, burn_in=0))
    assert (batch.width, batch.height, batch.boundary) == (4, 2, FREE)
    with pytest.raises(ValueError):
        batch.grid(0)


def test_quench_is_deterministic_and_coarsens():
    params = PottsParams.zero(3, 1.4)
    a = quench(20, 20, 3, params, 30, chain_rng(1, 0))
    b = quench(20, 20, 3, params, 30, chain_rng(1, 0))
    assert a == b and a.boundary == PERIODIC
    noise = quench(20, 20, 3, params, 0, chain_rng(1, 0))
    assert suff_stats(a).s > suff_stats(noise).s + 200
    with pytest.raises(ValueError):
        quench(20, 20, 3, params, -1, chain_rng(1, 0))


def test_swendsen_wang_matches_exact_states_with_field():
    params = PottsParams((0.3,), 0.6)
    dist = exact_distribution(2, 2, 2, params, boundary=FREE)
    cfg = ChainConfig(sample_size=20000, burn_in=100, seed=17, keep_grids=True)
    batch = swendsen_wang_sample(2, 2, 2, params, cfg, boundary=FREE)
    assert state_chisquare(batch, dist) > 1e-3


def test_tapered_sampler_matches_exact_states():
    params = PottsParams.zero(2)
    tap = TaperingSpec((0.5,), (2.0,))
    dist = exact_distribution(2, 2, 2, params, tap, boundary=FREE)
    cfg = ChainConfig(sample_size=20000, burn_in=100, seed=18, keep_grids=True)
    batch = tapered_gibbs_sample(2, 2, 2, params, tap, cfg, boundary=FREE)
    assert state_chisquare(batch, dist) > 1e-3


def test_free_boundary_mean_concordance():
    params = PottsParams.zero(2, 0.4)
    dist = exact_distribution(3, 3, 2, params, boundary=FREE)
    cfg = ChainConfig(sample_size=20000, burn_in=100, seed=19)
    assert within_se(gibbs_sample(3, 3, 2, params, cfg, boundary=FREE), dist, z=4.0)


def test_strong_tapering_pins_counts_to_center():
    params = PottsParams.zero(4, 1.4)
    tap = TaperingSpec((1.0,) * 3, (225.0,) * 3)
    cfg = ChainConfig(sample_size=300, burn_in=200, seed=20)
    batch = tapered_gibbs_sample(30, 30, 4, params, tap, cfg)
    np.testing.assert_allclose(batch.t[:, :3].mean(axis=0), 225.0, atol=2.0)


def test_exchangeable_colors_without_fields():
    params = PottsParams.zero(3, 0.6)
    cfg = ChainConfig(sample_size=4000, burn_in=200, seed=22)
    t = gibbs_sample(8, 8, 3, params, cfg).t
    mean, se = t.mean(axis=0), monte_carlo_se(t)
    for i in range(3):
        for j in range(i + 1, 3):
            assert abs(mean[i] - mean[j]) <= 4 * np.hypot(se[i], se[j])
