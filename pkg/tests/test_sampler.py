import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from noisymst.sampler import (NoiseParameters, critical_p, derive_graphs, edge_to_pair_index,
                              extend_horizon, inclusion_probability, load_sample, pair_index_to_edge,
                              rho, sample_coupled, sample_until_connected, save_sample, theta)


def mc_triples(rng, size, eps):
    w = rng.random(size)
    b = rng.random(size) < eps
    w_eps = np.where(b, rng.random(size), w)
    return w, b, w_eps


class TestClosedForms:
    def test_inclusion_trivial_cases(self):
        assert inclusion_probability(0.5, 0.0) == 0.5
        for eps in (0.0, 0.3, 1.0):
            assert inclusion_probability(1.0, eps) == 1.0

    def test_inclusion_against_monte_carlo(self):
        rng = np.random.default_rng(1)
        size = 10**7
        w, _, w_eps = mc_triples(rng, size, 0.5)
        freq = np.mean(np.minimum(w, w_eps) <= 0.5)
        q = inclusion_probability(0.5, 0.5)
        assert q == pytest.approx(0.625)
        assert abs(freq - q) <= 3 * math.sqrt(q * (1 - q) / size)

    def test_rho_examples(self):
        assert rho(0.3, 0.0) == 0.0
        assert rho(0.5, 0.5) == pytest.approx(0.2)
        assert rho(1e-9, 0.4) / 1e-9 == pytest.approx(0.4, rel=1e-6)
        with pytest.raises(ValueError):
            rho(1.0, 0.0)

    def test_rho_against_monte_carlo(self):
        rng = np.random.default_rng(2)
        size = 10**7
        w, _, w_eps = mc_triples(rng, size, 0.5)
        in_g, in_ge = w <= 0.5, w_eps <= 0.5
        outside = ~(in_g & in_ge)
        m = int(outside.sum())
        freq = in_g[outside].mean()
        r = rho(0.5, 0.5)
        assert abs(freq - r) <= 3 * math.sqrt(r * (1 - r) / m)

    def test_critical_p(self):
        assert critical_p(1000, 0.0) == pytest.approx(1e-3)
        assert critical_p(1000, 2.0) == pytest.approx(1e-3 + 2e-4)


class TestParameters:
    def test_validation(self):
        with pytest.raises(ValueError):
            NoiseParameters(n=10, epsilon=1.5, p_horizon=0.1)
        with pytest.raises(ValueError):
            NoiseParameters(n=10, epsilon=0.1, p_horizon=0.0)
        with pytest.raises(ValueError):
            NoiseParameters(n=100, epsilon=0.1, p_horizon=0.001, lam=0.0)  # p(n, 0) = 0.01 > horizon


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 10**6).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n * (n - 1) // 2 - 1))))
def test_pair_numbering_round_trip(case):
    n, k = case
    u, v = pair_index_to_edge(np.array([k]), n)
    assert 0 <= u[0] < v[0] < n
    assert edge_to_pair_index(u, v, n)[0] == k


class TestSampleCoupled:
    def test_two_vertices_full_horizon(self):
        s = sample_coupled(NoiseParameters(n=2, epsilon=0.5, p_horizon=1.0), seed=3)
        assert len(s) == 1
        assert s.triples()[0].edge == (0, 1)

    def test_edge_count_within_three_sigma(self):
        n = 10**4
        ph = 3 * math.log(n) / n
        q = inclusion_probability(ph, 0.1)
        pairs = n * (n - 1) // 2
        s = sample_coupled(NoiseParameters(n=n, epsilon=0.1, p_horizon=ph), seed=4)
        assert abs(len(s) - pairs * q) <= 3 * math.sqrt(pairs * q * (1 - q))

    def test_deterministic(self):
        params = NoiseParameters(n=500, epsilon=0.3, p_horizon=0.02)
        assert sample_coupled(params, 9).same_as(sample_coupled(params, 9))
        assert not sample_coupled(params, 9).same_as(sample_coupled(params, 10))

    def test_triple_invariants(self):
        s = sample_coupled(NoiseParameters(n=800, epsilon=0.4, p_horizon=0.01), seed=5)
        keys = s.keys
        assert np.all(np.diff(keys) > 0)
        assert np.all(np.minimum(s.w, s.w_eps) <= 0.01)
        assert np.array_equal(s.w_eps[s.b == 0], s.w[s.b == 0])
        assert np.all(np.isnan(s.w_prime[s.b == 0]))

    def test_budget(self):
        with pytest.raises(MemoryError):
            sample_coupled(NoiseParameters(n=10**5, epsilon=0.1, p_horizon=0.5), seed=1)

    def test_pair_frequency_bernoulli(self):
        # ~1.2 * 10^6 pair slots over several seeds
        n, ph = 1600, 0.01
        pairs = n * (n - 1) // 2
        count = slots = 0
        for seed in range(1, 3):
            s = sample_coupled(NoiseParameters(n=n, epsilon=0.3, p_horizon=ph), seed)
            count += derive_graphs(s, ph).g.m
            slots += pairs
        assert abs(count / slots - ph) <= 4 * math.sqrt(ph * (1 - ph) / slots)

    def test_conditional_independence_within_rectangles(self):
        p = 0.02
        s = sample_coupled(NoiseParameters(n=3000, epsilon=0.7, p_horizon=p), seed=6)
        b1 = s.b == 1
        w, wp = s.w[b1], s.w_prime[b1]
        first = w <= p  # w in [0, p], w' free on [0, 1]
        table, _, _ = np.histogram2d(w[first] / p, wp[first], bins=4, range=[[0, 1], [0, 1]])
        assert stats.chi2_contingency(table)[1] > 0.01
        second = ~first  # w in (p, 1], w' in [0, p]
        table, _, _ = np.histogram2d((w[second] - p) / (1 - p), wp[second] / p, bins=4, range=[[0, 1], [0, 1]])
        assert stats.chi2_contingency(table)[1] > 0.01

    def test_conditional_law_of_g_eps_outside_intersection(self):
        n, p, eps = 2000, 0.01, 0.3
        pairs = n * (n - 1) // 2
        hits = trials = 0
        for seed in range(3):
            d = derive_graphs(sample_coupled(NoiseParameters(n=n, epsilon=eps, p_horizon=p), seed), p)
            hits += d.g_eps.m - d.i_cap.m
            trials += pairs - d.i_cap.m
        r = rho(p, eps)
        assert abs(hits / trials - r) <= 4 * math.sqrt(r * (1 - r) / trials)

    def test_sparse_law_matches_dense_sampling(self):
        # conditional w marginal of sampled triples vs. direct simulation of the triple law
        p, eps = 0.05, 0.4
        s = sample_coupled(NoiseParameters(n=400, epsilon=eps, p_horizon=p), seed=11)
        rng = np.random.default_rng(12)
        w, _, w_eps = mc_triples(rng, 2 * 10**6, eps)
        keep = np.minimum(w, w_eps) <= p
        assert stats.ks_2samp(s.w, w[keep]).pvalue > 0.01
        assert stats.ks_2samp(s.w_eps, w_eps[keep]).pvalue > 0.01


class TestDeriveGraphs:
    def test_zero_threshold(self):
        s = sample_coupled(NoiseParameters(n=100, epsilon=0.5, p_horizon=0.05), seed=1)
        d = derive_graphs(s, 0.0)
        assert d.g.m == d.g_eps.m == d.i_cap.m == d.i_check.m == 0

    def test_no_noise(self):
        s = sample_coupled(NoiseParameters(n=300, epsilon=0.0, p_horizon=0.02), seed=1)
        d = derive_graphs(s, 0.015)
        assert d.g == d.g_eps
        assert np.array_equal(d.i_cap.keys, d.g.keys)
        assert np.array_equal(d.i_check.keys, d.g.keys)

    def test_rejects_threshold_above_horizon(self):
        s = sample_coupled(NoiseParameters(n=100, epsilon=0.1, p_horizon=0.05), seed=1)
        with pytest.raises(ValueError):
            derive_graphs(s, 0.06)

    def test_containments(self):
        s = sample_coupled(NoiseParameters(n=500, epsilon=0.5, p_horizon=0.02), seed=2)
        d = derive_graphs(s, 0.015)
        g, ge, ic, ik = (set(x.keys.tolist()) for x in (d.g, d.g_eps, d.i_cap, d.i_check))
        assert ik <= ic <= g and ic <= ge
        assert ic == g & ge
        assert np.all(s.w[d.i_check_index] == s.w_eps[d.i_check_index])

    def test_monotone_in_threshold(self):
        s = sample_coupled(NoiseParameters(n=500, epsilon=0.5, p_horizon=0.02), seed=3)
        lo, hi = derive_graphs(s, 0.005), derive_graphs(s, 0.015)
        for a, b in ((lo.g, hi.g), (lo.g_eps, hi.g_eps), (lo.i_cap, hi.i_cap), (lo.i_check, hi.i_check)):
            assert set(a.keys.tolist()) <= set(b.keys.tolist())

    def test_intersection_density_is_theta(self):
        n, eps = 10**4, 0.3
        p = critical_p(n, 0.0)
        pairs = n * (n - 1) // 2
        s = sample_coupled(NoiseParameters(n=n, epsilon=eps, p_horizon=p, lam=0.0), seed=7)
        th = theta(p, eps)
        assert abs(derive_graphs(s, p).i_cap.m - pairs * th) <= 3 * math.sqrt(pairs * th * (1 - th))


class TestExtendHorizon:
    def test_rejects_non_increase(self):
        s = sample_coupled(NoiseParameters(n=50, epsilon=0.1, p_horizon=0.1), seed=1)
        with pytest.raises(ValueError):
            extend_horizon(s, 0.1, seed=1)

    def test_keeps_existing_triples(self):
        s = sample_coupled(NoiseParameters(n=400, epsilon=0.3, p_horizon=0.01), seed=1)
        e = extend_horizon(s, 0.03, seed=1)
        pos = np.searchsorted(e.keys, s.keys)
        assert np.array_equal(e.keys[pos], s.keys)
        assert np.array_equal(e.w[pos], s.w) and np.array_equal(e.b[pos], s.b)
        assert np.all(np.minimum(e.w, e.w_eps) <= 0.03)
        assert e.params.p_horizon == 0.03 and e.extensions == 1

    def test_edge_increase_without_noise(self):
        n, p, p_new = 2000, 0.005, 0.012
        pairs = n * (n - 1) // 2
        s = sample_coupled(NoiseParameters(n=n, epsilon=0.0, p_horizon=p), seed=2)
        e = extend_horizon(s, p_new, seed=2)
        r = (p_new - p) / (1 - p)
        rest = pairs - len(s)
        assert abs((len(e) - len(s)) - rest * r) <= 3 * math.sqrt(rest * r * (1 - r))

    def test_extended_matches_fresh_ks(self):
        n, eps, p, p_new = 150, 0.3, 0.02, 0.06
        fresh = [len(sample_coupled(NoiseParameters(n=n, epsilon=eps, p_horizon=p_new), 1000 + i))
                 for i in range(200)]
        ext = [len(extend_horizon(sample_coupled(NoiseParameters(n=n, epsilon=eps, p_horizon=p), i), p_new, i))
               for i in range(200)]
        assert stats.ks_2samp(fresh, ext).pvalue > 0.01

    def test_until_connected(self):
        params = NoiseParameters(n=300, epsilon=0.5, p_horizon=0.004)
        s = sample_until_connected(params, seed=3)
        d = derive_graphs(s, s.params.p_horizon)
        from noisymst.graph import components
        assert components(d.g).count == components(d.g_eps).count == 1
        assert s.extensions >= 1


def test_dump_round_trip(tmp_path):
    s = sample_coupled(NoiseParameters(n=300, epsilon=0.4, p_horizon=0.03), seed=8)
    save_sample(s, tmp_path / "s.bin")
    back = load_sample(tmp_path / "s.bin")
    assert back.same_as(s)
