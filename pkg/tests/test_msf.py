import itertools
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from noisymst.graph import DisjointSets, SimpleGraph, components, conn_edges
from noisymst.msf import (DuplicateWeightError, JointAssignment, WeightedEdgeList,
                          joint_msf_from_sample, k_infinity, k_infinity_joint, kruskal_msf,
                          reverse_delete_msf)
from noisymst.sampler import NoiseParameters, critical_p, derive_graphs, sample_coupled

from conftest import complete, cycle, random_graph, random_tree


def keyset(g):
    return frozenset(g.keys.tolist())


def brute_msf(g, w):
    """Lightest spanning forest by enumerating all edge subsets of the right size."""
    edges = [tuple(e) for e in g.edges.tolist()]
    target = g.n - components(g).count
    best, best_w = None, np.inf
    for sub in itertools.combinations(range(len(edges)), target):
        ds = DisjointSets(g.n)
        if all(ds.union(*edges[i]) for i in sub):
            total = sum(w[i] for i in sub)
            if total < best_w:
                best, best_w = sub, total
    return frozenset(g.keys[list(best)].tolist()) if best else frozenset()


def forest_invariants(g, f):
    assert keyset(f) <= keyset(g)
    assert f.m == g.n - components(g).count
    assert np.array_equal(components(f).labels, components(g).labels)


class TestKruskal:
    def test_square_with_diagonal(self):
        g = SimpleGraph(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])
        f = kruskal_msf(WeightedEdgeList(g, [0.1, 0.2, 0.3, 0.4, 0.5]))
        assert sorted(map(tuple, f.edges.tolist())) == [(0, 1), (1, 2), (2, 3)]

    def test_tree_is_returned_unchanged(self, rng):
        t = random_tree(rng, 12)
        assert keyset(kruskal_msf(WeightedEdgeList(t, rng.random(t.m)))) == keyset(t)

    def test_rejects_ties(self):
        g = SimpleGraph(3, cycle(3))
        with pytest.raises(DuplicateWeightError):
            kruskal_msf(WeightedEdgeList(g, [0.5, 0.5, 0.1]))

    def test_matches_enumeration(self, rng):
        for _ in range(150):
            n = int(rng.integers(2, 8))
            g = random_graph(rng, n, rng.uniform(0.2, 0.8))
            w = rng.random(g.m)
            f = kruskal_msf(WeightedEdgeList(g, w))
            forest_invariants(g, f)
            assert keyset(f) == brute_msf(g, w)


class TestReverseDelete:
    def test_matches_kruskal(self, rng):
        for _ in range(300):
            n = int(rng.integers(2, 30))
            g = random_graph(rng, n, rng.uniform(0.05, 0.5))
            w = WeightedEdgeList(g, rng.random(g.m))
            assert keyset(reverse_delete_msf(w)) == keyset(kruskal_msf(w))

    def test_index_ties_agree(self):
        g = SimpleGraph(4, complete(4))
        w = WeightedEdgeList(g, [0.3, 0.3, 0.1, 0.3, 0.2, 0.2])
        assert keyset(reverse_delete_msf(w, ties="index")) == keyset(kruskal_msf(w, ties="index"))


class TestKInfinity:
    def test_tree_untouched(self, rng):
        t = random_tree(rng, 20)
        assert k_infinity(t, rng) is t

    def test_cycle_drops_uniform_edge(self):
        k = 5
        g = SimpleGraph(k, cycle(k))
        gen = np.random.default_rng(3)
        counts = Counter()
        for _ in range(20000):
            f = k_infinity(g, gen)
            missing = keyset(g) - keyset(f)
            assert len(missing) == 1
            counts[next(iter(missing))] += 1
        assert stats.chisquare(list(counts.values())).pvalue > 0.01

    def test_invariants_on_random_graphs(self, rng):
        for seed in range(50):
            g = random_graph(rng, 25, 0.12)
            forest_invariants(g, k_infinity(g, seed))

    def test_seeded_is_deterministic(self, rng):
        g = random_graph(rng, 40, 0.1)
        assert keyset(k_infinity(g, 7)) == keyset(k_infinity(g, 7))

    def test_k4_matches_kruskal_law(self):
        g = SimpleGraph(4, complete(4))
        gen = np.random.default_rng(4)
        draws = 20000
        a = Counter(keyset(k_infinity(g, gen)) for _ in range(draws))
        b = Counter(keyset(kruskal_msf(WeightedEdgeList(g, gen.random(6)))) for _ in range(draws))
        trees = sorted(set(a) | set(b), key=sorted)
        assert len(trees) == 16
        table = np.array([[a[t] for t in trees], [b[t] for t in trees]])
        assert stats.chi2_contingency(table)[1] > 0.01


class TestJointKernel:
    def test_assignment_validation(self):
        g = SimpleGraph(3, cycle(3))
        with pytest.raises(ValueError):
            JointAssignment(g, g, frozenset(g.keys.tolist()), [0.1, 0.2, 0.3], [0.1, 0.2, 0.4])
        with pytest.raises(ValueError):
            JointAssignment.random(g, SimpleGraph(3, [(0, 1)]), g.keys.tolist(), 1)

    def test_shared_all_identity(self):
        # same cycle structure (theta on 0..3), different pendant trees
        core = cycle(4) + [(0, 2)]
        g1 = SimpleGraph(7, core + [(3, 4), (4, 5)])
        g2 = SimpleGraph(7, core + [(1, 6), (2, 5)])
        h = keyset(SimpleGraph(7, core))
        gen = np.random.default_rng(5)
        for _ in range(500):
            m1, m2 = k_infinity_joint(g1, g2, h, gen)
            removed = keyset(g1) - keyset(m1)
            assert keyset(m2) == keyset(g2) - removed
            forest_invariants(g1, m1)
            forest_invariants(g2, m2)

    def test_no_sharing_is_independent(self):
        g = SimpleGraph(4, cycle(4))
        gen = np.random.default_rng(6)
        pairs = [k_infinity_joint(g, g, (), gen) for _ in range(8000)]
        x = [min(keyset(g) - keyset(a)) for a, _ in pairs]
        y = [min(keyset(g) - keyset(b)) for _, b in pairs]
        table = np.zeros((4, 4))
        idx = {k: i for i, k in enumerate(sorted(keyset(g)))}
        for a, b in zip(x, y):
            table[idx[a], idx[b]] += 1
        assert stats.chi2_contingency(table)[1] > 0.01

    def test_each_marginal_is_k_infinity(self):
        g1 = SimpleGraph(4, complete(4))
        g2 = SimpleGraph(4, cycle(4))
        h = keyset(g1) & keyset(g2)
        gen = np.random.default_rng(7)
        joint = Counter(keyset(k_infinity_joint(g1, g2, list(h)[:2], gen)[1]) for _ in range(8000))
        single = Counter(keyset(k_infinity(g2, gen)) for _ in range(8000))
        trees = sorted(set(joint) | set(single), key=sorted)
        table = np.array([[joint[t] for t in trees], [single[t] for t in trees]])
        assert stats.chi2_contingency(table)[1] > 0.01


class TestJointFromSample:
    def test_no_noise_gives_identical_forests(self):
        n = 2000
        p = critical_p(n, 0.0)
        s = sample_coupled(NoiseParameters(n=n, epsilon=0.0, p_horizon=p, lam=0.0), seed=1)
        r = joint_msf_from_sample(derive_graphs(s, p), s)
        assert keyset(r.m) == keyset(r.m_eps)
        assert r.j_size == conn_edges(r.derived.g).size

    def test_matches_kruskal_on_whole_graph(self):
        n = 3000
        p = critical_p(n, 1.0)
        s = sample_coupled(NoiseParameters(n=n, epsilon=0.3, p_horizon=p, lam=1.0), seed=2)
        d = derive_graphs(s, p)
        r = joint_msf_from_sample(d, s)
        assert keyset(r.m) == keyset(kruskal_msf(WeightedEdgeList(d.g, s.w[d.g_index])))
        assert keyset(r.m_eps) == keyset(kruskal_msf(WeightedEdgeList(d.g_eps, s.w_eps[d.g_eps_index])))
        forest_invariants(d.g, r.m)
        forest_invariants(d.g_eps, r.m_eps)
        conn1 = set(d.g.keys[conn_edges(d.g)].tolist())
        conn2 = set(d.g_eps.keys[conn_edges(d.g_eps)].tolist())
        assert set(r.j_set.tolist()) == conn1 & conn2
