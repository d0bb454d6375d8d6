"""Parameterization, graph sampling, success metric, and file round-trips."""

import itertools
import math

import numpy as np
import pytest

from hclab.errors import GuardError
from hclab.model import (
    ModelParams,
    count_edges_within,
    empirical_psucc,
    params_from_snr,
    read_graph,
    sample_graph,
    snr,
    write_graph,
)


class TestParams:
    def test_zero_snr_gives_equal_intensities(self):
        p = params_from_snr(0.3, 5.0, 0.0, 1000)
        assert p.a == p.b

    def test_inversion_reevaluates(self):
        p = params_from_snr(0.005, 100.0, 0.3, 10**6)
        want = 100.0 + math.sqrt(0.3 * 0.995 * 100.0) / 0.005
        assert p.a == pytest.approx(want, rel=1e-14)
        assert snr(p) == pytest.approx(0.3, rel=1e-12)

    def test_degree_gap_identity(self):
        p = params_from_snr(0.5, 4.0, 2.0, 10**4)
        gap = p.deg_in - p.deg_out
        assert gap == pytest.approx(math.sqrt(2.0 * 0.5 * 4.0), rel=1e-12)

    def test_roundtrip_grid(self):
        for kappa, b, lam in itertools.product(
            (0.005, 0.05, 0.4), (1.0, 30.0, 100.0), (0.01, 0.3, 1.0)
        ):
            p = params_from_snr(kappa, b, lam, None)
            assert snr(p) == pytest.approx(lam, rel=1e-12)

    def test_supercritical_guard(self):
        with pytest.raises(GuardError, match="supercritical"):
            params_from_snr(0.005, 100.0, 0.3, 500)

    def test_derived_quantities(self):
        p = ModelParams(n=100, a=8.0, b=2.0, kappa=0.25)
        assert p.rho == 4.0
        assert p.deg_out == 2.0
        assert p.deg_in == pytest.approx(0.25 * 8.0 + 0.75 * 2.0)
        assert p.gamma == pytest.approx(math.exp(-0.25 * 6.0) / 3.0)

    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            ModelParams(n=10, a=1.0, b=2.0, kappa=0.1)


class TestSampling:
    def test_empty_graph(self):
        g = sample_graph(ModelParams(n=50, a=0.0, b=0.0, kappa=0.3), seed=1)
        assert g.num_edges == 0

    def test_complete_graph_corner(self):
        n = 40
        g = sample_graph(ModelParams(n=n, a=n, b=n, kappa=1.0), seed=1)
        assert g.num_edges == n * (n - 1) // 2

    def test_pure_background_corner(self):
        g = sample_graph(ModelParams(n=3000, a=5.0, b=5.0, kappa=0.0), seed=3)
        mean = 3000 * 2999 / 2 * (5.0 / 3000)
        assert abs(g.num_edges - mean) < 5 * math.sqrt(mean)
        assert not g.membership.any()

    def test_reproducible(self):
        p = params_from_snr(0.05, 8.0, 0.5, 2000)
        g1 = sample_graph(p, seed=99)
        g2 = sample_graph(p, seed=99)
        assert np.array_equal(g1.u, g2.u)
        assert np.array_equal(g1.v, g2.v)
        assert np.array_equal(g1.membership, g2.membership)

    def test_edges_sorted_and_unique(self):
        p = params_from_snr(0.1, 10.0, 1.0, 500)
        g = sample_graph(p, seed=5)
        assert np.all(g.u < g.v)
        keys = g.u * g.n + g.v
        assert np.all(np.diff(keys) > 0)

    def test_degree_means(self):
        # member/non-member degrees concentrate on their Poisson means
        p = params_from_snr(0.005, 100.0, 0.3, 100_000)
        din, dout, nm = [], [], 0
        for seed in range(3):
            g = sample_graph(p, seed=seed)
            deg = g.degrees()
            din.append(deg[g.membership].mean())
            dout.append(deg[~g.membership].mean())
            nm += int(g.membership.sum())
        sd_out = math.sqrt(p.deg_out / (3 * 99_000))
        sd_in = math.sqrt(p.deg_in / nm)
        assert abs(np.mean(dout) - p.deg_out) < 4 * sd_out
        assert abs(np.mean(din) - p.deg_in) < 4 * sd_in

    def test_edge_count_concentrates(self):
        p = params_from_snr(0.05, 20.0, 0.5, 5000)
        counts = [sample_graph(p, seed=s).num_edges for s in range(8)]
        npairs = 5000 * 4999 / 2
        mean = npairs * (20.0 / 5000)  # member pairs are a tiny correction
        assert abs(np.mean(counts) - mean) < 4 * math.sqrt(mean / 8) + 60

    def test_fixed_size_mode(self):
        p = params_from_snr(0.1, 5.0, 0.2, 1000)
        g = sample_graph(p, seed=11, fixed_size=True)
        assert int(g.membership.sum()) == 100

    def test_within_set_rate(self):
        # pairs inside the planted set appear at rate a/n
        p = ModelParams(n=400, a=200.0, b=1.0, kappa=0.5)
        hits, pairs = 0, 0
        for seed in range(6):
            g = sample_graph(p, seed=seed)
            m = int(g.membership.sum())
            pairs += m * (m - 1) // 2
            hits += count_edges_within(g, g.membership)
        rate = 200.0 / 400
        assert abs(hits - rate * pairs) < 4 * math.sqrt(pairs * rate * (1 - rate))

    def test_adjacency_views_consistent(self):
        p = params_from_snr(0.2, 6.0, 0.4, 300)
        g = sample_graph(p, seed=2)
        from_edges = {(int(x), int(y)) for x, y in zip(g.u, g.v)}
        from_csr = set()
        for i in range(g.n):
            for j in g.neighbors(i):
                from_csr.add((min(i, int(j)), max(i, int(j))))
        assert from_edges == from_csr


class TestSuccessMetric:
    def test_perfect(self):
        truth = np.array([True, False, True, False])
        assert empirical_psucc(truth, truth) == 1.0

    def test_constant_is_trivial(self):
        truth = np.array([True, False, True, False])
        assert empirical_psucc(np.zeros(4, bool), truth) == 0.0
        assert empirical_psucc(np.ones(4, bool), truth) == 0.0

    def test_complement_is_worst(self):
        truth = np.array([True, False, False])
        assert empirical_psucc(~truth, truth) == -1.0

    def test_permutation_invariant(self):
        rng = np.random.default_rng(0)
        truth = rng.random(200) < 0.3
        truth[0] = True
        truth[1] = False
        est = rng.random(200) < 0.5
        perm = rng.permutation(200)
        assert empirical_psucc(est, truth) == pytest.approx(
            empirical_psucc(est[perm], truth[perm])
        )

    def test_degenerate_truth(self):
        with pytest.raises(ValueError, match="degenerate ground truth"):
            empirical_psucc(np.ones(5, bool), np.ones(5, bool))


class TestEdgeCounting:
    def test_empty_and_singleton(self):
        p = params_from_snr(0.2, 4.0, 0.3, 100)
        g = sample_graph(p, seed=0)
        assert count_edges_within(g, np.array([], dtype=np.int64)) == 0
        assert count_edges_within(g, np.array([3])) == 0

    def test_full_set(self):
        p = params_from_snr(0.2, 4.0, 0.3, 100)
        g = sample_graph(p, seed=0)
        assert count_edges_within(g, np.arange(100)) == g.num_edges

    def test_matches_pairwise_bruteforce(self):
        p = params_from_snr(0.3, 4.0, 0.5, 10)
        g = sample_graph(p, seed=4)
        edges = {(int(x), int(y)) for x, y in zip(g.u, g.v)}
        rng = np.random.default_rng(1)
        for _ in range(20):
            sub = np.flatnonzero(rng.random(10) < 0.5)
            want = sum(
                1 for i, j in itertools.combinations(sub.tolist(), 2) if (i, j) in edges
            )
            assert count_edges_within(g, sub) == want

    def test_out_of_range(self):
        p = params_from_snr(0.2, 4.0, 0.3, 50)
        g = sample_graph(p, seed=0)
        with pytest.raises(ValueError, match="invalid subset"):
            count_edges_within(g, np.array([50]))


class TestGraphFile:
    def test_bit_exact_roundtrip(self, tmp_path):
        p = params_from_snr(0.1, 7.0, 0.37, 400)
        g = sample_graph(p, seed=123456789)
        path = tmp_path / "g.txt"
        write_graph(g, path)
        h = read_graph(path)
        assert h.n == g.n and h.seed == g.seed
        assert h.kappa == g.kappa and h.a == g.a and h.b == g.b
        assert np.array_equal(h.membership, g.membership)
        assert np.array_equal(h.u, g.u) and np.array_equal(h.v, g.v)
        path2 = tmp_path / "g2.txt"
        write_graph(h, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_empty_graph_roundtrip(self, tmp_path):
        g = sample_graph(ModelParams(n=5, a=0.0, b=0.0, kappa=0.4), seed=7)
        write_graph(g, tmp_path / "e.txt")
        h = read_graph(tmp_path / "e.txt")
        assert h.num_edges == 0 and h.n == 5
