"""Exhaustive search, enumeration marginals, and the search bound."""

import itertools
import math

import numpy as np
import pytest

from hclab.errors import GuardError
from hclab.model import ModelParams, PlantedGraph, count_edges_within, params_from_snr, sample_graph
from hclab.oracles import (
    exact_local_marginals,
    exact_posterior_marginals,
    exhaustive_search,
    prop1_bound,
    prop1_bound_infinite_degree,
)


def graph_from_edges(n, edges, members=()):
    u = np.array([e[0] for e in edges], dtype=np.int64)
    v = np.array([e[1] for e in edges], dtype=np.int64)
    membership = np.zeros(n, dtype=bool)
    membership[list(members)] = True
    return PlantedGraph(n=n, u=u, v=v, membership=membership, seed=0,
                        kappa=max(len(members), 1) / n, a=2.0, b=1.0)


class TestExhaustiveSearch:
    def test_planted_triangle(self):
        g = graph_from_edges(6, [(0, 1), (0, 2), (1, 2)], members=(0, 1, 2))
        res = exhaustive_search(g, 3)
        assert res.best_edge_count == 3
        assert list(res.best_set) == [0, 1, 2]
        assert res.overlap == 3

    def test_empty_graph_tiebreak(self):
        g = graph_from_edges(5, [], members=(1,))
        res = exhaustive_search(g, 2)
        assert list(res.best_set) == [0, 1]
        assert res.best_edge_count == 0
        assert res.ties == math.comb(5, 2)

    def test_matches_naive_reenumeration(self):
        p = params_from_snr(0.3, 3.0, 0.8, 12)
        for seed in range(12):
            g = sample_graph(p, seed=seed, fixed_size=True)
            res = exhaustive_search(g, 4)
            best = None
            for comb in itertools.combinations(range(12), 4):
                cnt = count_edges_within(g, np.array(comb))
                if best is None or cnt > best[0]:
                    best = (cnt, comb)
            assert res.best_edge_count == best[0]
            assert tuple(res.best_set) == best[1]

    def test_beats_planted_set(self):
        p = ModelParams(n=16, a=14.0, b=2.0, kappa=0.25)
        for seed in range(10):
            g = sample_graph(p, seed=seed, fixed_size=True)
            res = exhaustive_search(g, 4)
            assert res.best_edge_count >= count_edges_within(g, g.membership)

    def test_guard(self):
        g = graph_from_edges(60, [])
        with pytest.raises(GuardError, match="instance too large"):
            exhaustive_search(g, 25)


class TestProp1Bound:
    def test_direct_evaluation(self):
        want = 1.0 - (2 * math.e / math.sqrt(0.001)) * math.exp(-0.5 * 0.999 / 0.016)
        got = prop1_bound_infinite_degree(0.5, 0.001)
        assert got == pytest.approx(want, rel=1e-12)
        assert got > 0.999999

    def test_vacuous_reported_not_clamped(self):
        assert prop1_bound_infinite_degree(0.5, 0.01) < 0.0

    def test_small_fraction_limit(self):
        vals = [prop1_bound_infinite_degree(0.2, k) for k in (2e-3, 1e-3, 5e-4)]
        assert vals[0] < vals[1] < vals[2] <= 1.0
        assert vals[2] > 1 - 1e-6
        # floor saturates to 1 within float precision as kappa -> 0
        assert prop1_bound_infinite_degree(0.2, 1e-6) == 1.0

    def test_finite_degree_form(self):
        lam, kappa, a, b = 0.5, 0.01, 1500.0, 100.0
        want = 1 - (2 * math.e / math.sqrt(kappa)) * math.exp(
            -lam * (1 - kappa) * b / (16 * kappa * a)
        )
        assert prop1_bound(lam, kappa, a, b) == pytest.approx(want, rel=1e-12)

    def test_monotonicity(self):
        ks = [0.01, 0.02, 0.05, 0.1]
        for k1, k2 in zip(ks, ks[1:]):
            assert prop1_bound_infinite_degree(0.9, k1) >= prop1_bound_infinite_degree(0.9, k2)
        lams = [0.1, 0.5, 1.0, 3.0]
        for l1, l2 in zip(lams, lams[1:]):
            assert prop1_bound_infinite_degree(l1, 0.02) <= prop1_bound_infinite_degree(l2, 0.02)
        assert prop1_bound(0.5, 0.01, 1500.0, 100.0) <= prop1_bound(0.5, 0.01, 1500.0, 200.0)

    def test_hypothesis_guard(self):
        with pytest.raises(ValueError, match="outside proposition hypothesis"):
            prop1_bound_infinite_degree(0.5, 0.6)


def brute_force_marginals(n, edges, log_vertex, log_edge, log_pair_all=0.0):
    """Plain dict-based enumeration, independent of the vectorized path."""
    weights = {}
    for state in range(1 << n):
        bits = [(state >> i) & 1 for i in range(n)]
        pop = sum(bits)
        e_in = sum(1 for i, j in edges if bits[i] and bits[j])
        weights[state] = (
            pop * log_vertex + pop * (pop - 1) / 2 * log_pair_all + e_in * log_edge
        )
    out = []
    for i in range(n):
        num = [w for s, w in weights.items() if (s >> i) & 1]
        den = [w for s, w in weights.items() if not (s >> i) & 1]
        lse = lambda ws: max(ws) + math.log(sum(math.exp(w - max(ws)) for w in ws))
        out.append(lse(num) - lse(den))
    return np.array(out)


class TestLocalMarginals:
    def test_empty_graph_is_field(self):
        p = ModelParams(n=4, a=6.0, b=2.0, kappa=0.2)
        g = graph_from_edges(4, [])
        xi = exact_local_marginals(g, p)
        assert np.allclose(xi, p.h, atol=1e-12)

    def test_single_edge_hand_formula(self):
        p = ModelParams(n=2, a=6.0, b=2.0, kappa=0.2)
        g = graph_from_edges(2, [(0, 1)])
        xi = exact_local_marginals(g, p)
        gamma, rho = p.gamma, p.rho
        want = math.log(gamma * (1 + rho * gamma) / (1 + gamma))
        assert xi[0] == pytest.approx(want, rel=1e-12)
        assert xi[1] == pytest.approx(want, rel=1e-12)

    def test_matches_plain_enumeration(self):
        p = ModelParams(n=7, a=5.0, b=2.0, kappa=0.3)
        edges = [(0, 1), (1, 2), (2, 3), (3, 0), (2, 4), (4, 5), (5, 6), (1, 6)]
        g = graph_from_edges(7, edges)
        want = brute_force_marginals(
            7, edges, math.log(p.gamma), math.log(p.rho)
        )
        assert np.allclose(exact_local_marginals(g, p), want, atol=1e-10)

    def test_enumeration_guard(self):
        p = ModelParams(n=21, a=2.0, b=1.0, kappa=0.2)
        g = graph_from_edges(21, [])
        with pytest.raises(GuardError, match="enumeration guard"):
            exact_local_marginals(g, p)


class TestPosteriorMarginals:
    def test_uninformative_when_intensities_equal(self):
        p = ModelParams(n=8, a=3.0, b=3.0, kappa=0.15)
        g = sample_graph(p, seed=3)
        xi = exact_posterior_marginals(g, p)
        assert np.allclose(xi, math.log(0.15 / 0.85), atol=1e-9)

    def test_matches_plain_enumeration(self):
        n = 6
        p = ModelParams(n=n, a=4.0, b=1.5, kappa=0.25)
        edges = [(0, 1), (1, 2), (0, 2), (3, 4), (2, 5)]
        g = graph_from_edges(n, edges)
        log_rho_n = math.log(p.a / p.b) + math.log1p(-p.b / n) - math.log1p(-p.a / n)
        want = brute_force_marginals(
            n,
            edges,
            math.log(p.kappa / (1 - p.kappa)),
            log_rho_n,
            log_pair_all=math.log1p(-p.a / n) - math.log1p(-p.b / n),
        )
        assert np.allclose(exact_posterior_marginals(g, p), want, atol=1e-10)

    def test_agrees_with_local_when_intensities_equal(self):
        p = ModelParams(n=9, a=2.5, b=2.5, kappa=0.3)
        g = sample_graph(p, seed=8)
        xi_post = exact_posterior_marginals(g, p)
        xi_loc = exact_local_marginals(g, p)
        assert np.allclose(xi_post, xi_loc, atol=1e-9)
