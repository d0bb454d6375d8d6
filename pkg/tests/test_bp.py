"""Message passing: hand-unrolled cases, tree exactness, invariances."""

import math

import numpy as np
import pytest

from hclab.bp import bp_fields, bp_init, bp_step, classify, run_bp
from hclab.errors import NumericalDivergence
from hclab.kernel import f_message
from hclab.model import ModelParams, PlantedGraph, params_from_snr, sample_graph
from hclab.oracles import exact_local_marginals


def graph_from_edges(n, edges, members=()):
    u = np.array([e[0] for e in edges], dtype=np.int64)
    v = np.array([e[1] for e in edges], dtype=np.int64)
    membership = np.zeros(n, dtype=bool)
    membership[list(members)] = True
    return PlantedGraph(n=n, u=u, v=v, membership=membership, seed=0,
                        kappa=0.2, a=5.0, b=2.0)


def random_tree(n, rng):
    """Uniform labeled tree from a random parent attachment."""
    edges = []
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.append((min(u, v), max(u, v)))
    return sorted(edges)


class TestInit:
    def test_free_symmetric(self):
        p = ModelParams(n=3, a=4.0, b=2.0, kappa=0.5)
        g = graph_from_edges(3, [(0, 1), (1, 2)])
        st = bp_init(g, p, "free")
        assert np.all(st.msg == 0.0)

    def test_free_small_fraction(self):
        p = ModelParams(n=3, a=4.0, b=2.0, kappa=0.005)
        g = graph_from_edges(3, [(0, 1)])
        st = bp_init(g, p, "free")
        assert np.allclose(st.msg, math.log(0.005 / 0.995))

    def test_plus_empty_hidden_set(self):
        p = ModelParams(n=4, a=4.0, b=2.0, kappa=0.2)
        g = graph_from_edges(4, [(0, 1), (1, 2), (2, 3)])
        st = bp_init(g, p, "plus")
        assert np.all(st.msg == -np.inf)
        st = bp_step(st)
        assert np.allclose(bp_fields(st), p.h)

    def test_plus_signs_follow_membership(self):
        p = ModelParams(n=2, a=4.0, b=2.0, kappa=0.2)
        g = graph_from_edges(2, [(0, 1)], members=(0,))
        st = bp_init(g, p, "plus")
        assert st.msg[0] == np.inf    # 0 -> 1
        assert st.msg[1] == -np.inf   # 1 -> 0


class TestStep:
    def test_isolated_vertex_field(self):
        p = ModelParams(n=3, a=4.0, b=2.0, kappa=0.3)
        g = graph_from_edges(3, [(0, 1)])
        st = bp_init(g, p, "free")
        for _ in range(5):
            st = bp_step(st)
        assert bp_fields(st)[2] == pytest.approx(p.h)

    def test_single_edge_hand_unrolled(self):
        p = ModelParams(n=2, a=4.0, b=2.0, kappa=0.5)
        g = graph_from_edges(2, [(0, 1)])
        st = bp_step(bp_init(g, p, "free"))
        # one step: message = h + (empty neighbor sum)
        assert np.allclose(st.msg, p.h)
        st = bp_step(st)
        assert np.allclose(st.msg, p.h)  # degree-1 cavity stays at h
        want_field = p.h + f_message(p.h, p.rho)
        assert np.allclose(bp_fields(st), want_field)

    def test_two_step_path_hand_unrolled(self):
        p = ModelParams(n=3, a=6.0, b=2.0, kappa=0.4)
        g = graph_from_edges(3, [(0, 1), (1, 2)])
        st = bp_init(g, p, "free")
        m0 = math.log(0.4 / 0.6)
        st = bp_step(st)
        st = bp_step(st)
        # center vertex: both incoming cavity messages are h + f(m0... after
        # two sync steps the leaf->center message is h + f(h) (leaf cavity
        # saw h after step 1)
        leaf_to_center = p.h + f_message(p.h, p.rho)
        want_center = p.h + 2 * f_message(leaf_to_center, p.rho)
        assert bp_fields(st)[1] == pytest.approx(want_center, rel=1e-12)

    def test_order_independence(self):
        p = params_from_snr(0.2, 4.0, 0.6, 60)
        g = sample_graph(p, seed=9)
        fields1, est1, _ = run_bp(g, p, t=4)
        perm = np.random.default_rng(0).permutation(g.num_edges)
        g2 = PlantedGraph(n=g.n, u=g.u[perm], v=g.v[perm], membership=g.membership,
                          seed=g.seed, kappa=g.kappa, a=g.a, b=g.b)
        fields2, est2, _ = run_bp(g2, p, t=4)
        assert np.allclose(fields1, fields2, rtol=1e-12, atol=1e-12)

    def test_zero_snr_fields_collapse_to_h(self):
        p = ModelParams(n=200, a=3.0, b=3.0, kappa=0.3)
        g = sample_graph(p, seed=2)
        fields, est, _ = run_bp(g, p, t=6)
        assert np.allclose(fields, p.h, atol=1e-12)

    def test_damping_validation(self):
        p = ModelParams(n=2, a=4.0, b=2.0, kappa=0.5)
        g = graph_from_edges(2, [(0, 1)])
        with pytest.raises(ValueError):
            bp_step(bp_init(g, p, "free"), damping=1.5)

    def test_nan_aborts(self):
        p = ModelParams(n=2, a=4.0, b=2.0, kappa=0.5)
        g = graph_from_edges(2, [(0, 1)])
        st = bp_init(g, p, "free")
        st.msg[0] = np.nan
        with pytest.raises(NumericalDivergence):
            bp_step(st)


class TestClassify:
    def test_all_infinite_fields(self):
        p = ModelParams(n=2, a=4.0, b=2.0, kappa=0.2)
        g = graph_from_edges(2, [(0, 1)], members=(0, 1))
        st = bp_init(g, p, "plus")
        assert classify(st).all()

    def test_rules_coincide_at_half(self):
        p = params_from_snr(0.5, 3.0, 0.8, 300)
        g = sample_graph(p, seed=1)
        _, _, st = run_bp(g, p, t=3)
        assert np.array_equal(classify(st, "max_psucc"), classify(st, "min_errors"))


class TestTreeExactness:
    def test_fields_equal_enumeration_on_trees(self):
        rng = np.random.default_rng(42)
        for trial in range(25):
            n = int(rng.integers(2, 13))
            g = graph_from_edges(n, random_tree(n, rng))
            p = ModelParams(
                n=n,
                a=float(rng.uniform(2.0, 9.0)),
                b=float(rng.uniform(0.5, 2.0)),
                kappa=float(rng.uniform(0.05, 0.6)),
            )
            fields, _, _ = run_bp(g, p, t=n)
            want = exact_local_marginals(g, p)
            assert np.allclose(fields, want, atol=1e-10), (trial, n)
