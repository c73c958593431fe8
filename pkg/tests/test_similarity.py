import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drgraph.graph import all_k_neighborhoods, from_edges
from drgraph.similarity import (
    SimilarityParams,
    build_sparse_similarity,
    conditional_similarity_row,
    get_counters,
    precompute_gaussian_table,
    reset_counters,
    search_sigma,
)

from conftest import path_graph, random_graph, star_graph


def row_perplexity(row):
    h = -sum(p * math.log2(p) for _, p in row if p > 0)
    return 2.0 ** h


class TestConditionalRow:
    def test_equal_distances_are_uniform(self):
        for sigma in (0.3, 1.0, 42.0):
            row = conditional_similarity_row([(5, 1), (9, 1)], sigma)
            assert row == [(5, 0.5), (9, 0.5)]

    def test_hand_evaluated_two_distances(self):
        row = dict(conditional_similarity_row([(0, 1), (1, 2)], 1.0))
        want_a = math.exp(-0.5) / (math.exp(-0.5) + math.exp(-2.0))
        assert row[0] == pytest.approx(want_a, abs=1e-12)
        assert row[0] == pytest.approx(0.8176, abs=1e-4)
        assert row[1] == pytest.approx(0.1824, abs=1e-4)

    def test_large_sigma_limit_is_uniform(self):
        row = dict(conditional_similarity_row([(0, 1), (1, 2)], 1e9))
        assert row[0] == pytest.approx(0.5, abs=1e-9)
        assert row[1] == pytest.approx(0.5, abs=1e-9)

    def test_empty_row(self):
        assert conditional_similarity_row([], 1.0) == []

    def test_row_sums_to_one(self):
        row = conditional_similarity_row([(j, 1 + j % 3) for j in range(24)], 0.7)
        assert math.fsum(p for _, p in row) == pytest.approx(1.0, abs=1e-12)

    def test_underflow_falls_back_to_nearest(self):
        row = dict(conditional_similarity_row([(0, 1), (1, 2)], 1e-5))
        assert row[0] == 1.0
        assert row[1] == 0.0

    def test_monotone_in_distance(self):
        for sigma in (0.5, 1.0, 3.0):
            row = conditional_similarity_row([(j, d) for j, d in enumerate([1, 2, 2, 4, 5])],
                                             sigma)
            probs = [p for _, p in row]
            assert all(a >= b - 1e-15 for a, b in zip(probs, probs[1:]))


class TestGaussianTable:
    def test_k1(self):
        sigma = 0.9
        table = precompute_gaussian_table(1, sigma)
        assert table.tolist() == [math.exp(-1.0 / (2 * sigma * sigma))]

    def test_k3_sigma1(self):
        table = precompute_gaussian_table(3, 1.0)
        want = [math.exp(-0.5), math.exp(-2.0), math.exp(-4.5)]
        assert table.tolist() == pytest.approx(want, abs=0)

    def test_row_from_table_is_bitwise_equal(self):
        sigma = 1.37
        row = [(j, d) for j, d in enumerate([1, 3, 2, 3, 1])]
        table = precompute_gaussian_table(3, sigma)
        vals = [table[d - 1] for _, d in row]
        total = math.fsum(vals)
        manual = [v / total for v in vals]
        direct = [p for _, p in conditional_similarity_row(row, sigma)]
        assert direct == manual  # same arithmetic, exact equality


class TestSearchSigma:
    def test_uniform_row_any_sigma_hits_target(self):
        row = [(j, 2) for j in range(4)]
        sigma = search_sigma(row, 4.0)
        out = conditional_similarity_row(row, sigma)
        h = -sum(p * math.log2(p) for _, p in out)
        assert h == 2.0  # exactly two bits

    def test_single_neighbor_returns_one(self):
        assert search_sigma([(3, 1)], 2.0) == 1.0

    def test_grid_search_oracle(self):
        row = [(0, 1), (1, 2), (2, 3)]
        sigma = search_sigma(row, 2.0, tol=1e-5)
        perp = row_perplexity(conditional_similarity_row(row, sigma))
        assert abs(perp - 2.0) <= 1e-3
        # oracle: dense grid over sigma
        grid = np.logspace(-5, 5, 200_001)
        errs = [abs(row_perplexity(conditional_similarity_row(row, s)) - 2.0)
                for s in grid[::1000]]
        assert abs(perp - 2.0) <= min(errs) + 1e-3

    def test_overlarge_target_clamps_to_row_size(self):
        row = [(0, 1), (1, 2), (2, 3)]
        sigma = search_sigma(row, 50.0)
        probs = [p for _, p in conditional_similarity_row(row, sigma)]
        assert probs == pytest.approx([1 / 3] * 3, abs=1e-4)


class TestBuildSparseSimilarity:
    def test_p3_hand_values(self, p3):
        ns = build_sparse_similarity(all_k_neighborhoods(p3, 1))
        entries = {(int(i), int(j)): w
                   for i, j, w in zip(ns.sources(), ns.targets, ns.weights)}
        assert entries[(0, 1)] == pytest.approx(0.25, abs=1e-15)
        assert entries[(1, 0)] == pytest.approx(0.25, abs=1e-15)
        assert entries[(1, 2)] == pytest.approx(0.25, abs=1e-15)
        assert entries[(2, 1)] == pytest.approx(0.25, abs=1e-15)
        assert (0, 2) not in entries
        assert ns.total_mass == pytest.approx(1.0, abs=1e-12)

    def test_single_edge(self):
        g = path_graph(2)
        ns = build_sparse_similarity(all_k_neighborhoods(g, 1))
        assert ns.weights.tolist() == [0.5, 0.5]
        assert ns.total_mass == pytest.approx(1.0, abs=0)

    def test_k1_closed_form_on_random_graphs(self):
        for seed in range(50):
            g = random_graph(40, 70, seed=seed, connect=True)
            ns = build_sparse_similarity(all_k_neighborhoods(g, 1))
            deg = g.degrees
            n = g.node_count
            for i, j, w in zip(ns.sources(), ns.targets, ns.weights):
                want = (1.0 / deg[int(i)] + 1.0 / deg[int(j)]) / (2 * n)
                assert abs(w - want) <= 1e-12

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_global_mass_and_exact_symmetry(self, k):
        g = random_graph(60, 120, seed=k, connect=True)
        params = SimilarityParams(k=k)
        ns = build_sparse_similarity(all_k_neighborhoods(g, k), params)
        assert abs(ns.total_mass - 1.0) <= 1e-9
        entries = {(int(i), int(j)): w
                   for i, j, w in zip(ns.sources(), ns.targets, ns.weights)}
        for (i, j), w in entries.items():
            assert entries[(j, i)] - w == 0.0  # bitwise symmetric

    def test_mass_with_isolated_nodes(self):
        # two isolated nodes appended after a path
        g = from_edges(np.array([[0, 1], [1, 2]]), node_count=5)
        for k in (1, 2):
            ns = build_sparse_similarity(all_k_neighborhoods(g, k),
                                         SimilarityParams(k=k))
            assert abs(ns.total_mass - 1.0) <= 1e-9
            assert ns.row(3)[0].size == 0
            assert ns.row(4)[0].size == 0

    def test_star_k2_auto_perplexity(self):
        g = star_graph(4)
        ns = build_sparse_similarity(all_k_neighborhoods(g, 2),
                                     SimilarityParams(k=2))
        assert abs(ns.total_mass - 1.0) <= 1e-9
        # leaves see the hub at distance 1 and the other leaves at 2
        ids, w = ns.row(1)
        assert ids.tolist() == [0, 2, 3, 4]
        assert w[0] >= w[1]

    def test_edgeless_graph(self):
        g = from_edges(np.empty((0, 2), dtype=np.int64), node_count=3)
        ns = build_sparse_similarity(all_k_neighborhoods(g, 1))
        assert ns.entry_count == 0
        assert ns.total_mass == 0.0
        assert ns.row_masses().tolist() == [0.0, 0.0, 0.0]

    def test_construction_cost_is_order_k_nodes(self):
        g = random_graph(150, 300, seed=8, connect=True)
        nd = all_k_neighborhoods(g, 2)
        reset_counters()
        build_sparse_similarity(nd, SimilarityParams(k=2))
        evals = get_counters()["exp_evals"]
        # sigma search (<= 64 bisections) plus one table per node
        assert evals <= (64 + 2) * 2 * g.node_count

    def test_k1_needs_no_exp(self):
        g = random_graph(100, 200, seed=3)
        nd = all_k_neighborhoods(g, 1)
        reset_counters()
        build_sparse_similarity(nd)
        assert get_counters()["exp_evals"] == 0


class TestProperties:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(3, 30), st.integers(0, 9999), st.sampled_from([1, 2]))
    def test_mass_one_on_arbitrary_graphs(self, n, seed, k):
        m = min(2 * n, n * (n - 1) // 2)
        g = random_graph(n, m, seed=seed)
        ns = build_sparse_similarity(all_k_neighborhoods(g, k),
                                     SimilarityParams(k=k))
        if ns.entry_count:
            assert abs(ns.total_mass - 1.0) <= 1e-9

    def test_dump_text_round_trip_values(self):
        g = random_graph(20, 35, seed=1, connect=True)
        ns = build_sparse_similarity(all_k_neighborhoods(g, 1))
        lines = ns.dump_text().strip().splitlines()
        assert len(lines) == ns.entry_count
        i, j, w = lines[0].split()
        assert float(w) == ns.weights[0]
