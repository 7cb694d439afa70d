import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import UnionFind, partition_of
from linsync.core import StateVector, delta_neighbors
from linsync.errors import InvalidInputError
from linsync.metrics import (
    ClusterLabels,
    ave_len,
    build_delta_graph,
    cluster_order_parameter,
    extract_clusters,
    labels_from_array,
    match_labels,
)


def S(rows):
    return StateVector(np.array(rows, dtype=float))


def union_find_oracle(x, eps):
    uf = UnionFind(len(x))
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            if math.dist(x[i], x[j]) < eps:
                uf.union(i, j)
    return uf.partition()


class TestDeltaGraph:
    def test_single_edge(self):
        g = build_delta_graph(S([[0, 0], [6, 0]]), 18)
        assert g.edges == [(0, 1, 6.0)]
        assert ave_len(g) == 6.0

    def test_empty_below_min_distance(self):
        g = build_delta_graph(S([[0, 0], [6, 0], [20, 0]]), 5)
        assert len(g) == 0 and ave_len(g) == 0.0

    def test_matches_all_pairs_filter(self, rng):
        x = rng.uniform(0, 100, (50, 2))
        g = build_delta_graph(StateVector(x), 15)
        oracle = [(i, j) for i in range(50) for j in range(i + 1, 50) if math.dist(x[i], x[j]) <= 15]
        assert [(i, j) for i, j, _ in g.edges] == oracle
        for i, j, w in g.edges:
            assert w == pytest.approx(math.dist(x[i], x[j]), abs=1e-12)

    def test_edge_count_half_degree_sum(self, rng):
        s = StateVector(rng.uniform(0, 100, (40, 3)))
        g = build_delta_graph(s, 30)
        assert 2 * len(g) == sum(len(delta_neighbors(s, i, 30)) for i in range(40))

    def test_ave_len_mean(self):
        g = build_delta_graph(S([[0.0], [3.0], [100.0], [105.0]]), 6)
        assert ave_len(g) == 4.0

    def test_rejects_bad_delta(self):
        with pytest.raises(InvalidInputError):
            build_delta_graph(S([[0.0]]), 0)

    @given(arrays(np.float64, (12, 2), elements=st.floats(-50, 50)), st.floats(1, 80),
           st.floats(-100, 100), st.floats(-100, 100))
    def test_ave_len_translation_and_relabel_invariant(self, x, delta, dx, dy):
        base = ave_len(build_delta_graph(StateVector(x), delta))
        perm = np.random.default_rng(0).permutation(12)
        moved = ave_len(build_delta_graph(StateVector(x[perm] + [dx, dy]), delta))
        assert moved == pytest.approx(base, rel=1e-9, abs=1e-9)

    def test_all_coincident_clusters_ave_len_zero(self):
        x = np.repeat([[0.0, 0.0], [100.0, 0.0]], 5, axis=0)
        assert ave_len(build_delta_graph(StateVector(x), 18)) == 0.0


class TestOrderParameter:
    def test_five_coincident_clusters(self):
        centers = np.array([[0, 0], [100, 0], [200, 0], [0, 100], [100, 100]], dtype=float)
        x = np.repeat(centers, 2000, axis=0)
        assert cluster_order_parameter(StateVector(x), 18) == 1999.0

    def test_isolates_zero(self):
        assert cluster_order_parameter(S([[0, 0], [50, 50]]), 18) == 0.0

    def test_coincident_pair(self):
        assert cluster_order_parameter(S([[1, 1], [1, 1]]), 18) == 1.0

    def test_literal_formula(self, rng):
        x = rng.uniform(0, 20, (25, 2))
        s = StateVector(x)
        want = sum(math.exp(-math.dist(x[i], x[j])) for i in range(25)
                   for j in delta_neighbors(s, i, 5)) / 25
        assert cluster_order_parameter(s, 5) == pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("k,size", [(2, 7), (4, 3), (5, 11)])
    def test_equal_clusters_closed_form(self, k, size):
        x = np.repeat(np.arange(k)[:, None] * 50.0, size, axis=0)
        assert cluster_order_parameter(StateVector(x), 18) == size - 1


class TestExtractClusters:
    def test_chain_is_one_cluster(self):
        x = np.arange(10, dtype=float)[:, None] * 0.5e-5
        assert extract_clusters(StateVector(x), 1e-5).k == 1

    def test_strict_threshold(self):
        assert extract_clusters(S([[0.0], [1.0]]), 1.0).k == 2
        assert extract_clusters(S([[0.0], [1.0]]), np.nextafter(1.0, 2)).k == 1

    def test_random_states_match_union_find(self, rng):
        for _ in range(20):
            base = rng.uniform(0, 10, (8, 2))
            x = base[rng.integers(0, 8, 40)] + rng.normal(scale=1e-3, size=(40, 2))
            eps = float(rng.uniform(1e-3, 5e-3))
            got = partition_of(extract_clusters(StateVector(x), eps).labels)
            assert got == union_find_oracle(x, eps)

    def test_centers_are_means(self, rng):
        x = np.vstack([rng.normal(0, 1e-7, (5, 2)), rng.normal(10, 1e-7, (3, 2))])
        lab = extract_clusters(StateVector(x), 1e-5)
        assert lab.k == 2
        assert np.allclose(lab.centers[lab.labels[0]], x[:5].mean(axis=0))
        assert lab.sizes.tolist() == [5, 3]

    @given(arrays(np.float64, (15, 2), elements=st.floats(0, 10)), st.floats(0.01, 2), st.floats(0.01, 2))
    def test_refines_as_eps_shrinks(self, x, e1, e2):
        small, big = sorted((e1, e2))
        fine = extract_clusters(StateVector(x), small).labels
        coarse = extract_clusters(StateVector(x), big).labels
        for lab in np.unique(fine):
            assert len(np.unique(coarse[fine == lab])) == 1


class TestLabels:
    def test_relabeling(self):
        assert match_labels(np.array([0, 0, 1]), np.array([1, 1, 0]))

    def test_different_partitions(self):
        assert not match_labels(np.array([0, 0, 1]), np.array([0, 1, 1]))

    def test_first_appearance_order(self):
        lab = labels_from_array([7, 7, 3, 9, 3])
        assert lab.labels.tolist() == [0, 0, 1, 2, 1]

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            match_labels(np.zeros(2), np.zeros(3))

    def test_sizes_skip_noise(self):
        lab = ClusterLabels(np.array([0, -1, 1, 0, -1]), np.zeros((2, 1)))
        assert lab.sizes.tolist() == [2, 1] and lab.noise_count == 2

    @given(st.lists(st.integers(0, 5), min_size=1, max_size=30), st.permutations(range(6)))
    def test_any_relabeling_matches(self, labels, perm):
        a = np.array(labels)
        assert match_labels(a, np.array(perm)[a])
