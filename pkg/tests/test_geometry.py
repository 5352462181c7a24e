import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifsregimes.errors import InputError
from ifsregimes.geometry import (
    PointCloud,
    component_labels,
    count_components,
    distance,
    epsilon_components,
    farthest_point_sample,
    knn,
    knn_batch,
    mst_edge_lengths,
    mst_edges,
    pairwise_distances,
)

from oracles import bfs_components, dist, farthest_scan, knn_sort


def as_blocks(partition):
    return [b.tolist() for b in partition.blocks]


class TestPointCloud:
    def test_one_dimensional_input_becomes_column(self):
        c = PointCloud([0.0, 1.0, 2.0])
        assert c.T == 3 and c.dim == 1

    def test_points_are_read_only(self):
        c = PointCloud(np.zeros((3, 2)))
        with pytest.raises(ValueError):
            c.points[0, 0] = 1.0

    @pytest.mark.parametrize("bad", [np.empty((0, 2)), [[np.nan, 0.0]], [[np.inf, 1.0]]])
    def test_rejects_empty_or_nonfinite(self, bad):
        with pytest.raises(InputError):
            PointCloud(bad)

    def test_successor_undefined_at_last_index(self):
        c = PointCloud(np.zeros((4, 2)))
        assert c.successor(2) == 3
        with pytest.raises(InputError):
            c.successor(3)


class TestDistance:
    def test_identity(self):
        assert distance((0, 0), (0, 0)) == 0.0

    def test_three_four_five(self):
        assert distance((0, 0), (3, 4)) == 5.0

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            distance((0, 0), (1, 2, 3))

    def test_matches_sum_of_squares_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            d = int(rng.integers(1, 6))
            a, b = rng.normal(size=d), rng.normal(size=d)
            assert distance(a, b) == dist(a.tolist(), b.tolist())

    @given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3),
           st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3),
           st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
    def test_metric_axioms(self, a, b, c):
        assert distance(a, b) == distance(b, a)
        assert distance(a, a) == 0
        assert distance(a, b) >= 0
        assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9

    def test_pairwise_is_symmetric_with_zero_diagonal(self):
        P = np.random.default_rng(1).normal(size=(20, 3))
        D = pairwise_distances(P)
        assert np.array_equal(D, D.T)
        assert np.all(np.diag(D) == 0)


class TestKnn:
    def test_k1_is_the_point(self):
        c = PointCloud(np.random.default_rng(0).normal(size=(10, 2)))
        assert knn(c, 4, 1).tolist() == [4]

    def test_hand_checked_1d(self):
        c = PointCloud([0.0, 1.0, 2.0, 10.0])
        assert knn(c, 1, 3).tolist() == [1, 0, 2]

    def test_k_equal_T_returns_everything(self):
        c = PointCloud(np.random.default_rng(0).normal(size=(15, 2)))
        assert sorted(knn(c, 7, 15).tolist()) == list(range(15))

    def test_ties_go_to_lower_index(self):
        c = PointCloud([5.0, 4.0, 6.0, 5.0, 5.0])
        assert knn(c, 3, 5).tolist() == [3, 0, 4, 1, 2]

    def test_errors(self):
        c = PointCloud(np.zeros((5, 1)))
        with pytest.raises(InputError):
            knn(c, 0, 6)
        with pytest.raises(InputError):
            knn(c, 5, 2)
        with pytest.raises(InputError):
            knn(c, 0, 0)

    def test_matches_full_sort_oracle(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(200, 2))
        c = PointCloud(X)
        pts = X.tolist()
        for _ in range(100):
            t, k = int(rng.integers(200)), int(rng.integers(1, 30))
            assert knn(c, t, k).tolist() == knn_sort(pts, t, k)

    def test_oracle_on_lattice_with_many_ties(self):
        g = np.array([(i, j) for i in range(8) for j in range(8)], dtype=float)
        c = PointCloud(g)
        pts = g.tolist()
        for t in range(0, 64, 5):
            for k in (2, 5, 9, 13):
                assert knn(c, t, k).tolist() == knn_sort(pts, t, k)

    def test_batch_independent_of_workers(self):
        c = PointCloud(np.random.default_rng(3).normal(size=(3000, 3)))
        ts = np.arange(3000)
        assert np.array_equal(knn_batch(c, ts, 8, workers=1), knn_batch(c, ts, 8, workers=4))

    def test_concurrent_queries_agree(self):
        c = PointCloud(np.random.default_rng(4).normal(size=(500, 2)))
        expect = knn_batch(c, np.arange(500), 6)
        out = [None] * 4

        def go(i):
            out[i] = knn_batch(c, np.arange(500), 6)

        threads = [threading.Thread(target=go, args=(i,)) for i in range(4)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
        assert all(np.array_equal(o, expect) for o in out)


class TestFarthestPointSample:
    def test_J1(self):
        c = PointCloud(np.random.default_rng(0).normal(size=(10, 2)))
        assert farthest_point_sample(c, 1, 3).tolist() == [3]

    def test_endpoint_is_farthest(self):
        c = PointCloud(np.arange(11, dtype=float))
        assert farthest_point_sample(c, 2, 0).tolist() == [0, 10]

    def test_J_too_large(self):
        with pytest.raises(InputError):
            farthest_point_sample(PointCloud(np.zeros((3, 1))), 4)

    def test_matches_exhaustive_scan(self):
        X = np.random.default_rng(5).normal(size=(500, 2))
        got = farthest_point_sample(PointCloud(X), 40, 17).tolist()
        # every prefix of the oracle's sequence is its own selection
        assert got == farthest_scan(X.tolist(), 40, 17)

    def test_ties_go_to_lower_index(self):
        c = PointCloud([0.0, -1.0, 1.0])
        assert farthest_point_sample(c, 3, 0).tolist() == [0, 1, 2]


class TestEpsilonComponents:
    def test_singleton(self):
        c = PointCloud([[0.3, 0.1]])
        assert as_blocks(epsilon_components(c, [0], 1e-9)) == [[0]]

    def test_hand_checked_chain(self):
        c = PointCloud([0.0, 0.01, 0.5])
        assert as_blocks(epsilon_components(c, [0, 1, 2], 0.02)) == [[0, 1], [2]]

    def test_strict_inequality(self):
        c = PointCloud([0.0, 0.5])
        assert len(epsilon_components(c, [0, 1], 0.5)) == 2
        assert len(epsilon_components(c, [0, 1], 0.5000001)) == 1

    def test_duplicates_always_joined(self):
        c = PointCloud([1.0, 1.0, 3.0])
        assert as_blocks(epsilon_components(c, [0, 1, 2], 1e-12)) == [[0, 1], [2]]

    @pytest.mark.parametrize("members,eps", [([], 0.1), ([0], 0.0), ([0, 0], 0.1), ([7], 0.1)])
    def test_errors(self, members, eps):
        with pytest.raises(InputError):
            epsilon_components(PointCloud(np.zeros((3, 1))), members, eps)

    def test_matches_bfs_oracle(self):
        rng = np.random.default_rng(21)
        X = rng.uniform(size=(300, 2))
        c = PointCloud(X)
        pts = X.tolist()
        for _ in range(100):
            n = int(rng.integers(1, 51))
            members = rng.choice(300, size=n, replace=False)
            eps = float(rng.uniform(0.01, 0.3))
            assert as_blocks(epsilon_components(c, members, eps)) == bfs_components(pts, members.tolist(), eps)

    def test_large_set_uses_same_rule(self):
        rng = np.random.default_rng(22)
        X = rng.uniform(size=(700, 2))
        got = as_blocks(epsilon_components(PointCloud(X), range(700), 0.03))
        assert got == bfs_components(X.tolist(), list(range(700)), 0.03)

    def test_partition_invariants(self):
        X = np.random.default_rng(23).uniform(size=(60, 2))
        c = PointCloud(X)
        part = epsilon_components(c, range(60), 0.12)
        flat = np.concatenate(part.blocks)
        assert sorted(flat.tolist()) == list(range(60))
        for i, a in enumerate(part.blocks):
            for b in part.blocks[i + 1:]:
                assert min(dist(X[p], X[q]) for p in a for q in b) >= 0.12


class TestLabelsAndSpanningTrees:
    def test_labels_match_partition(self):
        rng = np.random.default_rng(30)
        P = rng.uniform(size=(50, 12, 2))
        labels = component_labels(P, 0.25)
        for p, lab in zip(P, labels):
            blocks = bfs_components(p.tolist(), list(range(12)), 0.25)
            assert [sorted(np.flatnonzero(lab == lab[b[0]]).tolist()) for b in blocks] == blocks
            assert all(lab[b[0]] == b[0] for b in blocks)

    def test_mst_count_rule(self):
        rng = np.random.default_rng(31)
        P = rng.uniform(size=(40, 10, 2))
        edges = mst_edge_lengths(P)
        for eps in (0.05, 0.1, 0.2, 0.4):
            counts = count_components(edges, eps)
            expect = [len(bfs_components(p.tolist(), list(range(10)), eps)) for p in P]
            assert counts.tolist() == expect

    def test_mst_edges_total_length_matches_batched(self):
        P = np.random.default_rng(32).normal(size=(25, 3))
        pairs, lengths = mst_edges(P)
        assert pairs.shape == (24, 2)
        assert np.isclose(lengths.sum(), mst_edge_lengths(P[None])[0].sum())

    def test_workers_do_not_change_labels(self):
        P = np.random.default_rng(33).uniform(size=(2000, 8, 2))
        assert np.array_equal(component_labels(P, 0.2, workers=1), component_labels(P, 0.2, workers=3))


@st.composite
def small_sets(draw):
    n = draw(st.integers(1, 25))
    pts = draw(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=n, max_size=n))
    return np.array(pts, dtype=float)


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(small_sets(), st.floats(1e-3, 1.0), st.floats(1e-3, 1.0))
    def test_monotone_refinement(self, X, e1, e2):
        e1, e2 = sorted((e1, e2))
        c = PointCloud(X)
        fine = epsilon_components(c, range(len(X)), e1)
        coarse = epsilon_components(c, range(len(X)), e2)
        for b in fine.blocks:
            assert len({coarse.block_of(int(i)) for i in b}) == 1

    @settings(max_examples=60, deadline=None)
    @given(small_sets())
    def test_one_block_above_longest_mst_edge(self, X):
        if len(X) < 2:
            return
        eps = float(mst_edge_lengths(X[None])[0].max())
        eps = math.nextafter(eps, math.inf) if eps > 0 else 1e-12
        assert len(epsilon_components(PointCloud(X), range(len(X)), eps)) == 1

    @settings(max_examples=40, deadline=None)
    @given(small_sets(), st.data())
    def test_fps_min_distance_non_increasing(self, X, data):
        J = data.draw(st.integers(1, len(X)))
        start = data.draw(st.integers(0, len(X) - 1))
        _, achieved = farthest_point_sample(PointCloud(X), J, start, return_distances=True)
        assert np.all(np.diff(achieved) <= 0)

    @settings(max_examples=40, deadline=None)
    @given(small_sets(), st.data())
    def test_deterministic(self, X, data):
        c1, c2 = PointCloud(X), PointCloud(X.copy())
        t = data.draw(st.integers(0, len(X) - 1))
        k = data.draw(st.integers(1, len(X)))
        assert np.array_equal(knn(c1, t, k), knn(c2, t, k))
        assert as_blocks(epsilon_components(c1, range(len(X)), 0.3)) == as_blocks(
            epsilon_components(c2, range(len(X)), 0.3))
