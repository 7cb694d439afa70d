import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import UnionFind, partition_of
from linsync.core import ModelParams
from linsync.datagen import generate_dataset, preset
from linsync.errors import IndexCorruptionError, InvalidInputError
from linsync.esync import esync_run
from linsync.metrics import match_labels
from linsync.ssync import (
    Core,
    CoreKind,
    active_counts,
    classify_core,
    compress_paths,
    find_root,
    ssync_run,
)


@pytest.fixture(scope="module")
def ds2():
    return generate_dataset(preset("ds2", seed=2))


def test_pair_merges_at_midpoint():
    rep = ssync_run(np.array([[0.0, 0.0], [6.0, 0.0]]), 18, 1e-5)
    assert rep.roots == [0]
    assert rep.counts[0] == 2
    assert rep.locations[0].tolist() == [3.0, 0.0]
    assert rep.active_counts[:2] == [2, 1]


def test_single_point_is_isolate():
    rep = ssync_run(np.array([[5.0, 5.0]]), 18, 1e-5)
    core = rep.cores[0]
    assert rep.roots == [0] and core.containing_points == 1
    assert classify_core(core) is CoreKind.ISOLATE


def test_ds2_matches_esync(ds2):
    e = esync_run(ds2.points, ModelParams(18))
    for eps in (1e-5, 1.0):
        rep = ssync_run(ds2.points, 18, eps)
        assert len(rep.roots) == 5
        assert int(rep.counts[rep.roots].sum()) == 400
        assert match_labels(rep.labels(), e.labels)


def test_active_counts_shape():
    ds = generate_dataset(preset("ds4", n=800, seed=5))
    rep = ssync_run(ds.points, 18, 1e-5)
    series = active_counts(rep)
    assert series[0] == 800
    assert series[-1] == series[-2]
    assert all(a >= b for a, b in zip(series, series[1:]))
    assert all(m == 800 for m in rep.root_mass)


def test_large_delta_collapses_in_one_step(rng):
    x = rng.uniform(0, 50, (30, 2))
    rep = ssync_run(x, 1000, 1e-5)
    assert rep.active_counts[1] == 1


@given(arrays(np.float64, (25, 2), elements=st.floats(0, 100)), st.floats(2, 60),
       st.sampled_from([1e-5, 0.5, 3.0]))
def test_conservation_and_monotone(x, delta, eps):
    rep = ssync_run(x, delta, eps)
    assert all(m == 25 for m in rep.root_mass)
    assert all(a >= b for a, b in zip(rep.active_counts, rep.active_counts[1:]))
    assert int(rep.counts[rep.roots].sum()) == 25
    roots = compress_paths(rep.parents.copy())
    assert np.all(rep.parents == roots)
    assert set(rep.roots) == set(np.flatnonzero(rep.active).tolist())


def test_weighted_mean_preserved_by_single_step_merges():
    x = np.array([[0.0], [2.0], [6.0], [8.0]])
    rep = ssync_run(x, 3, 1e-5)
    assert rep.roots == [0, 2]
    assert rep.locations[0, 0] == 1.0 and rep.locations[2, 0] == 7.0
    assert rep.counts[0] == rep.counts[2] == 2


def test_isolated_clique_root_is_member_mean(rng):
    for _ in range(10):
        a = rng.uniform(0, 5, (6, 2))
        b = rng.uniform(500, 505, (4, 2))
        rep = ssync_run(np.vstack([a, b]), 10, 1e-5)
        assert rep.roots == [0, 6]
        assert np.allclose(rep.locations[0], a.mean(axis=0), atol=1e-12)
        assert np.allclose(rep.locations[6], b.mean(axis=0), atol=1e-12)


def test_lowest_id_absorbs():
    x = np.array([[5.0], [5.0], [5.0]])
    rep = ssync_run(x, 1, 1e-5)
    assert rep.roots == [0] and rep.parents.tolist() == [0, 0, 0]


def test_no_merge_at_exact_epsilon():
    rep = ssync_run(np.array([[0.0], [1.0]]), 0.5, 1.0)
    assert rep.roots == [0, 1]


class TestForest:
    def test_fresh_core(self):
        assert find_root(np.arange(5), 3) == 3

    def test_chain_compression(self):
        parents = np.array([1, 2, 2])
        assert find_root(parents, 0) == 2
        assert parents[0] == 2

    def test_cycle_detected(self):
        with pytest.raises(IndexCorruptionError):
            find_root(np.array([1, 0]), 0)
        with pytest.raises(IndexCorruptionError):
            compress_paths(np.array([1, 2, 0]))

    def test_random_merge_scripts(self, rng):
        for _ in range(100):
            n = 200
            parents = np.arange(n)
            uf = UnionFind(n)
            for _ in range(int(rng.integers(50, 300))):
                a, b = (int(v) for v in rng.integers(n, size=2))
                ra, rb = find_root(parents, a), find_root(parents, b)
                if ra != rb:
                    parents[max(ra, rb)] = min(ra, rb)
                uf.union(a, b)
            got = {}
            for i in range(n):
                got.setdefault(find_root(parents, i), set()).add(i)
            assert {frozenset(g) for g in got.values()} == uf.partition()
            compress_paths(parents)
            assert np.all(parents[parents] == parents)

    def test_classify(self):
        assert classify_core(Core(0, np.zeros(2), 0, 1)) is CoreKind.ISOLATE
        assert classify_core(Core(0, np.zeros(2), 0, 200)) is CoreKind.CLUSTER_ROOT
        assert classify_core(Core(1, np.zeros(2), 0, 1, False)) is CoreKind.ABSORBED


def test_labels_partition_by_root():
    rep = ssync_run(np.array([[0.0], [1.0], [50.0], [51.0], [200.0]]), 2, 1e-5)
    assert partition_of(rep.labels().labels) == {frozenset({0, 1}), frozenset({2, 3}), frozenset({4})}


def test_fewer_evaluations_than_esync(ds2):
    rep = ssync_run(ds2.points, 18, 1e-5)
    e = esync_run(ds2.points, ModelParams(18))
    assert rep.distance_evals < e.distance_evals
    assert rep.per_iter_evals[0] >= 400 * 399


@pytest.mark.parametrize("kw", [{"delta": 0, "epsilon": 1}, {"delta": 1, "epsilon": 0},
                                {"delta": 1, "epsilon": 1, "max_iters": 0}])
def test_bad_arguments(kw):
    with pytest.raises(InvalidInputError):
        ssync_run(np.zeros((2, 1)), **kw)


def test_bad_counts():
    with pytest.raises(InvalidInputError):
        ssync_run(np.zeros((2, 1)), 1, 1, counts=[1, 0])
