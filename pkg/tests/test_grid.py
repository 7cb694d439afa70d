import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from linsync.core import ModelParams, StateVector, delta_neighbors
from linsync.datagen import generate_dataset, preset
from linsync.errors import GridCapExceeded, IndexCorruptionError, InvalidInputError
from linsync.esync import RunOptions, esync_run
from linsync.grid import GridSpec, build_grid, grid_delta_neighbors, iesync_run, relocate


def spec2(r=10.0, counts=(60, 60), origin=(0.0, 0.0)):
    return GridSpec(np.array(origin), np.array([r, r]), np.array(counts))


class TestCells:
    def test_cell_coordinate(self):
        assert spec2().coordinate_of([25, 37]) == (2, 3)

    def test_boundary_half_open(self):
        assert spec2().coordinate_of([20, 0])[0] == 2

    def test_label_and_range(self):
        sp = spec2(counts=(4, 5))
        assert sp.label_of((2, 3)) == 2 * 5 + 3
        assert sp.range_of((2, 3)).tolist() == [[20, 30], [30, 40]]
        assert sp.center_of((2, 3)).tolist() == [25, 35]

    def test_count_conservation(self, rng):
        x = rng.uniform(0, 600, (1000, 2))
        g = build_grid(StateVector(x), spec2())
        assert g.total_points() == 1000
        for cell in g.cells.values():
            assert cell.point_count == len(cell.members)
            for i in cell.members:
                lo, hi = cell.range[:, 0], cell.range[:, 1]
                assert np.all(x[i] >= lo) and np.all(x[i] < hi)

    def test_cap(self):
        sp = GridSpec(np.zeros(2), np.ones(2), np.array([2000, 2000]), cap=1000)
        with pytest.raises(GridCapExceeded):
            build_grid(StateVector(np.zeros((1, 2))), sp)

    def test_spec_validation(self):
        with pytest.raises(InvalidInputError):
            GridSpec(np.zeros(2), np.array([1.0, 0.0]), np.array([1, 1]))


class TestQueries:
    def test_random_queries_match_naive(self, rng):
        for trial in range(50):
            d = int(rng.integers(1, 4))
            r = float(rng.uniform(2, 20))
            n = int(rng.integers(5, 60))
            x = rng.uniform(0, 100, (n, d))
            # Put some points exactly on cell walls.
            walls = rng.random((n, d)) < 0.3
            x[walls] = np.round(x[walls] / r) * r
            s = StateVector(x)
            g = build_grid(s, GridSpec.covering(x, r))
            for _ in range(4):
                i = int(rng.integers(n))
                delta = float(rng.uniform(0.5, 40))
                assert grid_delta_neighbors(g, s, i, delta) == delta_neighbors(s, i, delta)

    def test_exact_distance_ties(self):
        x = np.array([[0.0, 0.0], [3.0, 4.0], [10.0, 0.0], [0.0, 10.0], [20.0, 0.0]])
        s = StateVector(x)
        g = build_grid(s, GridSpec(np.zeros(2), np.array([5.0, 5.0]), np.array([5, 3])))
        assert grid_delta_neighbors(g, s, 0, 5.0) == {1}
        assert grid_delta_neighbors(g, s, 0, 10.0) == {1, 2, 3}
        assert grid_delta_neighbors(g, s, 2, 10.0) == delta_neighbors(s, 2, 10.0)

    def test_lonely_point_scans_few_cells(self):
        x = np.array([[15.0, 15.0], [55.0, 55.0], [95.0, 15.0]])
        s = StateVector(x)
        g = build_grid(s, spec2(counts=(10, 10)))
        q = g.query(0, 10.0)
        assert q.neighbors == set() and q.cells_scanned <= 9 and q.evaluations == 0

    def test_below_min_distance_empty(self, rng):
        x = rng.uniform(0, 100, (40, 2))
        dmin = min(np.linalg.norm(x[i] - x[j]) for i in range(40) for j in range(i + 1, 40))
        s = StateVector(x)
        g = build_grid(s, GridSpec.covering(x, 7.0))
        assert all(grid_delta_neighbors(g, s, i, dmin / 2) == set() for i in range(40))

    @given(arrays(np.float64, (30, 2), elements=st.floats(0, 50)), st.floats(0.5, 30), st.floats(1, 20))
    def test_batch_lists_match_naive(self, x, delta, r):
        s = StateVector(x)
        g = build_grid(s, GridSpec.covering(x, r))
        nb = g.neighbor_lists(delta)
        for i in range(30):
            assert set(nb.neighbors(i).tolist()) == delta_neighbors(s, i, delta)

    def test_stale_position_detected(self):
        x = np.array([[1.0, 1.0], [2.0, 2.0]])
        g = build_grid(StateVector(x), spec2())
        with pytest.raises(IndexCorruptionError):
            grid_delta_neighbors(g, StateVector(x + 1), 0, 5)


class TestRelocate:
    def test_same_cell(self):
        x = np.array([[1.0, 1.0], [15.0, 1.0]])
        g = build_grid(StateVector(x), spec2())
        before = {k: list(c.members) for k, c in g.cells.items()}
        relocate(g, 0, x[0], [2.0, 3.0])
        assert {k: list(c.members) for k, c in g.cells.items()} == before
        assert g.positions[0].tolist() == [2.0, 3.0]

    def test_cross_boundary(self):
        x = np.array([[9.0, 1.0], [15.0, 1.0]])
        g = build_grid(StateVector(x), spec2())
        relocate(g, 0, x[0], [11.0, 1.0])
        assert (0, 0) not in g.cells
        assert g.cells[(1, 0)].point_count == 2

    def test_missing_member(self):
        g = build_grid(StateVector(np.array([[1.0, 1.0]])), spec2())
        with pytest.raises(IndexCorruptionError):
            relocate(g, 0, [50.0, 50.0], [1.0, 1.0])

    def test_random_walk_equals_rebuild(self, rng):
        x = rng.uniform(0, 600, (300, 2))
        sp = spec2()
        g = build_grid(StateVector(x), sp)
        pos = x.copy()
        for _ in range(10_000):
            i = int(rng.integers(300))
            new = np.clip(pos[i] + rng.normal(scale=15, size=2), 0, 599.999)
            relocate(g, i, pos[i], new)
            pos[i] = new
        fresh = build_grid(StateVector(pos), sp)
        assert {k: list(c.members) for k, c in g.cells.items()} == \
               {k: list(c.members) for k, c in fresh.cells.items()}
        assert g.total_points() == 300


@pytest.fixture(scope="module")
def ds2():
    return generate_dataset(preset("ds2", seed=3))


class TestIESynC:
    def test_bit_identical_to_esync(self, ds2):
        a = esync_run(ds2.points, ModelParams(18))
        b = iesync_run(ds2.points, ModelParams(18), cell_lengths=20)
        assert np.array_equal(a.final_state.coords, b.final_state.coords)
        assert [(s.ave_len, s.r_c) for s in a.per_iter] == [(s.ave_len, s.r_c) for s in b.per_iter]
        assert np.array_equal(a.labels.labels, b.labels.labels)
        assert b.distance_evals < a.distance_evals

    def test_single_cell_grid(self, ds2):
        x = ds2.points.coords
        sp = GridSpec(x.min(axis=0), np.ptp(x, axis=0) + 1, np.array([1, 1]))
        a = esync_run(ds2.points, ModelParams(18))
        b = iesync_run(ds2.points, ModelParams(18), spec=sp)
        assert np.array_equal(a.final_state.coords, b.final_state.coords)
        assert b.distance_evals == a.distance_evals

    def test_cap_fallback(self, ds2):
        x = ds2.points.coords
        sp = GridSpec(x.min(axis=0), np.array([1e-3, 1e-3]), np.array([600_000, 600_000]))
        r = iesync_run(ds2.points, ModelParams(18), spec=sp)
        assert any(f.startswith("grid-fallback") for f in r.degeneracy_flags)
        assert r.cluster_count == esync_run(ds2.points, ModelParams(18)).cluster_count

    def test_linear_model_only(self, ds2):
        with pytest.raises(InvalidInputError):
            iesync_run(ds2.points, ModelParams(18), RunOptions("ek"), cell_lengths=20)
