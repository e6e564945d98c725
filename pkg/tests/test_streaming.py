import math

import numpy as np
import pytest
import scipy.sparse as sp

from projcoreset.core import WeightedPointSet
from projcoreset.evaluation import svd_error
from projcoreset.io import load_weighted_csv
from projcoreset.streaming import (
    JlConfig,
    NodeError,
    Reducer,
    TreeConfig,
    _union,
    chunk,
    chunk_count,
    floor_error,
    floors_for,
    jl_matrix,
    jl_project,
    merge_reduce,
    reduce_node,
)
from projcoreset.synth import synth


@pytest.fixture(scope="module")
def data():
    return synth("subspaces", 900, 12, k=3, j=2, noise=0.05, rng_seed=5).points


def test_chunk_sizes(rng):
    X = rng.standard_normal((10, 2))
    assert [c.n for c in chunk(X, 4)] == [4, 4, 2]
    assert [c.n for c in chunk(X, 10)] == [10]
    got = np.vstack([c.points for c in chunk(X, 3)])
    np.testing.assert_array_equal(got, X)
    with pytest.raises(ValueError):
        chunk(X, 1)


def test_chunk_count_big():
    assert chunk_count(4_624_611, 141) == 32_799
    assert chunk_count(10, 4) == 3


def test_floors():
    assert floors_for(1) == 1
    assert floors_for(2) == 2
    assert floors_for(3) == 3
    assert floors_for(32_768) == 16
    assert TreeConfig(100).floors(900) == 5
    with pytest.raises(ValueError):
        TreeConfig(1)
    with pytest.raises(ValueError):
        TreeConfig(10, "composed", k=3)


def test_jl_default_dims():
    assert JlConfig.default_dim(5, 141) == 25
    assert JlConfig.default_dim(5, 141, "six") == 30


def test_jl_identity_copy(rng):
    X = rng.standard_normal((5, 4))
    Y = jl_project(X, JlConfig(4, identity=True))
    np.testing.assert_array_equal(Y.points, X)


def test_jl_shared_matrix_and_scaling(rng):
    cfg = JlConfig(50, "rademacher", rng_seed=3)
    R = jl_matrix(400, cfg)
    assert np.all(np.abs(R) == 1 / math.sqrt(50))
    np.testing.assert_array_equal(R, jl_matrix(400, cfg))
    X = sp.random(20, 400, density=0.05, format="csr", random_state=1)
    np.testing.assert_allclose(jl_project(X, cfg).points, X @ R)
    with pytest.raises(ValueError):
        jl_matrix(10, JlConfig(11))


def test_jl_distortion_small(rng):
    cfg = JlConfig(200, rng_seed=1)
    R = jl_matrix(1000, cfg)
    X = rng.standard_normal((2000, 1000))
    a, b = X[:1000], X[1000:]
    ratio = np.sum(((a - b) @ R) ** 2, axis=1) / np.sum((a - b) ** 2, axis=1)
    assert np.mean(np.abs(ratio - 1) <= 0.25) >= 0.99


def test_identity_tree_reproduces_input(data):
    res = merge_reduce(chunk(data, 1000), TreeConfig(1000, Reducer.IDENTITY, k=3))
    np.testing.assert_array_equal(res.top.dense(), data.points)
    assert [r.error for r in res.reports] == [0.0]
    res = merge_reduce(chunk(data, 100), TreeConfig(100, Reducer.IDENTITY, k=3))
    assert all(r.error == pytest.approx(0.0, abs=1e-12) for r in res.reports)
    assert len(res.reports) == floors_for(9)


def test_uniform_tree_mass_and_subset(data):
    res = merge_reduce(chunk(data, 100), TreeConfig(100, Reducer.UNIFORM, k=3, seed=2))
    assert res.top.size == 100
    assert res.top.total_weight == pytest.approx(data.total_weight, rel=1e-9)
    rows = {r.tobytes() for r in data.points}
    assert all(r.tobytes() in rows for r in res.top.dense())


def test_composed_tree_mass(data):
    res = merge_reduce(chunk(data, 120), TreeConfig(120, Reducer.COMPOSED, k=3, seed=4), keep_floors=True)
    for nodes in res.floors:
        for c in nodes:
            assert c.size <= 120
    assert res.top.total_weight == pytest.approx(data.total_weight, rel=1e-9)


def test_cnw_tree_matches_hand_composition(data):
    parts = chunk(data.subset(np.arange(400)), 100)
    cfg = TreeConfig(100, Reducer.CNW, k=3)
    res = merge_reduce(parts, cfg, evaluate=False)
    leaves = [reduce_node(p, TreeConfig(100, Reducer.IDENTITY), 0, i) for i, p in enumerate(parts)]
    left = reduce_node(_union(leaves[0], leaves[1]), cfg, 1, 0)
    right = reduce_node(_union(leaves[2], leaves[3]), cfg, 1, 1)
    top = reduce_node(_union(left, right), cfg, 2, 0)
    assert res.top.dense().tobytes() == top.dense().tobytes()
    assert res.top.scale_weights.tobytes() == top.scale_weights.tobytes()


def test_reports_cover_every_floor(data):
    res = merge_reduce(chunk(data, 100), TreeConfig(100, Reducer.UNIFORM, k=3))
    assert [r.floor for r in res.reports] == list(range(5))
    assert [r.nodes for r in res.reports] == [9, 5, 3, 2, 1]
    assert res.reports[0].rows == 900
    assert all(r.wall_time >= 0 for r in res.reports)


def test_floor_error_matches_external_metric(data, tmp_path):
    parts = chunk(data, 150)
    res = merge_reduce(parts, TreeConfig(150, Reducer.UNIFORM, k=3, seed=9, checkpoint_dir=str(tmp_path)), keep_floors=True)
    for rep, nodes in zip(res.reports, res.floors):
        files = sorted((tmp_path / f"floor-{rep.floor}").glob("node-*.csv"), key=lambda p: int(p.stem[5:]))
        assert len(files) == rep.nodes
        loaded = [load_weighted_csv(f) for f in files]
        M = np.vstack([c.matrix() for c in loaded])
        assert svd_error(data, M, 3) == pytest.approx(rep.error, rel=1e-9, abs=1e-12)
        assert floor_error(nodes, data, 3) == pytest.approx(rep.error, abs=1e-15)


def test_jl_tree_error_is_in_projected_space(data):
    jl = JlConfig(6, rng_seed=2)
    res = merge_reduce(chunk(data, 100), TreeConfig(100, Reducer.UNIFORM, k=3, jl=jl, seed=1))
    assert res.top.d == 6 and res.reports[0].error == 0.0
    projected = jl_project(data, jl)
    direct = svd_error(projected, res.top, 3)
    assert res.reports[-1].error == pytest.approx(direct, rel=1e-9)


def test_deterministic_across_workers(data):
    cfg1 = TreeConfig(100, Reducer.COMPOSED, k=3, seed=7)
    cfg2 = TreeConfig(100, Reducer.COMPOSED, k=3, seed=7, workers=2)
    a = merge_reduce(chunk(data, 100), cfg1)
    b = merge_reduce(chunk(data, 100), cfg2)
    assert a.top.dense().tobytes() == b.top.dense().tobytes()
    assert [r.error for r in a.reports] == [r.error for r in b.reports]


def test_low_rank_node_stays_within_budget(rng):
    X = np.outer(rng.standard_normal(80), rng.standard_normal(5))
    for red in (Reducer.CNW, Reducer.COMPOSED):
        res = merge_reduce(chunk(X, 20), TreeConfig(20, red, k=2), evaluate=False)
        assert res.top.size <= 20
        G = res.top.matrix().T @ res.top.matrix()
        np.testing.assert_allclose(G, X.T @ X, rtol=1e-8, atol=1e-8)


def test_reducer_failure_names_node(monkeypatch, data):
    import projcoreset.streaming as st

    def boom(*a, **k):
        raise RuntimeError("nope")

    monkeypatch.setattr(st, "uniform_coreset", boom)
    with pytest.raises(NodeError) as info:
        merge_reduce(chunk(data, 100), TreeConfig(100, Reducer.UNIFORM))
    assert info.value.floor == 1 and info.value.node == 0


def test_sparse_chunks(rng):
    X = sp.random(300, 40, density=0.1, format="csr", random_state=2) + sp.eye(300, 40, format="csr")
    P, _ = WeightedPointSet.from_rows(X)
    res = merge_reduce(chunk(P, 50), TreeConfig(50, Reducer.UNIFORM, k=3))
    assert res.top.size == 50
    assert res.reports[-1].error >= 0
