import numpy as np
import pytest

from conftest import random_bases, worst_relative_error
from projcoreset.core import Coreset, CoresetSource, Line, Subspace, SubspaceSet, WeightedPointSet, cost, opt_single_subspace
from projcoreset.coreset import (
    CoresetQualityParams,
    fixed_size_coreset,
    fixed_size_target,
    k_j_subspace_coreset,
    weighted_cost_of_coreset,
)


def test_quality_params():
    q = CoresetQualityParams(0.2, alpha=1.5, psi=0.25)
    assert q.epsilon_prime == pytest.approx((4 + 0.5) * 0.2 * 1.5 + 0.5)
    for bad in ({"epsilon": 0}, {"epsilon": 0.1, "alpha": 0.5}, {"epsilon": 0.1, "psi": 1.0}):
        with pytest.raises(ValueError):
            CoresetQualityParams(**bad)


@pytest.mark.parametrize("placement", ["projected", "seed"])
def test_points_on_one_line(rng, placement):
    X = np.outer(rng.uniform(-3, 3, 12), rng.standard_normal(4))
    w = rng.random(12) + 0.1
    res = k_j_subspace_coreset(WeightedPointSet(X, w), 1e-9, rng_seed=1, placement=placement)
    assert res.iterations == 1 and res.coreset.size == 1
    assert res.coreset.total_weight == pytest.approx(w.sum(), rel=1e-12)


def test_large_threshold_stops_after_one_line(rng):
    X = rng.standard_normal((20, 3))
    res = k_j_subspace_coreset(X, 1e9, rng_seed=4)
    assert res.iterations == 1


@pytest.mark.parametrize("seed", range(5))
def test_threshold_half_of_first_line(seed):
    r = np.random.default_rng(seed)
    X = r.standard_normal((30, 3))
    w = r.random(30) + 0.1
    P = WeightedPointSet(X, w)
    first = k_j_subspace_coreset(P, 1e18, rng_seed=seed).final_cost
    res = k_j_subspace_coreset(P, 0.5 * first, rng_seed=seed)
    assert res.final_cost < res.threshold
    if res.iterations > 1:
        assert res.cost_history[-2] >= res.threshold
    assert abs(res.coreset.total_weight - w.sum()) <= 1e-12 * w.sum()
    assert np.all(np.diff(res.cost_history) <= 1e-12 * first)
    nonempty = sum(c.size > 0 for c in res.cells())
    assert res.coreset.size == nonempty <= res.iterations


def test_final_cost_matches_direct_evaluation(rng):
    X = rng.standard_normal((40, 5))
    res = k_j_subspace_coreset(X, 10.0, rng_seed=2)
    lines = [Line.through(p) for p in res.seed_points]
    assert res.final_cost == pytest.approx(cost(X, lines, "f0"), rel=1e-10)


def test_rejects_bad_threshold(rng):
    with pytest.raises(ValueError):
        k_j_subspace_coreset(rng.standard_normal((5, 2)), 0.0)
    with pytest.raises(ValueError):
        k_j_subspace_coreset(rng.standard_normal((5, 2)), 1.0, placement="centroid")


def test_seed_placement_uses_seed_points(rng):
    X = rng.standard_normal((25, 4))
    res = k_j_subspace_coreset(X, 5.0, rng_seed=3, placement="seed")
    used = [i for i, c in enumerate(res.cells()) if c.size]
    np.testing.assert_array_equal(res.coreset.dense(), res.seed_points[used])


def test_projected_placement_reproduces_projected_cost(rng):
    X = rng.standard_normal((60, 6))
    w = rng.random(60) + 0.2
    res = k_j_subspace_coreset(WeightedPointSet(X, w), 20.0, rng_seed=5)
    # project every point onto the seed line it was charged to
    U = res.seed_points / np.linalg.norm(res.seed_points, axis=1, keepdims=True)
    u = U[res.labels]
    proj = np.sum(X * u, axis=1)[:, None] * u
    for B in random_bases(6, 2, 20, rng):
        S = SubspaceSet([Subspace(B)])
        want = cost(WeightedPointSet(proj, w, allow_zero_rows=True), S, "f0")
        assert weighted_cost_of_coreset(res.coreset, S) == pytest.approx(want, rel=1e-9)
    # each representative lies on its seed line
    used = [i for i, c in enumerate(res.cells()) if c.size]
    R = res.coreset.dense()
    for r_, i in zip(R, used):
        assert abs(abs(r_ @ U[i]) - np.linalg.norm(r_)) <= 1e-12 * np.linalg.norm(r_)


def test_weighted_cost_examples():
    C = Coreset(np.array([[0.0, 3.0]]), [2.0], CoresetSource.LINE_COLLAPSE)
    assert weighted_cost_of_coreset(C, [Line(np.array([1.0, 0.0]))]) == pytest.approx(18.0)
    C = Coreset(np.array([[0.0, np.sqrt(3.0)]]), [2.0], CoresetSource.LINE_COLLAPSE)
    assert weighted_cost_of_coreset(C, [Line(np.array([1.0, 0.0]))]) == pytest.approx(6.0)
    C = Coreset(np.array([[1.0, 1.0], [2.0, -1.0]]), [1.0, 3.0], CoresetSource.LINE_COLLAPSE)
    lines = [Line.through(r) for r in C.dense()]
    assert weighted_cost_of_coreset(C, lines) == pytest.approx(0.0, abs=1e-12)


def test_weighted_cost_from_stored_partition(rng):
    X = rng.standard_normal((30, 4))
    w = rng.random(30) + 0.3
    res = k_j_subspace_coreset(WeightedPointSet(X, w), 8.0, rng_seed=6, placement="seed")
    S = SubspaceSet([Subspace.random(4, 2, rng), Subspace.random(4, 2, rng)])
    c_p = res.seed_points[res.labels]
    direct = cost(WeightedPointSet(c_p, w), S, "f0")
    assert weighted_cost_of_coreset(res.coreset, S) == pytest.approx(direct, rel=1e-10)


def test_declared_size():
    assert fixed_size_target(5, 0.5) == 80
    assert fixed_size_target(1, 1.0) == 4


def test_rank_one_data(rng):
    X = np.outer(rng.standard_normal(30), rng.standard_normal(5))
    X = X[np.linalg.norm(X, axis=1) > 0]
    opt = opt_single_subspace(X, 1)
    with pytest.raises(ValueError):
        fixed_size_coreset(X, 1, 1, 0.5, 0.0)
    C = fixed_size_coreset(X, 1, 1, 0.5, 1e-6)
    assert C.params["collapse_iterations"] == 1
    assert opt == pytest.approx(0.0, abs=1e-18 + 1e-12 * np.sum(X**2))


def test_fixed_size_argument_checks(rng):
    X = rng.standard_normal((10, 3))
    for eps in (0.0, 1.5):
        with pytest.raises(ValueError):
            fixed_size_coreset(X, 1, 1, eps, 1.0)
    with pytest.raises(ValueError):
        fixed_size_coreset(X, 1, 4, 0.5, 1.0)


@pytest.mark.parametrize("seed", range(3))
def test_fixed_size_subspace_sweep(seed):
    r = np.random.default_rng(seed)
    X = r.standard_normal((200, 10))
    P = WeightedPointSet(X, np.ones(200))
    eps = 0.5
    C = fixed_size_coreset(P, 1, 2, eps, opt_single_subspace(P, 2), rng_seed=seed)
    assert C.size <= fixed_size_target(1, eps)
    bound = CoresetQualityParams(eps).epsilon_prime
    assert worst_relative_error(X, C.matrix(), 2, 500, r) <= bound


@pytest.mark.parametrize("placement", ["projected", "seed"])
@pytest.mark.parametrize("eps,psi", [(0.1, 0.2), (0.3, 0.5)])
def test_collapse_error_within_epsilon_prime(placement, eps, psi):
    r = np.random.default_rng(17)
    for _ in range(3):
        X = r.standard_normal((150, 8)) @ np.diag(np.linspace(3, 0.5, 8))
        P = WeightedPointSet(X, np.ones(150))
        opt = opt_single_subspace(P, 2)
        res = k_j_subspace_coreset(P, eps * opt, rng_seed=int(r.integers(1 << 30)), placement=placement)
        bound = CoresetQualityParams(eps, alpha=1.0, psi=psi).epsilon_prime
        assert worst_relative_error(X, res.coreset.matrix(), 2, 300, r) <= bound


def test_composed_is_reproducible(rng):
    X = rng.standard_normal((120, 8))
    opt = opt_single_subspace(X, 2)
    a = fixed_size_coreset(X, 2, 2, 0.6, opt, rng_seed=11)
    b = fixed_size_coreset(X, 2, 2, 0.6, opt, rng_seed=11)
    assert a.dense().tobytes() == b.dense().tobytes()
    assert a.source is CoresetSource.COMPOSED


def test_composed_keeps_mass_after_cnw_stage(rng):
    from projcoreset.cnw import cnw

    X = rng.standard_normal((200, 10))
    w = rng.uniform(0.5, 2.0, 200)
    P = WeightedPointSet(X, w)
    opt = opt_single_subspace(P, 1)
    C = fixed_size_coreset(P, 1, 1, 0.5, opt, rng_seed=3)
    assert C.params["collapse_size"] > fixed_size_target(1, 0.5)
    assert C.total_weight == pytest.approx(w.sum(), rel=1e-12)
    # the rescale leaves the sqrt-weighted matrix of the CNW stage unchanged
    Q = k_j_subspace_coreset(P, 0.25 * opt, rng_seed=3).coreset
    raw = cnw(Q.as_point_set(), 1, 0.25, iterations=fixed_size_target(1, 0.5))
    np.testing.assert_allclose(C.matrix(), raw.matrix(), rtol=1e-12, atol=1e-12)
