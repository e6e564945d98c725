"""Uniform baseline and the low-rank error metric used by the benchmarks."""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from .core import Coreset, CoresetSource, WeightedPointSet, _as_points, top_right_singular
from .rng import make_rng

# returned by svd_error when the data already has rank <= k
EXACT_RANK = -1.0


def uniform_coreset(P, m: int, rng_seed=0) -> Coreset:
    """``m`` rows sampled without replacement, each with weight ``Σw / m``."""
    P = _as_points(P)
    if not 1 <= m <= P.n:
        raise ValueError(f"size {m} outside [1, {P.n}]")
    rng = make_rng(rng_seed)
    idx = np.sort(rng.choice(P.n, size=m, replace=False))
    w = np.full(m, P.total_weight / m)
    return Coreset(P.points[idx], w, CoresetSource.UNIFORM, {"size": m})


def _matrix(X):
    if isinstance(X, Coreset):
        return X.matrix()
    if isinstance(X, WeightedPointSet):
        return X.materialize()
    if hasattr(X, "points") and isinstance(X.points, WeightedPointSet):
        return X.points.materialize()
    return X


def projection_cost(M, V: np.ndarray) -> float:
    """``‖M - M V Vᵀ‖_F²`` for orthonormal ``V``."""
    if sp.issparse(M):
        MV = np.asarray(M @ V)
        total = float(M.multiply(M).sum())
        return max(total - float(np.sum(MV * MV)), 0.0)
    M = np.asarray(M, dtype=np.float64)
    R = M - (M @ V) @ V.T
    return float(np.einsum("ij,ij->", R, R))


def svd_error(A, C, k: int, form: str = "squared") -> float:
    """Relative loss of using the coreset's top-``k`` subspace on ``A``.

    ``form="squared"`` gives ``|cost(V_A) - cost(V_C)| / cost(V_A)`` with
    ``cost(V) = ‖A - A V Vᵀ‖_F²``; ``form="unsquared"`` divides the same
    numerator by ``sqrt(cost(V_A))`` instead. Returns :data:`EXACT_RANK`
    when ``A`` has rank at most ``k``.
    """
    MA, MC = _matrix(A), _matrix(C)
    if not 1 <= k <= min(MA.shape):
        raise ValueError(f"k must lie in [1, {min(MA.shape)}]")
    VA = top_right_singular(MA, k)
    VC = top_right_singular(MC, k)
    ca = projection_cost(MA, VA)
    total = float(MA.multiply(MA).sum()) if sp.issparse(MA) else float(np.sum(np.square(MA)))
    if ca <= 1e-13 * total:
        return EXACT_RANK
    cc = projection_cost(MA, VC)
    if form == "squared":
        return abs(ca - cc) / ca
    if form == "unsquared":
        return abs(cc - ca) / math.sqrt(ca)
    raise ValueError(f"unknown error form {form!r}")
