"""Adaptive (D²-style) seeding under an arbitrary distance.

Seeds are always input points, identified by their row index. Each round
draws row ``p`` with probability proportional to ``w(p) * f(p, Y)`` where
``Y`` is the current seed set and ``f(p, ∅) = 1``. The cached distance of
every row is refreshed against the newest seed only, so one round costs a
single ``O(n d)`` pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .core import DistanceFn, Line, WeightedPointSet, ZeroRowError, _as_points
from .config import TOL
from .rng import make_rng


@dataclass(frozen=True)
class SeedingConfig:
    t: int
    delta: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("t must be nonnegative")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")


def _draw(rng: np.random.Generator, mass: np.ndarray, chosen: np.ndarray) -> int:
    idx = kernels.sample_index(mass, rng.random())
    if idx < 0:
        # no sampling mass left: uniform over rows not yet chosen
        free = np.flatnonzero(~chosen)
        idx = int(free[rng.integers(free.shape[0])])
    return int(idx)


class LineSeeder:
    """Incremental k-line-means++ state over a fixed point set.

    Tracks, for every row, the largest squared projection onto a seed line
    and the index of that seed. Both the line metric and the squared
    distance to the nearest seed line follow from that single number.
    """

    def __init__(self, P: WeightedPointSet, rng_seed=0):
        if np.any(P.sq_norms <= TOL.zero_row):
            raise ZeroRowError("line seeding needs nonzero rows")
        self.P = P
        self.rng = make_rng(rng_seed)
        self.best = np.full(P.n, -1.0)
        self.assign = np.full(P.n, -1, dtype=np.int64)
        self.chosen = np.zeros(P.n, dtype=bool)
        self.seeds: list[int] = []
        self.rows_touched = 0
        if P.is_sparse:
            csr = P.points
            self._csr = (csr.indptr.astype(np.int64), csr.indices.astype(np.int64), csr.data)
        else:
            self._csr = None

    def _row(self, i: int) -> np.ndarray:
        row = self.P.points[i]
        return np.asarray(row.toarray()).ravel() if self.P.is_sparse else row

    def add_index(self, i: int) -> None:
        u = self._row(i) / np.sqrt(self.P.sq_norms[i])
        label = len(self.seeds)
        if self._csr is None:
            kernels.line_update(self.P.points, u, self.best, self.assign, label)
        else:
            kernels.csr_line_update(*self._csr, u, self.best, self.assign, label)
        # the seed itself lies on its own line
        if self.assign[i] != label and self.best[i] < self.P.sq_norms[i]:
            self.best[i] = self.P.sq_norms[i]
            self.assign[i] = label
        self.seeds.append(int(i))
        self.chosen[i] = True
        self.rows_touched += self.P.n

    def f_ell(self) -> np.ndarray:
        """Line metric of every row to the current seed lines (1 if none)."""
        if not self.seeds:
            return np.ones(self.P.n)
        c = np.sqrt(np.clip(self.best / self.P.sq_norms, 0.0, 1.0))
        return 2.0 - 2.0 * c

    def line_dist(self) -> np.ndarray:
        """Squared distance of every row to its nearest seed line."""
        if not self.seeds:
            return self.P.sq_norms.copy()
        return np.maximum(self.P.sq_norms - self.best, 0.0)

    def step(self) -> int:
        mass = self.P.weights * self.f_ell()
        i = _draw(self.rng, mass, self.chosen)
        self.add_index(i)
        return i


def _check_t(n: int, X: Sequence[int], t: int):
    if not 0 <= t <= n - len(X):
        raise ValueError(f"t={t} outside [0, {n - len(X)}]")


def k_line_means(
    P,
    X: Sequence[int] = (),
    t: int = 1,
    f: DistanceFn = "f_ell",
    rng_seed=0,
    stats: Optional[dict] = None,
) -> np.ndarray:
    """Grow the seed set ``X`` (row indices) by ``t`` adaptively sampled rows.

    Returns the row indices of ``Y``, the entries of ``X`` first and then
    the new seeds in draw order. ``f`` is ``"f_ell"``, ``"line"``, ``"f0"``
    or a callable ``f(p, q)``.
    """
    P = _as_points(P)
    X = [int(x) for x in X]
    _check_t(P.n, X, t)
    if not np.all(np.isfinite(P.weights)):
        raise ValueError("weights must be finite")

    if f in ("f_ell", "line"):
        seeder = LineSeeder(P, rng_seed)
        for x in X:
            seeder.add_index(x)
        dist = seeder.f_ell if f == "f_ell" else seeder.line_dist
        for _ in range(t):
            mass = P.weights * dist() if seeder.seeds else P.weights.copy()
            seeder.add_index(_draw(seeder.rng, mass, seeder.chosen))
        if stats is not None:
            stats["rows_touched"] = stats.get("rows_touched", 0) + seeder.rows_touched
        return np.asarray(seeder.seeds, dtype=np.int64)

    rng = make_rng(rng_seed)
    dense = P.dense()
    mind = np.full(P.n, np.inf)
    chosen = np.zeros(P.n, dtype=bool)
    Y: list[int] = []
    touched = 0

    def refresh(i):
        nonlocal touched
        if f == "f0":
            kernels.point_update(dense, dense[i], mind)
        else:
            np.minimum(mind, [f(p, dense[i]) for p in dense], out=mind)
        chosen[i] = True
        Y.append(int(i))
        touched += P.n

    for x in X:
        refresh(x)
    for _ in range(t):
        mass = P.weights * mind if Y else P.weights.copy()
        refresh(_draw(rng, mass, chosen))
    if stats is not None:
        stats["rows_touched"] = stats.get("rows_touched", 0) + touched
    return np.asarray(Y, dtype=np.int64)


def k_line_means_pp(P, X: Sequence[int] = (), t: int = 1, rng_seed=0, stats=None) -> np.ndarray:
    """:func:`k_line_means` under the line metric."""
    return k_line_means(P, X, t, "f_ell", rng_seed, stats)


def lines_from_seeds(Y) -> list[Line]:
    """One line through the origin per seed point (rows of ``Y``)."""
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    return [Line.through(y) for y in Y]
