"""Line-collapse coreset and the composed fixed-size coreset.

The collapse keeps adding k-line-means++ seeds until the weighted squared
distance of the data to the lines through the seeds drops below a threshold
``a``. Every point is charged to its nearest seed line and each cell becomes
one representative on that line carrying the cell's total weight. By default
the representative is rescaled so that its squared projection, times the
weight, equals the cell's projected mass; ``placement="seed"`` keeps the seed
point itself.

The fixed-size construction runs the collapse with ``a = (ε/2) * opt`` and,
when that leaves more than ``⌈4k/ε²⌉`` representatives, shrinks them with
CNW at accuracy ``ε/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .cnw import cnw, rows_for
from .config import TOL
from .core import (
    Coreset,
    CoresetSource,
    SubspaceSet,
    WeightedPointSet,
    _as_points,
    cost,
    weighted_sum,
)
from .seeding import LineSeeder


@dataclass(frozen=True, eq=False)
class CollapseResult:
    seeds: np.ndarray
    seed_points: np.ndarray
    coreset: Coreset
    iterations: int
    final_cost: float
    threshold: float
    cost_history: np.ndarray
    labels: np.ndarray = field(repr=False)

    def cells(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == i) for i in range(self.seeds.shape[0])]


@dataclass(frozen=True)
class CoresetQualityParams:
    """Bookkeeping for the collapse guarantee ``ε' = (1/ψ + 2ψ) ε α + 2ψ``.

    ``alpha`` is declared by the caller (how far the pilot solution used to
    set the threshold is from optimal); it is recorded, not verified.
    """

    epsilon: float
    alpha: float = 1.0
    psi: float = 0.5
    m_star: Optional[int] = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.alpha < 1:
            raise ValueError("alpha must be at least 1")
        if not 0 < self.psi < 1:
            raise ValueError("psi must lie in (0, 1)")

    @property
    def epsilon_prime(self) -> float:
        return (1 / self.psi + 2 * self.psi) * self.epsilon * self.alpha + 2 * self.psi


def k_j_subspace_coreset(P, a: float, rng_seed=0, placement: str = "projected") -> CollapseResult:
    """Collapse ``P`` onto seed lines until their weighted cost is below ``a``.

    ``placement`` chooses each cell's representative. ``"projected"`` puts
    it on the seed line at the root-mean-square length of the cell's
    projections, so the cell's weight is its total input weight and its
    quadratic cost equals that of the projected points. ``"seed"`` uses
    the seed point itself with the same weight.
    """
    if placement not in ("projected", "seed"):
        raise ValueError("placement must be 'projected' or 'seed'")
    P = _as_points(P)
    if not a > 0:
        raise ValueError("threshold a must be positive")
    if P.n == 0:
        raise ValueError("empty point set")
    seeder = LineSeeder(P, rng_seed)
    seeder.step()
    history = [weighted_sum(P.weights, seeder.line_dist())]
    while a <= history[-1]:
        if len(seeder.seeds) >= P.n:
            raise RuntimeError(f"collapse did not reach cost < {a} after {P.n} seeds")
        seeder.step()
        history.append(weighted_sum(P.weights, seeder.line_dist()))
    if not math.isfinite(history[-1]):
        raise ValueError("non-finite cost; check the input for NaN")

    seeds = np.asarray(seeder.seeds, dtype=np.int64)
    labels = seeder.assign.copy()
    mass = np.bincount(labels, weights=P.weights, minlength=seeds.shape[0])
    keep = mass > 0
    reps = P.points[seeds[keep]]
    if placement == "projected":
        # seeder.best holds (p·u)² for the line each point was charged to
        proj = np.bincount(labels, weights=P.weights * seeder.best, minlength=seeds.shape[0])[keep]
        scale = np.sqrt(proj / mass[keep] / P.sq_norms[seeds[keep]])
        reps = sp.diags(scale) @ reps if P.is_sparse else reps * scale[:, None]
    C = Coreset(
        reps,
        mass[keep],
        CoresetSource.LINE_COLLAPSE,
        {"a": a, "placement": placement, "seed": rng_seed if isinstance(rng_seed, (int, np.integer)) else None},
    )
    seed_points = P.points[seeds]
    return CollapseResult(
        seeds=seeds,
        seed_points=seed_points.toarray() if P.is_sparse else seed_points,
        coreset=C,
        iterations=seeds.shape[0],
        final_cost=history[-1],
        threshold=a,
        cost_history=np.asarray(history),
        labels=labels,
    )


def weighted_cost_of_coreset(C: Coreset, S) -> float:
    """``Σ w_i f0(c_i, S)`` for a subspace set (or list of lines) ``S``."""
    return cost(C.as_point_set(), S if isinstance(S, SubspaceSet) else SubspaceSet(S), "f0")


def fixed_size_target(k: int, epsilon: float) -> int:
    """Declared output size ``⌈4k/ε²⌉``."""
    return rows_for(4 * k, epsilon)


def fixed_size_coreset(
    P,
    k: int,
    j: int,
    epsilon: float,
    opt_estimate: float,
    rng_seed=0,
    lower_rate: str = "delta_l",
) -> Coreset:
    """Collapse at ``(ε/2) * opt_estimate`` then CNW at ``ε/2``.

    ``opt_estimate`` must be positive; for ``k = 1`` use
    :func:`projcoreset.core.opt_single_subspace`, otherwise any upper bound
    on the optimal ``k``-subspace cost. ``j`` is recorded only: the
    collapse threshold already encodes it through ``opt_estimate``.
    """
    P = _as_points(P)
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if not opt_estimate > 0:
        raise ValueError("opt_estimate must be positive")
    if not 1 <= j <= P.d:
        raise ValueError(f"j must lie in [1, {P.d}]")
    target = fixed_size_target(k, epsilon)
    collapse = k_j_subspace_coreset(P, 0.5 * epsilon * opt_estimate, rng_seed)
    Q = collapse.coreset
    params = {
        "k": k,
        "j": j,
        "epsilon": epsilon,
        "opt_estimate": opt_estimate,
        "seed": collapse.coreset.params.get("seed"),
        "collapse_size": Q.size,
        "collapse_iterations": collapse.iterations,
    }
    if Q.size <= target:
        return Coreset(Q.representatives, Q.scale_weights, CoresetSource.COMPOSED, params)
    inner_eps = min(epsilon / 2, TOL.cnw_eps_max)
    C = cnw(Q.as_point_set(), k, inner_eps, lower_rate=lower_rate, iterations=target)
    # r q qᵀ is invariant under (q, r) -> (q √c, r / c); pick c to restore Σ w
    c = float(np.sum(C.scale_weights)) / P.total_weight
    params["mass_rescale"] = c
    return Coreset(C.representatives * math.sqrt(c), C.scale_weights / c, CoresetSource.COMPOSED, params)
