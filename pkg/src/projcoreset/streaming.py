"""Merge-reduce coreset tree with optional Johnson-Lindenstrauss projection.

The input is cut into consecutive chunks of ``m`` rows (floor 0). Each
higher floor pairs neighbouring nodes, stacks them (at most ``2m`` weighted
rows) and reduces the union back to at most ``m`` rows; an odd node at the
end of a floor is carried up unchanged. The single node on the last floor
summarises the whole input.

Every node draws its randomness from ``make_rng(seed, floor, node)``, so the
tree does not depend on the order in which nodes are reduced or on how many
workers reduce them.
"""

from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .cnw import cnw
from .config import TOL
from .core import Coreset, CoresetSource, WeightedPointSet, _as_points, opt_single_subspace
from .coreset import fixed_size_coreset
from .evaluation import svd_error, uniform_coreset
from .io import write_weighted_csv
from .rng import make_rng


class Reducer(enum.Enum):
    IDENTITY = "identity"
    UNIFORM = "uniform"
    CNW = "cnw"
    COMPOSED = "composed"


class NodeError(RuntimeError):
    """A reducer failed; carries the node's coordinates."""

    def __init__(self, floor: int, node: int, cause: BaseException):
        super().__init__(f"reducer failed at floor {floor}, node {node}: {cause}")
        self.floor = floor
        self.node = node


@dataclass(frozen=True)
class JlConfig:
    """Shared random projection ``d -> target_dim``.

    Entries are ``N(0, 1) / sqrt(d')`` (``"gaussian"``) or ``±1 / sqrt(d')``
    (``"rademacher"``). ``identity=True`` with ``target_dim == d`` skips the
    projection entirely.
    """

    target_dim: int
    distribution: str = "gaussian"
    rng_seed: int = 0
    identity: bool = False

    def __post_init__(self):
        if self.target_dim < 1:
            raise ValueError("target_dim must be at least 1")
        if self.distribution not in ("gaussian", "rademacher"):
            raise ValueError("distribution must be 'gaussian' or 'rademacher'")

    @staticmethod
    def default_dim(k: int, m: int, rule: str = "ceil_ln") -> int:
        """``k * ceil(ln m)`` by default; ``rule="six"`` gives the fixed ``6k``."""
        if rule == "ceil_ln":
            return k * max(1, math.ceil(math.log(m)))
        if rule == "six":
            return 6 * k
        raise ValueError("rule must be 'ceil_ln' or 'six'")


def jl_matrix(d: int, cfg: JlConfig) -> np.ndarray:
    if cfg.target_dim > d:
        raise ValueError(f"target_dim {cfg.target_dim} exceeds input dimension {d}")
    rng = make_rng(cfg.rng_seed, 0x4A4C)
    if cfg.distribution == "gaussian":
        R = rng.standard_normal((d, cfg.target_dim))
    else:
        R = rng.choice(np.array([-1.0, 1.0]), size=(d, cfg.target_dim))
    return R / math.sqrt(cfg.target_dim)


def jl_project(P, cfg: JlConfig, R: Optional[np.ndarray] = None) -> WeightedPointSet:
    """Rows of ``P`` times the shared matrix; weights unchanged."""
    P = _as_points(P)
    if cfg.identity:
        if cfg.target_dim != P.d:
            raise ValueError("identity projection needs target_dim == d")
        return WeightedPointSet(P.points.copy(), P.weights.copy(), allow_zero_rows=True)
    if R is None:
        R = jl_matrix(P.d, cfg)
    Y = np.asarray(P.points @ R)
    return WeightedPointSet(Y, P.weights, allow_zero_rows=True)


@dataclass(frozen=True)
class TreeConfig:
    """``epsilon`` is only read by the CNW reducer when given; otherwise
    reducers pick the accuracy that makes their output fit in ``m`` rows."""

    chunk_size: int
    reducer: Reducer = Reducer.UNIFORM
    k: int = 5
    epsilon: Optional[float] = None
    jl: Optional[JlConfig] = None
    seed: int = 0
    workers: int = 1
    checkpoint_dir: Optional[str] = None

    def __post_init__(self):
        if self.chunk_size < 2:
            raise ValueError("chunk_size must be at least 2")
        object.__setattr__(self, "reducer", Reducer(self.reducer))
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.reducer is Reducer.COMPOSED and 4 * self.k > self.chunk_size:
            raise ValueError("composed reducer needs chunk_size >= 4k")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def floors(self, n: int) -> int:
        return floors_for(chunk_count(n, self.chunk_size))


@dataclass(frozen=True)
class FloorReport:
    floor: int
    nodes: int
    rows: int
    error: Optional[float]
    wall_time: float


@dataclass(frozen=True, eq=False)
class TreeResult:
    top: Coreset
    reports: list[FloorReport]
    floors: list[list[Coreset]] = field(repr=False, default_factory=list)


def chunk_count(n: int, m: int) -> int:
    return -(-n // m)


def floors_for(chunks: int) -> int:
    if chunks < 1:
        raise ValueError("need at least one chunk")
    return math.ceil(math.log2(chunks)) + 1


def chunk(P, m: int) -> list[WeightedPointSet]:
    """Consecutive, order-preserving chunks of at most ``m`` rows."""
    if m < 2:
        raise ValueError("chunk size must be at least 2")
    P = _as_points(P)
    if P.n == 0:
        raise ValueError("empty input")
    out = []
    for lo in range(0, P.n, m):
        hi = min(lo + m, P.n)
        out.append(WeightedPointSet(P.points[lo:hi], P.weights[lo:hi], allow_zero_rows=True))
    return out


def _leaf(P: WeightedPointSet) -> Coreset:
    keep = P.weights > 0
    pts = P.points[keep] if not np.all(keep) else P.points
    return Coreset(pts, P.weights[keep], CoresetSource.IDENTITY)


def _union(a: Coreset, b: Coreset) -> WeightedPointSet:
    ra, rb = a.representatives, b.representatives
    if sp.issparse(ra) or sp.issparse(rb):
        pts = sp.vstack([sp.csr_matrix(ra), sp.csr_matrix(rb)], format="csr")
    else:
        pts = np.vstack([ra, rb])
    return WeightedPointSet(pts, np.concatenate([a.scale_weights, b.scale_weights]), allow_zero_rows=True)


def _low_rank_rows(U: WeightedPointSet, rank_tol: float = 1e-12) -> Coreset:
    """Exact coreset for inputs of tiny rank: ``diag(s) Vᵀ`` with the mass spread evenly."""
    M = U.materialize()
    M = M.toarray() if sp.issparse(M) else M
    _, s, vt = np.linalg.svd(M, full_matrices=False)
    r = max(1, int(np.count_nonzero(s > rank_tol * s[0])))
    c = U.total_weight / r
    return Coreset(s[:r, None] * vt[:r] / math.sqrt(c), np.full(r, c), CoresetSource.IDENTITY, {"exact": True})


def reduce_node(U: WeightedPointSet, config: TreeConfig, floor: int, node: int) -> Coreset:
    """Shrink one merged node to at most ``chunk_size`` rows."""
    m = config.chunk_size
    red = config.reducer
    if red is Reducer.IDENTITY:
        return Coreset(U.points, U.weights, CoresetSource.IDENTITY)
    rng = make_rng(config.seed, floor, node)
    if red is Reducer.UNIFORM:
        # cannot sample m rows out of fewer
        if U.n <= m:
            return Coreset(U.points, U.weights, CoresetSource.IDENTITY)
        return uniform_coreset(U, m, rng)
    k = min(config.k, U.d)
    if red is Reducer.CNW:
        eps = config.epsilon if config.epsilon is not None else math.sqrt(k / m)
        C = cnw(U, k, min(eps, TOL.cnw_eps_max), iterations=m)
    else:
        opt = opt_single_subspace(U, k)
        if opt <= 1e-13 * float(U.weights @ U.sq_norms):
            return _low_rank_rows(U)
        C = fixed_size_coreset(U, k, k, min(math.sqrt(4 * k / m), 1.0), opt, rng_seed=rng)
    if C.size > m:
        # exact-rank input comes back verbatim from CNW
        return _low_rank_rows(U)
    return C


def _reduce_pair(args):
    a, b, config, floor, node = args
    try:
        return reduce_node(_union(a, b), config, floor, node)
    except Exception as exc:
        raise NodeError(floor, node, exc) from exc


def _stack(nodes: Sequence[Coreset]) -> Coreset:
    reps = [c.representatives for c in nodes]
    if any(sp.issparse(r) for r in reps):
        pts = sp.vstack([sp.csr_matrix(r) for r in reps], format="csr")
    else:
        pts = np.vstack(reps)
    return Coreset(pts, np.concatenate([c.scale_weights for c in nodes]), CoresetSource.IDENTITY)


def floor_error(leaves: Sequence[Coreset], original, k: int, form: str = "squared") -> float:
    """Bench error metric between the concatenated leaves of a floor and ``original``."""
    return svd_error(_as_points(original), _stack(leaves), k, form=form)


def _checkpoint(root: str, floor: int, nodes: Sequence[Coreset]) -> None:
    d = Path(root) / f"floor-{floor}"
    d.mkdir(parents=True, exist_ok=True)
    for i, c in enumerate(nodes):
        write_weighted_csv(d / f"node-{i}.csv", c)


def merge_reduce(
    chunks: Sequence,
    config: TreeConfig,
    evaluate: bool = True,
    error_form: str = "squared",
    keep_floors: bool = False,
) -> TreeResult:
    """Run the tree over ``chunks`` and report every floor.

    With a :class:`JlConfig` every chunk is projected by the same matrix
    first, and floor errors are measured against the projected input
    (the concatenated floor-0 leaves).
    """
    if not chunks:
        raise ValueError("no chunks")
    leaves = [_as_points(c) for c in chunks]
    if len({c.d for c in leaves}) != 1:
        raise ValueError("chunks disagree on dimension")
    if config.jl is not None:
        R = None if config.jl.identity else jl_matrix(leaves[0].d, config.jl)
        leaves = [jl_project(c, config.jl, R) for c in leaves]

    t0 = time.perf_counter()
    level = [_leaf(c) for c in leaves]
    base = _stack(level).as_point_set() if evaluate else None
    k_eval = min(config.k, base.d, base.n) if evaluate else None
    reports, kept = [], []

    def report(f, nodes, started):
        wall = time.perf_counter() - started
        err = floor_error(nodes, base, k_eval, error_form) if evaluate else None
        reports.append(FloorReport(f, len(nodes), sum(c.size for c in nodes), err, wall))
        if config.checkpoint_dir:
            _checkpoint(config.checkpoint_dir, f, nodes)
        if keep_floors:
            kept.append(list(nodes))

    report(0, level, t0)
    floor = 0
    pool = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        while len(level) > 1:
            floor += 1
            started = time.perf_counter()
            jobs = [(level[i], level[i + 1], config, floor, i // 2) for i in range(0, len(level) - 1, 2)]
            merged = list(pool.map(_reduce_pair, jobs)) if pool else [_reduce_pair(j) for j in jobs]
            if len(level) % 2:
                merged.append(level[-1])
            level = merged
            report(floor, level, started)
    finally:
        if pool is not None:
            pool.shutdown()
    return TreeResult(level[0], reports, kept)


__all__ = [
    "FloorReport",
    "JlConfig",
    "NodeError",
    "Reducer",
    "TreeConfig",
    "TreeResult",
    "chunk",
    "chunk_count",
    "floor_error",
    "floors_for",
    "jl_matrix",
    "jl_project",
    "merge_reduce",
    "reduce_node",
]
