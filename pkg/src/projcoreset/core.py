"""Domain types, distance functions and the weighted cost machinery.

Three distances appear throughout the package:

``"f0"``
    squared Euclidean distance between points, or from a point to a
    subspace when the target is a :class:`SubspaceSet`.
``"f_ell"``
    the line metric ``min(|p^ - q^|^2, |p^ + q^|^2)`` on normalized points;
    ``p`` and ``-p`` are the same line, so the value lies in ``[0, 2]``.
``"line"``
    squared distance from ``p`` to the line through the origin and ``q``.

Any of them can be passed by name wherever a ``f`` argument is accepted.
A plain Python callable ``f(p, q) -> float`` also works, on a slow path.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .config import TOL


class ZeroRowError(ValueError):
    """Raised when a zero point reaches an operation that normalizes it."""


# ---------------------------------------------------------------- types


def _row_sq_norms(points) -> np.ndarray:
    if sp.issparse(points):
        return np.asarray(points.multiply(points).sum(axis=1)).ravel()
    return np.einsum("ij,ij->i", points, points)


@dataclass(frozen=True, eq=False)
class WeightedPointSet:
    """``n`` points in ``d`` dimensions with nonnegative weights.

    ``points`` is either a dense ``(n, d)`` float array or a CSR matrix.
    Zero rows are rejected unless ``allow_zero_rows`` is set, since the line
    metric is undefined there; loaders drop them up front (see
    :meth:`from_rows`).
    """

    points: Union[np.ndarray, sp.csr_matrix]
    weights: np.ndarray
    allow_zero_rows: bool = False
    sq_norms: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = self.points
        if sp.issparse(pts):
            pts = sp.csr_matrix(pts, dtype=np.float64)
            pts.sum_duplicates()
            pts.sort_indices()
        else:
            pts = np.ascontiguousarray(pts, dtype=np.float64)
            if pts.ndim != 2:
                raise ValueError(f"points must be 2-D, got shape {pts.shape}")
        w = np.ascontiguousarray(self.weights, dtype=np.float64).ravel()
        if w.shape[0] != pts.shape[0]:
            raise ValueError(f"{w.shape[0]} weights for {pts.shape[0]} points")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        if w.size and not np.any(w > 0):
            raise ValueError("at least one weight must be positive")
        data = pts.data if sp.issparse(pts) else pts
        if not np.all(np.isfinite(data)):
            raise ValueError("points contain non-finite entries")
        sq = _row_sq_norms(pts)
        if not self.allow_zero_rows:
            zero = int(np.count_nonzero(sq <= TOL.zero_row))
            if zero:
                raise ZeroRowError(f"{zero} zero row(s); drop them with WeightedPointSet.from_rows")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sq_norms", sq)

    @classmethod
    def from_rows(cls, points, weights=None) -> tuple["WeightedPointSet", int]:
        """Build a point set, dropping zero rows. Returns ``(set, dropped)``."""
        sq = _row_sq_norms(points if sp.issparse(points) else np.asarray(points, dtype=np.float64))
        keep = sq > TOL.zero_row
        n = sq.shape[0]
        w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
        if sp.issparse(points):
            pts = sp.csr_matrix(points)[keep]
        else:
            pts = np.asarray(points, dtype=np.float64)[keep]
        return cls(pts, w[keep]), int(n - np.count_nonzero(keep))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.points)

    @property
    def storage_kind(self) -> str:
        return "sparse-rows" if self.is_sparse else "dense"

    @property
    def total_weight(self) -> float:
        return float(math.fsum(self.weights))

    def dense(self) -> np.ndarray:
        return self.points.toarray() if self.is_sparse else self.points

    def materialize(self):
        """Rows scaled by ``sqrt(w)`` so that ``MᵀM = Σ w pᵀp``."""
        s = np.sqrt(self.weights)
        if self.is_sparse:
            return sp.diags(s) @ self.points
        return self.points * s[:, None]

    def subset(self, idx) -> "WeightedPointSet":
        idx = np.asarray(idx)
        return WeightedPointSet(self.points[idx], self.weights[idx], self.allow_zero_rows)


@dataclass(frozen=True, eq=False)
class Line:
    """A line through the origin, stored as a unit direction."""

    direction: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.direction, dtype=np.float64).ravel()
        if abs(np.linalg.norm(u) - 1.0) > TOL.unit_norm:
            raise ValueError("line direction must have unit norm")
        object.__setattr__(self, "direction", u)

    @classmethod
    def through(cls, point) -> "Line":
        p = np.asarray(point, dtype=np.float64).ravel()
        nrm = np.linalg.norm(p)
        if nrm == 0:
            raise ZeroRowError("no line through the origin is defined by the zero point")
        return cls(p / nrm)

    def same_as(self, other: "Line", tol: float = 1e-12) -> bool:
        return abs(abs(float(self.direction @ other.direction)) - 1.0) <= tol

    def as_subspace(self) -> "Subspace":
        return Subspace(self.direction[:, None])


@dataclass(frozen=True, eq=False)
class Subspace:
    """A ``j``-dimensional subspace through the origin (orthonormal basis)."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=np.float64)
        if b.ndim == 1:
            b = b[:, None]
        d, j = b.shape
        if not 1 <= j <= d:
            raise ValueError(f"subspace dimension {j} outside [1, {d}]")
        if np.max(np.abs(b.T @ b - np.eye(j))) > TOL.orthonormal:
            raise ValueError("subspace basis is not orthonormal")
        object.__setattr__(self, "basis", b)

    @property
    def j(self) -> int:
        return self.basis.shape[1]

    @property
    def d(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def span(cls, vectors) -> "Subspace":
        """Orthonormalize the columns of ``vectors``."""
        q, _ = np.linalg.qr(np.asarray(vectors, dtype=np.float64))
        return cls(q)

    @classmethod
    def random(cls, d: int, j: int, rng: np.random.Generator) -> "Subspace":
        return cls.span(rng.standard_normal((d, j)))


class SubspaceSet:
    """``k`` subspaces of equal dimension; distance is the min over members."""

    def __init__(self, members: Sequence[Union[Subspace, Line]]):
        subs = [m.as_subspace() if isinstance(m, Line) else m for m in members]
        if not subs:
            raise ValueError("a subspace set needs at least one member")
        if len({s.j for s in subs}) != 1 or len({s.d for s in subs}) != 1:
            raise ValueError("all members must share dimension and ambient space")
        self.members = tuple(subs)
        self.bases = np.stack([s.basis for s in subs])

    @classmethod
    def from_lines(cls, lines: Sequence[Line]) -> "SubspaceSet":
        return cls(lines)

    @property
    def k(self) -> int:
        return len(self.members)

    @property
    def j(self) -> int:
        return self.members[0].j

    def __len__(self) -> int:
        return self.k


class CoresetSource(enum.Enum):
    LINE_COLLAPSE = "line-collapse"
    CNW = "cnw"
    UNIFORM = "uniform"
    COMPOSED = "composed"
    IDENTITY = "identity"


@dataclass(frozen=True, eq=False)
class Coreset:
    """Weighted representatives with a record of how they were built.

    The cost of a coreset against subspaces ``S`` is
    ``Σ scale_weights[i] * f0(representatives[i], S)``; :meth:`matrix`
    returns the equivalent ``sqrt(weight)``-scaled rows.
    """

    representatives: np.ndarray
    scale_weights: np.ndarray
    source: CoresetSource
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        reps = self.representatives
        if sp.issparse(reps):
            reps = sp.csr_matrix(reps, dtype=np.float64)
        else:
            reps = np.atleast_2d(np.asarray(reps, dtype=np.float64))
        w = np.asarray(self.scale_weights, dtype=np.float64).ravel()
        if w.shape[0] != reps.shape[0]:
            raise ValueError("one scale weight per representative required")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("scale weights must be finite and positive")
        object.__setattr__(self, "representatives", reps)
        object.__setattr__(self, "scale_weights", w)

    @property
    def size(self) -> int:
        return self.representatives.shape[0]

    @property
    def d(self) -> int:
        return self.representatives.shape[1]

    @property
    def total_weight(self) -> float:
        return float(math.fsum(self.scale_weights))

    def dense(self) -> np.ndarray:
        r = self.representatives
        return r.toarray() if sp.issparse(r) else r

    def matrix(self, literal_scaling: bool = False):
        """Materialized rows.

        By default row ``i`` is ``sqrt(w_i) * c_i``, which preserves every
        quadratic cost. ``literal_scaling=True`` returns ``w_i * c_i``
        instead, which only reproduces the original reference code.
        """
        s = self.scale_weights if literal_scaling else np.sqrt(self.scale_weights)
        r = self.representatives
        if sp.issparse(r):
            return sp.diags(s) @ r
        return r * s[:, None]

    def as_point_set(self) -> WeightedPointSet:
        return WeightedPointSet(self.representatives, self.scale_weights, allow_zero_rows=True)


@dataclass(frozen=True)
class RhoMetricParams:
    """Constants of a log-log Lipschitz distance ``g(dist)`` with exponent ``r``."""

    r: float
    psi: float = 0.5

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("exponent r must be positive")
        if self.r > 1 and not 0 < self.psi < self.r - 1:
            raise ValueError(f"psi must lie in (0, {self.r - 1})")

    @property
    def rho(self) -> float:
        return max(2.0 ** (self.r - 1), 1.0)

    @property
    def phi(self) -> float:
        if self.r <= 1:
            return 1.0
        return ((self.r - 1) / self.psi) ** (self.r - 1)

    @property
    def psi_eff(self) -> float:
        return self.psi if self.r > 1 else 0.0

    def gap_bound(self, f_xy, f_xz, f_yz):
        """Upper bound on ``|f(x, Z) - f(y, Z)|`` given ``f(x, y)``."""
        return (self.phi + self.psi_eff * self.rho) * f_xy + self.psi_eff * self.rho * np.minimum(f_xz, f_yz)


# ---------------------------------------------------------------- distances


def f0(p, q) -> float:
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape[0]} vs {q.shape[0]}")
    diff = p - q
    return float(diff @ diff)


def f_ell(p, q) -> float:
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape[0]} vs {q.shape[0]}")
    np_, nq = np.linalg.norm(p), np.linalg.norm(q)
    if np_ == 0 or nq == 0:
        raise ZeroRowError("f_ell is undefined at the zero point")
    ph, qh = p / np_, q / nq
    a, b = ph - qh, ph + qh
    return float(min(a @ a, b @ b))


def dist_point_to_line(p, line: Line) -> float:
    p = np.asarray(p, dtype=np.float64).ravel()
    s = float(p @ line.direction)
    return max(float(p @ p) - s * s, 0.0)


def dist_point_to_subspace(p, sub: Subspace) -> float:
    p = np.asarray(p, dtype=np.float64).ravel()
    if p.shape[0] != sub.d:
        raise ValueError(f"dimension mismatch: {p.shape[0]} vs {sub.d}")
    c = sub.basis.T @ p
    return max(float(p @ p) - float(c @ c), 0.0)


DistanceFn = Union[str, Callable[[np.ndarray, np.ndarray], float]]
Target = Union[SubspaceSet, Sequence[Line], np.ndarray, None]

_NAMED = {"f0": f0, "f_ell": f_ell, "line": lambda p, q: dist_point_to_line(p, Line.through(q))}


def _as_points(P) -> WeightedPointSet:
    if isinstance(P, WeightedPointSet):
        return P
    if sp.issparse(P):
        return WeightedPointSet(P, np.ones(P.shape[0]), allow_zero_rows=True)
    arr = np.atleast_2d(np.asarray(P, dtype=np.float64))
    return WeightedPointSet(arr, np.ones(arr.shape[0]), allow_zero_rows=True)


def _require_nonzero(P: WeightedPointSet):
    if np.any(P.sq_norms <= TOL.zero_row):
        raise ZeroRowError("f_ell needs nonzero rows")


def distance_matrix(P, X: Target, f: DistanceFn = "f0") -> np.ndarray:
    """``(n, |X|)`` matrix of ``f(p_i, x_j)``.

    ``X`` may be a :class:`SubspaceSet`, a list of :class:`Line`, or an
    ``(m, d)`` array of points. For subspace targets ``"f0"`` is the
    point-to-subspace distance and ``"f_ell"`` the line metric to the
    closest direction inside the subspace.
    """
    P = _as_points(P)
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], (Line, Subspace)):
        X = SubspaceSet(X)
    if isinstance(X, SubspaceSet):
        if X.bases.shape[1] != P.d:
            raise ValueError("dimension mismatch between points and subspaces")
        # ‖Bᵀp‖² per member
        proj = np.stack([np.asarray(P.points @ B) for B in X.bases], axis=1)
        inside = np.einsum("nkj,nkj->nk", proj, proj)
        sq = P.sq_norms[:, None]
        if f == "f0":
            return np.maximum(sq - inside, 0.0)
        if f == "f_ell":
            _require_nonzero(P)
            c = np.sqrt(np.clip(inside / sq, 0.0, 1.0))
            return 2.0 - 2.0 * c
        raise ValueError(f"distance {f!r} is not defined against subspaces")

    Xa = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if Xa.shape[1] != P.d:
        raise ValueError("dimension mismatch between points and centers")
    if callable(f):
        dense = P.dense()
        return np.array([[f(p, x) for x in Xa] for p in dense], dtype=np.float64)
    if f == "f0":
        if P.is_sparse:
            cross = np.asarray(P.points @ Xa.T)
            out = P.sq_norms[:, None] + np.einsum("ij,ij->i", Xa, Xa)[None, :] - 2 * cross
            return np.maximum(out, 0.0)
        out = np.empty((P.n, Xa.shape[0]))
        for m, x in enumerate(Xa):
            diff = P.points - x
            out[:, m] = np.einsum("ij,ij->i", diff, diff)
        return out
    xn = np.linalg.norm(Xa, axis=1)
    if np.any(xn == 0):
        raise ZeroRowError("centers used as line directions must be nonzero")
    dots = np.asarray(P.points @ (Xa / xn[:, None]).T)
    if f == "line":
        return np.maximum(P.sq_norms[:, None] - dots * dots, 0.0)
    if f == "f_ell":
        _require_nonzero(P)
        c = np.clip(np.abs(dots) / np.sqrt(P.sq_norms)[:, None], 0.0, 1.0)
        return 2.0 - 2.0 * c
    raise ValueError(f"unknown distance {f!r}")


def weighted_sum(weights: np.ndarray, values: np.ndarray) -> float:
    terms = np.asarray(weights, dtype=np.float64) * np.asarray(values, dtype=np.float64)
    if terms.shape[0] >= TOL.fsum_threshold:
        return math.fsum(terms)
    return float(np.sum(terms))


def cost(P, X: Target, f: DistanceFn = "f0") -> float:
    """Weighted sum of min distances; an empty target costs ``Σ w``."""
    P = _as_points(P)
    if X is None or (not isinstance(X, SubspaceSet) and len(X) == 0):
        return weighted_sum(P.weights, np.ones(P.n))
    D = distance_matrix(P, X, f)
    return weighted_sum(P.weights, D.min(axis=1))


def assign(P, X: Target, f: DistanceFn = "f0") -> np.ndarray:
    """Index of the nearest member for each point, ties to the lowest index."""
    return np.argmin(distance_matrix(P, X, f), axis=1)


def partition_over(P, X: Target, f: DistanceFn = "f0") -> list[np.ndarray]:
    """Row indices of each cell; cell ``i`` holds the points nearest member ``i``."""
    if X is None or (not isinstance(X, SubspaceSet) and len(X) == 0):
        raise ValueError("partition needs a nonempty target")
    labels = assign(P, X, f)
    m = X.k if isinstance(X, SubspaceSet) else len(X)
    return [np.flatnonzero(labels == i) for i in range(m)]


# ---------------------------------------------------------------- oracles

BRUTE_FORCE_MAX_N = 25
BRUTE_FORCE_MAX_K = 3


def brute_force_opt(P, k: int, f: DistanceFn = "f0") -> tuple[float, tuple[int, ...]]:
    """Exact discrete optimum over ``k``-subsets of the input points.

    Returns the optimal cost and the lexicographically first optimal subset.
    With ``f="line"`` this is the best set of ``k`` lines through input points.
    """
    P = _as_points(P)
    n = P.n
    if n > BRUTE_FORCE_MAX_N or k > BRUTE_FORCE_MAX_K:
        raise ValueError(f"enumeration limited to n <= {BRUTE_FORCE_MAX_N}, k <= {BRUTE_FORCE_MAX_K}")
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}]")
    D = distance_matrix(P, P.dense(), f)
    best, arg = math.inf, ()
    for combo in itertools.combinations(range(n), k):
        c = float(P.weights @ D[:, combo].min(axis=1))
        if c < best:
            best, arg = c, combo
    return best, arg


def _svds_start(M) -> np.ndarray:
    # ARPACK otherwise draws its own start vector and results drift between calls
    return np.full(min(M.shape), 1.0 / math.sqrt(min(M.shape)))


def opt_single_subspace(P, j: int) -> float:
    """Cost of the best single ``j``-subspace: tail of the squared spectrum."""
    P = _as_points(P)
    if not 1 <= j <= P.d:
        raise ValueError(f"j must lie in [1, {P.d}]")
    M = P.materialize()
    if sp.issparse(M):
        if j >= min(M.shape) - 1:
            M = M.toarray()
        else:
            from scipy.sparse.linalg import svds

            s = svds(M, k=j, v0=_svds_start(M), return_singular_vectors=False)
            total = float(M.multiply(M).sum())
            return max(total - float(np.sum(s * s)), 0.0)
    s = np.linalg.svd(M, compute_uv=False)
    return float(np.sum(s[j:] ** 2))


def top_right_singular(M, k: int) -> np.ndarray:
    """``(d, k)`` top right singular vectors of a dense or sparse matrix."""
    if sp.issparse(M) and k < min(M.shape) - 1:
        from scipy.sparse.linalg import svds

        _, s, vt = svds(M, k=k, v0=_svds_start(M))
        order = np.argsort(s)[::-1]
        return vt[order].T
    dense = M.toarray() if sp.issparse(M) else np.asarray(M)
    _, _, vt = np.linalg.svd(dense, full_matrices=False)
    V = vt[:k].T
    if V.shape[1] < k:
        # fewer rows than k: pad with an orthonormal completion
        q, _ = np.linalg.qr(np.hstack([V, np.eye(dense.shape[1])]))
        V = np.hstack([V, q[:, V.shape[1]:k]])
    return V
