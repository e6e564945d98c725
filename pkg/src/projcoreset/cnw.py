"""Deterministic barrier-based row selection (CNW).

Given ``ℓ`` weighted rows and a target rank ``k`` the routine picks at most
``⌈k/ε²⌉`` rows with positive weights whose projection cost approximates
that of the input for every rank-``k`` projection.

The rows that drive the barriers are ``A = [A₂ | U₂ₖ]``: the residual of the
input after removing its top ``2k`` right singular directions, scaled by
``√k / ‖P - P_k‖_F``, next to the top ``2k`` left singular vectors. Each
iteration shifts both barriers by a multiple of ``AᵀA``, scores every row
through the per-row quadratic forms ``a M aᵀ`` and ``a M AᵀA M aᵀ`` (the
``ℓ × ℓ`` matrices ``A M Aᵀ`` are never formed), and adds ``1/U_jj`` to the
weight of the best row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import lapack
import scipy.sparse as sp

from . import kernels
from .config import TOL
from .core import Coreset, CoresetSource, WeightedPointSet, _as_points


class BarrierError(RuntimeError):
    """A barrier matrix stopped being positive definite."""

    def __init__(self, iteration: int, which: str):
        super().__init__(f"{which} barrier lost positive definiteness at iteration {iteration}")
        self.iteration = iteration
        self.which = which


def rows_for(k: float, epsilon: float) -> int:
    """``⌈k/ε²⌉`` with a guard against ``k/ε²`` landing a hair above an integer."""
    return max(1, math.ceil(k / epsilon**2 - 1e-9))


@dataclass(frozen=True)
class CnwConfig:
    """Parameters of one CNW run.

    ``lower_rate`` picks the step of the lower barrier: ``"delta_u"`` moves
    both barriers by ``δ_u AᵀA``; ``"delta_l"`` moves the lower one by
    ``δ_l AᵀA`` (the usual two-rate scheme, and the default here; see the
    README for the measured difference).
    """

    k: int
    epsilon: float
    lower_rate: str = "delta_l"
    iterations: Optional[int] = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not 0 < self.epsilon <= TOL.cnw_eps_max:
            raise ValueError(f"epsilon must lie in (0, {TOL.cnw_eps_max}]")
        if self.lower_rate not in ("delta_u", "delta_l"):
            raise ValueError("lower_rate must be 'delta_u' or 'delta_l'")
        if self.iterations is not None and self.iterations < 1:
            raise ValueError("iterations must be positive")

    @property
    def delta_u(self) -> float:
        return self.epsilon + 2 * self.epsilon**2

    @property
    def delta_l(self) -> float:
        return self.epsilon - 2 * self.epsilon**2

    @property
    def lower_step(self) -> float:
        return self.delta_u if self.lower_rate == "delta_u" else self.delta_l

    @property
    def n_iter(self) -> int:
        return self.iterations if self.iterations is not None else rows_for(self.k, self.epsilon)


@dataclass(frozen=True, eq=False)
class BarrierState:
    Xu: np.ndarray
    Xl: np.ndarray
    Z: np.ndarray
    r: np.ndarray
    iteration: int = 0

    @classmethod
    def initial(cls, n_rows: int, width: int, k: int) -> "BarrierState":
        eye = np.eye(width)
        return cls(k * eye, -k * eye, np.zeros((width, width)), np.zeros(n_rows), 0)


def _gram_apply(Y: np.ndarray, G: np.ndarray) -> np.ndarray:
    # G is either a full Gram matrix or the diagonal of one
    return Y * G if G.ndim == 1 else Y @ G


def _gram_add(X: np.ndarray, G: np.ndarray, step: float) -> np.ndarray:
    out = X.copy()
    if G.ndim == 1:
        out[np.diag_indices_from(out)] += step * G
    else:
        out += step * G
    return out


def _scores(K: np.ndarray, A: np.ndarray, G: np.ndarray, iteration: int, which: str):
    """Diagonals of ``N = A K⁻¹ Aᵀ`` and ``N²`` from per-row quadratic forms."""
    c, info = lapack.dpotrf(K, lower=1, clean=0)
    if info != 0:
        raise BarrierError(iteration, which)
    # one small inverse plus a GEMM beats triangular solves against ℓ columns
    inv, info = lapack.dpotri(c, lower=1)
    if info != 0:
        raise BarrierError(iteration, which)
    Kinv = np.tril(inv) + np.tril(inv, -1).T
    Y = A @ Kinv
    diag_n = kernels.rowwise_dot(Y, A)
    diag_n2 = kernels.rowwise_dot(_gram_apply(Y, G), Y)
    return diag_n, diag_n2


def barrier_scores(state: BarrierState, A: np.ndarray, config: CnwConfig, G: Optional[np.ndarray] = None):
    """Shifted barriers and the per-row ``diag(L)``, ``diag(U)`` for the next step."""
    if G is None:
        G = A.T @ A
    Xu = _gram_add(state.Xu, G, config.delta_u)
    Xl = _gram_add(state.Xl, G, config.lower_step)
    it = state.iteration + 1
    nl, nl2 = _scores(state.Z - Xl, A, G, it, "lower")
    nu, nu2 = _scores(Xu - state.Z, A, G, it, "upper")
    L = nl2 / (config.delta_l * nl2.sum()) - nl
    U = nu2 / (config.delta_u * nu2.sum()) + nu
    return Xu, Xl, L, U


def barrier_step(state: BarrierState, A: np.ndarray, config: CnwConfig, G: Optional[np.ndarray] = None) -> BarrierState:
    """One iteration: shift barriers, pick ``argmax(L - U)``, add ``1/U_jj``."""
    Xu, Xl, L, U = barrier_scores(state, A, config, G)
    j = int(np.argmax(L - U))
    step = 1.0 / U[j]
    if not step > 0 or not math.isfinite(step):
        raise BarrierError(state.iteration + 1, "upper")
    a = A[j]
    r = state.r.copy()
    r[j] += step
    Z = state.Z + step * np.outer(a, a)
    return BarrierState(Xu, Xl, Z, r, state.iteration + 1)


@dataclass(frozen=True, eq=False)
class CnwPrepared:
    """Barrier rows in rotated coordinates (``AᵀA`` diagonal)."""

    B: np.ndarray
    gram_diag: np.ndarray
    tail: float
    exact: bool


def prepare_rows(M, k: int) -> CnwPrepared:
    """Build ``A = [A₂ | U₂ₖ]`` and rotate it onto its row space."""
    M = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=np.float64)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    tail_sq = float(np.sum(s[k:] ** 2))
    total_sq = float(np.sum(s**2))
    if tail_sq <= 1e-24 * max(total_sq, 1e-300):
        return CnwPrepared(np.zeros((M.shape[0], 0)), np.zeros(0), 0.0, True)
    tail = math.sqrt(tail_sq)
    top = min(2 * k, s.shape[0])
    V2 = Vt[:top].T
    A2 = (math.sqrt(k) / tail) * (M - (M @ V2) @ V2.T)
    A = np.hstack([A2, U[:, :top]])
    Ua, sa, _ = np.linalg.svd(A, full_matrices=False)
    keep = sa > 1e-12 * sa[0]
    B = np.ascontiguousarray(Ua[:, keep] * sa[keep])
    return CnwPrepared(B, sa[keep] ** 2, tail, False)


def run_barriers(prep: CnwPrepared, config: CnwConfig, trace: Optional[list] = None) -> np.ndarray:
    """Raw row weights after ``config.n_iter`` barrier steps."""
    B, g = prep.B, prep.gram_diag
    state = BarrierState.initial(B.shape[0], B.shape[1], config.k)
    for _ in range(config.n_iter):
        state = barrier_step(state, B, config, g)
        if trace is not None:
            trace.append(state)
    return state.r


def cnw(
    P,
    k: int,
    epsilon: float,
    lower_rate: str = "delta_l",
    iterations: Optional[int] = None,
    calibrate: bool = True,
    trace: Optional[list] = None,
) -> Coreset:
    """CNW coreset of a weighted point set.

    The rows fed to the barriers are ``sqrt(w_i) p_i``. The returned coreset
    keeps the selected input points as representatives with weight
    ``c * r_i * w_i``. With ``calibrate`` the constant ``c`` makes the
    weighted squared mass equal the input's (``Σ w‖p‖²``); without it
    ``c = 1`` and the raw barrier weights are returned.

    Input of rank at most ``k`` is returned unchanged: it is its own exact
    coreset.
    """
    P = _as_points(P)
    config = CnwConfig(k, epsilon, lower_rate, iterations)
    M = P.materialize()
    prep = prepare_rows(M, k)
    params = {"k": k, "epsilon": epsilon, "lower_rate": lower_rate, "iterations": config.n_iter}
    if prep.exact:
        return Coreset(P.points, P.weights, CoresetSource.CNW, {**params, "exact": True})
    r = run_barriers(prep, config, trace)
    sel = np.flatnonzero(r > 0)
    sq = P.sq_norms
    scale = 1.0
    if calibrate:
        scale = float(P.weights @ sq) / float(r[sel] @ (P.weights[sel] * sq[sel]))
    reps = P.points[sel]
    return Coreset(reps, scale * r[sel] * P.weights[sel], CoresetSource.CNW, {**params, "scale": scale})


def dense_reference_scores(state: BarrierState, A: np.ndarray, config: CnwConfig):
    """``diag(L) - diag(U)`` through explicit ``ℓ × ℓ`` matrices (test oracle)."""
    G = A.T @ A
    Xu = state.Xu + config.delta_u * G
    Xl = state.Xl + config.lower_step * G
    Nl = A @ np.linalg.inv(state.Z - Xl) @ A.T
    Nu = A @ np.linalg.inv(Xu - state.Z) @ A.T
    Nl2, Nu2 = Nl @ Nl, Nu @ Nu
    L = Nl2 / (config.delta_l * np.trace(Nl2)) - Nl
    U = Nu2 / (config.delta_u * np.trace(Nu2)) + Nu
    return np.diag(L) - np.diag(U)


__all__ = [
    "BarrierError",
    "BarrierState",
    "CnwConfig",
    "CnwPrepared",
    "barrier_scores",
    "barrier_step",
    "cnw",
    "dense_reference_scores",
    "prepare_rows",
    "rows_for",
    "run_barriers",
]
