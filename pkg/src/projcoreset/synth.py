"""Synthetic datasets.

Generative models (``σ`` is ``noise``, per-coordinate standard deviation):

``lines``
    ``k`` directions ``u_i`` drawn uniformly on the sphere; each point picks
    ``i`` uniformly and is ``c u_i + σ g`` with ``c ~ N(0, 1)``, ``g ~ N(0, I_d)``.
``subspaces``
    ``k`` random ``j``-dimensional subspaces with orthonormal bases ``B_i``;
    each point is ``B_i z + σ g`` with ``z ~ N(0, I_j)``.
``isotropic``
    ``g ~ N(0, I_d)``; no structure at all.
``signals``
    windows of ``d`` samples of a sum of ``k`` sinusoids with random
    amplitudes, frequencies and phases plus ``σ g``, in the spirit of the
    inertial-sensor windows used for small-data experiments.
"""

from __future__ import annotations

import numpy as np

from .core import WeightedPointSet
from .io import Dataset
from .rng import make_rng

KINDS = ("lines", "subspaces", "isotropic", "signals")


def synth(kind: str, n: int, d: int, k: int = 5, j: int = 2, noise: float = 0.0, rng_seed=0) -> Dataset:
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if n < 1 or d < 1 or k < 1 or not 1 <= j <= d:
        raise ValueError("invalid dimensions")
    rng = make_rng(rng_seed)
    if kind == "lines":
        U = rng.standard_normal((k, d))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        which = rng.integers(k, size=n)
        X = rng.standard_normal(n)[:, None] * U[which]
    elif kind == "subspaces":
        bases = [np.linalg.qr(rng.standard_normal((d, j)))[0] for _ in range(k)]
        which = rng.integers(k, size=n)
        Z = rng.standard_normal((n, j))
        X = np.stack([bases[w] @ z for w, z in zip(which, Z)])
    elif kind == "isotropic":
        X = rng.standard_normal((n, d))
    else:
        t = np.arange(d) / d
        amp = rng.gamma(2.0, 1.0, size=(n, k))
        freq = rng.integers(1, 9, size=(n, k))
        phase = rng.uniform(0, 2 * np.pi, size=(n, k))
        X = np.einsum("nk,nkd->nd", amp, np.sin(2 * np.pi * freq[..., None] * t + phase[..., None]))
    if noise > 0:
        X = X + noise * rng.standard_normal((n, d))
    P, dropped = WeightedPointSet.from_rows(X)
    return Dataset(f"synth-{kind}", P, "", "synth", dropped)
