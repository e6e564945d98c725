"""Time the numba kernels against their numpy fallbacks.

Run with ``python3 benchmarks/bench_kernels.py [--n N] [--d D] [--reps R]``.
Both backends are imported directly, so the ``PROJCORESET_NUMBA`` flag does
not matter here. A last section times a full seeding run under each backend
in a subprocess, since that choice is fixed at import time.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np
import scipy.sparse as sp

from projcoreset.kernels import _numba as nb
from projcoreset.kernels import _numpy as npk


def kernel_cases(n, d, rng):
    X = rng.standard_normal((n, d))
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    S = sp.random(n, d, density=0.05, format="csr", random_state=1)
    mass = rng.random(n)
    Y = rng.standard_normal((n, d))

    def line(mod):
        return lambda: mod.line_update(X, u, np.zeros(n), np.zeros(n, np.int64), 1)

    def csr(mod):
        return lambda: mod.csr_line_update(S.indptr, S.indices, S.data, u, np.zeros(n), np.zeros(n, np.int64), 1)

    def point(mod):
        return lambda: mod.point_update(X, u, np.full(n, np.inf))

    def sample(mod):
        return lambda: mod.sample_index(mass, 0.73)

    def rowdot(mod):
        return lambda: mod.rowwise_dot(Y, X)

    return {"line_update": line, "csr_line_update": csr, "point_update": point, "sample_index": sample, "rowwise_dot": rowdot}


SEEDING = (
    "import time; from projcoreset import synth, k_line_means, BACKEND;"
    "P = synth('lines', {n}, {d}, k=10, noise=0.05).points;"
    "k_line_means(P, t=2);"
    "t = time.perf_counter(); k_line_means(P, t={t}); print(BACKEND, time.perf_counter() - t)"
)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--d", type=int, default=128)
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--seeds", type=int, default=100, help="seeds drawn in the end-to-end run")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    cases = kernel_cases(args.n, args.d, rng)
    print(f"n={args.n} d={args.d}, best of 5 x {args.reps} calls (ms per call)")
    print(f"{'kernel':18s} {'numba':>10s} {'numpy':>10s} {'ratio':>8s}")
    for name, make in cases.items():
        make(nb)()  # compile outside the timer
        t_nb = min(timeit.repeat(make(nb), number=args.reps, repeat=5)) / args.reps * 1e3
        t_np = min(timeit.repeat(make(npk), number=args.reps, repeat=5)) / args.reps * 1e3
        print(f"{name:18s} {t_nb:10.3f} {t_np:10.3f} {t_np / t_nb:8.2f}")

    print(f"\nend-to-end k_line_means, {args.seeds} seeds on n={args.n // 4}")
    code = SEEDING.format(n=args.n // 4, d=args.d, t=args.seeds)
    for flag in ("1", "0"):
        env = {**os.environ, "PROJCORESET_NUMBA": flag}
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, secs = out.stdout.split()
        print(f"  {backend:6s} {float(secs):.3f} s")


if __name__ == "__main__":
    main()
