"""Hot inner loops with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time from ``PROJCORESET_NUMBA``
(see :func:`projcoreset.config.numba_enabled`). Both modules expose the
same functions with the same in-place semantics, so callers never branch
on the backend.
"""

from ..config import numba_enabled

backend = None
if numba_enabled():
    try:
        from . import _numba as backend
    except ImportError:  # numba not installed
        backend = None
if backend is None:
    from . import _numpy as backend
BACKEND = "numba" if backend.__name__.endswith("_numba") else "numpy"

line_update = backend.line_update
csr_line_update = backend.csr_line_update
point_update = backend.point_update
sample_index = backend.sample_index
rowwise_dot = backend.rowwise_dot


def warmup() -> None:
    """Call every kernel once so JIT compilation or cache loading is not
    charged to the first timed run."""
    import numpy as np

    X = np.ones((2, 2))
    u = np.array([1.0, 0.0])
    best, assign = np.full(2, -1.0), np.full(2, -1, dtype=np.int64)
    line_update(X, u, best, assign, 0)
    csr_line_update(np.array([0, 1, 2], dtype=np.int64), np.array([0, 1], dtype=np.int64), np.ones(2), u, best, assign, 0)
    point_update(X, u, np.full(2, np.inf))
    sample_index(np.ones(2), 0.5)
    rowwise_dot(X, X)

__all__ = [
    "BACKEND",
    "line_update",
    "csr_line_update",
    "point_update",
    "sample_index",
    "rowwise_dot",
    "warmup",
]
