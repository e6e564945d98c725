import numpy as np
from numba import njit


@njit(cache=True)
def line_update(X, u, best, assign, label):
    n, d = X.shape
    for i in range(n):
        s = 0.0
        for t in range(d):
            s += X[i, t] * u[t]
        s2 = s * s
        if s2 > best[i]:
            best[i] = s2
            assign[i] = label


@njit(cache=True)
def csr_line_update(indptr, indices, data, u, best, assign, label):
    n = indptr.shape[0] - 1
    for i in range(n):
        s = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            s += data[p] * u[indices[p]]
        s2 = s * s
        if s2 > best[i]:
            best[i] = s2
            assign[i] = label


@njit(cache=True)
def point_update(X, y, mind):
    n, d = X.shape
    for i in range(n):
        s = 0.0
        for t in range(d):
            diff = X[i, t] - y[t]
            s += diff * diff
        if s < mind[i]:
            mind[i] = s


@njit(cache=True)
def sample_index(mass, u):
    # first index whose running sum exceeds u * total; -1 when total is 0
    n = mass.shape[0]
    total = 0.0
    for i in range(n):
        total += mass[i]
    if total <= 0.0:
        return -1
    target = u * total
    acc = 0.0
    last = -1
    for i in range(n):
        if mass[i] > 0.0:
            last = i
        acc += mass[i]
        if acc > target:
            return i
    return last


@njit(cache=True)
def rowwise_dot(Y, A):
    n, d = Y.shape
    out = np.empty(n)
    for i in range(n):
        s = 0.0
        for t in range(d):
            s += Y[i, t] * A[i, t]
        out[i] = s
    return out
