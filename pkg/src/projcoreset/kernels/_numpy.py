import numpy as np
import scipy.sparse as sp


def line_update(X, u, best, assign, label):
    s2 = np.square(X @ u)
    hit = s2 > best
    best[hit] = s2[hit]
    assign[hit] = label


def csr_line_update(indptr, indices, data, u, best, assign, label):
    n = indptr.shape[0] - 1
    mat = sp.csr_matrix((data, indices, indptr), shape=(n, u.shape[0]))
    s2 = np.square(mat @ u)
    hit = s2 > best
    best[hit] = s2[hit]
    assign[hit] = label


def point_update(X, y, mind):
    diff = X - y
    s = np.einsum("ij,ij->i", diff, diff)
    np.minimum(mind, s, out=mind)


def sample_index(mass, u):
    csum = np.cumsum(mass)
    total = csum[-1] if csum.size else 0.0
    if total <= 0.0:
        return -1
    i = int(np.searchsorted(csum, u * total, side="right"))
    if i >= mass.shape[0]:
        # u * total rounded onto the final sum; take the last positive entry
        i = int(np.flatnonzero(mass > 0)[-1])
    return i


def rowwise_dot(Y, A):
    return np.einsum("ij,ij->i", Y, A)
