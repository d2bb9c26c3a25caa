"""Pure numpy/scipy versions of the compiled kernels (same signatures)."""

import numpy as np
from scipy.sparse import csr_matrix


def _transpose(indptr, indices, data):
    n = len(indptr) - 1
    return csr_matrix((data, indices, indptr), shape=(n, n)).T.tocsr()


def evolve(indptr, indices, data, x0, steps):
    pt = _transpose(indptr, indices, data)
    x = np.array(x0, dtype=np.float64, copy=True)
    for _ in range(steps):
        x = pt @ x
    return x


def evolve_tv_trace(indptr, indices, data, x0, target, steps):
    pt = _transpose(indptr, indices, data)
    pi = np.asarray(target, dtype=np.float64)
    x = np.array(x0, dtype=np.float64, copy=True)
    tv = np.empty(steps + 1)
    tv[0] = 0.5 * np.abs(x - pi).sum()
    for s in range(steps):
        x = pt @ x
        tv[s + 1] = 0.5 * np.abs(x - pi).sum()
    return x, tv


def convolve_truncated(a, b, length):
    a = np.asarray(a, dtype=np.float64)[:length]
    b = np.asarray(b, dtype=np.float64)[:length]
    out = np.zeros(length)
    if a.size and b.size:
        full = np.convolve(a, b)[:length]
        out[: len(full)] = full
    return out
