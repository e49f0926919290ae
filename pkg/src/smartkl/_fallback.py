"""NumPy implementations of the hot kernels, used when the extension is absent."""

import numpy as np


def csr_matvec(indptr, indices, data, x):
    m = indptr.shape[0] - 1
    prod = data * x[indices]
    # reduceat misbehaves on empty segments; rows are never empty by construction
    out = np.add.reduceat(prod, indptr[:-1]) if prod.size else np.zeros(m)
    return np.asarray(out, dtype=np.float64)


def csr_rmatvec(indptr, indices, data, u, n):
    rows = np.repeat(u, np.diff(indptr))
    return np.bincount(indices, weights=data * rows, minlength=n).astype(np.float64)


def _kl_pos(y, yp):
    d = (y - yp) / yp
    near = d > -0.5
    out = np.empty_like(d)
    out[near] = yp[near] * ((1.0 + d[near]) * np.log1p(d[near]) - d[near])
    far = ~near
    out[far] = y[far] * np.log(y[far] / yp[far]) - y[far] + yp[far]
    return out


def kl_sum(y, yp):
    pos = y > 0
    terms = yp.copy()
    terms[pos] = _kl_pos(y[pos], yp[pos])
    return float(terms.sum())
