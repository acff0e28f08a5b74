"""Deterministic power iteration for leading principal-component loadings."""

import numpy as np

from .exceptions import DegenerateFactor


def _power_iterate(G, start, max_iters, tol):
    v = start / np.linalg.norm(start)
    for _ in range(max_iters):
        w = G @ v
        nw = np.linalg.norm(w)
        if nw <= 0.0:
            raise DegenerateFactor("power iteration hit the zero vector")
        w = w / nw
        # eigenvectors are sign-ambiguous; compare up to sign
        if min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < tol:
            v = w
            break
        v = w
    return v


def top_pc_loadings(X, r=1, max_iters=1000, tol=1e-10):
    """First r principal-component loading vectors of X (columns of a p x r matrix).

    Power iteration on X^T X with deflation; start vectors are coordinate axes
    picked by the largest diagonal entry, so the result is deterministic.
    """
    X = np.asarray(X, dtype=np.float64)
    p = X.shape[1]
    if r > p:
        raise ValueError("r exceeds the number of columns")
    G = X.T @ X
    loadings = np.zeros((p, r))
    for k in range(r):
        d = np.diag(G)
        j = int(np.argmax(d))
        if d[j] <= 0.0:
            raise DegenerateFactor("design has no remaining variance to extract")
        start = np.zeros(p)
        start[j] = 1.0
        v = _power_iterate(G, start, max_iters, tol)
        lam = float(v @ G @ v)
        loadings[:, k] = v
        G = G - lam * np.outer(v, v)
    return loadings
