"""Reduced-rank Procrustes rotation: argmin_A ||M - N A^T||_F^2 s.t. A^T A = I."""

from dataclasses import dataclass

import numpy as np

from .exceptions import RankDeficient


@dataclass(frozen=True)
class ProcrustesSolution:
    rotation: np.ndarray  # p x k, orthonormal columns
    singular_values: np.ndarray


def procrustes(M, N):
    """Solve via the thin SVD of M^T N (a p x k matrix, cheap for small k)."""
    M = np.asarray(M, dtype=np.float64)
    N = np.asarray(N, dtype=np.float64)
    C = M.T @ N
    U, s, Vt = np.linalg.svd(C, full_matrices=False)
    if s[0] <= 0.0 or s[-1] < 1e-12 * s[0]:
        raise RankDeficient(
            f"M^T N is (numerically) rank deficient: singular values {s}"
        )
    return ProcrustesSolution(rotation=U @ Vt, singular_values=s)
