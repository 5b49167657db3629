"""Small numerical helpers shared by the stability, decomposition and MLE code."""
from __future__ import annotations

import numpy as np

TAU_RANK = 1e-8


def singular_values(M: np.ndarray) -> np.ndarray:
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)


def numerical_rank(M: np.ndarray, rtol: float = TAU_RANK) -> int:
    """Rank by singular-value thresholding relative to the largest value."""
    s = singular_values(M)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def null_space(M: np.ndarray, rtol: float = TAU_RANK) -> np.ndarray:
    """Orthonormal basis (as columns) of the numerical kernel of ``M``."""
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n, dtype=M.dtype)
    _, s, vh = np.linalg.svd(M)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(n, dtype=M.dtype)
    rank = int(np.count_nonzero(s > rtol * s[0]))
    return vh[rank:].conj().T


def range_basis(M: np.ndarray, rtol: float = TAU_RANK) -> np.ndarray:
    """Orthonormal basis of the numerical column space of ``M``."""
    if M.size == 0:
        return np.zeros((M.shape[0], 0), dtype=M.dtype)
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        return u[:, :0]
    return u[:, : int(np.count_nonzero(s > rtol * s[0]))]


def complete_basis(B: np.ndarray) -> np.ndarray:
    """Unitary matrix whose leading columns span the columns of ``B``.

    ``B`` must have full column rank; the returned columns are orthonormal.
    """
    n, k = B.shape
    if k == 0:
        return np.eye(n, dtype=B.dtype)
    Q, _ = np.linalg.qr(B, mode="complete")
    return Q


def inv_sqrt_psd(M: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(M)
    return (V / np.sqrt(w)) @ V.conj().T


def hermitize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.conj().T)
